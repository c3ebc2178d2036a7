/**
 * Typed fetch wrapper over the gateway HTTP API.
 *
 * Binary planes (field, segmentation, aggregate maps) arrive as little-endian
 * typed-array payloads with dimensions in X-Width/X-Height headers; everything
 * else is JSON. Error bodies {error, detail} become GatewayError with the
 * backend class name preserved, so UI messages can show e.g. ReplayMismatch
 * verbatim.
 */

import { GatewayError } from "./errors";
import { fieldFromBuffer, type Field } from "./field";
import type { OverlayView } from "./labels";
import { planeFromBuffer, type Plane } from "./overlay";
import { segmentationFromBuffer, type Segmentation } from "./segmentation";

export interface DatasetBundle {
  id: string;
  width: number;
  height: number;
  cell_size: number;
  thresholds: number[];
  mesh_max_error: number;
  mesh_max_vertices: number | null;
  degenerate: boolean;
  source_range: [number, number];
  segment_counts: number[];
  mesh_vertices: number;
  mesh_triangles: number;
  created_at: string;
}

export interface SegmentationManifest {
  width: number;
  height: number;
  level: number;
  epsilon: number;
  segment_count: number;
}

export interface ClassScores {
  precision: number;
  recall: number;
  f: number;
}

export interface MetricsRecord {
  TF: number;
  TD: number;
  FF: number;
  FD: number;
  accuracy: number;
  flooded: ClassScores;
  dry: ClassScores;
  macro_f: number;
}

export interface PreprocessOptions {
  demFormat?: "ascii" | "raw";
  sidecar?: string;
  imagery?: Blob;
  thresholds?: readonly number[];
  meshMaxError?: number;
  meshMaxVertices?: number;
  fillNodata?: boolean;
}

async function fail(resp: Response): Promise<never> {
  let error = "HTTPError";
  let detail = resp.statusText;
  try {
    const doc = await resp.json();
    if (doc && typeof doc.error === "string") {
      error = doc.error;
      detail = String(doc.detail ?? "");
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new GatewayError(resp.status, error, detail);
}

export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.url(path));
    if (!resp.ok) await fail(resp);
    return (await resp.json()) as T;
  }

  private async getBinary(path: string): Promise<{ buffer: ArrayBuffer; headers: Headers }> {
    const resp = await fetch(this.url(path));
    if (!resp.ok) await fail(resp);
    return { buffer: await resp.arrayBuffer(), headers: resp.headers };
  }

  async listDatasets(): Promise<string[]> {
    const doc = await this.getJson<{ datasets: string[] }>("/datasets");
    return doc.datasets;
  }

  async createDataset(dem: Blob, options: PreprocessOptions = {}): Promise<string> {
    const form = new FormData();
    form.append("dem", dem, "dem.asc");
    if (options.demFormat) form.append("dem_format", options.demFormat);
    if (options.sidecar !== undefined) form.append("sidecar", options.sidecar);
    if (options.imagery) form.append("imagery", options.imagery, "imagery.png");
    if (options.thresholds) form.append("thresholds", options.thresholds.join(","));
    if (options.meshMaxError !== undefined) {
      form.append("mesh_max_error", String(options.meshMaxError));
    }
    if (options.meshMaxVertices !== undefined) {
      form.append("mesh_max_vertices", String(options.meshMaxVertices));
    }
    if (options.fillNodata) form.append("fill_nodata", "true");
    const resp = await fetch(this.url("/datasets"), { method: "POST", body: form });
    if (!resp.ok) await fail(resp);
    return ((await resp.json()) as { id: string }).id;
  }

  bundle(datasetId: string): Promise<DatasetBundle> {
    return this.getJson(`/datasets/${datasetId}`);
  }

  async field(datasetId: string): Promise<Field> {
    const { buffer, headers } = await this.getBinary(`/datasets/${datasetId}/field`);
    return fieldFromBuffer(
      buffer,
      Number(headers.get("X-Width")),
      Number(headers.get("X-Height")),
    );
  }

  async mesh(datasetId: string, format: "obj" | "stl"): Promise<ArrayBuffer> {
    const { buffer } = await this.getBinary(`/datasets/${datasetId}/mesh?format=${format}`);
    return buffer;
  }

  async imagery(datasetId: string): Promise<ArrayBuffer> {
    const { buffer } = await this.getBinary(`/datasets/${datasetId}/imagery`);
    return buffer;
  }

  async segmentation(datasetId: string, level: number): Promise<Segmentation> {
    const { buffer, headers } = await this.getBinary(
      `/datasets/${datasetId}/segmentation/${level}`,
    );
    return segmentationFromBuffer(
      buffer,
      Number(headers.get("X-Width")),
      Number(headers.get("X-Height")),
      Number(headers.get("X-Segment-Count")),
    );
  }

  segmentationManifest(datasetId: string, level: number): Promise<SegmentationManifest> {
    return this.getJson(`/datasets/${datasetId}/segmentation/${level}?manifest=true`);
  }

  async borders(datasetId: string, level: number): Promise<ArrayBuffer> {
    const { buffer } = await this.getBinary(`/datasets/${datasetId}/borders/${level}`);
    return buffer;
  }

  async addLevel(datasetId: string, epsilon: number): Promise<{ level: number; thresholds: number[] }> {
    const resp = await fetch(this.url(`/datasets/${datasetId}/levels`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ epsilon }),
    });
    if (!resp.ok) await fail(resp);
    return (await resp.json()) as { level: number; thresholds: number[] };
  }

  async submitAnnotation(
    datasetId: string,
    maskPng: Uint8Array,
    logJson: string,
    verify = true,
  ): Promise<string> {
    const form = new FormData();
    form.append("mask", new Blob([maskPng.buffer as ArrayBuffer], { type: "image/png" }), "mask.png");
    form.append("log", new Blob([logJson], { type: "application/json" }), "log.json");
    form.append("verify", verify ? "true" : "false");
    const resp = await fetch(this.url(`/datasets/${datasetId}/annotations`), {
      method: "POST",
      body: form,
    });
    if (!resp.ok) await fail(resp);
    return ((await resp.json()) as { submission_id: string }).submission_id;
  }

  async listSubmissions(datasetId: string): Promise<string[]> {
    const doc = await this.getJson<{ submissions: string[] }>(
      `/datasets/${datasetId}/submissions`,
    );
    return doc.submissions;
  }

  async aggregateMean(datasetId: string, tau = 0.0): Promise<Plane> {
    const { buffer, headers } = await this.getBinary(
      `/datasets/${datasetId}/aggregate/mean?tau=${tau}`,
    );
    return planeFromBuffer(buffer, Number(headers.get("X-Width")), Number(headers.get("X-Height")));
  }

  async aggregateVariance(datasetId: string): Promise<Plane> {
    const { buffer, headers } = await this.getBinary(
      `/datasets/${datasetId}/aggregate/variance`,
    );
    return planeFromBuffer(buffer, Number(headers.get("X-Width")), Number(headers.get("X-Height")));
  }

  async softLabels(datasetId: string): Promise<{ flood: Plane; dry: Plane }> {
    const { buffer, headers } = await this.getBinary(`/datasets/${datasetId}/softlabels`);
    const w = Number(headers.get("X-Width"));
    const h = Number(headers.get("X-Height"));
    const half = w * h * 8;
    return {
      flood: planeFromBuffer(buffer.slice(0, half), w, h),
      dry: planeFromBuffer(buffer.slice(half), w, h),
    };
  }

  async submitCorrection(datasetId: string, maskPng: Uint8Array): Promise<void> {
    const form = new FormData();
    form.append("mask", new Blob([maskPng.buffer as ArrayBuffer], { type: "image/png" }), "mask.png");
    const resp = await fetch(this.url(`/datasets/${datasetId}/corrections`), {
      method: "POST",
      body: form,
    });
    if (!resp.ok) await fail(resp);
  }

  async overlayPng(datasetId: string, view: OverlayView, tau: number): Promise<Uint8Array> {
    const { buffer } = await this.getBinary(
      `/datasets/${datasetId}/overlay?view=${view}&tau=${tau}`,
    );
    return new Uint8Array(buffer);
  }

  metrics(datasetId: string, referenceSubmission: string): Promise<MetricsRecord> {
    return this.getJson(`/datasets/${datasetId}/metrics?reference=${referenceSubmission}`);
  }
}
