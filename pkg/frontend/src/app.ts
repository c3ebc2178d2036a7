/**
 * Annotator application wiring: dataset loading, tool dispatch, review mode,
 * checkpoint and finish flows.
 *
 * All mask mutations go through the session engine as logged actions, never
 * directly; the on-screen mask is therefore always exactly what a service
 * replay of the current log would produce. Submitting keeps verify=true so
 * the service re-derives the mask from the log and rejects any divergence.
 */

import * as THREE from "three";

import { GatewayClient } from "./client";
import type { EngineContext, SessionState } from "./engine";
import { applyAction, loadCheckpoint, newSession } from "./engine";
import { GatewayError, NoHit, ToolError } from "./errors";
import type { Field } from "./field";
import {
  AGGREGATE_VIEW,
  BRUSH,
  CLASS_DRY,
  CLASS_FLOODED,
  ERASE,
  FILL,
  POINT_BFS,
  POLYGON_BFS,
  REDO,
  SEGMENT_PICK,
  SET_LABEL_CLASS,
  SET_LEVEL,
  SET_MODE,
  UNDO,
  VARIANCE_VIEW,
  type ActionKind,
  type OverlayView,
} from "./labels";
import { DEFAULT_BINDINGS, hudLines, type KeyBindings } from "./keymap";
import { renderOverlay } from "./overlay";
import { encodeGray8 } from "./png";
import { segmentBorders, segmentPixels, type Segmentation } from "./segmentation";
import { appendAction, logToJson, newLog, type ActionRecord, type SessionLog } from "./session";
import { parseObj, TerrainViewer } from "./viewer";

type MutatingTool =
  | typeof BRUSH
  | typeof POINT_BFS
  | typeof POLYGON_BFS
  | typeof SEGMENT_PICK;

interface ToolState {
  activeTool: MutatingTool;
  pendingPolygon: Array<[number, number]>; // (x, y) = (col, row)
  bordersVisible: boolean;
  highlightActive: boolean;
  brushSide: number;
  tolerance: number;
}

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function download(name: string, data: Blob): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(data);
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

export class AnnotatorApp {
  private readonly client: GatewayClient;
  private readonly bindings: KeyBindings;
  private viewer: TerrainViewer | null = null;
  private ctx: EngineContext | null = null;
  private state: SessionState | null = null;
  private log: SessionLog | null = null;
  private levels = new Map<number, Segmentation>();
  private tool: ToolState = {
    activeTool: BRUSH,
    pendingPolygon: [],
    bordersVisible: false,
    highlightActive: false,
    brushSide: 9,
    tolerance: 0.0,
  };
  private seq = 0;
  private startedAt = 0;
  private mouse: [number, number] = [0, 0];
  private reviewView: OverlayView = AGGREGATE_VIEW;

  constructor(baseUrl: string, bindings: KeyBindings = DEFAULT_BINDINGS) {
    this.client = new GatewayClient(baseUrl);
    this.bindings = bindings;
  }

  async start(): Promise<void> {
    byId<HTMLDivElement>("hud").innerText = hudLines(this.bindings).join("\n");
    const select = byId<HTMLSelectElement>("dataset");
    for (const id of await this.client.listDatasets()) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      void this.openDataset(select.value).catch((e) => this.status(String(e)));
    });
    if (select.value) await this.openDataset(select.value);
    this.wireButtons();
    window.addEventListener("keydown", (e) => this.onKeyDown(e));
    window.addEventListener("keyup", (e) => this.onKeyUp(e));
    const loop = () => {
      this.viewer?.render();
      requestAnimationFrame(loop);
    };
    loop();
  }

  private status(text: string): void {
    byId<HTMLDivElement>("status").innerText = text;
  }

  private async openDataset(datasetId: string): Promise<void> {
    this.status(`loading ${datasetId}...`);
    const bundle = await this.client.bundle(datasetId);
    const field: Field = await this.client.field(datasetId);
    this.levels.clear();
    for (let i = 0; i < bundle.thresholds.length; i++) {
      this.levels.set(i, await this.client.segmentation(datasetId, i));
    }
    const objText = new TextDecoder().decode(await this.client.mesh(datasetId, "obj"));
    const imageryBlob = new Blob([await this.client.imagery(datasetId)], {
      type: "image/png",
    });
    const imagery = await new THREE.TextureLoader().loadAsync(
      URL.createObjectURL(imageryBlob),
    );

    this.ctx = {
      datasetId,
      field,
      thresholds: bundle.thresholds,
      getLevel: (level: number) => {
        const seg = this.levels.get(level);
        if (!seg) throw new ToolError(`segmentation level ${level} not loaded`);
        return seg;
      },
      connectivity: 4,
    };
    this.state = newSession(this.ctx);
    this.log = newLog(datasetId, field.width, field.height, bundle.thresholds);
    this.seq = 0;
    this.startedAt = Date.now();

    const canvas = byId<HTMLCanvasElement>("view");
    this.viewer = new TerrainViewer(
      canvas,
      parseObj(objText),
      field.width,
      field.height,
      imagery,
    );
    canvas.addEventListener("pointermove", (e) => {
      this.mouse = [e.clientX, e.clientY];
      if (this.tool.highlightActive) this.refreshHighlight();
    });
    this.viewer.updateMask(this.state.mask);
    this.status(
      `${datasetId}: ${field.width}x${field.height}, ` +
        `${bundle.thresholds.length} levels, mesh ${bundle.mesh_triangles} tris`,
    );
  }

  /** Record an action, apply it locally, and refresh the mask texture. */
  private emit(kind: ActionKind, params: Record<string, unknown>): void {
    if (!this.ctx || !this.state || !this.log) return;
    const action: ActionRecord = {
      seq: ++this.seq,
      t_ms: Math.max(0, Date.now() - this.startedAt),
      kind,
      params,
    };
    try {
      applyAction(this.state, action, this.ctx);
    } catch (exc) {
      this.seq--;
      this.status(exc instanceof ToolError ? `${exc.name}: ${exc.message}` : String(exc));
      return;
    }
    appendAction(this.log, action);
    this.viewer?.updateMask(this.state.mask);
    this.status(`#${action.seq} ${kind}`);
  }

  private pickAtCursor(): [number, number] | null {
    if (!this.viewer) return null;
    try {
      return this.viewer.pickPixel(this.mouse[0], this.mouse[1]);
    } catch (exc) {
      if (exc instanceof NoHit) {
        this.status("no terrain under cursor");
        return null;
      }
      throw exc;
    }
  }

  private annotateAtCursor(): void {
    if (!this.state) return;
    const pixel = this.pickAtCursor();
    if (!pixel) return;
    const tool = this.tool.activeTool;
    if (tool === BRUSH) {
      this.emit(BRUSH, { center: pixel, side: this.tool.brushSide });
    } else if (tool === POINT_BFS) {
      this.emit(POINT_BFS, { seed: pixel, tolerance: this.tool.tolerance });
    } else if (tool === SEGMENT_PICK) {
      this.emit(SEGMENT_PICK, { pixel, level: this.state.level });
    } else {
      this.status("polygon tool: add vertices, then confirm");
    }
  }

  private refreshHighlight(): void {
    if (!this.viewer || !this.state) return;
    const pixel = this.pickAtCursor();
    if (!pixel) {
      this.viewer.updateHighlight(null);
      return;
    }
    try {
      const seg = this.ctx!.getLevel(this.state.level);
      this.viewer.updateHighlight(segmentPixels(seg, pixel));
    } catch {
      this.viewer.updateHighlight(null);
    }
  }

  private refreshBorders(): void {
    if (!this.viewer || !this.state) return;
    if (!this.tool.bordersVisible) {
      this.viewer.updateBorders(null);
      return;
    }
    const seg = this.ctx!.getLevel(this.state.level);
    this.viewer.updateBorders(segmentBorders(seg));
  }

  private onKeyDown(e: KeyboardEvent): void {
    if (!this.state || e.target instanceof HTMLInputElement) return;
    const b = this.bindings;
    switch (e.key) {
      case b.annotate:
        this.annotateAtCursor();
        break;
      case b.highlight:
        if (!e.repeat) {
          this.tool.highlightActive = true;
          this.refreshHighlight();
        }
        break;
      case b.polygonAdd: {
        const pixel = this.pickAtCursor();
        if (pixel) {
          // vertices are (x, y) = (col, row) in the wire format
          this.tool.pendingPolygon.push([pixel[1], pixel[0]]);
          this.status(`polygon: ${this.tool.pendingPolygon.length} vertices`);
        }
        break;
      }
      case b.polygonConfirm:
        if (this.tool.pendingPolygon.length >= 3) {
          this.emit(POLYGON_BFS, {
            vertices: this.tool.pendingPolygon,
            tolerance: this.tool.tolerance,
          });
        } else {
          this.status("polygon needs at least 3 vertices");
        }
        this.tool.pendingPolygon = [];
        break;
      case b.undo:
        this.emit(UNDO, {});
        break;
      case b.redo:
        this.emit(REDO, {});
        break;
      case b.toolBrush:
        this.tool.activeTool = BRUSH;
        this.status("tool: brush");
        break;
      case b.toolPointBfs:
        this.tool.activeTool = POINT_BFS;
        this.status("tool: point BFS");
        break;
      case b.toolPolygonBfs:
        this.tool.activeTool = POLYGON_BFS;
        this.status("tool: polygon BFS");
        break;
      case b.toolSegmentPick:
        this.tool.activeTool = SEGMENT_PICK;
        this.status("tool: segment pick");
        break;
      case b.cycleLevelUp:
      case b.cycleLevelDown: {
        const delta = e.key === b.cycleLevelUp ? 1 : -1;
        const nLevels = this.ctx!.thresholds.length;
        const next = (this.state.level + delta + nLevels) % nLevels;
        this.emit(SET_LEVEL, { level: next });
        this.refreshBorders();
        break;
      }
      case b.toggleClass:
        this.emit(SET_LABEL_CLASS, {
          label_class: this.state.labelClass === CLASS_FLOODED ? CLASS_DRY : CLASS_FLOODED,
        });
        break;
      case b.toggleMode:
        this.emit(SET_MODE, { mode: this.state.mode === FILL ? ERASE : FILL });
        break;
      case b.toggleBorders:
        this.tool.bordersVisible = !this.tool.bordersVisible;
        this.refreshBorders();
        break;
      case b.toggleOverlay:
        this.viewer?.setMaskVisible(!this.viewer.state.overlayVisible);
        break;
      case b.toggleProjection:
        this.viewer?.setProjection(
          this.viewer.state.projectionMode === "3d" ? "flat2d" : "3d",
        );
        break;
    }
  }

  private onKeyUp(e: KeyboardEvent): void {
    if (e.key === this.bindings.highlight) {
      this.tool.highlightActive = false;
      this.viewer?.updateHighlight(null);
    }
  }

  private wireButtons(): void {
    byId<HTMLButtonElement>("checkpoint").addEventListener("click", () => {
      if (!this.log) return;
      download(
        "checkpoint.json",
        new Blob([logToJson(this.log)], { type: "application/json" }),
      );
    });
    byId<HTMLInputElement>("restore").addEventListener("change", (e) => {
      const file = (e.target as HTMLInputElement).files?.[0];
      if (!file || !this.ctx) return;
      void file.text().then((text) => {
        try {
          const restored = loadCheckpoint(text, this.ctx!);
          this.state = restored.state;
          this.log = restored.log;
          this.seq = restored.log.actions.length
            ? restored.log.actions[restored.log.actions.length - 1].seq
            : 0;
          this.viewer?.updateMask(this.state.mask);
          this.status(`restored ${restored.log.actions.length} actions`);
        } catch (exc) {
          this.status(`checkpoint rejected: ${exc}`);
        }
      });
    });
    byId<HTMLButtonElement>("finish").addEventListener("click", () => {
      if (!this.ctx || !this.state || !this.log) return;
      const { width, height } = this.ctx.field;
      const png = encodeGray8(this.state.mask, width, height);
      let labeled = 0;
      for (const v of this.state.mask) if (v) labeled++;
      const metadata = {
        dataset_id: this.ctx.datasetId,
        width,
        height,
        actions: this.log.actions.length,
        labeled_pixels: labeled,
        duration_ms: Date.now() - this.startedAt,
      };
      download("mask.png", new Blob([png.buffer as ArrayBuffer], { type: "image/png" }));
      download("log.json", new Blob([logToJson(this.log)], { type: "application/json" }));
      download(
        "metadata.json",
        new Blob([JSON.stringify(metadata, null, 1)], { type: "application/json" }),
      );
    });
    byId<HTMLButtonElement>("submit").addEventListener("click", () => {
      void this.submit();
    });
    const tau = byId<HTMLInputElement>("tau");
    const reviewBtn = byId<HTMLButtonElement>("review");
    const viewSel = byId<HTMLSelectElement>("review-view");
    viewSel.addEventListener("change", () => {
      this.reviewView = viewSel.value === VARIANCE_VIEW ? VARIANCE_VIEW : AGGREGATE_VIEW;
    });
    reviewBtn.addEventListener("click", () => void this.refreshReview(Number(tau.value)));
    tau.addEventListener("input", () => void this.refreshReview(Number(tau.value)));
    byId<HTMLButtonElement>("review-off").addEventListener("click", () => {
      this.viewer?.updateReview(null);
    });
    const brush = byId<HTMLInputElement>("brush-side");
    brush.addEventListener("input", () => {
      this.tool.brushSide = Math.max(1, Math.round(Number(brush.value)));
    });
    const tolerance = byId<HTMLInputElement>("tolerance");
    tolerance.addEventListener("input", () => {
      this.tool.tolerance = Math.max(0, Number(tolerance.value));
    });
    const exaggeration = byId<HTMLInputElement>("exaggeration");
    exaggeration.addEventListener("input", () => {
      this.viewer?.setExaggeration(Number(exaggeration.value));
    });
  }

  /** Render the current aggregate/variance overlay from freshly fetched planes. */
  private async refreshReview(tau: number): Promise<void> {
    if (!this.ctx || !this.viewer) return;
    try {
      const plane =
        this.reviewView === AGGREGATE_VIEW
          ? await this.client.aggregateMean(this.ctx.datasetId, 0)
          : await this.client.aggregateVariance(this.ctx.datasetId);
      this.viewer.updateReview(renderOverlay(plane, this.reviewView, tau));
      this.status(`review: ${this.reviewView} at tau=${tau}`);
    } catch (exc) {
      this.status(exc instanceof GatewayError ? exc.message : String(exc));
    }
  }

  private async submit(): Promise<void> {
    if (!this.ctx || !this.state || !this.log) return;
    const { width, height } = this.ctx.field;
    const png = encodeGray8(this.state.mask, width, height);
    try {
      const id = await this.client.submitAnnotation(
        this.ctx.datasetId,
        png,
        logToJson(this.log),
        true,
      );
      this.status(`submitted: ${id}`);
    } catch (exc) {
      if (exc instanceof GatewayError && exc.error === "ReplayMismatch") {
        // local mask drifted from the log somehow; rebuild from our own log
        // and retry once so what we upload is exactly the replayed state
        const rebuilt = loadCheckpoint(logToJson(this.log), this.ctx);
        this.state = rebuilt.state;
        this.viewer?.updateMask(this.state.mask);
        const retryPng = encodeGray8(this.state.mask, width, height);
        const id = await this.client.submitAnnotation(
          this.ctx.datasetId,
          retryPng,
          logToJson(this.log),
          true,
        );
        this.status(`submitted after reconcile: ${id}`);
        return;
      }
      this.status(exc instanceof GatewayError ? exc.message : String(exc));
    }
  }
}

export function startApp(baseUrl: string): void {
  const app = new AnnotatorApp(baseUrl);
  void app.start().catch((exc) => {
    byId<HTMLDivElement>("status").innerText = `failed to start: ${exc}`;
  });
}
