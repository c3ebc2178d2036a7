/**
 * three.js terrain view: decimated TIN with full-resolution annotation
 * textures.
 *
 * The mesh is the gateway's OBJ export; its per-vertex uvs map every surface
 * point back to a full-resolution grid pixel, so painting happens on
 * width x height textures sampled in the fragment stage rather than on mesh
 * vertices. Picking inverts the same uv map through a raycast hit. The
 * camera orbits a target point (left drag rotates, wheel zooms, right drag
 * pans, double click re-centers); Flat2D mode collapses elevation to zero
 * while keeping the identical pixel mapping.
 */

import * as THREE from "three";

import { NoHit, ParseError } from "./errors";
import { DRY, FLOODED } from "./labels";

export type ProjectionMode = "3d" | "flat2d";

export interface ViewState {
  target: THREE.Vector3;
  distance: number;
  azimuth: number;
  elevation: number;
  projectionMode: ProjectionMode;
  overlayVisible: boolean;
  verticalExaggeration: number;
}

export interface ParsedObj {
  positions: Float32Array; // x=col, y=row, z=elevation triplets
  uvs: Float32Array;
  indices: Uint32Array;
}

export function parseObj(text: string): ParsedObj {
  const positions: number[] = [];
  const uvs: number[] = [];
  const indices: number[] = [];
  for (const line of text.split("\n")) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "v") {
      positions.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
    } else if (parts[0] === "vt") {
      uvs.push(Number(parts[1]), Number(parts[2]));
    } else if (parts[0] === "f") {
      if (parts.length !== 4) throw new ParseError(`non-triangle face: ${line}`);
      for (let k = 1; k <= 3; k++) {
        indices.push(Number(parts[k].split("/")[0]) - 1);
      }
    }
  }
  if (!positions.length || !indices.length) {
    throw new ParseError("OBJ mesh has no geometry");
  }
  return {
    positions: Float32Array.from(positions),
    uvs: Float32Array.from(uvs),
    indices: Uint32Array.from(indices),
  };
}

/** Labels -> translucent RGBA texture rows, flipped so grid row 0 lands at v=1. */
export function maskToRgba(
  labels: Uint8Array,
  width: number,
  height: number,
  out?: Uint8Array,
): Uint8Array {
  const rgba = out ?? new Uint8Array(width * height * 4);
  for (let r = 0; r < height; r++) {
    const src = r * width;
    const dst = (height - 1 - r) * width * 4;
    for (let c = 0; c < width; c++) {
      const label = labels[src + c];
      const o = dst + c * 4;
      if (label === FLOODED) {
        rgba[o] = 255;
        rgba[o + 1] = 40;
        rgba[o + 2] = 40;
        rgba[o + 3] = 115;
      } else if (label === DRY) {
        rgba[o] = 40;
        rgba[o + 1] = 90;
        rgba[o + 2] = 255;
        rgba[o + 3] = 115;
      } else {
        rgba[o] = 0;
        rgba[o + 1] = 0;
        rgba[o + 2] = 0;
        rgba[o + 3] = 0;
      }
    }
  }
  return rgba;
}

/** Copy an RGBA plane (grid row order) into texture row order. */
export function flipRgba(
  rgba: Uint8Array,
  width: number,
  height: number,
  out?: Uint8Array,
): Uint8Array {
  const flipped = out ?? new Uint8Array(rgba.length);
  const stride = width * 4;
  for (let r = 0; r < height; r++) {
    flipped.set(rgba.subarray(r * stride, (r + 1) * stride), (height - 1 - r) * stride);
  }
  return flipped;
}

const VERT = `
varying vec2 vUv;
void main() {
  vUv = uv;
  gl_Position = projectionMatrix * modelViewMatrix * vec4(position, 1.0);
}
`;

const FRAG = `
uniform sampler2D uImagery;
uniform sampler2D uMask;
uniform sampler2D uReview;
uniform sampler2D uBorders;
uniform sampler2D uHighlight;
uniform float uMaskVisible;
uniform float uReviewVisible;
uniform float uBordersVisible;
varying vec2 vUv;
void main() {
  vec3 base = texture2D(uImagery, vUv).rgb;
  float border = texture2D(uBorders, vUv).r * uBordersVisible;
  base = mix(base, vec3(0.05), border * 0.65);
  vec4 mask = texture2D(uMask, vUv);
  base = mix(base, mask.rgb, mask.a * uMaskVisible);
  vec4 review = texture2D(uReview, vUv);
  base = mix(base, review.rgb, review.a * uReviewVisible);
  float hl = texture2D(uHighlight, vUv).r;
  base = mix(base, vec3(1.0, 0.95, 0.2), hl * 0.55);
  gl_FragColor = vec4(base, 1.0);
}
`;

function dataTexture(
  data: Uint8Array<ArrayBuffer>,
  width: number,
  height: number,
): THREE.DataTexture {
  const tex = new THREE.DataTexture(data, width, height, THREE.RGBAFormat);
  tex.magFilter = THREE.NearestFilter;
  tex.minFilter = THREE.NearestFilter;
  tex.needsUpdate = true;
  return tex;
}

export class TerrainViewer {
  readonly state: ViewState;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  readonly renderer: THREE.WebGLRenderer;
  readonly width: number;
  readonly height: number;

  private readonly mesh: THREE.Mesh;
  private readonly baseZ: Float32Array;
  private readonly raycaster = new THREE.Raycaster();
  private readonly maskData: Uint8Array<ArrayBuffer>;
  private readonly maskTex: THREE.DataTexture;
  private readonly reviewData: Uint8Array<ArrayBuffer>;
  private readonly reviewTex: THREE.DataTexture;
  private readonly borderData: Uint8Array<ArrayBuffer>;
  private readonly borderTex: THREE.DataTexture;
  private readonly highlightData: Uint8Array<ArrayBuffer>;
  private readonly highlightTex: THREE.DataTexture;
  onPick: ((pixel: [number, number]) => void) | null = null;

  constructor(
    canvas: HTMLCanvasElement,
    obj: ParsedObj,
    gridWidth: number,
    gridHeight: number,
    imagery: THREE.Texture,
  ) {
    this.width = gridWidth;
    this.height = gridHeight;
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(
      50,
      canvas.clientWidth / Math.max(1, canvas.clientHeight),
      0.1,
      gridWidth * 20,
    );

    const span = Math.max(gridWidth, gridHeight);
    this.state = {
      target: new THREE.Vector3(0, 0, 0),
      distance: span * 1.2,
      azimuth: Math.PI / 4,
      elevation: 0.9,
      projectionMode: "3d",
      overlayVisible: true,
      verticalExaggeration: 1.0,
    };

    const geometry = new THREE.BufferGeometry();
    const count = obj.positions.length / 3;
    const positions = new Float32Array(obj.positions.length);
    this.baseZ = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      positions[i * 3] = obj.positions[i * 3] - gridWidth / 2;
      positions[i * 3 + 2] = obj.positions[i * 3 + 1] - gridHeight / 2;
      this.baseZ[i] = obj.positions[i * 3 + 2];
    }
    geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    geometry.setAttribute("uv", new THREE.BufferAttribute(obj.uvs, 2));
    geometry.setIndex(new THREE.BufferAttribute(obj.indices, 1));

    const n = gridWidth * gridHeight * 4;
    this.maskData = new Uint8Array(n);
    this.reviewData = new Uint8Array(n);
    this.borderData = new Uint8Array(n);
    this.highlightData = new Uint8Array(n);
    this.maskTex = dataTexture(this.maskData, gridWidth, gridHeight);
    this.reviewTex = dataTexture(this.reviewData, gridWidth, gridHeight);
    this.borderTex = dataTexture(this.borderData, gridWidth, gridHeight);
    this.highlightTex = dataTexture(this.highlightData, gridWidth, gridHeight);

    const material = new THREE.ShaderMaterial({
      vertexShader: VERT,
      fragmentShader: FRAG,
      uniforms: {
        uImagery: { value: imagery },
        uMask: { value: this.maskTex },
        uReview: { value: this.reviewTex },
        uBorders: { value: this.borderTex },
        uHighlight: { value: this.highlightTex },
        uMaskVisible: { value: 1.0 },
        uReviewVisible: { value: 0.0 },
        uBordersVisible: { value: 0.0 },
      },
      side: THREE.DoubleSide,
    });
    this.mesh = new THREE.Mesh(geometry, material);
    this.scene.add(this.mesh);
    this.applyElevation();
    this.attachControls(canvas);
  }

  /** Rebuild world-space heights for the current mode and exaggeration. */
  applyElevation(): void {
    const attr = this.mesh.geometry.getAttribute("position") as THREE.BufferAttribute;
    const flat = this.state.projectionMode === "flat2d";
    const scale = flat ? 0 : this.state.verticalExaggeration;
    for (let i = 0; i < this.baseZ.length; i++) {
      attr.setY(i, this.baseZ[i] * scale);
    }
    attr.needsUpdate = true;
    this.mesh.geometry.computeBoundingSphere();
  }

  setProjection(mode: ProjectionMode): void {
    this.state.projectionMode = mode;
    this.applyElevation();
  }

  setExaggeration(value: number): void {
    this.state.verticalExaggeration = value;
    this.applyElevation();
  }

  updateMask(labels: Uint8Array): void {
    maskToRgba(labels, this.width, this.height, this.maskData);
    this.maskTex.needsUpdate = true;
  }

  updateReview(rgba: Uint8Array | null): void {
    const u = (this.mesh.material as THREE.ShaderMaterial).uniforms;
    if (rgba === null) {
      u.uReviewVisible.value = 0.0;
      return;
    }
    flipRgba(rgba, this.width, this.height, this.reviewData);
    this.reviewTex.needsUpdate = true;
    u.uReviewVisible.value = 1.0;
  }

  updateBorders(border: Uint8Array | null): void {
    const u = (this.mesh.material as THREE.ShaderMaterial).uniforms;
    if (border === null) {
      u.uBordersVisible.value = 0.0;
      return;
    }
    for (let r = 0; r < this.height; r++) {
      const dst = (this.height - 1 - r) * this.width * 4;
      for (let c = 0; c < this.width; c++) {
        this.borderData[dst + c * 4] = border[r * this.width + c] ? 255 : 0;
      }
    }
    this.borderTex.needsUpdate = true;
    u.uBordersVisible.value = 1.0;
  }

  updateHighlight(pixels: Int32Array | null): void {
    this.highlightData.fill(0);
    if (pixels !== null) {
      for (let i = 0; i < pixels.length; i++) {
        const p = pixels[i];
        const r = Math.floor(p / this.width);
        const c = p % this.width;
        this.highlightData[((this.height - 1 - r) * this.width + c) * 4] = 255;
      }
    }
    this.highlightTex.needsUpdate = true;
  }

  setMaskVisible(visible: boolean): void {
    this.state.overlayVisible = visible;
    (this.mesh.material as THREE.ShaderMaterial).uniforms.uMaskVisible.value = visible
      ? 1.0
      : 0.0;
  }

  /** Grid pixel (row, col) under a client-space point, through the uv map. */
  pickPixel(clientX: number, clientY: number): [number, number] {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObject(this.mesh);
    const uv = hits.length ? hits[0].uv : undefined;
    if (!uv) throw new NoHit("cursor is not over the terrain");
    const col = Math.round(uv.x * (this.width - 1));
    const row = Math.round((1 - uv.y) * (this.height - 1));
    return [row, col];
  }

  private attachControls(canvas: HTMLCanvasElement): void {
    let dragging: "rotate" | "pan" | null = null;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener("contextmenu", (e) => e.preventDefault());
    canvas.addEventListener("pointerdown", (e) => {
      dragging = e.button === 2 ? "pan" : "rotate";
      lastX = e.clientX;
      lastY = e.clientY;
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointerup", () => {
      dragging = null;
    });
    canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      const dx = e.clientX - lastX;
      const dy = e.clientY - lastY;
      lastX = e.clientX;
      lastY = e.clientY;
      if (dragging === "rotate") {
        this.state.azimuth -= dx * 0.005;
        this.state.elevation = Math.min(
          1.55,
          Math.max(0.05, this.state.elevation + dy * 0.005),
        );
      } else {
        const right = new THREE.Vector3();
        const up = new THREE.Vector3();
        this.camera.getWorldDirection(right);
        right.cross(this.camera.up).normalize();
        up.copy(this.camera.up);
        const scale = this.state.distance * 0.0012;
        this.state.target.addScaledVector(right, -dx * scale);
        this.state.target.addScaledVector(up, dy * scale);
      }
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.state.distance = Math.min(
        this.width * 10,
        Math.max(2, this.state.distance * Math.exp(e.deltaY * 0.001)),
      );
    });
    // double click pans the orbit target to the point under the cursor
    canvas.addEventListener("dblclick", (e) => {
      try {
        const [row, col] = this.pickPixel(e.clientX, e.clientY);
        this.state.target.set(col - this.width / 2, 0, row - this.height / 2);
      } catch {
        // off-mesh double click: keep the current target
      }
    });
  }

  render(): void {
    const { target, distance, azimuth, elevation } = this.state;
    this.camera.position.set(
      target.x + distance * Math.cos(elevation) * Math.sin(azimuth),
      target.y + distance * Math.sin(elevation),
      target.z + distance * Math.cos(elevation) * Math.cos(azimuth),
    );
    this.camera.lookAt(target);
    this.renderer.render(this.scene, this.camera);
  }
}
