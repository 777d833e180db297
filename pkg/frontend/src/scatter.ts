import type { EmbeddedPoint } from "./api";

// One canvas for the whole cohort. Points are drawn as small filled squares
// (fillRect, not arc) so five-figure point counts stay interactive.

const POINT_SIZE = 5; // css px, square side
const HOVER_RADIUS = 8; // css px, pick-up distance for hover
const MARKER_RADIUS = 9;
const FIT_MARGIN = 0.08; // fraction of the canvas left blank around the data
const MIN_ZOOM = 0.2; // relative to the fitted scale
const MAX_ZOOM = 400;
const GHOST_ALPHA = 0.35;

export interface Viewport {
  scale: number;
  tx: number;
  ty: number;
}

export interface Marker {
  x: number;
  y: number;
  cluster: number;
}

export interface ScatterOptions {
  colorOf: (cluster: number) => string;
  /** Called with the point under the cursor (or null) and its screen position. */
  onHover?: (point: EmbeddedPoint | null, sx: number, sy: number) => void;
}

export class ScatterView {
  private readonly ctx: CanvasRenderingContext2D;
  private readonly dpr: number;
  private width: number;
  private height: number;
  private points: EmbeddedPoint[] = [];
  private view: Viewport = { scale: 1, tx: 0, ty: 0 };
  private home: Viewport = { scale: 1, tx: 0, ty: 0 };
  private marker: Marker | null = null;
  private ghost: Marker | null = null;
  private hovered: EmbeddedPoint | null = null;
  private dragging = false;
  private lastDrag = { x: 0, y: 0 };

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly opts: ScatterOptions,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.dpr = typeof devicePixelRatio === "number" && devicePixelRatio > 0 ? devicePixelRatio : 1;
    this.width = canvas.width || 640;
    this.height = canvas.height || 480;
    this.bindEvents();
  }

  /** Resize the backing store for the given css size and redraw. */
  resize(cssWidth: number, cssHeight: number): void {
    this.width = Math.max(1, Math.floor(cssWidth));
    this.height = Math.max(1, Math.floor(cssHeight));
    this.canvas.width = Math.round(this.width * this.dpr);
    this.canvas.height = Math.round(this.height * this.dpr);
    this.canvas.style.width = `${this.width}px`;
    this.canvas.style.height = `${this.height}px`;
    this.fit();
  }

  setPoints(points: EmbeddedPoint[]): void {
    this.points = points;
    this.marker = null;
    this.ghost = null;
    this.hovered = null;
    this.fit();
  }

  /** Drop a marker for an embedded patient; the previous one stays as a ghost. */
  setMarker(marker: Marker): void {
    if (this.marker) this.ghost = this.marker;
    this.marker = marker;
    this.draw();
  }

  get pointCount(): number {
    return this.points.length;
  }

  get currentMarker(): Marker | null {
    return this.marker;
  }

  get ghostMarker(): Marker | null {
    return this.ghost;
  }

  get viewport(): Viewport {
    return { ...this.view };
  }

  resetView(): void {
    this.view = { ...this.home };
    this.draw();
  }

  /** Zoom by `factor` keeping the screen position (sx, sy) fixed. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const next = Math.min(
      this.home.scale * MAX_ZOOM,
      Math.max(this.home.scale * MIN_ZOOM, this.view.scale * factor),
    );
    const applied = next / this.view.scale;
    this.view = {
      scale: next,
      tx: sx - (sx - this.view.tx) * applied,
      ty: sy - (sy - this.view.ty) * applied,
    };
    this.draw();
  }

  panBy(dx: number, dy: number): void {
    this.view = { ...this.view, tx: this.view.tx + dx, ty: this.view.ty + dy };
    this.draw();
  }

  worldToScreen(x: number, y: number): [number, number] {
    // y flipped: embedding axes point up, canvas rows grow down
    return [this.view.tx + this.view.scale * x, this.view.ty - this.view.scale * y];
  }

  screenToWorld(sx: number, sy: number): [number, number] {
    return [(sx - this.view.tx) / this.view.scale, (this.view.ty - sy) / this.view.scale];
  }

  /** Nearest point within HOVER_RADIUS of a screen position, or null. */
  pointAt(sx: number, sy: number): EmbeddedPoint | null {
    // linear scan; cheap enough for the cohort sizes this serves
    let best: EmbeddedPoint | null = null;
    let bestD = HOVER_RADIUS * HOVER_RADIUS;
    for (const p of this.points) {
      const [px, py] = this.worldToScreen(p.x, p.y);
      const d = (px - sx) * (px - sx) + (py - sy) * (py - sy);
      if (d <= bestD) {
        bestD = d;
        best = p;
      }
    }
    return best;
  }

  private fit(): void {
    if (this.points.length === 0) {
      this.view = { scale: 1, tx: this.width / 2, ty: this.height / 2 };
      this.home = { ...this.view };
      this.draw();
      return;
    }
    let minX = Infinity;
    let maxX = -Infinity;
    let minY = Infinity;
    let maxY = -Infinity;
    for (const p of this.points) {
      if (p.x < minX) minX = p.x;
      if (p.x > maxX) maxX = p.x;
      if (p.y < minY) minY = p.y;
      if (p.y > maxY) maxY = p.y;
    }
    const spanX = Math.max(maxX - minX, 1e-9);
    const spanY = Math.max(maxY - minY, 1e-9);
    const usable = 1 - 2 * FIT_MARGIN;
    const scale = Math.min((this.width * usable) / spanX, (this.height * usable) / spanY);
    this.view = {
      scale,
      tx: this.width / 2 - scale * (minX + maxX) / 2,
      ty: this.height / 2 + scale * (minY + maxY) / 2,
    };
    this.home = { ...this.view };
    this.draw();
  }

  private draw(): void {
    const { ctx } = this;
    ctx.setTransform(this.dpr, 0, 0, this.dpr, 0, 0);
    ctx.clearRect(0, 0, this.width, this.height);
    if (this.points.length === 0) {
      ctx.fillStyle = "#8a8f98";
      ctx.font = "14px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText("no data", this.width / 2, this.height / 2);
      return;
    }
    const half = POINT_SIZE / 2;
    const pad = POINT_SIZE;
    for (const p of this.points) {
      const [sx, sy] = this.worldToScreen(p.x, p.y);
      if (sx < -pad || sx > this.width + pad || sy < -pad || sy > this.height + pad) continue;
      ctx.fillStyle = this.opts.colorOf(p.cluster);
      ctx.fillRect(sx - half, sy - half, POINT_SIZE, POINT_SIZE);
    }
    if (this.hovered) {
      const [sx, sy] = this.worldToScreen(this.hovered.x, this.hovered.y);
      ctx.strokeStyle = "#1b1f24";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(sx, sy, HOVER_RADIUS - 2, 0, 2 * Math.PI);
      ctx.stroke();
    }
    if (this.ghost) this.drawMarker(this.ghost, GHOST_ALPHA);
    if (this.marker) this.drawMarker(this.marker, 1);
  }

  private drawMarker(marker: Marker, alpha: number): void {
    const { ctx } = this;
    const [sx, sy] = this.worldToScreen(marker.x, marker.y);
    ctx.save();
    ctx.globalAlpha = alpha;
    ctx.beginPath();
    ctx.arc(sx, sy, MARKER_RADIUS, 0, 2 * Math.PI);
    ctx.fillStyle = this.opts.colorOf(marker.cluster);
    ctx.fill();
    ctx.lineWidth = 2.5;
    ctx.strokeStyle = "#ffffff";
    ctx.stroke();
    ctx.lineWidth = 1.5;
    ctx.strokeStyle = "#1b1f24";
    ctx.beginPath();
    ctx.arc(sx, sy, MARKER_RADIUS + 2, 0, 2 * Math.PI);
    ctx.stroke();
    // crosshair ticks so the marker reads even on top of a dense cluster
    ctx.beginPath();
    ctx.moveTo(sx - MARKER_RADIUS - 6, sy);
    ctx.lineTo(sx - MARKER_RADIUS - 1, sy);
    ctx.moveTo(sx + MARKER_RADIUS + 1, sy);
    ctx.lineTo(sx + MARKER_RADIUS + 6, sy);
    ctx.moveTo(sx, sy - MARKER_RADIUS - 6);
    ctx.lineTo(sx, sy - MARKER_RADIUS - 1);
    ctx.moveTo(sx, sy + MARKER_RADIUS + 1);
    ctx.lineTo(sx, sy + MARKER_RADIUS + 6);
    ctx.stroke();
    ctx.restore();
  }

  private bindEvents(): void {
    this.canvas.addEventListener("wheel", (e: WheelEvent) => {
      e.preventDefault();
      const [sx, sy] = this.eventPos(e);
      this.zoomAt(sx, sy, Math.exp(-e.deltaY * 0.002));
    });
    this.canvas.addEventListener("pointerdown", (e: PointerEvent) => {
      this.dragging = true;
      this.lastDrag = { x: e.clientX, y: e.clientY };
      this.canvas.setPointerCapture?.(e.pointerId);
    });
    this.canvas.addEventListener("pointermove", (e: PointerEvent) => {
      if (this.dragging) {
        this.panBy(e.clientX - this.lastDrag.x, e.clientY - this.lastDrag.y);
        this.lastDrag = { x: e.clientX, y: e.clientY };
        return;
      }
      const [sx, sy] = this.eventPos(e);
      const hit = this.pointAt(sx, sy);
      if (hit !== this.hovered) {
        this.hovered = hit;
        this.draw();
      }
      this.opts.onHover?.(hit, sx, sy);
    });
    const endDrag = (e: PointerEvent) => {
      this.dragging = false;
      this.canvas.releasePointerCapture?.(e.pointerId);
    };
    this.canvas.addEventListener("pointerup", endDrag);
    this.canvas.addEventListener("pointercancel", endDrag);
    this.canvas.addEventListener("pointerleave", () => {
      if (this.hovered) {
        this.hovered = null;
        this.draw();
      }
      this.opts.onHover?.(null, 0, 0);
    });
    this.canvas.addEventListener("dblclick", () => this.resetView());
  }

  private eventPos(e: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [e.clientX - rect.left, e.clientY - rect.top];
  }
}
