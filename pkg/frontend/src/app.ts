// Session controller: wires the API client, the canvas renderer, and the
// input elements into the leader protocol. Flow: preview the arena, click a
// marker to pick the (client-side) target, then steer with typed or dictated
// commands until the robot enters the goal radius.
//
// The service owns all kinematics; this file only schedules rendering.

import { ApiError, GuidanceApi } from "./api.js";
import type { Pose, SessionState } from "./api.js";
import { ArenaRenderer, pathLength, poseAlong } from "./arena.js";
import { dictateOnce, isDictationSupported } from "./speech.js";

export interface AppElements {
  canvas: HTMLCanvasElement;
  input: HTMLInputElement;
  sendButton: HTMLButtonElement;
  dictateButton: HTMLButtonElement;
  banner: HTMLElement;
  telemetry: HTMLElement;
  modal: HTMLElement;
  modalBody: HTMLElement;
}

const ANIMATION_SPEED_MPS = 2.5;
const MIN_ANIMATION_MS = 250;

export class GuidanceApp {
  api: GuidanceApi;
  renderer: ArenaRenderer;
  session: SessionState | null = null;
  previewSeed: number | null = null;
  targetMarker: number | null = null;
  trails: Pose[][] = [];
  robot: Pose = [0, 0, 0];
  busy = false;

  constructor(
    private el: AppElements,
    baseUrl: string,
    private scope: unknown = globalThis,
    private raf: (cb: (t: number) => void) => number = (cb) =>
      requestAnimationFrame(cb),
  ) {
    this.api = new GuidanceApi(baseUrl);
    this.renderer = new ArenaRenderer(el.canvas);
    el.sendButton.addEventListener("click", () => void this.sendFromInput());
    el.input.addEventListener("keydown", (e) => {
      if ((e as KeyboardEvent).key === "Enter") void this.sendFromInput();
    });
    el.input.addEventListener("input", () => this.syncControls());
    el.canvas.addEventListener("click", (e) => this.onCanvasClick(e as MouseEvent));
    el.dictateButton.addEventListener("click", () => this.onDictate());
    if (!isDictationSupported(this.scope)) {
      el.dictateButton.style.display = "none"; // unsupported browser: no toggle
    }
  }

  /** Create a preview session so the user can see the arena and click a target. */
  async start(seed?: number): Promise<void> {
    try {
      await this.api.health();
    } catch {
      this.setBanner("service unreachable - is `dirtraj serve` running?", "error");
      return;
    }
    const preview = await this.api.createSession(0, seed);
    this.previewSeed = preview.seed;
    this.session = preview;
    this.targetMarker = null;
    this.trails = [];
    this.robot = preview.robot_pose;
    this.setBanner("click a marker to choose the target", "info");
    this.syncControls();
    this.redraw();
  }

  /**
   * Register the chosen target: layouts are deterministic per seed, so a
   * fresh session with the preview's seed reproduces the same arena with the
   * real target attached (the API registers the target only at creation).
   */
  async chooseTarget(markerIndex: number): Promise<void> {
    if (this.previewSeed === null || this.targetMarker !== null) return;
    const session = await this.api.createSession(markerIndex, this.previewSeed);
    this.session = session;
    this.targetMarker = markerIndex;
    this.robot = session.robot_pose;
    this.setBanner("target locked in (only you can see it) - guide the robot", "info");
    this.syncControls();
    this.redraw();
  }

  private onCanvasClick(e: MouseEvent): void {
    if (!this.session || this.targetMarker !== null) return;
    const rect = this.el.canvas.getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * this.el.canvas.width;
    const y = ((e.clientY - rect.top) / rect.height) * this.el.canvas.height;
    const marker = this.renderer.markerAt(this.session.arena, x, y);
    if (marker !== null) void this.chooseTarget(marker);
  }

  async sendFromInput(): Promise<void> {
    const text = this.el.input.value.trim();
    if (!text || !this.canSend()) return;
    this.el.input.value = "";
    await this.sendCommand(text);
  }

  canSend(): boolean {
    return (
      !this.busy &&
      this.session !== null &&
      this.targetMarker !== null &&
      this.session.status === "active"
    );
  }

  async sendCommand(text: string): Promise<void> {
    if (!this.session || !this.canSend()) return;
    this.busy = true;
    this.syncControls();
    try {
      const result = await this.api.sendCommand(this.session.id, text);
      this.session.status = result.status;
      this.session.step_count = result.step_count;
      await this.animateTrajectory(result.trajectory as Pose[]);
      this.robot = result.pose;
      this.trails.push(result.trajectory as Pose[]);
      this.redraw();
      await this.refreshTelemetry();
      if (result.status === "reached") {
        await this.showSummary();
      } else {
        this.setBanner(result.wall_clamped ? "clamped at the arena wall" : "", "info");
      }
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      this.setBanner(`command failed: ${message}`, "error");
    } finally {
      this.busy = false;
      this.syncControls();
    }
  }

  /** Animate pose-by-pose; duration proportional to the path's arc length. */
  animateTrajectory(poses: Pose[]): Promise<void> {
    if (poses.length === 0) return Promise.resolve();
    const meters = pathLength(poses);
    const duration = Math.max(MIN_ANIMATION_MS, (meters / ANIMATION_SPEED_MPS) * 1000);
    return new Promise((resolve) => {
      let startTs: number | null = null;
      const step = (ts: number) => {
        if (startTs === null) startTs = ts;
        const u = Math.min((ts - startTs) / duration, 1);
        this.robot = poseAlong(poses, u);
        this.redraw(poses);
        if (u < 1) {
          this.raf(step);
        } else {
          resolve();
        }
      };
      this.raf(step);
    });
  }

  async refreshTelemetry(): Promise<void> {
    if (!this.session) return;
    const report = await this.api.getReport(this.session.id);
    // every displayed number comes from the service report
    this.el.telemetry.textContent =
      `steps ${report.num_steps} | elapsed ${report.elapsed_s.toFixed(1)} s | ` +
      `distance to target ${report.final_error_m.toFixed(2)} m`;
  }

  async showSummary(): Promise<void> {
    if (!this.session) return;
    const report = await this.api.getReport(this.session.id);
    this.el.modalBody.textContent =
      `Goal reached! final error ${report.final_error_m.toFixed(2)} m, ` +
      `${report.num_steps} steps, ${report.elapsed_s.toFixed(1)} s.`;
    this.el.modal.classList.add("visible");
    this.setBanner("session complete", "info");
  }

  onDictate(): void {
    if (this.busy) return;
    this.el.dictateButton.disabled = true;
    const session = dictateOnce((text) => {
      this.el.dictateButton.disabled = false;
      if (text) {
        // recognized text is editable; the user still presses send
        this.el.input.value = text;
        this.syncControls();
        this.el.input.focus();
      }
    }, this.scope);
    if (!session) this.el.dictateButton.disabled = false;
  }

  syncControls(): void {
    const ready = this.canSend();
    this.el.input.disabled = !ready;
    this.el.sendButton.disabled = !ready || this.el.input.value.trim() === "";
    this.el.dictateButton.disabled = !ready;
  }

  setBanner(text: string, kind: "info" | "error"): void {
    this.el.banner.textContent = text;
    this.el.banner.className = `banner ${kind}`;
  }

  redraw(ghost?: Pose[]): void {
    if (!this.session) return;
    this.renderer.draw({
      arena: this.session.arena,
      robot: this.robot,
      targetMarker: this.targetMarker,
      trails: this.trails,
      ghost,
    });
  }

  /** Keep the canvas square and re-render on container resize. */
  handleResize(width: number): void {
    this.el.canvas.width = width;
    this.el.canvas.height = width;
    this.redraw();
  }
}
