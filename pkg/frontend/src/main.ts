import { GuidanceApp } from "./app.js";
import type { AppElements } from "./app.js";

const params = new URLSearchParams(location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8321";
const seedParam = params.get("seed");

const el: AppElements = {
  canvas: document.getElementById("arena") as HTMLCanvasElement,
  input: document.getElementById("command") as HTMLInputElement,
  sendButton: document.getElementById("send") as HTMLButtonElement,
  dictateButton: document.getElementById("dictate") as HTMLButtonElement,
  banner: document.getElementById("banner")!,
  telemetry: document.getElementById("telemetry")!,
  modal: document.getElementById("modal")!,
  modalBody: document.getElementById("modal-body")!,
};

const app = new GuidanceApp(el, baseUrl);

function fitCanvas() {
  const size = Math.min(el.canvas.parentElement!.clientWidth, window.innerHeight - 160);
  app.handleResize(Math.max(size, 320));
}
window.addEventListener("resize", fitCanvas);
fitCanvas();

document.getElementById("modal-close")!.addEventListener("click", () => {
  el.modal.classList.remove("visible");
});
document.getElementById("restart")!.addEventListener("click", () => {
  el.modal.classList.remove("visible");
  void app.start();
});

void app.start(seedParam === null ? undefined : Number(seedParam));

// handy for the scripted browser test
(window as unknown as Record<string, unknown>).dirtrajApp = app;
