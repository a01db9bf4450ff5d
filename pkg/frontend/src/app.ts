/** Browser wiring: the canvas shows the server-rendered PNG (WYSIWYG with
 * the export path) with client-side selection overlays on top. */

import { ApiClient } from "./api.js";
import { EditorController } from "./state.js";
import type { SceneComponent } from "./types.js";

const SERVICE_URL = new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8737";

const canvas = document.getElementById("page") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const componentList = document.getElementById("components")!;
const scaleInput = document.getElementById("scale") as HTMLInputElement;
const zInput = document.getElementById("zorder") as HTMLInputElement;
const catalogSelect = document.getElementById("catalog-pick") as HTMLSelectElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const statusLine = document.getElementById("status")!;

const controller = new EditorController(new ApiClient(SERVICE_URL));

function componentBox(c: SceneComponent): [number, number, number, number] {
  // native component sizes are unknown client-side; overlays use a nominal
  // box around the center scaled by the component scale
  const side = 48 * c.scale;
  return [c.center[0] - side / 2, c.center[1] - side / 2, side, side];
}

async function redraw(): Promise<void> {
  const s = controller.state;
  banner.textContent = s.error ?? "";
  banner.className = s.error ? "banner error" : "banner";
  statusLine.textContent = s.pendingMutation ? "syncing..." : "idle";
  if (!s.scene || !s.lastRender) return;

  const blob = new Blob([s.lastRender.buffer as ArrayBuffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  ctx.drawImage(bitmap, 0, 0);

  for (const c of s.scene.components) {
    if (c.id !== s.selection) continue;
    const [x, y, w, h] = componentBox(c);
    ctx.strokeStyle = "#d22";
    ctx.lineWidth = 2;
    ctx.setLineDash([6, 4]);
    ctx.strokeRect(x, y, w, h);
    ctx.setLineDash([]);
  }

  componentList.innerHTML = "";
  for (const c of [...s.scene.components].sort((a, b) => a.z_order - b.z_order)) {
    const li = document.createElement("li");
    li.textContent = `${c.id} (${c.region}, z ${c.z_order})`;
    li.className = c.id === s.selection ? "selected" : "";
    li.onclick = () => {
      controller.select(c.id);
      const sel = controller.component(c.id)!;
      scaleInput.value = sel.scale.toFixed(3);
      zInput.value = String(sel.z_order);
      void redraw();
    };
    componentList.appendChild(li);
  }

  if (s.catalog && catalogSelect.childElementCount === 0) {
    for (const body of s.catalog.bodies) {
      const opt = document.createElement("option");
      opt.value = `bodies:${body.index}`;
      opt.textContent = `body ${body.index} (${body.tag})`;
      catalogSelect.appendChild(opt);
    }
    for (const ear of s.catalog.ears) {
      const opt = document.createElement("option");
      opt.value = `ears:${ear.index}`;
      opt.textContent = `ear ${ear.index}`;
      catalogSelect.appendChild(opt);
    }
  }
}

controller.onChange = () => void redraw();

// drag to move: pointer deltas accumulate into throttled, coalesced PATCHes
let dragging: { id: string; lastX: number; lastY: number } | null = null;

canvas.addEventListener("pointerdown", (ev) => {
  const s = controller.state;
  if (!s.scene) return;
  const rect = canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  const hit = [...s.scene.components]
    .sort((a, b) => b.z_order - a.z_order)
    .find((c) => {
      const [bx, by, w, h] = componentBox(c);
      return x >= bx && x <= bx + w && y >= by && y <= by + h;
    });
  controller.select(hit ? hit.id : null);
  if (hit) dragging = { id: hit.id, lastX: x, lastY: y };
});

canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  const rect = canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  const dx = x - dragging.lastX;
  const dy = y - dragging.lastY;
  if (Math.abs(dx) + Math.abs(dy) < 1) return;
  dragging.lastX = x;
  dragging.lastY = y;
  void controller.moveBy(dragging.id, dx, dy);
});

window.addEventListener("pointerup", () => {
  dragging = null;
});

scaleInput.addEventListener("change", () => {
  if (controller.state.selection) {
    void controller.setScale(controller.state.selection, Number(scaleInput.value));
  }
});

zInput.addEventListener("change", () => {
  if (controller.state.selection) {
    void controller.setZ(controller.state.selection, Number(zInput.value));
  }
});

catalogSelect.addEventListener("change", () => {
  const sel = controller.state.selection;
  if (!sel) return;
  const [category, index] = catalogSelect.value.split(":");
  void controller.switchCatalog(sel, category as "ears" | "bodies", Number(index));
});

exportButton.addEventListener("click", async () => {
  try {
    const result = await controller.export();
    statusLine.textContent = `exported: ${result.scene_path}, ${result.png_path}`;
  } catch (e) {
    banner.textContent = `export failed: ${String(e)}`;
    banner.className = "banner error";
  }
});

void controller.load();
