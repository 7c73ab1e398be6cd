/** DOM glue for the studio page. All logic lives in controller.ts and
 * render.ts; this file only wires events and paints. */

import { ApiClient, ApiError } from "./api.js";
import { StudioController } from "./controller.js";
import { coordPath, formatSimilarity, weightBars, wipeSplit } from "./render.js";
import { SLIDER_MAX, SLIDER_MIN } from "./session.js";

const CHANNEL_COLORS = ["#c33", "#3a3", "#36c"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const root = document.body;
  const api = new ApiClient(root.dataset.api ?? "");

  const before = el<HTMLImageElement>("before");
  const after = el<HTMLImageElement>("after");
  const afterWrap = el<HTMLDivElement>("after-wrap");
  const meter = el<HTMLSpanElement>("similarity");
  const errorBox = el<HTMLDivElement>("error");
  const barsBox = el<HTMLDivElement>("weights");
  const coordsSvg = el<HTMLElement>("coords");

  const controller = new StudioController(api, {
    onPreview(response) {
      after.src = `data:image/png;base64,${response.image}`;
      errorBox.textContent = "";
      barsBox.innerHTML = "";
      for (const bar of weightBars(response.weights)) {
        const div = document.createElement("div");
        div.className = "bar" + (bar.negative ? " negative" : "");
        div.style.height = `${bar.percent}%`;
        div.title = bar.label;
        barsBox.appendChild(div);
      }
      coordsSvg.innerHTML = response.coords
        .map(
          (row, c) =>
            `<path d="${coordPath(row, 120, 80)}" fill="none" ` +
            `stroke="${CHANNEL_COLORS[c]}" stroke-width="1.5"/>`,
        )
        .join("");
    },
    onSimilarity(score) {
      meter.textContent = formatSimilarity(score);
    },
    onError(err: ApiError) {
      errorBox.textContent = `${err.code}: ${err.message}`;
    },
  });

  const slider = el<HTMLInputElement>("strength");
  slider.min = String(SLIDER_MIN);
  slider.max = String(SLIDER_MAX);
  slider.addEventListener("input", () => {
    el<HTMLSpanElement>("strength-value").textContent = slider.value;
    controller.setStrength(Number(slider.value));
  });

  const textSelect = el<HTMLSelectElement>("text");
  for (const text of await api.texts()) {
    const option = document.createElement("option");
    option.value = text;
    option.textContent = text;
    textSelect.appendChild(option);
  }
  textSelect.addEventListener("change", () => controller.setText(textSelect.value));

  el<HTMLInputElement>("file").addEventListener("change", (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) return;
    const reader = new FileReader();
    reader.onload = () => {
      const dataUrl = reader.result as string;
      const b64 = dataUrl.slice(dataUrl.indexOf(",") + 1);
      before.src = dataUrl;
      controller.loadImage(b64);
    };
    reader.readAsDataURL(file);
  });

  const wipe = el<HTMLInputElement>("wipe");
  wipe.addEventListener("input", () => {
    const split = wipeSplit(Number(wipe.value) / 100);
    afterWrap.style.clipPath = `inset(0 0 0 ${split.before}%)`;
  });

  el<HTMLButtonElement>("export").addEventListener("click", async () => {
    try {
      const cube = await controller.downloadCube();
      const blob = new Blob([cube], { type: "text/plain" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${controller.state.text.replace(/ /g, "_")}.cube`;
      link.click();
      URL.revokeObjectURL(link.href);
    } catch (err) {
      if (err instanceof ApiError) errorBox.textContent = `${err.code}: ${err.message}`;
    }
  });
}

void boot();
