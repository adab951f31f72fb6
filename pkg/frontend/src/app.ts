// Console bootstrap: session state, translate view wiring, filter lab
// wiring. One in-flight translate request per session; the submit controls
// stay disabled until the response (or error banner) lands.

import { ApiClient, ApiError } from "./api";
import { MicRecorder } from "./audio";
import { FilterLab, FilterLabElements } from "./filterlab";
import { renderErrorBanner, renderStagePanels, renderTextResult } from "./panels";

interface SessionState {
  pending: boolean;
  lastAudioB64?: string;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp(): void {
  const api = new ApiClient("");
  const state: SessionState = { pending: false };

  const srcSelect = byId<HTMLSelectElement>("src-lang");
  const tgtSelect = byId<HTMLSelectElement>("tgt-lang");
  const textInput = byId<HTMLTextAreaElement>("text-input");
  const translateBtn = byId<HTMLButtonElement>("translate-btn");
  const recordBtn = byId<HTMLButtonElement>("record-btn");
  const panels = byId<HTMLDivElement>("stage-panels");
  const health = byId<HTMLSpanElement>("health");

  const recorder = new MicRecorder();
  let recording = false;

  function setPending(pending: boolean): void {
    state.pending = pending;
    translateBtn.disabled = pending;
    recordBtn.disabled = pending && !recording;
  }

  async function submitText(): Promise<void> {
    if (state.pending) return;
    const text = textInput.value.trim();
    if (!text) return;
    setPending(true);
    try {
      const src = srcSelect.value || undefined;
      const result = await api.ttmt(text, tgtSelect.value, src === "auto" ? undefined : src);
      renderTextResult(panels, result);
    } catch (err) {
      const e = err as ApiError;
      renderErrorBanner(panels, e.message, e.stage);
    } finally {
      setPending(false);
    }
  }

  async function submitAudio(audioB64: string): Promise<void> {
    if (state.pending) return;
    setPending(true);
    try {
      const src = srcSelect.value === "auto" ? "en" : srcSelect.value;
      const result = await api.ssmt(audioB64, src, tgtSelect.value);
      state.lastAudioB64 = audioB64;
      renderStagePanels(panels, result);
    } catch (err) {
      const e = err as ApiError;
      renderErrorBanner(panels, e.message, e.stage);
    } finally {
      setPending(false);
    }
  }

  translateBtn.addEventListener("click", () => void submitText());
  recordBtn.addEventListener("click", () => {
    if (!recording) {
      recorder
        .start()
        .then(() => {
          recording = true;
          recordBtn.textContent = "Stop and translate";
        })
        .catch((err) => renderErrorBanner(panels, String(err)));
    } else {
      recording = false;
      recordBtn.textContent = "Record speech";
      recorder
        .stop()
        .then((audioB64) => submitAudio(audioB64))
        .catch((err) => renderErrorBanner(panels, String(err)));
    }
  });

  const filterUi: FilterLabElements = {
    upload: byId<HTMLTextAreaElement>("pairs-upload"),
    scoreButton: byId<HTMLButtonElement>("score-btn"),
    slider: byId<HTMLInputElement>("tau-slider"),
    tauLabel: byId<HTMLSpanElement>("tau-value"),
    keptCount: byId<HTMLSpanElement>("kept-count"),
    droppedCount: byId<HTMLSpanElement>("dropped-count"),
    table: byId<HTMLDivElement>("pairs-table"),
    histogram: byId<HTMLDivElement>("score-histogram"),
    exportButton: byId<HTMLButtonElement>("export-btn"),
    errors: byId<HTMLDivElement>("upload-errors"),
  };
  new FilterLab(api, filterUi);

  api
    .health()
    .then((h) => {
      health.textContent = `${h.replicas.total} replicas (${h.replicas.busy} busy)`;
    })
    .catch(() => {
      health.textContent = "backend offline";
    });

  // tab switching
  document.querySelectorAll<HTMLButtonElement>(".tab-btn").forEach((btn) => {
    btn.addEventListener("click", () => {
      document.querySelectorAll(".tab-btn").forEach((b) => b.classList.remove("active"));
      document.querySelectorAll(".tab-root").forEach((t) => t.classList.add("hidden"));
      btn.classList.add("active");
      byId(btn.dataset.tab!).classList.remove("hidden");
    });
  });
}

if (typeof document !== "undefined" && document.getElementById("stage-panels")) {
  startApp();
}
