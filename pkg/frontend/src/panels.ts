// Stage panel rendering for the translate view: one panel per pipeline
// stage (recognition, correction, translation, synthesis) plus timing bars.

import type { SsmtResponse, TtmtResponse } from "./api";

const STAGE_ORDER = ["asr", "dc", "mt", "tts"] as const;
const STAGE_TITLES: Record<(typeof STAGE_ORDER)[number], string> = {
  asr: "Speech recognition",
  dc: "Disfluency correction",
  mt: "Translation",
  tts: "Speech synthesis",
};

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function timingBars(doc: Document, timings: SsmtResponse["timings_ms"]): HTMLElement {
  const wrap = el(doc, "div", "timing-bars");
  const total = Math.max(timings.total, 1e-9);
  for (const stage of STAGE_ORDER) {
    const row = el(doc, "div", "timing-row");
    row.appendChild(el(doc, "span", "timing-label", stage));
    const track = el(doc, "div", "timing-track");
    const bar = el(doc, "div", "timing-fill");
    bar.style.width = `${Math.max(1, (100 * timings[stage]) / total).toFixed(1)}%`;
    track.appendChild(bar);
    row.appendChild(track);
    row.appendChild(el(doc, "span", "timing-value", `${timings[stage].toFixed(1)} ms`));
    wrap.appendChild(row);
  }
  return wrap;
}

export function renderStagePanels(container: HTMLElement, result: SsmtResponse): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const texts: Record<string, string> = {
    asr: result.transcript,
    dc: result.fluent_text,
    mt: result.translation,
  };
  for (const stage of STAGE_ORDER) {
    const panel = el(doc, "section", "stage-panel");
    panel.dataset.stage = stage;
    panel.appendChild(el(doc, "h3", "stage-title", STAGE_TITLES[stage]));
    if (stage === "tts") {
      const audio = el(doc, "audio", "stage-audio");
      audio.controls = true;
      audio.src = `data:audio/wav;base64,${result.audio_b64}`;
      panel.appendChild(audio);
    } else {
      panel.appendChild(el(doc, "p", "stage-text", texts[stage]));
    }
    panel.appendChild(
      el(doc, "span", "stage-timing", `${result.timings_ms[stage].toFixed(1)} ms`),
    );
    container.appendChild(panel);
  }
  container.appendChild(timingBars(doc, result.timings_ms));
}

export function renderTextResult(container: HTMLElement, result: TtmtResponse): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const panel = el(doc, "section", "stage-panel");
  panel.dataset.stage = "mt";
  panel.appendChild(el(doc, "h3", "stage-title", STAGE_TITLES.mt));
  panel.appendChild(el(doc, "p", "stage-text", result.translation));
  const meta = result.detected_src
    ? `detected source: ${result.detected_src} — ${result.timing_ms.toFixed(1)} ms`
    : `${result.timing_ms.toFixed(1)} ms`;
  panel.appendChild(el(doc, "span", "stage-timing", meta));
  container.appendChild(panel);
}

export function renderErrorBanner(container: HTMLElement, message: string, stage?: string): void {
  const doc = container.ownerDocument;
  container.textContent = ""; // no stale panels behind an error
  const banner = el(doc, "div", "error-banner");
  banner.dataset.stage = stage ?? "request";
  banner.textContent = stage ? `stage ${stage} failed: ${message}` : message;
  container.appendChild(banner);
}
