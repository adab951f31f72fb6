// Filter lab behaviour: scoring happens exactly once per upload; slider
// moves repartition client-side against cached scores without re-calling
// the scoring endpoint.

import { beforeEach, describe, expect, it, vi } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { ApiClient } from "../src/api";
import { FilterLab, FilterLabElements } from "../src/filterlab";
import { partitionByThreshold } from "../src/partition";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "filter_scores.json"), "utf-8"),
) as { src: string[]; tgt: string[]; scores: number[]; taus: number[] };

function buildUi(): FilterLabElements {
  document.body.innerHTML = `
    <textarea id="pairs-upload"></textarea>
    <button id="score-btn"></button>
    <input type="range" id="tau-slider" value="0.5" />
    <span id="tau-value"></span>
    <span id="kept-count"></span>
    <span id="dropped-count"></span>
    <div id="pairs-table"></div>
    <div id="score-histogram"></div>
    <button id="export-btn"></button>
    <div id="upload-errors"></div>`;
  return {
    upload: document.getElementById("pairs-upload") as HTMLTextAreaElement,
    scoreButton: document.getElementById("score-btn") as HTMLButtonElement,
    slider: document.getElementById("tau-slider") as HTMLInputElement,
    tauLabel: document.getElementById("tau-value")!,
    keptCount: document.getElementById("kept-count")!,
    droppedCount: document.getElementById("dropped-count")!,
    table: document.getElementById("pairs-table")!,
    histogram: document.getElementById("score-histogram")!,
    exportButton: document.getElementById("export-btn") as HTMLButtonElement,
    errors: document.getElementById("upload-errors")!,
  };
}

function mockApi(): { api: ApiClient; calls: () => number } {
  const api = new ApiClient("");
  let calls = 0;
  vi.spyOn(api, "filterScore").mockImplementation(async (src: string[]) => {
    calls++;
    // serve the fixture scores for the fixture pairs, by position
    return { scores: fixture.scores.slice(0, src.length) };
  });
  return { api, calls: () => calls };
}

describe("filter lab session", () => {
  let ui: FilterLabElements;

  beforeEach(() => {
    ui = buildUi();
  });

  it("scores once, then repartitions on slider moves without re-scoring", async () => {
    const { api, calls } = mockApi();
    const lab = new FilterLab(api, ui);
    ui.upload.value = fixture.src
      .map((s, i) => `${s}\t${fixture.tgt[i]}`)
      .join("\n");
    await lab.scoreUpload();
    expect(calls()).toBe(1);
    expect(lab.pairs).toHaveLength(100);

    for (const tau of fixture.taus) {
      ui.slider.value = String(tau);
      ui.slider.dispatchEvent(new Event("input"));
      const expected = partitionByThreshold(fixture.scores, tau);
      expect(ui.keptCount.textContent).toBe(String(expected.kept.length));
      expect(ui.droppedCount.textContent).toBe(String(expected.dropped.length));
      expect(ui.table.querySelectorAll("tr.kept")).toHaveLength(expected.kept.length);
    }
    expect(calls()).toBe(1); // slider never re-calls the endpoint
  });

  it("renders a histogram over all scored pairs", async () => {
    const { api } = mockApi();
    const lab = new FilterLab(api, ui);
    ui.upload.value = fixture.src.map((s, i) => `${s}\t${fixture.tgt[i]}`).join("\n");
    await lab.scoreUpload();
    const bars = ui.histogram.querySelectorAll(".hist-bar");
    expect(bars).toHaveLength(20);
  });

  it("reports malformed upload rows without scoring them", async () => {
    const { api, calls } = mockApi();
    const lab = new FilterLab(api, ui);
    ui.upload.value = "good source\tgood target\nmissing tab\n";
    await lab.scoreUpload();
    expect(ui.errors.textContent).toContain("line 2");
    expect(lab.pairs).toHaveLength(1);
    expect(calls()).toBe(1);
  });

  it("refuses an upload with no valid pairs", async () => {
    const { api, calls } = mockApi();
    const lab = new FilterLab(api, ui);
    ui.upload.value = "only one column\n";
    await lab.scoreUpload();
    expect(calls()).toBe(0);
    expect(ui.errors.textContent).toContain("no valid pairs");
  });
});
