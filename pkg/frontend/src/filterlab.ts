// Filter explorer: upload tab-separated sentence pairs, score them once on
// the server, then steer the threshold slider entirely client-side against
// the cached scores. Moving the slider never re-calls the scoring endpoint.

import { ApiClient } from "./api";
import {
  HistogramBin,
  ScoredPair,
  clampTau,
  keptPairsTsv,
  parsePairsUpload,
  partitionByThreshold,
  scoreHistogram,
} from "./partition";

export interface FilterLabElements {
  upload: HTMLTextAreaElement;
  scoreButton: HTMLButtonElement;
  slider: HTMLInputElement;
  tauLabel: HTMLElement;
  keptCount: HTMLElement;
  droppedCount: HTMLElement;
  table: HTMLElement;
  histogram: HTMLElement;
  exportButton: HTMLButtonElement;
  errors: HTMLElement;
}

export class FilterLab {
  pairs: ScoredPair[] = [];
  scoreCalls = 0;

  constructor(private readonly api: ApiClient, private readonly ui: FilterLabElements) {
    ui.slider.min = "-1";
    ui.slider.max = "1";
    ui.slider.step = "0.01";
    ui.scoreButton.addEventListener("click", () => void this.scoreUpload());
    ui.slider.addEventListener("input", () => this.repartition());
    ui.exportButton.addEventListener("click", () => this.exportKept());
  }

  get tau(): number {
    return clampTau(parseFloat(this.ui.slider.value));
  }

  async scoreUpload(): Promise<void> {
    const { pairs, errors } = parsePairsUpload(this.ui.upload.value);
    this.ui.errors.textContent = errors.join("\n");
    if (!pairs.length) {
      this.ui.errors.textContent += (errors.length ? "\n" : "") + "no valid pairs to score";
      return;
    }
    this.ui.scoreButton.disabled = true;
    try {
      const { scores } = await this.api.filterScore(
        pairs.map((p) => p.src),
        pairs.map((p) => p.tgt),
      );
      this.scoreCalls++;
      this.pairs = pairs.map((p, i) => ({ ...p, score: scores[i] }));
      this.repartition();
    } catch (err) {
      this.ui.errors.textContent = String(err);
    } finally {
      this.ui.scoreButton.disabled = false;
    }
  }

  repartition(): void {
    const tau = this.tau;
    this.ui.tauLabel.textContent = tau.toFixed(2);
    const { kept, dropped } = partitionByThreshold(
      this.pairs.map((p) => p.score),
      tau,
    );
    this.ui.keptCount.textContent = String(kept.length);
    this.ui.droppedCount.textContent = String(dropped.length);
    this.renderTable(new Set(kept));
    this.renderHistogram(scoreHistogram(this.pairs.map((p) => p.score)), tau);
  }

  private renderTable(keptSet: Set<number>): void {
    const doc = this.ui.table.ownerDocument;
    this.ui.table.textContent = "";
    const table = doc.createElement("table");
    const head = doc.createElement("tr");
    for (const title of ["#", "source", "target", "score", ""]) {
      const th = doc.createElement("th");
      th.textContent = title;
      head.appendChild(th);
    }
    table.appendChild(head);
    this.pairs.forEach((pair, i) => {
      const row = doc.createElement("tr");
      row.className = keptSet.has(i) ? "kept" : "dropped";
      for (const value of [String(i), pair.src, pair.tgt, pair.score.toFixed(6)]) {
        const td = doc.createElement("td");
        td.textContent = value;
        row.appendChild(td);
      }
      const badge = doc.createElement("td");
      badge.textContent = keptSet.has(i) ? "kept" : "dropped";
      row.appendChild(badge);
      table.appendChild(row);
    });
    this.ui.table.appendChild(table);
  }

  private renderHistogram(bins: HistogramBin[], tau: number): void {
    const doc = this.ui.histogram.ownerDocument;
    this.ui.histogram.textContent = "";
    const max = Math.max(1, ...bins.map((b) => b.count));
    for (const bin of bins) {
      const bar = doc.createElement("div");
      bar.className = "hist-bar" + (bin.lo >= tau ? " above-tau" : "");
      bar.style.height = `${Math.round((100 * bin.count) / max)}%`;
      bar.title = `[${bin.lo.toFixed(1)}, ${bin.hi.toFixed(1)}): ${bin.count}`;
      this.ui.histogram.appendChild(bar);
    }
  }

  private exportKept(): void {
    const { kept } = partitionByThreshold(this.pairs.map((p) => p.score), this.tau);
    const tsv = keptPairsTsv(this.pairs, kept);
    const blob = new Blob([tsv + "\n"], { type: "text/tab-separated-values" });
    const link = this.ui.table.ownerDocument.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `kept_tau_${this.tau.toFixed(2)}.tsv`;
    link.click();
    URL.revokeObjectURL(link.href);
  }
}
