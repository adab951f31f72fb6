// Client-side threshold partitioning over cached scores. Must stay
// behaviourally identical to the server's filter step (score >= tau keeps
// the pair, input order preserved) so slider moves never need a re-score.

export interface ScoredPair {
  src: string;
  tgt: string;
  score: number;
}

export interface Partition {
  kept: number[]; // indices into the pair list, input order
  dropped: number[];
}

export function clampTau(tau: number): number {
  if (Number.isNaN(tau)) return 0;
  return Math.min(1, Math.max(-1, tau));
}

export function partitionByThreshold(scores: readonly number[], tau: number): Partition {
  const t = clampTau(tau);
  const kept: number[] = [];
  const dropped: number[] = [];
  scores.forEach((score, i) => {
    (score >= t ? kept : dropped).push(i);
  });
  return { kept, dropped };
}

export interface HistogramBin {
  lo: number;
  hi: number;
  count: number;
}

export function scoreHistogram(scores: readonly number[], bins = 20): HistogramBin[] {
  const out: HistogramBin[] = [];
  const width = 2 / bins;
  for (let b = 0; b < bins; b++) {
    out.push({ lo: -1 + b * width, hi: -1 + (b + 1) * width, count: 0 });
  }
  for (const s of scores) {
    let b = Math.floor((s + 1) / width);
    if (b >= bins) b = bins - 1; // score exactly 1.0 lands in the top bin
    if (b < 0) b = 0;
    out[b].count++;
  }
  return out;
}

export function keptPairsTsv(pairs: readonly ScoredPair[], kept: readonly number[]): string {
  return kept.map((i) => `${pairs[i].src}\t${pairs[i].tgt}\t${pairs[i].score.toFixed(6)}`).join("\n");
}

export function parsePairsUpload(text: string): { pairs: Array<{ src: string; tgt: string }>; errors: string[] } {
  const pairs: Array<{ src: string; tgt: string }> = [];
  const errors: string[] = [];
  const lines = text.split(/\r?\n/);
  lines.forEach((line, idx) => {
    if (!line.trim()) return;
    const cols = line.split("\t");
    if (cols.length < 2 || !cols[0].trim() || !cols[1].trim()) {
      errors.push(`line ${idx + 1}: expected source<TAB>target`);
      return;
    }
    pairs.push({ src: cols[0], tgt: cols[1] });
  });
  return { pairs, errors };
}
