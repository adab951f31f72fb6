// The slider partition must agree with the server's filter results on the
// frozen 100-pair fixture at every sampled threshold, and never mutate or
// re-request the cached scores.

import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import {
  clampTau,
  keptPairsTsv,
  parsePairsUpload,
  partitionByThreshold,
  scoreHistogram,
} from "../src/partition";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "filter_scores.json"), "utf-8"),
) as {
  src: string[];
  tgt: string[];
  scores: number[];
  taus: number[];
  server_kept_indices: number[][]; // aligned with taus
};

describe("client partition vs server results", () => {
  it("has the 100-pair fixture and 21 thresholds", () => {
    expect(fixture.scores).toHaveLength(100);
    expect(fixture.taus).toHaveLength(21);
  });

  it("matches the server partition at every sampled tau", () => {
    fixture.taus.forEach((tau, k) => {
      const { kept, dropped } = partitionByThreshold(fixture.scores, tau);
      expect(kept).toEqual(fixture.server_kept_indices[k]);
      expect(kept.length + dropped.length).toBe(100);
    });
  });

  it("keeps scores >= tau and drops the rest, preserving order", () => {
    for (const tau of fixture.taus) {
      const { kept, dropped } = partitionByThreshold(fixture.scores, tau);
      for (const i of kept) expect(fixture.scores[i]).toBeGreaterThanOrEqual(tau);
      for (const i of dropped) expect(fixture.scores[i]).toBeLessThan(tau);
      expect([...kept]).toEqual([...kept].sort((a, b) => a - b));
      expect([...dropped]).toEqual([...dropped].sort((a, b) => a - b));
    }
  });

  it("boundary thresholds keep everything / nothing above max", () => {
    expect(partitionByThreshold(fixture.scores, -1).kept).toHaveLength(100);
    const max = Math.max(...fixture.scores);
    if (max < 1) {
      expect(partitionByThreshold(fixture.scores, 1).kept).toHaveLength(0);
    }
  });

  it("does not mutate the score array", () => {
    const copy = [...fixture.scores];
    partitionByThreshold(fixture.scores, 0.3);
    expect(fixture.scores).toEqual(copy);
  });
});

describe("clampTau", () => {
  it("bounds the slider domain to [-1, 1]", () => {
    expect(clampTau(-5)).toBe(-1);
    expect(clampTau(5)).toBe(1);
    expect(clampTau(0.25)).toBe(0.25);
    expect(clampTau(NaN)).toBe(0);
  });
});

describe("scoreHistogram", () => {
  it("counts every score exactly once", () => {
    const bins = scoreHistogram(fixture.scores);
    expect(bins.reduce((n, b) => n + b.count, 0)).toBe(100);
  });

  it("puts score 1.0 in the top bin", () => {
    const bins = scoreHistogram([1.0]);
    expect(bins[bins.length - 1].count).toBe(1);
  });
});

describe("upload parsing and export", () => {
  it("parses tab-separated pairs and reports row-level errors", () => {
    const { pairs, errors } = parsePairsUpload("a\tb\nbad line\n\nc\td\n");
    expect(pairs).toEqual([
      { src: "a", tgt: "b" },
      { src: "c", tgt: "d" },
    ]);
    expect(errors).toHaveLength(1);
    expect(errors[0]).toContain("line 2");
  });

  it("exports kept pairs as TSV with 6-decimal scores", () => {
    const pairs = [
      { src: "a", tgt: "b", score: 0.9 },
      { src: "c", tgt: "d", score: 0.1 },
    ];
    const { kept } = partitionByThreshold(pairs.map((p) => p.score), 0.5);
    expect(keptPairsTsv(pairs, kept)).toBe("a\tb\t0.900000");
  });
});
