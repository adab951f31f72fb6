// WAV encoding and resampling: the upload path must produce mono 16-bit
// PCM RIFF data at 16 kHz regardless of the browser capture rate.

import { describe, expect, it } from "vitest";

import {
  CAPTURE_RATE,
  bufferToBase64,
  encodeWav,
  floatToPcm16,
  resampleLinear,
  wavBase64FromFloat,
} from "../src/audio";

function ascii(view: DataView, offset: number, length: number): string {
  let out = "";
  for (let i = 0; i < length; i++) out += String.fromCharCode(view.getUint8(offset + i));
  return out;
}

describe("encodeWav", () => {
  it("writes a valid mono 16-bit RIFF header at 16 kHz", () => {
    const samples = new Int16Array([0, 1000, -1000, 32767, -32768]);
    const view = new DataView(encodeWav(samples, CAPTURE_RATE));
    expect(ascii(view, 0, 4)).toBe("RIFF");
    expect(ascii(view, 8, 4)).toBe("WAVE");
    expect(ascii(view, 12, 4)).toBe("fmt ");
    expect(view.getUint16(20, true)).toBe(1); // PCM
    expect(view.getUint16(22, true)).toBe(1); // mono
    expect(view.getUint32(24, true)).toBe(16000);
    expect(view.getUint16(34, true)).toBe(16); // bits per sample
    expect(ascii(view, 36, 4)).toBe("data");
    expect(view.getUint32(40, true)).toBe(samples.length * 2);
    expect(view.getInt16(44 + 2, true)).toBe(1000);
    expect(view.getInt16(44 + 4, true)).toBe(-1000);
  });
});

describe("floatToPcm16", () => {
  it("scales and clamps to the int16 range", () => {
    const out = floatToPcm16(new Float32Array([0, 0.5, -0.5, 2, -2]));
    expect(out[0]).toBe(0);
    expect(out[1]).toBe(Math.round(0.5 * 32767));
    expect(out[3]).toBe(32767);
    expect(out[4]).toBe(-32767);
  });
});

describe("resampleLinear", () => {
  it("halves the sample count from 32 kHz to 16 kHz", () => {
    const input = new Float32Array(3200);
    const out = resampleLinear(input, 32000, 16000);
    expect(out.length).toBe(1600);
  });

  it("preserves a constant signal exactly", () => {
    const input = new Float32Array(441).fill(0.25);
    const out = resampleLinear(input, 44100, 16000);
    for (const v of out) expect(v).toBeCloseTo(0.25, 6);
  });

  it("keeps endpoints when upsampling", () => {
    const input = new Float32Array([0, 1]);
    const out = resampleLinear(input, 8000, 16000);
    expect(out[0]).toBeCloseTo(0, 6);
    expect(out[out.length - 1]).toBeCloseTo(1, 6);
  });

  it("is the identity at equal rates", () => {
    const input = new Float32Array([0.1, 0.2, 0.3]);
    expect(resampleLinear(input, 16000, 16000)).toBe(input);
  });
});

describe("wavBase64FromFloat", () => {
  it("round-trips through base64 to a 16 kHz RIFF payload", () => {
    const samples = new Float32Array(48000).map((_, i) => Math.sin(i / 50) * 0.4);
    const b64 = wavBase64FromFloat(samples, 48000);
    const raw = Uint8Array.from(atob(b64), (c) => c.charCodeAt(0));
    const view = new DataView(raw.buffer);
    expect(ascii(view, 0, 4)).toBe("RIFF");
    expect(view.getUint32(24, true)).toBe(CAPTURE_RATE);
    // one second of audio at either rate
    expect(view.getUint32(40, true)).toBe(CAPTURE_RATE * 2);
  });
});

describe("bufferToBase64", () => {
  it("encodes large buffers without call-stack issues", () => {
    const big = new ArrayBuffer(200_000);
    const b64 = bufferToBase64(big);
    expect(b64.length).toBeGreaterThan(0);
    expect(atob(b64).length).toBe(200_000);
  });
});
