import { describe, expect, it } from "vitest";

import { ParseError } from "../src/errors";
import { decodePng, encodeGray8 } from "../src/png";
import { inflate, mulberry32 } from "./helpers";

describe("png codec", () => {
  it("gray8 roundtrip preserves every byte", () => {
    const rand = mulberry32(7);
    const w = 31;
    const h = 17;
    const pixels = new Uint8Array(w * h);
    for (let i = 0; i < pixels.length; i++) pixels[i] = Math.floor(rand() * 3);
    const png = encodeGray8(pixels, w, h);
    const decoded = decodePng(png, inflate);
    expect(decoded.width).toBe(w);
    expect(decoded.height).toBe(h);
    expect(decoded.channels).toBe(1);
    expect([...decoded.pixels]).toEqual([...pixels]);
  });

  it("handles images larger than one stored deflate block", () => {
    const w = 300;
    const h = 240; // raw stream 300*240 + 240 > 65535, forces multiple blocks
    const pixels = new Uint8Array(w * h);
    for (let i = 0; i < pixels.length; i++) pixels[i] = i % 251;
    const decoded = decodePng(encodeGray8(pixels, w, h), inflate);
    expect([...decoded.pixels]).toEqual([...pixels]);
  });

  it("rejects non-PNG data and size mismatches", () => {
    expect(() => decodePng(Uint8Array.from([1, 2, 3]), inflate)).toThrow(ParseError);
    expect(() => encodeGray8(new Uint8Array(5), 2, 2)).toThrow(ParseError);
  });
});
