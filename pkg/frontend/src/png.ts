/**
 * Minimal PNG codec, dependency free.
 *
 * The encoder writes 8-bit grayscale PNGs (the annotation mask upload
 * format) using stored-mode zlib blocks, so no compression library is
 * needed in the browser; any standards-compliant reader accepts the
 * output. The decoder handles 8-bit gray / RGB / RGBA non-interlaced
 * images with all five scanline filters, but leaves the inflate step to
 * an injected function (node:zlib in tests, DecompressionStream in the
 * browser) to stay runtime neutral.
 */

import { ParseError } from "./errors";

const SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c;
  }
  return table;
})();

function crc32(data: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function adler32(data: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < data.length; i++) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function be32(value: number): number[] {
  return [(value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff];
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const body = new Uint8Array(4 + data.length);
  for (let i = 0; i < 4; i++) body[i] = type.charCodeAt(i);
  body.set(data, 4);
  const out = new Uint8Array(12 + data.length);
  out.set(be32(data.length), 0);
  out.set(body, 4);
  out.set(be32(crc32(body)), 8 + data.length);
  return out;
}

/** zlib stream of uncompressed (stored) deflate blocks. */
function zlibStored(raw: Uint8Array): Uint8Array {
  const blocks: number[] = [0x78, 0x01];
  for (let off = 0; off < raw.length || off === 0; off += 65535) {
    const len = Math.min(65535, raw.length - off);
    const final = off + len >= raw.length ? 1 : 0;
    blocks.push(final, len & 0xff, (len >>> 8) & 0xff, ~len & 0xff, (~len >>> 8) & 0xff);
    for (let i = 0; i < len; i++) blocks.push(raw[off + i]);
    if (final) break;
  }
  const out = new Uint8Array(blocks.length + 4);
  out.set(blocks, 0);
  out.set(be32(adler32(raw)), blocks.length);
  return out;
}

/** Encode one byte per pixel as an 8-bit grayscale PNG. */
export function encodeGray8(pixels: Uint8Array, width: number, height: number): Uint8Array {
  if (pixels.length !== width * height) {
    throw new ParseError(`got ${pixels.length} pixels for ${width}x${height}`);
  }
  const raw = new Uint8Array(height * (width + 1));
  for (let r = 0; r < height; r++) {
    // leading 0 per row: filter type None
    raw.set(pixels.subarray(r * width, (r + 1) * width), r * (width + 1) + 1);
  }
  const ihdr = new Uint8Array(13);
  ihdr.set(be32(width), 0);
  ihdr.set(be32(height), 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // color type: grayscale
  const parts = [
    Uint8Array.from(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((s, p) => s + p.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const p of parts) {
    out.set(p, off);
    off += p.length;
  }
  return out;
}

export type Inflate = (data: Uint8Array) => Uint8Array;

export interface DecodedPng {
  width: number;
  height: number;
  channels: number; // 1 gray, 3 RGB, 4 RGBA
  pixels: Uint8Array; // defiltered, row-major, channels interleaved
}

const CHANNELS: Record<number, number> = { 0: 1, 2: 3, 6: 4 };

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(data: Uint8Array, inflate: Inflate): DecodedPng {
  for (let i = 0; i < 8; i++) {
    if (data[i] !== SIGNATURE[i]) throw new ParseError("not a PNG file");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let off = 8;
  let width = 0;
  let height = 0;
  let channels = 0;
  const idat: Uint8Array[] = [];
  while (off + 8 <= data.length) {
    const len = view.getUint32(off);
    const type = String.fromCharCode(data[off + 4], data[off + 5], data[off + 6], data[off + 7]);
    const body = data.subarray(off + 8, off + 8 + len);
    if (type === "IHDR") {
      width = view.getUint32(off + 8);
      height = view.getUint32(off + 12);
      const depth = data[off + 16];
      const color = data[off + 17];
      const interlace = data[off + 20];
      if (depth !== 8 || !(color in CHANNELS) || interlace !== 0) {
        throw new ParseError(
          `unsupported PNG layout (depth ${depth}, color ${color}, interlace ${interlace})`,
        );
      }
      channels = CHANNELS[color];
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    off += 12 + len;
  }
  if (!width || !height || !channels) throw new ParseError("PNG missing IHDR");
  let total = 0;
  for (const part of idat) total += part.length;
  const compressed = new Uint8Array(total);
  let pos = 0;
  for (const part of idat) {
    compressed.set(part, pos);
    pos += part.length;
  }
  const raw = inflate(compressed);
  const stride = width * channels;
  if (raw.length !== height * (stride + 1)) {
    throw new ParseError(`inflated size ${raw.length} != ${height * (stride + 1)}`);
  }
  const pixels = new Uint8Array(height * stride);
  for (let r = 0; r < height; r++) {
    const filter = raw[r * (stride + 1)];
    const rowIn = raw.subarray(r * (stride + 1) + 1, (r + 1) * (stride + 1));
    const rowOut = pixels.subarray(r * stride, (r + 1) * stride);
    const above = r > 0 ? pixels.subarray((r - 1) * stride, r * stride) : null;
    for (let i = 0; i < stride; i++) {
      const left = i >= channels ? rowOut[i - channels] : 0;
      const up = above ? above[i] : 0;
      const upLeft = above && i >= channels ? above[i - channels] : 0;
      let value = rowIn[i];
      switch (filter) {
        case 0:
          break;
        case 1:
          value += left;
          break;
        case 2:
          value += up;
          break;
        case 3:
          value += (left + up) >> 1;
          break;
        case 4:
          value += paeth(left, up, upLeft);
          break;
        default:
          throw new ParseError(`unknown PNG filter ${filter}`);
      }
      rowOut[i] = value & 0xff;
    }
  }
  return { width, height, channels, pixels };
}
