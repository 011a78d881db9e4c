/** Binary PPM (P6) decoding for canvas display of inspection frames. */

export interface DecodedImage {
  width: number;
  height: number;
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export function decodePpm(data: ArrayBuffer): DecodedImage {
  const bytes = new Uint8Array(data);
  let pos = 0;

  function token(): string {
    while (pos < bytes.length) {
      const ch = bytes[pos];
      if (ch === 0x23) {
        // '#' comment runs to end of line
        while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      } else if (ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d) {
        pos++;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    if (start === pos) throw new Error("truncated PPM header");
    const text = new TextDecoder().decode(bytes.subarray(start, pos));
    pos++; // single whitespace after the token
    return text;
  }

  function isSpace(ch: number): boolean {
    return ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d;
  }

  const magic = token();
  if (magic !== "P6") throw new Error(`not a P6 PPM (magic ${magic})`);
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const maxval = parseInt(token(), 10);
  if (!Number.isFinite(width) || !Number.isFinite(height) || maxval !== 255) {
    throw new Error("unsupported PPM header");
  }
  const expected = width * height * 3;
  const pixels = bytes.subarray(pos, pos + expected);
  if (pixels.length !== expected) throw new Error("PPM pixel data truncated");
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    rgba[i * 4] = pixels[i * 3];
    rgba[i * 4 + 1] = pixels[i * 3 + 1];
    rgba[i * 4 + 2] = pixels[i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  return { width, height, rgba };
}
