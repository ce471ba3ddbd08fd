/**
 * Binary codecs for the on-disk scan and label formats.
 *
 * Scans are little-endian float32 records of (x, y, z, remission); label
 * files are little-endian uint32 words with the semantic class in the low
 * 16 bits and the instance id in the high 16 bits. Encoding is explicit
 * about byte order so the files stay bit-identical across platforms.
 */

const SCAN_FIELDS = 4;
const BYTES_PER_POINT = SCAN_FIELDS * 4;

export interface LabelPair {
  classes: Uint16Array;
  instances: Uint16Array;
}

/** Number of points in a flat (x, y, z, remission) buffer. */
export function pointCount(points: Float32Array): number {
  if (points.length % SCAN_FIELDS !== 0) {
    throw new RangeError(
      `point buffer length ${points.length} is not a multiple of ${SCAN_FIELDS}`
    );
  }
  return points.length / SCAN_FIELDS;
}

export function encodeScan(points: Float32Array): Buffer {
  const n = pointCount(points);
  const buf = Buffer.allocUnsafe(n * BYTES_PER_POINT);
  for (let i = 0; i < points.length; i++) {
    buf.writeFloatLE(points[i], i * 4);
  }
  return buf;
}

export function decodeScan(buf: Buffer): Float32Array {
  if (buf.length % BYTES_PER_POINT !== 0) {
    throw new RangeError(`scan byte length ${buf.length} is not a whole number of points`);
  }
  const out = new Float32Array(buf.length / 4);
  for (let i = 0; i < out.length; i++) {
    out[i] = buf.readFloatLE(i * 4);
  }
  return out;
}

export function encodeLabels(words: Uint32Array): Buffer {
  const buf = Buffer.allocUnsafe(words.length * 4);
  for (let i = 0; i < words.length; i++) {
    buf.writeUInt32LE(words[i], i * 4);
  }
  return buf;
}

export function decodeLabels(buf: Buffer): Uint32Array {
  if (buf.length % 4 !== 0) {
    throw new RangeError(`label byte length ${buf.length} is not a whole number of words`);
  }
  const out = new Uint32Array(buf.length / 4);
  for (let i = 0; i < out.length; i++) {
    out[i] = buf.readUInt32LE(i * 4);
  }
  return out;
}

/** Split packed label words into class and instance channels. */
export function splitLabels(words: Uint32Array): LabelPair {
  const classes = new Uint16Array(words.length);
  const instances = new Uint16Array(words.length);
  for (let i = 0; i < words.length; i++) {
    classes[i] = words[i] & 0xffff;
    instances[i] = words[i] >>> 16;
  }
  return { classes, instances };
}

/** Pack class and instance channels into label words. */
export function packLabels(classes: ArrayLike<number>, instances?: ArrayLike<number>): Uint32Array {
  const out = new Uint32Array(classes.length);
  for (let i = 0; i < classes.length; i++) {
    const cls = classes[i];
    const inst = instances ? instances[i] : 0;
    if (cls < 0 || cls > 0xffff || inst < 0 || inst > 0xffff) {
      throw new RangeError(`class/instance out of 16-bit range at index ${i}`);
    }
    out[i] = (cls | (inst << 16)) >>> 0;
  }
  return out;
}
