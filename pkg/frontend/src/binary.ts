/**
 * Parser for the engine's compact binary dataset format.
 *
 * Layout (little-endian): magic "TBPR", uint32 version, uint64 rows,
 * uint64 feature columns, uint8 task flag (1 = classification), uint32
 * class count (0 for regression), a table of (uint8 kind, uint32
 * cardinality) column descriptors, the train mask as one byte per row,
 * then the feature matrix and target vector as row-major float64.
 */

export interface ColumnMeta {
  kind: 'num' | 'cat';
  cardinality: number | null;
}

export interface Dataset {
  task: 'classification' | 'regression';
  nClasses: number | null;
  /** Row-major feature matrix, length rows * cols. */
  x: Float64Array;
  y: Float64Array;
  trainMask: Uint8Array;
  rows: number;
  cols: number;
  columns: ColumnMeta[];
}

const MAGIC = 'TBPR';
const VERSION = 1;

export function parseDataset(buf: Uint8Array): Dataset {
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  if (buf.length < 4 || String.fromCharCode(...buf.subarray(0, 4)) !== MAGIC) {
    throw new Error('not a dataset file (bad magic)');
  }
  let off = 4;
  const version = view.getUint32(off, true);
  off += 4;
  if (version !== VERSION) {
    throw new Error(`unsupported dataset version ${version}`);
  }
  const rows = Number(view.getBigUint64(off, true));
  off += 8;
  const cols = Number(view.getBigUint64(off, true));
  off += 8;
  const isClassification = view.getUint8(off) === 1;
  off += 1;
  const nClasses = view.getUint32(off, true);
  off += 4;

  const columns: ColumnMeta[] = [];
  for (let j = 0; j < cols; j++) {
    const kind = view.getUint8(off) === 1 ? 'cat' : 'num';
    off += 1;
    const card = view.getUint32(off, true);
    off += 4;
    columns.push({ kind, cardinality: kind === 'cat' ? card : null });
  }

  const trainMask = buf.slice(off, off + rows);
  off += rows;

  const expect = off + 8 * rows * cols + 8 * rows;
  if (buf.length !== expect) {
    throw new Error(`truncated dataset file: have ${buf.length} bytes, need ${expect}`);
  }
  const x = new Float64Array(rows * cols);
  for (let i = 0; i < x.length; i++) {
    x[i] = view.getFloat64(off + 8 * i, true);
  }
  off += 8 * rows * cols;
  const y = new Float64Array(rows);
  for (let i = 0; i < rows; i++) {
    y[i] = view.getFloat64(off + 8 * i, true);
  }

  return {
    task: isClassification ? 'classification' : 'regression',
    nClasses: isClassification ? nClasses : null,
    x,
    y,
    trainMask,
    rows,
    cols,
    columns,
  };
}

/** Value of feature column `j` in row `i`. */
export function cell(ds: Dataset, i: number, j: number): number {
  if (i < 0 || i >= ds.rows || j < 0 || j >= ds.cols) {
    throw new RangeError(`cell (${i}, ${j}) out of bounds for ${ds.rows}x${ds.cols}`);
  }
  return ds.x[i * ds.cols + j];
}
