export { ENGINE_BIN, EngineError, runEngine } from './cli.js';
export { cell, parseDataset } from './binary.js';
export type { ColumnMeta, Dataset } from './binary.js';
export { generate } from './generate.js';
export type { DatasetMetadata, GenerateOptions, GeneratedItem } from './generate.js';
export { QuantileDistribution, levels } from './qdist.js';
export type { MonotonePolicy, QdistQueries, QdistResponse } from './qdist.js';
