import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { parseDataset, type Dataset } from './binary.js';
import { runEngine } from './cli.js';

export interface GenerateOptions {
  seed?: number;
  count?: number;
  task?: 'classification' | 'regression' | 'mix';
  /** Row count, fixed or inclusive [lo, hi] range. */
  rows?: number | [number, number];
  /** Feature column count, fixed or inclusive [lo, hi] range. */
  cols?: number | [number, number];
  trainFraction?: number;
  filtering?: boolean;
  jobs?: number;
}

export interface DatasetMetadata {
  seed: number;
  task: string;
  n_samples: number;
  n_columns: number;
  n_classes: number | null;
  n_train: number;
  columns: { kind: string; cardinality: number | null }[];
  telemetry: Record<string, unknown>;
}

export interface GeneratedItem {
  dataset: Dataset;
  metadata: DatasetMetadata;
  /** Raw bytes of the engine's binary file, e.g. for checksumming. */
  bytes: Uint8Array;
}

function rangeFlag(value: number | [number, number]): string {
  return Array.isArray(value) ? `${value[0]}-${value[1]}` : String(value);
}

/**
 * Generate a batch of synthetic datasets through the engine CLI.
 *
 * Spawns `tabprior generate` into a temporary directory, parses the
 * manifest and every binary dataset file, and cleans the directory up
 * afterwards.  Identical options and seed always yield byte-identical
 * datasets (the engine is deterministic).
 */
export function generate(options: GenerateOptions = {}): GeneratedItem[] {
  const outDir = mkdtempSync(join(tmpdir(), 'tabprior-'));
  try {
    const args = ['generate', '--format', 'bin', '--out', outDir];
    if (options.seed !== undefined) args.push('--seed', String(options.seed));
    if (options.count !== undefined) args.push('--count', String(options.count));
    if (options.task !== undefined) args.push('--task', options.task);
    if (options.rows !== undefined) args.push('--rows', rangeFlag(options.rows));
    if (options.cols !== undefined) args.push('--cols', rangeFlag(options.cols));
    if (options.trainFraction !== undefined) {
      args.push('--train-frac', String(options.trainFraction));
    }
    if (options.filtering !== undefined) {
      args.push(options.filtering ? '--filter' : '--no-filter');
    }
    if (options.jobs !== undefined) args.push('--jobs', String(options.jobs));
    runEngine(args);

    const manifest = JSON.parse(readFileSync(join(outDir, 'manifest.json'), 'utf8'));
    const items: GeneratedItem[] = [];
    for (const entry of manifest.datasets) {
      if (entry.status !== 'ok') {
        throw new Error(`dataset ${entry.index} failed: ${entry.status}`);
      }
      const bytes = new Uint8Array(readFileSync(join(outDir, entry.data)));
      const metadata = JSON.parse(
        readFileSync(join(outDir, entry.metadata), 'utf8'),
      ) as DatasetMetadata;
      items.push({ dataset: parseDataset(bytes), metadata, bytes });
    }
    return items;
  } finally {
    rmSync(outDir, { recursive: true, force: true });
  }
}
