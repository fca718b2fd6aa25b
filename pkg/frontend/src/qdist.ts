import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { runEngine } from './cli.js';

export type MonotonePolicy = 'sort' | 'isotonic' | 'none';

export interface QdistQueries {
  cdf?: number[];
  pdf?: number[];
  log_pdf?: number[];
  crps?: number[];
  quantile?: number[];
  mean?: boolean;
  variance?: boolean;
  sample?: { seed: number; n: number };
}

export interface QdistResponse {
  knots: number[];
  beta_l: number;
  beta_r: number;
  cdf?: number[];
  pdf?: number[];
  log_pdf?: number[];
  crps?: number[];
  quantile?: number[];
  mean?: number;
  variance?: number;
  sample?: number[];
}

/** The engine's fixed quantile levels: k / (K + 1) for k = 1..K, K = 999. */
export function levels(): number[] {
  const out: number[] = [];
  for (let k = 1; k <= 999; k++) out.push(k / 1000);
  return out;
}

/**
 * Handle on an engine-side quantile distribution.
 *
 * All numerics are delegated to `tabprior qdist --request`; this class
 * only marshals queries to JSON and back.  Construct from 999 raw
 * (possibly non-monotone) quantile values, or from fitted knots.
 */
export class QuantileDistribution {
  private readonly source: Record<string, unknown>;
  private fitted: QdistResponse | null = null;

  private constructor(source: Record<string, unknown>) {
    this.source = source;
  }

  static fromRawQuantiles(
    raw: number[],
    policy: MonotonePolicy = 'sort',
  ): QuantileDistribution {
    if (raw.length !== 999) {
      throw new Error(`expected 999 raw quantiles, got ${raw.length}`);
    }
    return new QuantileDistribution({ raw_quantiles: raw, policy });
  }

  static fromKnots(knots: number[], betaL: number, betaR: number): QuantileDistribution {
    if (knots.length !== 999) {
      throw new Error(`expected 999 knots, got ${knots.length}`);
    }
    return new QuantileDistribution({ knots, beta_l: betaL, beta_r: betaR });
  }

  /** One engine round trip answering an arbitrary batch of queries. */
  query(queries: QdistQueries): QdistResponse {
    const dir = mkdtempSync(join(tmpdir(), 'tabprior-qdist-'));
    try {
      const reqPath = join(dir, 'request.json');
      writeFileSync(reqPath, JSON.stringify({ ...this.source, queries }));
      const out = runEngine(['qdist', '--request', reqPath]);
      const resp = JSON.parse(out).response as QdistResponse;
      this.fitted = resp;
      return resp;
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  }

  /** Fitted monotone knots (and tail slopes), fetched on first use. */
  fit(): QdistResponse {
    if (!this.fitted) this.query({});
    return this.fitted!;
  }

  cdf(z: number[]): number[] {
    return this.query({ cdf: z }).cdf!;
  }

  pdf(z: number[]): number[] {
    return this.query({ pdf: z }).pdf!;
  }

  crps(z: number[]): number[] {
    return this.query({ crps: z }).crps!;
  }

  quantile(alpha: number[]): number[] {
    return this.query({ quantile: alpha }).quantile!;
  }

  mean(): number {
    return this.query({ mean: true }).mean!;
  }

  variance(): number {
    return this.query({ variance: true }).variance!;
  }

  sample(seed: number, n: number): number[] {
    return this.query({ sample: { seed, n } }).sample!;
  }

  /**
   * Interior quantile computed locally from the fitted knots by linear
   * interpolation over the fixed levels.  Valid for alpha within
   * [0.001, 0.999]; used to cross-check the engine's arithmetic.
   */
  quantileLocal(alpha: number): number {
    if (alpha < 0.001 || alpha > 0.999) {
      throw new RangeError('local interpolation covers [0.001, 0.999] only');
    }
    const { knots } = this.fit();
    const a = levels();
    if (alpha <= a[0]) return knots[0];
    if (alpha >= a[a.length - 1]) return knots[knots.length - 1];
    // binary search for the bracketing level pair
    let lo = 0;
    let hi = a.length - 1;
    while (hi - lo > 1) {
      const mid = (lo + hi) >> 1;
      if (a[mid] <= alpha) lo = mid;
      else hi = mid;
    }
    const slope = (knots[hi] - knots[lo]) / (a[hi] - a[lo]);
    return knots[lo] + slope * (alpha - a[lo]);
  }
}
