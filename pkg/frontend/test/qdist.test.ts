import { describe, expect, it } from 'vitest';

import { QuantileDistribution, levels } from '../src/index.js';

/** Exact standard-logistic quantiles at the engine's 999 levels. */
function logisticKnots(): number[] {
  return levels().map((a) => Math.log(a / (1 - a)));
}

describe('quantile distribution handle', () => {
  it('validates input length', () => {
    expect(() => QuantileDistribution.fromRawQuantiles([1, 2, 3])).toThrow(/999/);
  });

  it('reproduces standard-logistic facts', () => {
    const d = QuantileDistribution.fromRawQuantiles(logisticKnots());
    expect(Math.abs(d.mean())).toBeLessThan(1e-3);
    // Var of the standard logistic is pi^2 / 3
    expect(Math.abs(d.variance() - Math.PI ** 2 / 3)).toBeLessThan(0.05);
    const [atZero] = d.cdf([0]);
    expect(Math.abs(atZero - 0.5)).toBeLessThan(1e-3);
    const [pdfZero] = d.pdf([0]);
    expect(Math.abs(pdfZero - 0.25)).toBeLessThan(5e-3); // logistic density at 0
  });

  it('answers batched and repeated queries identically', () => {
    const d = QuantileDistribution.fromRawQuantiles(logisticKnots());
    const zs = [-2.0, -0.5, 0.0, 0.7, 3.1];
    const batch = d.query({ cdf: zs, crps: zs, mean: true });
    const single = zs.map((z) => d.cdf([z])[0]);
    for (let i = 0; i < zs.length; i++) {
      expect(batch.cdf![i]).toBe(single[i]); // same engine, bit-identical
      expect(batch.crps![i]).toBeGreaterThan(0);
    }
    expect(d.query({ mean: true }).mean).toBe(batch.mean);
  });

  it('local quantile interpolation agrees with the engine to 1e-12', () => {
    const d = QuantileDistribution.fromRawQuantiles(logisticKnots());
    const alphas = [0.001, 0.0132, 0.25, 0.5, 0.71113, 0.9755, 0.999];
    const engine = d.quantile(alphas);
    for (let i = 0; i < alphas.length; i++) {
      expect(Math.abs(d.quantileLocal(alphas[i]) - engine[i])).toBeLessThan(1e-12);
    }
    expect(() => d.quantileLocal(1e-5)).toThrow(RangeError);
  });

  it('round-trips through fitted knots', () => {
    const d = QuantileDistribution.fromRawQuantiles(logisticKnots());
    const fit = d.fit();
    expect(fit.knots.length).toBe(999);
    const d2 = QuantileDistribution.fromKnots(fit.knots, fit.beta_l, fit.beta_r);
    const zs = [-1.0, 0.3, 2.2];
    const a = d.crps(zs);
    const b = d2.crps(zs);
    for (let i = 0; i < zs.length; i++) {
      expect(Math.abs(a[i] - b[i])).toBeLessThan(1e-12);
    }
  });

  it('sampling is seed-deterministic', () => {
    const d = QuantileDistribution.fromRawQuantiles(logisticKnots());
    const s1 = d.sample(11, 100);
    const s2 = d.sample(11, 100);
    const s3 = d.sample(12, 100);
    expect(s1).toEqual(s2);
    expect(s1).not.toEqual(s3);
    expect(s1.length).toBe(100);
  });
});
