"""Command-line surface.

Subcommands: ``generate`` (dataset batches with telemetry and a manifest),
``gallery`` (2-D classification scatters and per-family function heat
fields), ``qdist`` (quantile-distribution evaluation, the synthetic
validation suite, and a JSON request/response mode for external callers),
and ``attn-diag`` (normalized attention-entropy trends over context size).

Exit codes: 0 success, 2 configuration error, 3 generation exhausted its
retry budget, 4 I/O failure.
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import io as dsio
from .attention import AttentionParams, attention
from .dataset import (
    GenerationConfig,
    GenerationExhausted,
    generate_dataset,
)
from .quantiles import QuantileDistribution, default_levels, evaluate_suite
from .rng import RngStream

EXIT_CONFIG = 2
EXIT_EXHAUSTED = 3
EXIT_IO = 4


def _default_seed() -> int:
    env = os.environ.get("TABPRIOR_SEED")
    return int(env) if env else 0


def _parse_range(text: str, lo_floor: int) -> tuple[int, int]:
    """Parse "N" or "LO-HI" into an inclusive integer range."""
    try:
        if "-" in text:
            lo, hi = (int(p) for p in text.split("-", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise click.BadParameter(f"expected N or LO-HI, got {text!r}")
    if lo < lo_floor or hi < lo:
        raise click.BadParameter(f"invalid range {text!r}")
    return lo, hi


@click.group()
def main():
    """Synthetic tabular prior toolkit."""


def _item_seed(seed: int, index: int) -> int:
    return int(RngStream(seed).split(("batch", index)).integers(0, 2**63))


def _generate_one(args):
    config_kwargs, seed, index, task = args
    config = GenerationConfig(task=task, **config_kwargs)
    try:
        return index, generate_dataset(config, _item_seed(seed, index)), None
    except GenerationExhausted as exc:
        return index, None, exc.telemetry


@main.command()
@click.option("--seed", type=int, default=None, help="Master seed (default: $TABPRIOR_SEED or 0).")
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--task", type=click.Choice(["classification", "regression", "mix"]),
              default="classification", show_default=True)
@click.option("--rows", default="1024", show_default=True, help="Sample count, N or LO-HI.")
@click.option("--cols", default="2-100", show_default=True, help="Feature columns, N or LO-HI.")
@click.option("--train-frac", type=float, default=0.7, show_default=True)
@click.option("--filter/--no-filter", "filtering", default=True, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "bin"]), default="bin",
              show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def generate(seed, count, task, rows, cols, train_frac, filtering, fmt, out, jobs):
    """Generate a batch of synthetic datasets plus metadata and a manifest."""
    if seed is None:
        seed = _default_seed()
    if count < 1:
        raise click.BadParameter("--count must be >= 1")
    row_lo, row_hi = _parse_range(rows, 8)
    col_lo, col_hi = _parse_range(cols, 1)

    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        click.echo(f"cannot create output directory: {exc}", err=True)
        sys.exit(EXIT_IO)

    jobs_args = []
    seed_stream = RngStream(seed).split("row-counts")
    for i in range(count):
        item_task = task
        if task == "mix":
            item_task = "classification" if seed_stream.uniform() < 0.5 else "regression"
        n_samples = int(seed_stream.integers(row_lo, row_hi + 1))
        kwargs = dict(
            n_samples=n_samples,
            min_columns=col_lo,
            max_columns=col_hi,
            train_fraction=train_frac,
            filtering=filtering,
        )
        jobs_args.append((kwargs, seed, i, item_task))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_generate_one, jobs_args))
    else:
        results = [_generate_one(a) for a in jobs_args]

    manifest = {"seed": seed, "count": count, "task": task, "format": fmt, "datasets": []}
    exhausted = False
    try:
        for index, ds, failure in sorted(results, key=lambda r: r[0]):
            if ds is None:
                exhausted = True
                manifest["datasets"].append(
                    {"index": index, "status": "exhausted", "telemetry": failure}
                )
                continue
            stem = f"dataset_{index:04d}"
            data_name = f"{stem}.{'csv' if fmt == 'csv' else 'tbpr'}"
            if fmt == "csv":
                dsio.write_csv(ds, out_dir / data_name)
            else:
                dsio.write_binary(ds, out_dir / data_name)
            meta = dsio.dataset_metadata(ds)
            meta_name = f"{stem}.json"
            (out_dir / meta_name).write_text(json.dumps(meta, indent=1))
            manifest["datasets"].append(
                {"index": index, "status": "ok", "data": data_name, "metadata": meta_name}
            )
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    except OSError as exc:
        click.echo(f"write failed: {exc}", err=True)
        sys.exit(EXIT_IO)
    if exhausted:
        click.echo("some datasets exhausted the retry budget", err=True)
        sys.exit(EXIT_EXHAUSTED)
    click.echo(str(out_dir / "manifest.json"))


@main.command()
@click.option("--seed", type=int, default=None)
@click.option("--count", type=int, default=64, show_default=True)
@click.option("--rows", type=int, default=512, show_default=True)
@click.option("--mode", type=click.Choice(["datasets", "functions"]), default="datasets",
              show_default=True)
@click.option("--grid", type=int, default=64, show_default=True,
              help="Heat-field resolution per axis (functions mode).")
@click.option("--out", type=click.Path(file_okay=False), default="gallery", show_default=True)
def gallery(seed, count, rows, mode, grid, out):
    """Emit 2-D scatter datasets or per-family function heat fields."""
    if seed is None:
        seed = _default_seed()
    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        click.echo(f"cannot create output directory: {exc}", err=True)
        sys.exit(EXIT_IO)

    manifest = {"seed": seed, "mode": mode, "entries": []}
    if mode == "datasets":
        config = GenerationConfig(
            n_samples=rows, min_columns=2, max_columns=2, task="classification",
        )
        produced, attempt = 0, 0
        while produced < count and attempt < count * 50:
            item_seed = _item_seed(seed, attempt)
            attempt += 1
            try:
                ds = generate_dataset(config, item_seed)
            except GenerationExhausted:
                continue
            # Displayable only: both axes need enough distinct values.
            if any(len(np.unique(ds.X[:, j])) < 10 for j in range(2)):
                continue
            name = f"scatter_{produced:03d}.csv"
            dsio.write_csv(ds, out_dir / name)
            manifest["entries"].append({"file": name, "seed": item_seed})
            produced += 1
    else:
        from .functions import FUNCTION_FAMILIES, sample_function
        from .rng import new_sampler_context

        axis = np.linspace(-3.0, 3.0, grid)
        gx, gy = np.meshgrid(axis, axis)
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        root = RngStream(seed)
        for family in FUNCTION_FAMILIES:
            for rep in range(max(1, count // len(FUNCTION_FAMILIES))):
                stream = root.split((family, rep))
                ctx = new_sampler_context(stream.split("ctx"))
                fn = sample_function(2, 1, ctx, stream, family=family, data_hint=pts)
                field = fn(pts)[:, 0].reshape(grid, grid)
                name = f"field_{family}_{rep:02d}.csv"
                np.savetxt(out_dir / name, field, delimiter=",")
                manifest["entries"].append({"file": name, "family": family})
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    click.echo(str(out_dir / "manifest.json"))


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with raw quantiles or a fitted distribution.")
@click.option("--request", "request_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON request: build a distribution and answer queries.")
@click.option("--suite", is_flag=True, help="Run the synthetic validation suite.")
@click.option("--z", "z_values", type=float, multiple=True,
              help="Evaluation points for cdf/pdf/crps (with --input).")
@click.option("--policy", type=click.Choice(["sort", "isotonic", "none"]), default="sort",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here instead of stdout.")
def qdist(input_path, request_path, suite, z_values, policy, out):
    """Evaluate quantile distributions or run the validation suite."""
    report = {}
    if suite:
        report["suite"] = evaluate_suite(policy=policy)
    if input_path:
        try:
            obj = json.loads(Path(input_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"bad input: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        dist = _dist_from_obj(obj, policy)
        zs = np.asarray(z_values if z_values else [dist.mean()])
        report["distribution"] = {
            "mean": dist.mean(),
            "variance": dist.variance(),
            "beta_l": dist.beta_l,
            "beta_r": dist.beta_r,
            "z": zs.tolist(),
            "cdf": np.atleast_1d(dist.cdf(zs)).tolist(),
            "pdf": np.atleast_1d(dist.pdf(zs)).tolist(),
            "crps": np.atleast_1d(dist.crps(zs)).tolist(),
        }
    if request_path:
        try:
            req = json.loads(Path(request_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"bad request: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        report["response"] = _answer_request(req)
    if not report:
        click.echo("nothing to do: pass --input, --request, or --suite", err=True)
        sys.exit(EXIT_CONFIG)
    text = json.dumps(report, indent=1)
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            click.echo(f"write failed: {exc}", err=True)
            sys.exit(EXIT_IO)
    else:
        click.echo(text)


def _dist_from_obj(obj: dict, policy: str) -> QuantileDistribution:
    if "raw_quantiles" in obj:
        return QuantileDistribution.from_quantiles(
            np.asarray(obj["raw_quantiles"], dtype=float),
            policy=obj.get("policy", policy),
        )
    if "knots" in obj:
        return QuantileDistribution.from_json(json.dumps(obj))
    raise click.BadParameter("input needs 'raw_quantiles' or 'knots'")


def _answer_request(req: dict) -> dict:
    dist = _dist_from_obj(req, req.get("policy", "sort"))
    resp = {"knots": dist.q.tolist(), "beta_l": dist.beta_l, "beta_r": dist.beta_r}
    queries = req.get("queries", {})
    for op in ("cdf", "pdf", "log_pdf", "crps", "quantile"):
        if op in queries:
            vals = np.asarray(queries[op], dtype=float)
            resp[op] = np.atleast_1d(getattr(dist, op)(vals)).tolist()
    if "mean" in queries:
        resp["mean"] = dist.mean()
    if "variance" in queries:
        resp["variance"] = dist.variance()
    if "sample" in queries:
        spec = queries["sample"]
        stream = RngStream(int(spec.get("seed", 0)))
        resp["sample"] = dist.sample(stream, int(spec["n"])).tolist()
    return resp


@main.command("attn-diag")
@click.option("--seed", type=int, default=None)
@click.option("--mode", type=click.Choice(["standard", "ssmax", "qassmax"]),
              default="qassmax", show_default=True)
@click.option("--n-min", type=int, default=64, show_default=True)
@click.option("--n-max", type=int, default=4096, show_default=True)
@click.option("--heads", type=int, default=4, show_default=True)
@click.option("--d-head", type=int, default=16, show_default=True)
def attn_diag(seed, mode, n_min, n_max, heads, d_head):
    """Print normalized attention entropy for growing context sizes."""
    if seed is None:
        seed = _default_seed()
    root = RngStream(seed)
    params = AttentionParams.random(heads, d_head, mode, root.split("params"))
    click.echo(f"mode={mode} heads={heads} d_head={d_head}")
    click.echo(f"{'n':>8}  {'norm_entropy':>12}  {'scaled_4x':>12}")
    n = n_min
    while n <= n_max:
        s = root.split(("ctx", n))
        Q = s.standard_normal((8, heads, d_head))
        K = s.standard_normal((n, heads, d_head))
        V = s.standard_normal((n, heads, d_head))
        _, diag = attention(Q, K, V, params, n_ctx=n)
        _, diag4 = attention(4.0 * Q, K, V, params, n_ctx=n)
        click.echo(
            f"{n:>8}  {diag.normalized_entropy.mean():>12.6f}"
            f"  {diag4.normalized_entropy.mean():>12.6f}"
        )
        n *= 2


if __name__ == "__main__":
    main()
