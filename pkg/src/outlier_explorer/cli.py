"""Command-line entry points.

Subcommands cover the whole lifecycle: generate a synthetic labeled
corpus, train the meta models on it, run a budgeted exploration, evaluate
a persisted run against its labels, and serve the HTTP API. Failures exit
nonzero with a one-line JSON error on stderr.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from . import meta, pipeline
from .data import generate_synthetic_corpus, save_csv
from .errors import ExplorerError
from .service import HOME_ENV_VAR, create_app


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _guarded(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except FileNotFoundError as exc:
            _fail("not-found", str(exc))
        except ExplorerError as exc:
            _fail(type(exc).__name__, str(exc))
    return wrapper


def _home() -> Path:
    return Path(os.environ.get(HOME_ENV_VAR, "."))


@click.group()
def main():
    """Budget-constrained outlier exploration."""


@main.command()
@click.option("--dataset", required=True, type=click.Path(path_type=Path),
              help="CSV dataset with a header row.")
@click.option("--label-column", default=None, help="Optional label column name.")
@click.option("--budget", "t_total", default=0.5, show_default=True,
              help="Exploration budget in estimated seconds.")
@click.option("--g", default=1, show_default=True, help="Number of perspectives.")
@click.option("--strategy", default="planned", show_default=True,
              type=click.Choice(pipeline.STRATEGIES))
@click.option("--models", default=None, type=click.Path(path_type=Path),
              help="Model bundle JSON (defaults to $%s/models.json)." % HOME_ENV_VAR)
@click.option("--out", default=None, type=click.Path(path_type=Path),
              help="Where to write the run document (default: runs/ under home).")
@click.option("--seed", default=0, show_default=True,
              help="Base seed for subspaces, detectors, factorization.")
@click.option("--alpha", default=0.9, show_default=True)
@click.option("--gamma", default=None, type=int,
              help="Random subspace count (default: half the prioritized family).")
@click.option("--k", default=10, show_default=True)
@click.option("--lam", default=1.0, show_default=True)
@_guarded
def explore(dataset, label_column, t_total, g, strategy, models, out, seed,
            alpha, gamma, k, lam):
    """Run one budgeted exploration and persist the result."""
    if not dataset.exists():
        _fail("dataset-not-found", f"dataset {str(dataset)!r} does not exist")
    if models is None:
        default = _home() / "models.json"
        models = default if default.exists() else None
    config = pipeline.RunConfig(
        dataset=str(dataset), t_total=t_total, g=g, strategy=strategy,
        label_column=label_column, alpha=alpha, gamma=gamma, k=k, lam=lam,
        model_bundle=None if models is None else str(models),
        subspace_seed=seed, detector_seed=seed, nmf_seed=seed,
        strategy_seed=seed)
    runs_dir = out if out is not None else _home() / "runs"
    result = pipeline.run_strategy(config, runs_dir=runs_dir)
    click.echo(json.dumps({
        "run_id": result.run_id,
        "status": result.status,
        "run_file": str(Path(runs_dir) / f"{result.run_id}.json"),
        "executed": len(result.detector_results),
        "estimated_cost": (None if result.plan is None else
                           sum(result.candidates[i].cost for i in result.plan.selected)),
        "detector_wall_clock": result.total_detector_wall_clock,
        "infeasibility": result.infeasibility or None,
    }))
    if result.status == "failed":
        _fail("run-failed", result.error or "unknown failure")


@main.command("train-meta")
@click.option("--corpus-dir", required=True, type=click.Path(path_type=Path),
              help="Directory of labeled CSV datasets (one per file).")
@click.option("--label-column", default="label", show_default=True)
@click.option("--split-seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path),
              help="Output model bundle JSON.")
@_guarded
def train_meta(corpus_dir, label_column, split_seed, out):
    """Train cost and utility models on a labeled corpus directory."""
    if not corpus_dir.exists():
        _fail("corpus-not-found", f"corpus directory {str(corpus_dir)!r} does not exist")
    from .data import load_csv
    corpus = [load_csv(path, label_column=label_column)
              for path in sorted(corpus_dir.glob("*.csv"))]
    if not corpus:
        _fail("corpus-empty", f"no CSV files under {corpus_dir}")
    bundle, report = meta.train_all(corpus, split_seed=split_seed)
    bundle.save(out)
    click.echo(json.dumps({"bundle": str(out), "report": report.to_dict()}))


@main.command()
@click.option("--run", "run_path", required=True, type=click.Path(path_type=Path),
              help="Persisted run JSON.")
@click.option("--n", "n_list", default="10,13,15,17,20", show_default=True,
              help="Comma-separated N values.")
@_guarded
def evaluate(run_path, n_list):
    """Print the precision/recall/F table of a persisted labeled run."""
    if not run_path.exists():
        _fail("run-not-found", f"run file {str(run_path)!r} does not exist")
    result = pipeline.load_run(run_path)
    n_values = tuple(int(v) for v in n_list.split(",") if v.strip())
    table = pipeline.evaluate_run(result, n_values)
    click.echo(json.dumps({"run_id": result.run_id,
                           "table": {str(n): row for n, row in table.items()}}))


@main.command("gen-corpus")
@click.option("--count", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--points", default="100,500", show_default=True,
              help="min,max points per dataset.")
@click.option("--features", default="4,30", show_default=True,
              help="min,max features per dataset.")
@_guarded
def gen_corpus(count, seed, out_dir, points, features):
    """Generate a synthetic labeled corpus, one CSV per dataset."""
    from .data import CorpusSpec
    n_lo, n_hi = (int(v) for v in points.split(","))
    m_lo, m_hi = (int(v) for v in features.split(","))
    spec = CorpusSpec(n_range=(n_lo, n_hi), m_range=(m_lo, m_hi))
    corpus = generate_synthetic_corpus(count, rng_seed=seed, spec=spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, dataset in enumerate(corpus):
        save_csv(dataset, out_dir / f"dataset_{i:03d}.csv")
    click.echo(json.dumps({"written": count, "dir": str(out_dir)}))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--data-root", default=None, type=click.Path(path_type=Path))
@click.option("--models", default=None, type=click.Path(path_type=Path))
@click.option("--runs-dir", default=None, type=click.Path(path_type=Path))
@_guarded
def serve(host, port, data_root, models, runs_dir):
    """Serve the HTTP run-management API."""
    import uvicorn
    app = create_app(data_root=data_root, model_bundle=models, runs_dir=runs_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
