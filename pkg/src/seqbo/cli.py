"""Command-line surface: space validation, study lifecycle, benchmarks, serving.

Exit codes: 0 success, 2 validation error (bad input, unknown id,
conflicting state), 1 internal error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .benchmarks import BenchmarkConfig, export_curves, resolve_objective, run_benchmark
from .errors import SeqboError
from .space import DesignSpace
from .storage import StudyStore
from .study import Budget, Study, StudyConfig, run

DATA_DIR_ENV = "SEQBO_DATA_DIR"

_USER_ERRORS = ("invalid_input", "not_found", "state_error", "conflict")


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SeqboError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2 if exc.code in _USER_ERRORS else 1)
        except (json.JSONDecodeError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except click.ClickException:
            raise
        except Exception as exc:  # anything unexpected is an internal error
            click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _store(data_dir) -> StudyStore:
    return StudyStore(data_dir)


def _data_dir_option(fn):
    return click.option(
        "--data-dir", envvar=DATA_DIR_ENV, default="seqbo-data", show_default=True,
        help="Directory holding persisted studies.",
    )(fn)


@click.group()
def main():
    """Sequential model-based optimization of expensive black-box objectives."""


# ---------------------------------------------------------------------------
# space


@main.group()
def space():
    """Design-space tools."""


@space.command("validate")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def space_validate(file):
    """Parse and validate a design-space document."""
    document = json.loads(Path(file).read_text())
    parsed = DesignSpace.parse(document)
    click.echo(f"ok: {len(parsed.params)} parameters, embedded dimension {parsed.embedded_dim}")


# ---------------------------------------------------------------------------
# study lifecycle


@main.group()
def study():
    """Create and drive optimization studies."""


@study.command("init")
@click.option("--space", "space_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON design-space document.")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON study configuration.")
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--direction", type=click.Choice(["maximize", "minimize"]), default=None)
@click.option("--n-init", type=int, default=None, help="Initial design size.")
@click.option("--id", "study_id", default=None, help="Explicit study id.")
@click.option("--owner", default="", help="Owner label.")
@_data_dir_option
@handle_errors
def study_init(space_file, config_file, seed, direction, n_init, study_id, owner, data_dir):
    """Create and persist a new study."""
    document = json.loads(Path(space_file).read_text())
    cfg = json.loads(Path(config_file).read_text()) if config_file else {}
    if seed is not None:
        cfg["seed"] = seed
    if direction is not None:
        cfg["direction"] = direction
    if n_init is not None:
        cfg["n_init"] = n_init
    record = _store(data_dir).create(
        Study(DesignSpace.parse(document), StudyConfig.from_config(cfg)),
        owner=owner, study_id=study_id,
    )
    click.echo(record.id)


@study.command("suggest")
@click.argument("study_id")
@click.option("--q", type=int, default=1, show_default=True)
@_data_dir_option
@handle_errors
def study_suggest(study_id, q, data_dir):
    """Ask for the next q points; they stay pending until observed."""
    _, points = _store(data_dir).mutate(study_id, lambda s: s.suggest(q))
    click.echo(json.dumps(points))


@study.command("observe")
@click.argument("study_id")
@click.option("--x", "x_json", required=True, help="Design point as a JSON object.")
@click.option("--y", type=float, required=True, help="Observed objective value.")
@click.option("--source", default="algorithm", show_default=True,
              type=click.Choice(["algorithm", "human-override", "initialization"]))
@_data_dir_option
@handle_errors
def study_observe(study_id, x_json, y, source, data_dir):
    """Report an outcome for a (suggested or overridden) point."""
    point = json.loads(x_json)
    record, _ = _store(data_dir).mutate(
        study_id, lambda s: s.observe(point, y, source=source))
    click.echo(json.dumps(record.summary()))


@study.command("slate")
@click.argument("study_id")
@click.option("--k", type=int, default=5, show_default=True)
@_data_dir_option
@handle_errors
def study_slate(study_id, k, data_dir):
    """Print the top-k candidates with acquisition and posterior annotations."""
    record = _store(data_dir).get(study_id)
    for i, item in enumerate(record.study.slate(k), start=1):
        click.echo(f"{i}. x={json.dumps(item['x'])} score={item['score']:.6g} "
                   f"mean={item['mean']:.6g} std={item['std']:.6g}")


@study.command("best")
@click.argument("study_id")
@click.option("--mode", type=click.Choice(["observed", "model"]), default="observed",
              show_default=True)
@_data_dir_option
@handle_errors
def study_best(study_id, mode, data_dir):
    """Print the recommended point."""
    record = _store(data_dir).get(study_id)
    click.echo(json.dumps(record.study.best(mode)))


@study.command("run")
@click.option("--id", "study_id", default=None,
              help="Existing study to continue; omit to create one for the objective.")
@click.option("--budget", type=int, required=True, help="Total evaluation budget.")
@click.option("--objective", required=True, help="Objective, e.g. builtin:wavy2d.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed when creating a new study.")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON study configuration (new studies only).")
@_data_dir_option
@handle_errors
def study_run(study_id, budget, objective, seed, config_file, data_dir):
    """Run the optimization loop against a built-in objective."""
    store = _store(data_dir)
    obj = resolve_objective(objective)
    if study_id is None:
        cfg = json.loads(Path(config_file).read_text()) if config_file else {}
        cfg["seed"] = cfg.get("seed", seed)
        record = store.create(Study(obj.space, StudyConfig.from_config(cfg)))
    else:
        record = store.get(study_id)

    def checkpoint(_study):
        store.save(record)

    run(record.study, obj.evaluate, Budget(budget), checkpoint=checkpoint)
    best = record.study.best("observed")
    click.echo(record.id)
    click.echo(json.dumps(best))


# ---------------------------------------------------------------------------
# benchmarks and serving


@main.group()
def bench():
    """Benchmark experiments."""


@bench.command("run")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, help="CSV output path (overrides the config).")
@handle_errors
def bench_run(config_file, out):
    """Run a method x seed benchmark from a JSON config and export curves."""
    cfg = BenchmarkConfig.from_config(json.loads(Path(config_file).read_text()))
    table = run_benchmark(cfg)
    target = out or cfg.output_path or "curves.csv"
    raw, agg = export_curves(table, target)
    click.echo(f"wrote {raw} and {agg}")
    for method in table.methods:
        if table.completed_seeds(method):
            click.echo(f"{method}: mean final best = {table.mean_final_best(method):.6g}, "
                       f"mean final simple regret = {table.mean_final_simple_regret(method):.6g}")
    for (method, seed), msg in table.failures.items():
        click.echo(f"failed cell {method}/seed={seed}: {msg}", err=True)


@main.command("serve")
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
@click.option("--frontend", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory with the built web console (serves / and /assets).")
@_data_dir_option
@handle_errors
def serve(addr, frontend, data_dir):
    """Start the ask-tell HTTP service."""
    import uvicorn

    from .service.app import create_app

    host, _, port = addr.partition(":")
    uvicorn.run(create_app(data_dir, frontend_dir=frontend),
                host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()
