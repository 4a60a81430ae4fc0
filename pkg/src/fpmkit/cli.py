"""Command-line interface: synthesize / reconstruct / sweep / report.

Exit codes: 0 success, 2 configuration error, 3 geometry error,
4 solver divergence.
"""

from __future__ import annotations

import logging
import sys

import click

from fpmkit.config import load_config
from fpmkit.errors import ConfigError, FpmError
from fpmkit import harness


def _fail(exc: FpmError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(exc.exit_code)


@click.group()
def main():
    """Fourier ptychography simulation and reconstruction toolkit."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="TOML experiment config.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Dataset output directory.")
@click.option("--seed", type=int, default=None, help="Override the configured noise/pupil seeds.")
def synthesize(config_path, out_dir, seed):
    """Synthesize a measurement dataset from a config."""
    try:
        cfg = load_config(config_path)
        out = harness.synthesize(cfg, out_dir, seed=seed)
    except FpmError as exc:
        _fail(exc)
    click.echo(f"dataset written to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Optional config providing solver settings.")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(), help="Dataset directory from `synthesize`.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Results output directory.")
@click.option("--solver", "solver_names", default=None, help="Comma-separated solvers (ap,wfp,pwfp,tpwfp); default: all configured.")
def reconstruct(config_path, dataset_dir, out_dir, solver_names):
    """Reconstruct a stored dataset with one or more solvers."""
    try:
        configured = load_config(config_path).solvers if config_path else ()
        selection = solver_names.split(",") if solver_names else None
        run_meta = harness.reconstruct(dataset_dir, out_dir, selection, configured)
    except FpmError as exc:
        _fail(exc)
    for name, entry in run_meta.items():
        re = entry.get("relative_error")
        suffix = f", RE {re:.3e}" if re is not None else ""
        click.echo(f"{name}: {entry['iterations']} iterations, {entry['wall_time_s']:.2f}s{suffix}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="TOML config with a [sweep] section.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Sweep output directory.")
@click.option("--seed", type=int, default=None, help="Override the sweep base seed.")
@click.option("--threads", type=int, default=1, help="Parallel sweep cells (deterministic either way).")
def sweep(config_path, out_dir, seed, threads):
    """Run the configured parameter sweep."""
    try:
        cfg = load_config(config_path)
        if seed is not None:
            if cfg.sweep is None:
                raise ConfigError("config has no [sweep] section")
            from dataclasses import replace

            cfg = replace(cfg, sweep=replace(cfg.sweep, base_seed=seed))
        out = harness.run_sweep(cfg, out_dir, threads=threads)
    except FpmError as exc:
        _fail(exc)
    click.echo(harness.report(out))


@main.command()
@click.option("--out", "sweep_dir", required=True, type=click.Path(), help="Directory of a finished sweep.")
def report(sweep_dir):
    """Print the mean-RE table for a finished sweep."""
    try:
        click.echo(harness.report(sweep_dir))
    except FpmError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
