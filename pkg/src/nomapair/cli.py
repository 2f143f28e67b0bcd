"""Command line harness: generate data, train policies, score strategies.

Every subcommand takes a scenario either from a named preset or from an INI
config file, reads and writes plain files (NDJSON datasets, npz checkpoints,
CSV tables), and uses three exit codes: 0 on success, 2 for usage mistakes
(bad flags, missing files), 3 for malformed or mismatched data.
"""

from __future__ import annotations

import functools
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .assignment import evaluate_permutation
from .baselines import (
    DEFAULT_BUDGET,
    EnumerationBudgetError,
    exhaustive_noma,
    optimal_oma,
    random_heuristic,
)
from .configfile import read_train_config, write_train_config
from .estimators import PointerPolicySolver
from .netsim import load_dataset, pad_with_surrogates, sample_instance, save_dataset
from .policy import rollout_batch
from .presets import get_preset, preset_names
from .rates import RadioParams
from .training import train
from .validation import check_instances

__all__ = ["main"]

# Everything that signals defective input data rather than a usage mistake.
_DATA_ERRORS = (ValueError, KeyError, OSError, FloatingPointError)

_EXISTING_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)
_OUT_FILE = click.Path(dir_okay=False, path_type=Path)


def _guard(fn):
    """Turn data-level failures into exit code 3 with a one-line message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except _DATA_ERRORS as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(3)

    return wrapper


def _resolve_config(config_path, preset, seed):
    if (config_path is None) == (preset is None):
        raise click.UsageError("pass exactly one of --config or --preset")
    config = read_train_config(config_path) if config_path else get_preset(preset)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def _load_padded(path):
    instances = load_dataset(path)
    return [pad_with_surrogates(s, s.config.ue_count) for s in instances]


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _median(values) -> float | None:
    values = [v for v in values if v is not None]
    return float(np.median(values)) if values else None


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def _try_exhaustive(instance, params, budget) -> float | None:
    try:
        return exhaustive_noma(instance, params, budget=budget)[1]
    except EnumerationBudgetError:
        return None


def _policy_rates(solver, instances):
    """Greedy-decode a dataset: (decoded permutations, their aggregate rates)."""
    check_instances(instances, expected_config=solver.network_config_)
    params = RadioParams.from_config(solver.network_config_)
    batch = rollout_batch(
        instances,
        solver.parameters_,
        solver.train_config_.policy,
        mode="greedy",
        recording=False,
    )
    perms, phis = [], []
    for row, instance in zip(batch.permutations, instances):
        u = tuple(int(v) for v in row)
        perms.append(u)
        phis.append(evaluate_permutation(u, instance, params)[1])
    return perms, phis


@click.group()
def main():
    """Downlink NOMA pairing: simulate networks, train and score policies."""


@main.command()
@click.option("--config", "config_path", type=_EXISTING_FILE, default=None,
              help="INI scenario file (see 'nomapair train --help').")
@click.option("--preset", type=click.Choice(preset_names()), default=None,
              help="Named built-in scenario.")
@click.option("--count", type=click.IntRange(min=0), default=100,
              show_default=True, help="Number of channel realizations.")
@click.option("--seed", type=int, default=None,
              help="Sampling seed; defaults to the scenario seed.")
@click.option("--out", type=_OUT_FILE, required=True, help="Dataset path (NDJSON).")
@_guard
def generate(config_path, preset, count, seed, out):
    """Sample channel realizations into a dataset file."""
    config = _resolve_config(config_path, preset, None)
    net = config.network
    rng = np.random.default_rng(net.seed if seed is None else seed)
    instances = [sample_instance(net, rng) for _ in range(count)]
    save_dataset(instances, out, config=net)
    click.echo(f"wrote {len(instances)} instances to {out}")


def _progress(row) -> None:
    if "eval_median_phi" not in row:
        return
    msg = (
        f"step {row['step']:>6}  batch_phi {row['batch_mean_phi']:.4f}"
        f"  eval_phi {row['eval_median_phi']:.4f}"
    )
    if row.get("eval_median_gap") is not None:
        msg += f"  gap {row['eval_median_gap']:.2f}%"
    click.echo(msg, err=True)


@main.command("train")
@click.option("--config", "config_path", type=_EXISTING_FILE, default=None,
              help="INI file with [network] and [train] sections.")
@click.option("--preset", type=click.Choice(preset_names()), default=None,
              help="Named built-in scenario.")
@click.option("--seed", type=int, default=None, help="Override the training seed.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False, path_type=Path),
              help="Run directory for checkpoints, metrics.csv and config.ini.")
@click.option("--fresh", is_flag=True,
              help="Start over even if the run directory holds checkpoints.")
@_guard
def train_command(config_path, preset, seed, out_dir, fresh):
    """Train a pointer policy with the score-based gradient estimator.

    An interrupted run resumes from its newest checkpoint by default and
    reproduces the exact metrics an uninterrupted run would have written.
    """
    config = _resolve_config(config_path, preset, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    stored = out_dir / "config.ini"
    if stored.exists() and not fresh:
        if read_train_config(stored) != config:
            raise ValueError(
                f"{stored} pins a different config for this run directory; "
                "pass the matching config or a fresh --out"
            )
    else:
        write_train_config(stored, config)
    state, _ = train(config, out_dir, resume=not fresh, progress=_progress)
    click.echo(
        f"trained {state.step} steps; checkpoints and metrics.csv in {out_dir}"
    )


@main.command("eval")
@click.argument("dataset", type=_EXISTING_FILE)
@click.option("--checkpoint", type=_EXISTING_FILE, required=True,
              help="Training checkpoint (.npz) holding the policy.")
@click.option("--out", type=_OUT_FILE, required=True, help="CSV output path.")
@_guard
def eval_command(dataset, checkpoint, out):
    """Greedy-decode a trained policy over a dataset."""
    solver = PointerPolicySolver.from_checkpoint(checkpoint)
    instances = _load_padded(dataset)
    rows = []
    if instances:
        perms, phis = _policy_rates(solver, instances)
        for i, (u, phi) in enumerate(zip(perms, phis)):
            rows.append([str(i), _fmt(phi), " ".join(map(str, u))])
        rows.append(["median", _fmt(_median(phis)), ""])
    _write_csv(out, ["instance", "phi_policy", "permutation"], rows)
    click.echo(f"wrote {out}")


@main.command()
@click.argument("dataset", type=_EXISTING_FILE)
@click.option("--budget", type=click.IntRange(min=1), default=DEFAULT_BUDGET,
              show_default=True,
              help="Largest enumeration the exhaustive search may attempt.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed of the random-pairing heuristic.")
@click.option("--out", type=_OUT_FILE, required=True, help="CSV output path.")
@_guard
def oracle(dataset, budget, seed, out):
    """Score the exhaustive search and both heuristic baselines.

    Instances whose enumeration exceeds the budget get an empty
    phi_exhaustive cell instead of aborting the run.
    """
    instances = _load_padded(dataset)
    rows = []
    if instances:
        params = RadioParams.from_config(instances[0].config)
        rng = np.random.default_rng(seed)
        stars, rands, omas = [], [], []
        for i, instance in enumerate(instances):
            star = _try_exhaustive(instance, params, budget)
            rand = random_heuristic(instance, params, rng)[1]
            oma = optimal_oma(instance, params)[1]
            rows.append([str(i), _fmt(star), _fmt(rand), _fmt(oma)])
            stars.append(star)
            rands.append(rand)
            omas.append(oma)
        rows.append(
            ["median", _fmt(_median(stars)), _fmt(_median(rands)), _fmt(_median(omas))]
        )
    _write_csv(out, ["instance", "phi_exhaustive", "phi_random", "phi_oma"], rows)
    click.echo(f"wrote {out}")


@main.command()
@click.argument("dataset", type=_EXISTING_FILE)
@click.option("--checkpoint", type=_EXISTING_FILE, required=True,
              help="Training checkpoint (.npz) holding the policy.")
@click.option("--budget", type=click.IntRange(min=1), default=DEFAULT_BUDGET,
              show_default=True,
              help="Largest enumeration the exhaustive search may attempt.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed of the random-pairing heuristic.")
@click.option("--out", type=_OUT_FILE, required=True, help="CSV output path.")
@_guard
def compare(dataset, checkpoint, budget, seed, out):
    """Policy versus exhaustive search and heuristics, with optimality gaps.

    gap_percent is 100 * (phi_exhaustive - phi_policy) / phi_exhaustive; it
    is empty when the search exceeded the budget and zero on all-surrogate
    instances where every strategy scores zero.
    """
    solver = PointerPolicySolver.from_checkpoint(checkpoint)
    instances = _load_padded(dataset)
    rows = []
    if instances:
        perms, phis = _policy_rates(solver, instances)
        params = RadioParams.from_config(solver.network_config_)
        rng = np.random.default_rng(seed)
        stars, rands, omas, gaps = [], [], [], []
        for i, instance in enumerate(instances):
            star = _try_exhaustive(instance, params, budget)
            rand = random_heuristic(instance, params, rng)[1]
            oma = optimal_oma(instance, params)[1]
            if star is None:
                gap = None
            elif star == 0.0:
                gap = 0.0
            else:
                gap = 100.0 * (star - phis[i]) / star
            rows.append(
                [str(i), _fmt(phis[i]), _fmt(star), _fmt(rand), _fmt(oma), _fmt(gap)]
            )
            stars.append(star)
            rands.append(rand)
            omas.append(oma)
            gaps.append(gap)
        rows.append([
            "median",
            _fmt(_median(phis)),
            _fmt(_median(stars)),
            _fmt(_median(rands)),
            _fmt(_median(omas)),
            _fmt(_median(gaps)),
        ])
    _write_csv(
        out,
        ["instance", "phi_policy", "phi_exhaustive", "phi_random", "phi_oma", "gap_percent"],
        rows,
    )
    click.echo(f"wrote {out}")
