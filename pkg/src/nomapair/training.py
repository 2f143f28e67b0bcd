"""Policy-gradient training of the pointer policy.

Each step draws a fresh batch of network instances, samples one pairing per
instance, scores them with the closed-form power split, and ascends the
score-weighted log-likelihood with Adam. A moving-average baseline centers
the advantage; periodic greedy evaluation on a fixed held-out set tracks
progress against the exhaustive optimum when that is cheap enough to compute.

Everything is deterministic given the seed: instance sampling, rollout
sampling, parameter init, and the held-out set each draw from their own
stream spawned from it, and checkpoints carry the live stream's state so a
resumed run continues bit-for-bit where it stopped.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from hashlib import sha256
from pathlib import Path

import numpy as np

from .assignment import evaluate_permutation
from .autodiff import (
    AdamState,
    ParameterStore,
    adam_update,
    init_adam,
    load_checkpoint,
    save_checkpoint,
)
from .baselines import candidate_count, exhaustive_noma
from .netsim import NetworkConfig, NetworkInstance, sample_instance
from .policy import PolicyConfig, init_parameters, rollout_batch
from .rates import RadioParams

__all__ = [
    "METRICS_COLUMNS",
    "TrainConfig",
    "TrainingState",
    "init_state",
    "update_baseline",
    "train_step",
    "make_eval_set",
    "evaluate_policy",
    "checkpoint_path",
    "save_training_checkpoint",
    "load_training_checkpoint",
    "latest_checkpoint",
    "read_metrics",
    "train",
]

METRICS_COLUMNS = (
    "step",
    "batch_mean_phi",
    "baseline",
    "grad_norm",
    "eval_median_phi",
    "eval_median_gap",
)

_CHECKPOINT_RE = re.compile(r"^checkpoint_episode_(\d+)\.npz$")


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs, hashable for checkpoint compatibility.

    ``baseline_decay`` is the moving-average weight on the old baseline;
    ``eval_search_budget`` caps the enumeration size up to which the held-out
    gap column is computed at all.
    """

    network: NetworkConfig
    episodes: int
    steps_per_episode: int
    batch_size: int
    embed_dim: int = 128
    hidden_dim: int = 100
    learning_rate: float = 1e-3
    baseline_decay: float = 0.9
    seed: int = 0
    eval_size: int = 200
    eval_every: int = 100
    eval_search_budget: int = 500_000

    def __post_init__(self):
        for name in ("episodes", "steps_per_episode", "batch_size", "eval_every"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ValueError("baseline_decay must be in [0, 1)")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.eval_size < 0:
            raise ValueError("eval_size must be >= 0")

    @property
    def policy(self) -> PolicyConfig:
        return PolicyConfig(
            input_dim=self.network.bs_count,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
        )

    @property
    def total_steps(self) -> int:
        return self.episodes * self.steps_per_episode

    def to_dict(self) -> dict:
        return {
            "network": self.network.to_dict(),
            "episodes": self.episodes,
            "steps_per_episode": self.steps_per_episode,
            "batch_size": self.batch_size,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "learning_rate": self.learning_rate,
            "baseline_decay": self.baseline_decay,
            "seed": self.seed,
            "eval_size": self.eval_size,
            "eval_every": self.eval_every,
            "eval_search_budget": self.eval_search_budget,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["network"] = NetworkConfig.from_dict(d["network"])
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return sha256(blob.encode()).hexdigest()


@dataclass
class TrainingState:
    """Mutable loop state: parameters, optimizer, baseline, step, live RNG."""

    store: ParameterStore
    adam: AdamState
    baseline: float
    step: int
    rng: np.random.Generator


def _streams(seed: int):
    """Independent child streams: (training, held-out eval, parameter init)."""
    return np.random.SeedSequence(seed).spawn(3)


def init_state(config: TrainConfig) -> TrainingState:
    train_seq, _, init_seq = _streams(config.seed)
    store = init_parameters(config.policy, np.random.default_rng(init_seq))
    return TrainingState(
        store=store,
        adam=init_adam(store, config.learning_rate),
        baseline=0.0,
        step=0,
        rng=np.random.default_rng(train_seq),
    )


def update_baseline(baseline: float, batch_mean: float, decay: float) -> float:
    """Exponential moving average: decay keeps the old value, the rest is new."""
    return decay * baseline + (1.0 - decay) * batch_mean


def _score_batch(
    permutations: np.ndarray,
    instances: list[NetworkInstance],
    params: RadioParams,
) -> np.ndarray:
    phis = np.empty(len(instances), dtype=np.float64)
    for i, (row, s) in enumerate(zip(permutations, instances)):
        _, phis[i] = evaluate_permutation(tuple(int(v) for v in row), s, params)
    return phis


def train_step(state: TrainingState, config: TrainConfig) -> dict:
    """One REINFORCE update; returns the step's scalar metrics.

    Order matters and is load-bearing: the baseline absorbs the current batch
    mean BEFORE the advantages are formed, so the advantage is measured
    against the just-updated moving average.
    """
    instances = [
        sample_instance(config.network, state.rng) for _ in range(config.batch_size)
    ]
    batch = rollout_batch(
        instances, state.store, config.policy, mode="sample", rng=state.rng
    )
    params = RadioParams.from_config(config.network)
    phis = _score_batch(batch.permutations, instances, params)
    if not np.isfinite(phis).all():
        raise FloatingPointError("non-finite aggregate rate in training batch")

    batch_mean = float(phis.mean())
    state.baseline = update_baseline(
        state.baseline, batch_mean, config.baseline_decay
    )

    weights = (phis - state.baseline) / config.batch_size
    objective = batch.tape.dot(batch.log_prob_node, weights)
    batch.tape.backward(objective)
    grads = batch.tape.grads(state.store)
    grad_norm = float(np.linalg.norm(grads))
    adam_update(state.store, grads, state.adam)
    state.step += 1
    return {
        "step": state.step,
        "batch_mean_phi": batch_mean,
        "baseline": state.baseline,
        "grad_norm": grad_norm,
    }


def make_eval_set(
    config: TrainConfig,
) -> tuple[list[NetworkInstance], np.ndarray | None]:
    """Fixed held-out instances plus their exhaustive optima when affordable.

    Returns ``(instances, phi_star)`` with ``phi_star`` None when the
    enumeration size exceeds ``eval_search_budget`` (the gap column is then
    left blank rather than stalling training on an oversized search).
    """
    _, eval_seq, _ = _streams(config.seed)
    rng = np.random.default_rng(eval_seq)
    instances = [
        sample_instance(config.network, rng) for _ in range(config.eval_size)
    ]
    if not instances:
        return [], None
    net = config.network
    count = candidate_count(net.ue_count, net.bs_count * net.prbs_per_bs)
    if count > config.eval_search_budget:
        return instances, None
    params = RadioParams.from_config(net)
    phi_star = np.array(
        [exhaustive_noma(s, params)[1] for s in instances], dtype=np.float64
    )
    return instances, phi_star


def evaluate_policy(
    store: ParameterStore,
    config: TrainConfig,
    eval_instances: list[NetworkInstance],
    phi_star: np.ndarray | None,
) -> tuple[float, float | None]:
    """Greedy-decode the held-out set: (median rate, median % gap to optimum)."""
    batch = rollout_batch(
        eval_instances, store, config.policy, mode="greedy", recording=False
    )
    params = RadioParams.from_config(config.network)
    phis = _score_batch(batch.permutations, eval_instances, params)
    median_phi = float(np.median(phis))
    if phi_star is None:
        return median_phi, None
    gaps = np.where(
        phi_star > 0.0, 100.0 * (phi_star - phis) / np.where(phi_star > 0, phi_star, 1.0), 0.0
    )
    return median_phi, float(np.median(gaps))


# -- checkpoints ----------------------------------------------------------------


def checkpoint_path(out_dir: Path, episode: int) -> Path:
    return Path(out_dir) / f"checkpoint_episode_{episode:05d}.npz"


def save_training_checkpoint(
    path, state: TrainingState, config: TrainConfig, episode: int
) -> None:
    extras = {
        "adam_m": state.adam.m,
        "adam_v": state.adam.v,
        "adam_t": np.asarray(state.adam.t),
        "baseline": np.asarray(state.baseline),
        "step": np.asarray(state.step),
    }
    meta = {
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "episode": episode,
        "step": state.step,
        "rng_state": state.rng.bit_generator.state,
    }
    save_checkpoint(path, state.store, extras=extras, meta=meta)


def load_training_checkpoint(path, config: TrainConfig) -> tuple[TrainingState, int]:
    """Rebuild the full loop state; refuses checkpoints from other configs."""
    params, extras, meta = load_checkpoint(path)
    if meta.get("config_hash") != config.config_hash():
        raise ValueError(
            f"checkpoint {path} was written under a different training config "
            f"(hash {meta.get('config_hash')!r})"
        )
    store = ParameterStore(config.policy.parameter_specs())
    store.load_arrays(params)
    adam = AdamState(
        learning_rate=config.learning_rate,
        t=int(extras["adam_t"][()]),
        m=np.asarray(extras["adam_m"], dtype=np.float64),
        v=np.asarray(extras["adam_v"], dtype=np.float64),
    )
    rng = np.random.default_rng()
    rng.bit_generator.state = meta["rng_state"]
    state = TrainingState(
        store=store,
        adam=adam,
        baseline=float(extras["baseline"][()]),
        step=int(extras["step"][()]),
        rng=rng,
    )
    return state, int(meta["episode"])


def latest_checkpoint(out_dir) -> Path | None:
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        return None
    best: tuple[int, Path] | None = None
    for entry in out_dir.iterdir():
        m = _CHECKPOINT_RE.match(entry.name)
        if m:
            episode = int(m.group(1))
            if best is None or episode > best[0]:
                best = (episode, entry)
    return None if best is None else best[1]


# -- metrics log -------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _append_metrics(path: Path, row: dict) -> None:
    fresh = not path.exists()
    with open(path, "a", newline="") as f:
        writer = csv.writer(f)
        if fresh:
            writer.writerow(METRICS_COLUMNS)
        writer.writerow([_format_cell(row.get(col)) for col in METRICS_COLUMNS])


def _truncate_metrics(path: Path, max_step: int) -> None:
    """Drop rows past ``max_step`` so a resumed run appends cleanly."""
    if not path.exists():
        return
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    kept = [r for r in rows[1:] if r and int(r[0]) <= max_step]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_COLUMNS)
        writer.writerows(kept)


def read_metrics(path) -> list[dict]:
    """Metrics CSV back as dicts; empty cells become None."""
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(
                {
                    "step": int(row["step"]),
                    **{
                        col: (None if row[col] == "" else float(row[col]))
                        for col in METRICS_COLUMNS[1:]
                    },
                }
            )
    return out


# -- full loop -----------------------------------------------------------------------


def train(
    config: TrainConfig,
    out_dir,
    resume: bool = True,
    progress=None,
) -> tuple[TrainingState, list[dict]]:
    """Run (or continue) a full training run in ``out_dir``.

    Writes one metrics row per step to metrics.csv and one checkpoint per
    episode. With ``resume`` (the default) a run interrupted mid-way picks up
    from its newest checkpoint and reproduces exactly the rows an
    uninterrupted run would have written; metrics rows newer than that
    checkpoint are dropped first. ``progress`` is an optional callable
    receiving each metrics row. On a non-finite rate or gradient a diagnostic
    checkpoint is written before the error propagates.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.csv"

    start_episode = 0
    state = None
    if resume:
        newest = latest_checkpoint(out_dir)
        if newest is not None:
            state, start_episode = load_training_checkpoint(newest, config)
            _truncate_metrics(metrics_path, state.step)
    if state is None:
        state = init_state(config)
        metrics_path.unlink(missing_ok=True)

    eval_instances, phi_star = make_eval_set(config)
    rows: list[dict] = []
    for episode in range(start_episode, config.episodes):
        for _ in range(config.steps_per_episode):
            try:
                row = train_step(state, config)
            except FloatingPointError:
                save_training_checkpoint(
                    out_dir / "checkpoint_diagnostic.npz", state, config, episode
                )
                raise
            due = state.step % config.eval_every == 0 or state.step == config.total_steps
            if due and eval_instances:
                med, gap = evaluate_policy(state.store, config, eval_instances, phi_star)
                row["eval_median_phi"] = med
                row["eval_median_gap"] = gap
            _append_metrics(metrics_path, row)
            rows.append(row)
            if progress is not None:
                progress(row)
        save_training_checkpoint(
            checkpoint_path(out_dir, episode + 1), state, config, episode + 1
        )
    return state, rows
