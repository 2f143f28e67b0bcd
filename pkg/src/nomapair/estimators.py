"""Estimator-style front doors for the pairing solvers.

Each solver follows the scikit-learn protocol (constructor keyword
hyperparameters, ``fit`` / ``predict`` / ``score``, ``get_params``) over
lists of :class:`~nomapair.netsim.NetworkInstance` rather than numeric
matrices. ``predict`` returns one canonical
:class:`~nomapair.assignment.Assignment` per instance and ``score`` the mean
objective over the batch, so solvers drop into parameter sweeps and
comparison loops interchangeably.
"""

from __future__ import annotations

import tempfile

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .assignment import Assignment, aggregate_rate, evaluate_permutation
from .autodiff import ParameterStore, load_checkpoint
from .baselines import DEFAULT_BUDGET, exhaustive_noma, optimal_oma, random_heuristic
from .netsim import NetworkConfig
from .policy import rollout_batch
from .rates import RadioParams
from .training import (
    TrainConfig,
    load_training_checkpoint,
    train,
)
from .validation import check_instances

__all__ = [
    "PairingSolver",
    "RandomPairingSolver",
    "ExhaustiveSolver",
    "OrthogonalSolver",
    "PointerPolicySolver",
]


class PairingSolver(BaseEstimator):
    """Shared fit/predict/score plumbing; subclasses implement _solve_one."""

    def fit(self, X, y=None):
        """Validate the instances and pin the network config they share."""
        instances = check_instances(X)
        self.network_config_ = instances[0].config
        self.n_instances_seen_ = len(instances)
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_config_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted yet; call fit first"
            )

    def _prepare(self, X):
        self._check_fitted()
        instances = check_instances(X, expected_config=self.network_config_)
        return instances, RadioParams.from_config(self.network_config_)

    def predict(self, X) -> list[Assignment]:
        """One canonical assignment per instance."""
        instances, params = self._prepare(X)
        return [self._solve_one(s, params)[0] for s in instances]

    def score(self, X, y=None) -> float:
        """Mean objective over the batch (higher is better)."""
        instances, params = self._prepare(X)
        return float(
            np.mean([self._solve_one(s, params)[1] for s in instances])
        )

    def _solve_one(self, instance, params):
        raise NotImplementedError


class RandomPairingSolver(PairingSolver):
    """Uniform random pairing, the no-intelligence floor.

    ``seed`` fixes the draw sequence; each predict/score call restarts it, so
    repeated calls on the same input agree.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def predict(self, X) -> list[Assignment]:
        instances, params = self._prepare(X)
        rng = np.random.default_rng(self.seed)
        return [random_heuristic(s, params, rng)[0] for s in instances]

    def score(self, X, y=None) -> float:
        instances, params = self._prepare(X)
        rng = np.random.default_rng(self.seed)
        return float(
            np.mean([random_heuristic(s, params, rng)[1] for s in instances])
        )


class ExhaustiveSolver(PairingSolver):
    """Symmetry-reduced exact search; refuses instances beyond ``budget``."""

    def __init__(self, budget: int = DEFAULT_BUDGET):
        self.budget = budget

    def _solve_one(self, instance, params):
        return exhaustive_noma(instance, params, budget=self.budget)


class OrthogonalSolver(PairingSolver):
    """Best single-user (orthogonal access) association, the classical bound.

    Its score is the orthogonal objective, not a power-split pair rate.
    """

    def _solve_one(self, instance, params):
        return optimal_oma(instance, params)


class PointerPolicySolver(PairingSolver):
    """Greedy decoding of a REINFORCE-trained pointer policy.

    ``fit(X)`` reads the network config off the given instances and trains a
    fresh policy on instances sampled from that config (the instances
    themselves only describe the distribution; training draws new ones each
    step). ``out_dir`` persists checkpoints and the metrics log; without it
    training runs through a temporary directory and only the final weights
    are kept. A solver can also be restored fully fitted from a training
    checkpoint via :meth:`from_checkpoint`.
    """

    def __init__(
        self,
        episodes: int = 1,
        steps_per_episode: int = 1000,
        batch_size: int = 64,
        embed_dim: int = 128,
        hidden_dim: int = 100,
        learning_rate: float = 1e-3,
        baseline_decay: float = 0.9,
        seed: int = 0,
        eval_size: int = 0,
        eval_every: int = 500,
        out_dir=None,
    ):
        self.episodes = episodes
        self.steps_per_episode = steps_per_episode
        self.batch_size = batch_size
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.baseline_decay = baseline_decay
        self.seed = seed
        self.eval_size = eval_size
        self.eval_every = eval_every
        self.out_dir = out_dir

    def _train_config(self, network: NetworkConfig) -> TrainConfig:
        return TrainConfig(
            network=network,
            episodes=self.episodes,
            steps_per_episode=self.steps_per_episode,
            batch_size=self.batch_size,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            learning_rate=self.learning_rate,
            baseline_decay=self.baseline_decay,
            seed=self.seed,
            eval_size=self.eval_size,
            eval_every=self.eval_every,
        )

    def fit(self, X, y=None):
        instances = check_instances(X)
        config = self._train_config(instances[0].config)
        if self.out_dir is None:
            with tempfile.TemporaryDirectory() as scratch:
                state, rows = train(config, scratch, resume=False)
        else:
            state, rows = train(config, self.out_dir)
        self.network_config_ = config.network
        self.train_config_ = config
        self.store_ = state.store
        self.metrics_ = rows
        self.n_instances_seen_ = len(instances)
        return self

    @classmethod
    def from_checkpoint(cls, path) -> "PointerPolicySolver":
        """Rebuild a fitted solver from a training checkpoint file."""
        _, _, meta = load_checkpoint(path)
        config = TrainConfig.from_dict(meta["config"])
        state, _ = load_training_checkpoint(path, config)
        solver = cls(
            episodes=config.episodes,
            steps_per_episode=config.steps_per_episode,
            batch_size=config.batch_size,
            embed_dim=config.embed_dim,
            hidden_dim=config.hidden_dim,
            learning_rate=config.learning_rate,
            baseline_decay=config.baseline_decay,
            seed=config.seed,
            eval_size=config.eval_size,
            eval_every=config.eval_every,
        )
        solver.network_config_ = config.network
        solver.train_config_ = config
        solver.store_ = state.store
        solver.metrics_ = []
        solver.n_instances_seen_ = 0
        return solver

    def _check_fitted(self):
        if not hasattr(self, "store_"):
            raise NotFittedError(
                "PointerPolicySolver is not fitted yet; call fit or from_checkpoint"
            )

    @property
    def parameters_(self) -> ParameterStore:
        self._check_fitted()
        return self.store_

    def predict(self, X) -> list[Assignment]:
        instances, params = self._prepare(X)
        batch = rollout_batch(
            instances, self.store_, self.train_config_.policy,
            mode="greedy", recording=False,
        )
        return [
            evaluate_permutation(tuple(int(v) for v in row), s, params)[0]
            for row, s in zip(batch.permutations, instances)
        ]

    def score(self, X, y=None) -> float:
        instances, params = self._prepare(X)
        return float(
            np.mean(
                [aggregate_rate(a, s, params) for a, s in zip(self.predict(X), instances)]
            )
        )
