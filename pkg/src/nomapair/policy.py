"""Sequence policy that points at users one by one to build a pairing.

The network is the classic pointer architecture: a shared affine embedding
lifts each user's per-base-station channel summary, an LSTM encoder reads the
user sequence, an LSTM decoder emits one user index per step through an
additive-attention softmax over the encoder states, and a no-repeat mask
guarantees the emitted sequence is a permutation. Decoding either samples
from each step's distribution (training) or takes the argmax (evaluation,
ties going to the smallest index).

Rollouts run batched over instances: every tape op carries a batch dimension,
so a single-instance rollout is just a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Node, ParameterStore, Tape, linear, lstm_step
from .netsim import NetworkInstance
from .rates import RadioParams

__all__ = [
    "PolicyConfig",
    "Rollout",
    "RolloutBatch",
    "csi_features",
    "init_parameters",
    "embed_sequence",
    "encode_sequence",
    "decode_step",
    "rollout_features",
    "rollout_batch",
    "rollout_sample",
    "rollout_greedy",
]

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class PolicyConfig:
    """Shapes of the pointer policy.

    ``input_dim`` is the per-user feature length (one entry per base
    station), ``embed_dim`` the shared embedding width, ``hidden_dim`` the
    LSTM state width on both the encoder and decoder side.
    """

    input_dim: int
    embed_dim: int = 128
    hidden_dim: int = 100

    def __post_init__(self):
        for name in ("input_dim", "embed_dim", "hidden_dim"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")

    def parameter_specs(self) -> list[tuple[str, tuple[int, ...]]]:
        e, h = self.embed_dim, self.hidden_dim
        return [
            ("embed.w", (self.input_dim, e)),
            ("embed.b", (e,)),
            ("embed.sos", (e,)),
            ("encoder.wx", (e, 4 * h)),
            ("encoder.wh", (h, 4 * h)),
            ("encoder.b", (4 * h,)),
            ("decoder.wx", (e, 4 * h)),
            ("decoder.wh", (h, 4 * h)),
            ("decoder.b", (4 * h,)),
            ("attn.w_enc", (h, h)),
            ("attn.w_dec", (h, h)),
            ("attn.v", (h, 1)),
        ]

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        return cls(
            input_dim=int(d["input_dim"]),
            embed_dim=int(d["embed_dim"]),
            hidden_dim=int(d["hidden_dim"]),
        )


@dataclass(frozen=True)
class Rollout:
    """One decoded user sequence with its score under the policy.

    ``log_prob`` is the chain-rule sum of the chosen entries' log
    probabilities, accumulated step by step in decode order. ``step_probs``
    holds each step's full distribution, row t for decode step t.
    """

    u: tuple[int, ...]
    log_prob: float
    step_probs: np.ndarray


@dataclass
class RolloutBatch:
    """Batched rollout plus the tape that produced it.

    ``log_prob_node`` is the (batch,) tape node of per-instance log
    probabilities; seed a scalar built from it (for example a weighted sum)
    to backpropagate through every decode step.
    """

    permutations: np.ndarray
    log_prob: np.ndarray
    step_probs: np.ndarray
    log_prob_node: Node
    tape: Tape


def csi_features(instance: NetworkInstance) -> np.ndarray:
    """Per-user feature rows: single-user spectral efficiency toward each BS.

    Raw gains span many decades, which freezes an affine embedding; the
    log-domain rate log2(1 + snr * gain) is the scale the objective actually
    lives on, and it maps surrogate users (zero gain) to exactly zero.
    """
    snr = RadioParams.from_config(instance.config).snr
    return np.log1p(snr * instance.csi.T) / _LN2


def init_parameters(
    config: PolicyConfig, rng: np.random.Generator
) -> ParameterStore:
    """Fresh parameter store, uniform in +-1/sqrt(hidden_dim)."""
    store = ParameterStore(config.parameter_specs())
    bound = 1.0 / np.sqrt(config.hidden_dim)
    store.flat[:] = rng.uniform(-bound, bound, size=store.size)
    return store


def embed_sequence(
    tape: Tape, store: ParameterStore, features: np.ndarray
) -> list[Node]:
    """Shared affine map per user: (batch, users, input_dim) -> list of (batch, embed)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise ValueError(f"features must be 3-D, got shape {features.shape}")
    w = tape.param(store, "embed.w")
    if features.shape[2] != w.value.shape[0]:
        raise ValueError(
            f"feature length {features.shape[2]} does not match "
            f"input_dim {w.value.shape[0]}"
        )
    b = tape.param(store, "embed.b")
    return [
        linear(tape, tape.const(features[:, j, :]), w, b)
        for j in range(features.shape[1])
    ]


def encode_sequence(
    tape: Tape, store: ParameterStore, embedded: list[Node]
) -> tuple[list[Node], tuple[Node, Node]]:
    """Run the encoder LSTM from a zero state; return all states and the final pair."""
    if not embedded:
        raise ValueError("nothing to encode")
    batch = embedded[0].value.shape[0]
    hidden = store.shape("encoder.wh")[0]
    h = tape.const(np.zeros((batch, hidden)))
    c = tape.const(np.zeros((batch, hidden)))
    wx = tape.param(store, "encoder.wx")
    wh = tape.param(store, "encoder.wh")
    b = tape.param(store, "encoder.b")
    states = []
    for x in embedded:
        h, c = lstm_step(tape, x, (h, c), wx, wh, b)
        states.append(h)
    return states, (h, c)


def decode_step(
    tape: Tape,
    store: ParameterStore,
    prev_repr: Node,
    state: tuple[Node, Node],
    enc_proj: list[Node],
    mask: np.ndarray,
) -> tuple[Node, tuple[Node, Node]]:
    """One decoder LSTM step plus masked pointing over the encoder states.

    ``enc_proj`` carries the encoder states already multiplied by the
    attention's encoder-side matrix (they never change across steps, so
    callers project once). Scores are v^T tanh(proj_j + W_dec d) per user j;
    already-chosen users are masked to probability exactly 0.
    """
    h, c = lstm_step(
        tape,
        prev_repr,
        state,
        tape.param(store, "decoder.wx"),
        tape.param(store, "decoder.wh"),
        tape.param(store, "decoder.b"),
    )
    d_proj = tape.matmul(h, tape.param(store, "attn.w_dec"))
    v = tape.param(store, "attn.v")
    scores = tape.concat_cols(
        [tape.matmul(tape.tanh(tape.add(proj, d_proj)), v) for proj in enc_proj]
    )
    return tape.masked_softmax(scores, mask), (h, c)


def _sample_indices(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorized inverse-CDF draw of one column per row."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random((probs.shape[0], 1))
    idx = (cdf <= u).sum(axis=1)
    idx = np.minimum(idx, probs.shape[1] - 1)
    # cumsum rounding can strand u past the last positive entry; fall back
    # to the modal column, which is always unmasked
    stranded = probs[np.arange(probs.shape[0]), idx] <= 0.0
    if stranded.any():
        idx[stranded] = np.argmax(probs[stranded], axis=1)
    return idx


def _validate_batch(instances, config: PolicyConfig) -> np.ndarray:
    if not instances:
        raise ValueError("empty instance batch")
    ref = instances[0].config
    for s in instances:
        if s.config != ref:
            raise ValueError("all instances in a batch must share one network config")
        if s.num_ues != ref.ue_count:
            raise ValueError(
                f"instance has {s.num_ues} users, config expects {ref.ue_count}; "
                "pad_with_surrogates first"
            )
    if config.input_dim != ref.bs_count:
        raise ValueError(
            f"policy input_dim {config.input_dim} does not match "
            f"bs_count {ref.bs_count}"
        )
    return np.stack([csi_features(s) for s in instances])


def rollout_features(
    features: np.ndarray,
    store: ParameterStore,
    config: PolicyConfig,
    mode: str = "sample",
    rng: np.random.Generator | None = None,
    forced: np.ndarray | None = None,
    recording: bool = True,
) -> RolloutBatch:
    """Decode one sequence per row of a (batch, users, input_dim) feature array.

    mode "sample" draws each step from the pointing distribution (needs
    ``rng``), "greedy" takes the argmax with ties to the smallest index, and
    "forced" follows the given ``forced`` permutations while scoring them
    (the mode finite-difference checks use to pin the action sequence).
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise ValueError(f"features must be 3-D, got shape {features.shape}")
    batch, n = features.shape[0], features.shape[1]
    if batch < 1 or n < 1:
        raise ValueError(f"empty feature batch: shape {features.shape}")
    if mode == "sample":
        if rng is None:
            raise ValueError("mode 'sample' needs an rng")
    elif mode == "forced":
        if forced is None:
            raise ValueError("mode 'forced' needs the permutations to follow")
        forced = np.asarray(forced, dtype=np.int64)
        if forced.shape != (batch, n):
            raise ValueError(f"forced shape {forced.shape}, expected ({batch}, {n})")
        if not (np.sort(forced, axis=1) == np.arange(n)).all():
            raise ValueError("forced rows must be permutations of 0..n-1")
    elif mode != "greedy":
        raise ValueError(f"unknown rollout mode {mode!r}")

    tape = Tape(recording=recording)
    embedded = embed_sequence(tape, store, features)
    enc_states, (h, c) = encode_sequence(tape, store, embedded)
    w_enc = tape.param(store, "attn.w_enc")
    enc_proj = [tape.matmul(e, w_enc) for e in enc_states]

    state = (h, c)
    prev = tape.broadcast_rows(tape.param(store, "embed.sos"), batch)
    mask = np.ones((batch, n), dtype=bool)
    rows = np.arange(batch)
    permutations = np.empty((batch, n), dtype=np.int64)
    step_probs = np.empty((batch, n, n), dtype=np.float64)
    log_prob_node: Node | None = None

    for t in range(n):
        probs, state = decode_step(tape, store, prev, state, enc_proj, mask)
        step_probs[:, t, :] = probs.value
        if mode == "sample":
            idx = _sample_indices(probs.value, rng)
        elif mode == "greedy":
            idx = np.argmax(probs.value, axis=1)
        else:
            idx = forced[:, t]
        permutations[:, t] = idx
        chosen = tape.log(tape.gather_cols(probs, idx))
        log_prob_node = (
            chosen if log_prob_node is None else tape.add(log_prob_node, chosen)
        )
        mask = mask.copy()
        mask[rows, idx] = False
        prev = tape.pick_per_row(embedded, idx)

    return RolloutBatch(
        permutations=permutations,
        log_prob=np.asarray(log_prob_node.value, dtype=np.float64).copy(),
        step_probs=step_probs,
        log_prob_node=log_prob_node,
        tape=tape,
    )


def rollout_batch(
    instances: list[NetworkInstance],
    store: ParameterStore,
    config: PolicyConfig,
    mode: str = "sample",
    rng: np.random.Generator | None = None,
    forced: np.ndarray | None = None,
    recording: bool = True,
) -> RolloutBatch:
    """Decode one user sequence per network instance, batched.

    Validates that the instances share one network config and are fully
    padded, featurizes them, and defers to ``rollout_features``.
    """
    features = _validate_batch(instances, config)
    return rollout_features(
        features, store, config, mode=mode, rng=rng, forced=forced, recording=recording
    )


def _single(batch: RolloutBatch) -> Rollout:
    return Rollout(
        u=tuple(int(i) for i in batch.permutations[0]),
        log_prob=float(batch.log_prob[0]),
        step_probs=batch.step_probs[0],
    )


def rollout_sample(
    instance: NetworkInstance,
    store: ParameterStore,
    config: PolicyConfig,
    rng: np.random.Generator,
) -> Rollout:
    """Sampled rollout for one instance."""
    return _single(
        rollout_batch([instance], store, config, mode="sample", rng=rng, recording=False)
    )


def rollout_greedy(
    instance: NetworkInstance, store: ParameterStore, config: PolicyConfig
) -> Rollout:
    """Deterministic argmax rollout for one instance."""
    return _single(
        rollout_batch([instance], store, config, mode="greedy", recording=False)
    )
