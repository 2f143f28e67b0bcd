r"""Per-block rate arithmetic for a two-user downlink power-domain split.

Each resource block carries two users on the same carrier. The block power P
is split by a coefficient alpha in [0, 1]:

* the *SIC user* n (stronger link) gets alpha * P, decodes the partner first,
  cancels it, and sees rate  log2(1 + alpha * snr * g_n);
* the *non-SIC user* m (weaker link) gets (1 - alpha) * P, treats the partner
  as noise, and sees rate  log2(1 + (1-alpha) g_m P / (alpha g_m P + sigma^2)).

Fairness floor: every user must do at least as well as on an orthogonally
shared block, gamma_u = min over serving candidates of 0.5 * log2(1 + snr * g)
(the 1/2 because an orthogonal block would be split two ways). Maximizing the
block sum rate under both floors has a closed-form solution: raise alpha until
the non-SIC user's floor binds,

    alpha* = ((1 + x) / sqrt(1 + y) - 1) / x,

with x = snr * g[k, m] and y = snr * min_k' g[k', m]. The degenerate x = 0
case takes the analytic limit alpha* = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LN2 = math.log(2.0)
# Relative slack for the floor assertions; the closed form meets the non-SIC
# floor with equality, so only rounding noise should ever show up here.
_FLOOR_RTOL = 1e-9


@dataclass(frozen=True)
class RadioParams:
    """Transmit power per resource block and receiver noise variance."""

    tx_power: float
    noise_variance: float

    def __post_init__(self):
        if not self.tx_power > 0:
            raise ValueError("tx_power must be positive")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")

    @property
    def snr(self) -> float:
        """Transmit SNR P / sigma^2 (gain-free)."""
        return self.tx_power / self.noise_variance

    @classmethod
    def from_config(cls, config) -> "RadioParams":
        return cls(tx_power=config.tx_power, noise_variance=config.noise_variance)


@dataclass(frozen=True)
class PairRateResult:
    """Rates of one block at the optimal power split."""

    alpha_star: float
    rate_sic: float
    rate_nonsic: float

    @property
    def pair_rate_sum(self) -> float:
        return self.rate_sic + self.rate_nonsic


def oma_rate(gain: float, params: RadioParams) -> float:
    """Single-user rate on an orthogonally shared block: 0.5 * log2(1 + snr * g)."""
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    return 0.5 * math.log1p(params.snr * gain) / _LN2


def min_rate_threshold(ue: int, csi: np.ndarray, params: RadioParams) -> float:
    """Fairness floor gamma_ue: the worst orthogonal-block rate over all BSs."""
    gains = np.asarray(csi, dtype=np.float64)[:, ue]
    return min(oma_rate(float(g), params) for g in gains)


def sic_rate(gain: float, alpha: float, params: RadioParams) -> float:
    """Rate of the SIC user at power share alpha: log2(1 + alpha * snr * g)."""
    _check_alpha(alpha)
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    return math.log1p(alpha * params.snr * gain) / _LN2


def nonsic_rate(gain: float, alpha: float, params: RadioParams) -> float:
    """Rate of the non-SIC user, partner signal treated as noise.

    log2(1 + (1-alpha) g P / (alpha g P + sigma^2)); the denominator is
    >= sigma^2, so this is safe for every alpha in [0, 1].
    """
    _check_alpha(alpha)
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    x = params.snr * gain
    return math.log1p((1.0 - alpha) * x / (alpha * x + 1.0)) / _LN2


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")


def optimal_alpha(
    non_sic_ue: int, sic_ue: int, bs: int, csi: np.ndarray, params: RadioParams
) -> float:
    """Sum-rate-optimal power share for the SIC user of one block.

    ``non_sic_ue`` and ``sic_ue`` are served by base station ``bs``; the SIC
    user must have the better (or equal) gain there. The optimum makes the
    non-SIC user's fairness floor tight. Computed in the cancellation-free
    form  alpha* = (x - y / (1 + sqrt(1 + y))) / (x * sqrt(1 + y)).
    """
    csi = np.asarray(csi, dtype=np.float64)
    g_m = float(csi[bs, non_sic_ue])
    g_n = float(csi[bs, sic_ue])
    if g_n < g_m:
        raise ValueError(
            f"SIC user {sic_ue} has gain {g_n} below non-SIC user "
            f"{non_sic_ue}'s gain {g_m} at base station {bs}"
        )
    if g_m == 0.0:
        return 1.0
    x = params.snr * g_m
    y = params.snr * float(csi[:, non_sic_ue].min())
    s = math.sqrt(1.0 + y)
    return (x - y / (1.0 + s)) / (x * s)


def pair_rate(
    non_sic_ue: int, sic_ue: int, bs: int, csi: np.ndarray, params: RadioParams
) -> PairRateResult:
    """Both users' rates on one block at the optimal power split.

    Asserts the fairness floors the optimum is guaranteed to meet: the non-SIC
    rate equals its floor and the SIC rate is at or above its own.
    """
    if non_sic_ue == sic_ue:
        raise ValueError("a block needs two distinct users")
    csi = np.asarray(csi, dtype=np.float64)
    alpha = optimal_alpha(non_sic_ue, sic_ue, bs, csi, params)
    r_sic = sic_rate(float(csi[bs, sic_ue]), alpha, params)
    r_non = nonsic_rate(float(csi[bs, non_sic_ue]), alpha, params)

    gamma_m = min_rate_threshold(non_sic_ue, csi, params)
    gamma_n = min_rate_threshold(sic_ue, csi, params)
    if r_non < gamma_m - _FLOOR_RTOL * max(1.0, gamma_m):
        raise RuntimeError(
            f"non-SIC rate {r_non} fell below its floor {gamma_m}; "
            "optimal split violated its own constraint"
        )
    if r_sic < gamma_n - _FLOOR_RTOL * max(1.0, gamma_n):
        raise RuntimeError(
            f"SIC rate {r_sic} fell below its floor {gamma_n}; "
            "optimal split violated its own constraint"
        )
    return PairRateResult(alpha_star=alpha, rate_sic=r_sic, rate_nonsic=r_non)
