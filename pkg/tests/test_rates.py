"""Power-split rate math against the grid-search oracle and hand values."""

import math

import numpy as np
import pytest

from nomapair.rates import (
    PairRateResult,
    RadioParams,
    min_rate_threshold,
    nonsic_rate,
    oma_rate,
    optimal_alpha,
    pair_rate,
    sic_rate,
)
from oracles import grid_search_pair

UNIT = RadioParams(tx_power=1.0, noise_variance=1.0)  # snr exactly 1
DEFAULT = RadioParams(tx_power=1.0, noise_variance=4e-9)


def random_triples(count, seed, bs_count=2):
    """(csi, non_sic, sic, bs) tuples with gains spread over many decades."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        csi = 10.0 ** rng.uniform(-9.0, 0.0, size=(bs_count, 2))
        bs = int(rng.integers(bs_count))
        if csi[bs, 1] < csi[bs, 0]:
            csi = csi[:, ::-1].copy()
        out.append((csi, 0, 1, bs))
    return out


def test_snr_is_exact_ratio():
    assert DEFAULT.snr == 1.0 / 4e-9
    with pytest.raises(ValueError):
        RadioParams(tx_power=0.0, noise_variance=1.0)
    with pytest.raises(ValueError):
        RadioParams(tx_power=1.0, noise_variance=-1.0)


def test_oma_rate_hand_values():
    # snr * g = 3 -> 0.5 * log2(4) = 1
    assert oma_rate(3.0, UNIT) == pytest.approx(1.0, rel=1e-15)
    assert oma_rate(0.0, UNIT) == 0.0
    with pytest.raises(ValueError):
        oma_rate(-1.0, UNIT)


def test_min_rate_threshold_takes_worst_bs():
    csi = np.array([[3.0, 3.0], [1.0, 8.0]])
    # worst link for user 0 is gain 1 -> 0.5 * log2(2) = 0.5
    assert min_rate_threshold(0, csi, UNIT) == pytest.approx(0.5, rel=1e-15)
    assert min_rate_threshold(1, csi, UNIT) == pytest.approx(1.0, rel=1e-15)


def test_sic_rate_endpoints():
    assert sic_rate(3.0, 1.0, UNIT) == pytest.approx(2.0, rel=1e-15)
    assert sic_rate(3.0, 0.0, UNIT) == 0.0
    with pytest.raises(ValueError):
        sic_rate(3.0, 1.5, UNIT)


def test_nonsic_rate_endpoints():
    # alpha = 0: whole block power, no partner interference -> log2(1 + x)
    assert nonsic_rate(3.0, 0.0, UNIT) == pytest.approx(2.0, rel=1e-15)
    assert nonsic_rate(3.0, 1.0, UNIT) == 0.0
    with pytest.raises(ValueError):
        nonsic_rate(3.0, -0.1, UNIT)


def test_nonsic_monotone_down_sic_monotone_up():
    alphas = np.linspace(0.0, 1.0, 101)
    r_s = [sic_rate(5.0, a, UNIT) for a in alphas]
    r_n = [nonsic_rate(5.0, a, UNIT) for a in alphas]
    assert all(b >= a for a, b in zip(r_s, r_s[1:]))
    assert all(b <= a for a, b in zip(r_n, r_n[1:]))


def test_optimal_alpha_equal_gain_hand_value():
    # Single BS, both serving gains give snr * g = 3: the floor argmin is the
    # serving link itself, so alpha* = (sqrt(1 + 3) - 1) / 3 = 1/3.
    csi = np.array([[3.0, 3.0]])
    assert optimal_alpha(0, 1, 0, csi, UNIT) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_optimal_alpha_zero_gain_limit():
    csi = np.array([[0.0, 5.0]])
    assert optimal_alpha(0, 1, 0, csi, UNIT) == 1.0
    r = pair_rate(0, 1, 0, csi, UNIT)
    assert r.alpha_star == 1.0
    assert r.rate_nonsic == 0.0
    assert r.rate_sic == pytest.approx(math.log2(6.0), rel=1e-15)


def test_optimal_alpha_requires_sic_ordering():
    csi = np.array([[2.0, 1.0]])
    with pytest.raises(ValueError):
        optimal_alpha(0, 1, 0, csi, UNIT)  # SIC user weaker than partner


def test_pair_rate_rejects_same_user():
    csi = np.array([[2.0, 1.0]])
    with pytest.raises(ValueError):
        pair_rate(1, 1, 0, csi, UNIT)


def test_pair_rate_sum_is_component_sum():
    r = PairRateResult(alpha_star=0.4, rate_sic=1.25, rate_nonsic=0.5)
    assert r.pair_rate_sum == r.rate_sic + r.rate_nonsic


def test_alpha_in_unit_interval_and_floors_hold():
    for csi, non, sic, bs in random_triples(2000, seed=42):
        r = pair_rate(non, sic, bs, csi, DEFAULT)
        assert 0.0 <= r.alpha_star <= 1.0
        gamma_m = min_rate_threshold(non, csi, DEFAULT)
        gamma_n = min_rate_threshold(sic, csi, DEFAULT)
        # By construction the non-SIC floor binds exactly; the SIC floor has slack.
        assert abs(r.rate_nonsic - gamma_m) <= 1e-9 * max(1.0, gamma_m)
        assert r.rate_sic >= gamma_n - 1e-12 * max(1.0, gamma_n)


def test_alpha_matches_grid_search():
    # Module-level spot check; the acceptance suite runs the 10^4 sweep.
    misses = 0
    for csi, non, sic, bs in random_triples(300, seed=7):
        r = pair_rate(non, sic, bs, csi, DEFAULT)
        got = grid_search_pair(csi, non, sic, bs, DEFAULT.snr)
        if got is None:
            misses += 1
            continue
        alpha_grid, phi_grid, _ = got
        assert abs(r.alpha_star - alpha_grid) <= 1e-4
        assert r.pair_rate_sum >= phi_grid - 1e-6
    assert misses <= 2  # feasible window narrower than the grid is rare


def test_grid_confirms_hand_value():
    # alpha* depends only on the non-SIC user's column (snr * g = 3 at both
    # links -> 1/3). The SIC user gets a strictly better serving gain so the
    # block sum rate strictly increases in alpha (equal gains would make it
    # flat and the grid argmax ambiguous), and a weak second link so its own
    # floor has slack.
    csi = np.array([[3.0, 8.0], [3.0, 0.5]])
    assert optimal_alpha(0, 1, 0, csi, UNIT) == pytest.approx(1.0 / 3.0, rel=1e-14)
    alpha_grid, phi_grid, _ = grid_search_pair(csi, 0, 1, 0, UNIT.snr)
    assert abs(alpha_grid - 1.0 / 3.0) <= 1e-4
    assert pair_rate(0, 1, 0, csi, UNIT).pair_rate_sum >= phi_grid - 1e-6


def test_grid_window_collapses_when_both_floors_bind():
    # Symmetric single-BS case: both floors bind at exactly alpha = 1/3, the
    # feasible set is that single point, and the 1e-5 grid cannot land on it.
    csi = np.array([[3.0, 3.0]])
    assert grid_search_pair(csi, 0, 1, 0, UNIT.snr) is None
