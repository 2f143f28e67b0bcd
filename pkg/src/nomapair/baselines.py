"""Reference solvers: exhaustive search, random pairing, and the OMA benchmark.

The exhaustive search enumerates assignments of unordered user pairs to the
ordered block slots, N! / 2^(num_blocks) candidates instead of N!, which is
what makes ten-user scenarios enumerable in well under a second. Within-pair
order carries no information because canonical SIC ordering is a function of
the channel.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assignment import Assignment, aggregate_rate, canonicalize, from_permutation
from .netsim import NetworkInstance
from .rates import RadioParams, oma_rate, pair_rate

# Largest symmetry-reduced candidate count the search accepts by default;
# chosen so twelve users (12! / 2^6 = 7_484_400) still run but anything
# bigger is refused up front.
DEFAULT_BUDGET = 8_000_000


class EnumerationBudgetError(ValueError):
    """The candidate count of an exhaustive search exceeds its budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(
            f"exhaustive search would enumerate {count} candidates, "
            f"over the budget of {budget}"
        )
        self.count = count
        self.budget = budget


def candidate_count(num_ues: int, num_blocks: int) -> int:
    """Number of symmetry-reduced candidates: N! / 2^(num_blocks)."""
    return math.factorial(num_ues) // (2**num_blocks)


def exhaustive_noma(
    instance: NetworkInstance,
    params: RadioParams,
    budget: int = DEFAULT_BUDGET,
) -> tuple[Assignment, float]:
    """Globally optimal assignment by symmetry-reduced enumeration.

    Ties on the objective resolve to the lexicographically smallest
    permutation, so the result is deterministic. Refuses instances whose
    candidate count exceeds ``budget``.
    """
    cfg = instance.config
    n = cfg.ue_count
    num_blocks = cfg.bs_count * cfg.prbs_per_bs
    count = candidate_count(n, num_blocks)
    if count > budget:
        raise EnumerationBudgetError(count, budget)

    csi = instance.csi
    # Block owner of each slot pair s is base station s // prbs_per_bs.
    slot_bs = [s // cfg.prbs_per_bs for s in range(num_blocks)]

    # Per-(bs, unordered pair) optimal-split sum rate with canonical SIC
    # ordering baked in: table[k][i][j] = (rate, sic, non) for i < j.
    table: dict[tuple[int, int, int], tuple[float, int, int]] = {}
    for k in range(cfg.bs_count):
        for i in range(n):
            for j in range(i + 1, n):
                if csi[k, i] >= csi[k, j]:
                    sic, non = i, j
                else:
                    sic, non = j, i
                r = pair_rate(non, sic, k, csi, params)
                table[(k, i, j)] = (r.pair_rate_sum, sic, non)

    best_phi = -math.inf
    best_u: tuple[int, ...] | None = None
    prefix: list[int] = []

    def recurse(slot: int, remaining: tuple[int, ...], phi: float) -> None:
        nonlocal best_phi, best_u
        if slot == num_blocks:
            u = tuple(prefix)
            if phi > best_phi or (phi == best_phi and (best_u is None or u < best_u)):
                best_phi = phi
                best_u = u
            return
        k = slot_bs[slot]
        m = len(remaining)
        for a in range(m):
            for b in range(a + 1, m):
                i, j = remaining[a], remaining[b]
                rate, sic, non = table[(k, i, j)]
                prefix.append(sic)
                prefix.append(non)
                rest = remaining[:a] + remaining[a + 1 : b] + remaining[b + 1 :]
                recurse(slot + 1, rest, phi + rate)
                prefix.pop()
                prefix.pop()

    recurse(0, tuple(range(n)), 0.0)
    assert best_u is not None
    return from_permutation(best_u, cfg), best_phi


def random_heuristic(
    instance: NetworkInstance,
    params: RadioParams,
    rng: np.random.Generator,
) -> tuple[Assignment, float]:
    """Uniform random permutation, canonicalized and scored."""
    u = rng.permutation(instance.config.ue_count)
    a = canonicalize(from_permutation(u, instance.config), instance.csi)
    return a, aggregate_rate(a, instance, params)


def optimal_oma(
    instance: NetworkInstance, params: RadioParams
) -> tuple[Assignment, float]:
    """Best orthogonal-access association: every user alone on a half block.

    Each base station offers 2 * prbs_per_bs single-user slots; maximizing the
    summed orthogonal rates is a balanced assignment problem, solved exactly.
    Returns a witness Assignment (users grouped onto their BS, pairs filled in
    index order, canonically ordered) and the OMA objective value, which is a
    sum of orthogonal rates, not of power-split pair rates.
    """
    cfg = instance.config
    n = cfg.ue_count
    slots_per_bs = 2 * cfg.prbs_per_bs

    rate = np.empty((n, cfg.bs_count))
    for ue in range(n):
        for k in range(cfg.bs_count):
            rate[ue, k] = oma_rate(float(instance.csi[k, ue]), params)
    cost = np.repeat(rate, slots_per_bs, axis=1)

    rows, cols = linear_sum_assignment(cost, maximize=True)
    phi = float(cost[rows, cols].sum())

    by_bs: list[list[int]] = [[] for _ in range(cfg.bs_count)]
    for ue, col in zip(rows, cols):
        by_bs[col // slots_per_bs].append(int(ue))

    u: list[int] = []
    for k in range(cfg.bs_count):
        members = sorted(by_bs[k])
        for b in range(cfg.prbs_per_bs):
            u.extend(members[2 * b : 2 * b + 2])
    witness = canonicalize(from_permutation(u, cfg), instance.csi)
    return witness, phi
