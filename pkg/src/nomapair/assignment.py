"""Joint pairing-and-association encodings and the aggregate-rate objective.

The decision variable is a permutation ``u`` of the user indices 0..N-1 laid
out in consecutive slot pairs: positions (2s, 2s+1) of ``u`` hold the (SIC,
non-SIC) occupants of block s, where s = bs * prbs_per_bs + prb. Canonical
form puts the user with the larger gain at the serving base station in the
SIC slot, which makes successive cancellation decodable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .netsim import NetworkConfig, NetworkInstance
from .rates import RadioParams, pair_rate


@dataclass(frozen=True)
class Assignment:
    """A full pairing-and-association decision for one scenario."""

    u: tuple[int, ...]
    bs_count: int
    prbs_per_bs: int

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(int(i) for i in self.u))
        n = 2 * self.bs_count * self.prbs_per_bs
        if len(self.u) != n:
            raise ValueError(
                f"permutation length {len(self.u)} does not match "
                f"2 * {self.bs_count} * {self.prbs_per_bs} = {n}"
            )
        seen: set[int] = set()
        for i in self.u:
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range [0, {n})")
            if i in seen:
                raise ValueError(f"duplicate user index {i} in permutation")
            seen.add(i)

    @property
    def num_ues(self) -> int:
        return len(self.u)

    def pair(self, bs: int, prb: int) -> tuple[int, int]:
        """(SIC user, non-SIC user) of one block."""
        s = 2 * (bs * self.prbs_per_bs + prb)
        return self.u[s], self.u[s + 1]

    def pairs(self) -> Iterator[tuple[int, int, int, int]]:
        """Yield (bs, prb, sic_ue, nonsic_ue) over every block."""
        for k in range(self.bs_count):
            for b in range(self.prbs_per_bs):
                sic, non = self.pair(k, b)
                yield k, b, sic, non

    def slot_matrix(self) -> np.ndarray:
        """(bs_count, prbs_per_bs, 2) integer view; [..., 0] is the SIC slot."""
        return np.asarray(self.u, dtype=np.int64).reshape(
            self.bs_count, self.prbs_per_bs, 2
        )

    def binary_matrix(self) -> np.ndarray:
        """One-hot view X with X[k, n, b, p] = 1 iff user n sits in slot (k, b, p)."""
        n = self.num_ues
        x = np.zeros((self.bs_count, n, self.prbs_per_bs, 2), dtype=np.int64)
        for k, b, sic, non in self.pairs():
            x[k, sic, b, 0] = 1
            x[k, non, b, 1] = 1
        return x


def from_permutation(u, config: NetworkConfig) -> Assignment:
    """Build an Assignment from a raw index sequence, validating it fully."""
    return Assignment(
        u=tuple(u), bs_count=config.bs_count, prbs_per_bs=config.prbs_per_bs
    )


def check_sic_constraint(assignment: Assignment, csi: np.ndarray) -> bool:
    """True iff every SIC occupant has gain >= its partner at the serving BS."""
    csi = np.asarray(csi, dtype=np.float64)
    return all(
        csi[k, sic] >= csi[k, non] for k, _, sic, non in assignment.pairs()
    )


def canonicalize(assignment: Assignment, csi: np.ndarray) -> Assignment:
    """Reorder every block so the better-gain user holds the SIC slot.

    Equal gains break toward the smaller user index in the SIC slot. The
    block-to-slot structure is untouched, so the aggregate objective only ever
    improves or stays put.
    """
    csi = np.asarray(csi, dtype=np.float64)
    u = list(assignment.u)
    for k, b, sic, non in assignment.pairs():
        g_sic, g_non = csi[k, sic], csi[k, non]
        if g_non > g_sic or (g_non == g_sic and non < sic):
            s = 2 * (k * assignment.prbs_per_bs + b)
            u[s], u[s + 1] = non, sic
    return Assignment(
        u=tuple(u), bs_count=assignment.bs_count, prbs_per_bs=assignment.prbs_per_bs
    )


def aggregate_rate(
    assignment: Assignment, instance: NetworkInstance, params: RadioParams
) -> float:
    """Sum of optimal-split block rates over all blocks.

    Requires a canonical assignment (SIC slot holds the better gain); call
    ``canonicalize`` first otherwise.
    """
    csi = instance.csi
    if not check_sic_constraint(assignment, csi):
        raise ValueError(
            "assignment is not canonical: some SIC slot holds the weaker "
            "user; call canonicalize first"
        )
    total = 0.0
    for k, _, sic, non in assignment.pairs():
        total += pair_rate(non, sic, k, csi, params).pair_rate_sum
    return total


def evaluate_permutation(
    u, instance: NetworkInstance, params: RadioParams
) -> tuple[Assignment, float]:
    """Canonicalize a raw permutation and score it in one call."""
    a = canonicalize(from_permutation(u, instance.config), instance.csi)
    return a, aggregate_rate(a, instance, params)


def format_assignment(
    assignment: Assignment, instance: NetworkInstance, params: RadioParams
) -> list[str]:
    """One human-readable line per block: occupants, power split, both rates."""
    lines = []
    for k, b, sic, non in assignment.pairs():
        r = pair_rate(non, sic, k, instance.csi, params)
        lines.append(
            f"k={k} b={b} sic={sic} nonsic={non} "
            f"alpha={r.alpha_star:.12g} rate_sic={r.rate_sic:.12g} "
            f"rate_nonsic={r.rate_nonsic:.12g}"
        )
    return lines
