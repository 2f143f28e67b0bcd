"""Multicell downlink scenario description, instance sampling, and dataset files.

A scenario is a square service area with fixed base-station sites. An instance
drops user terminals uniformly over the area and draws one flat-fading channel
gain per (base station, user) link:

    |h|^2 = l^(-beta) * E,   E ~ Exp(mean 1),  l = BS-to-UE distance.

Instances are persisted as NDJSON: one header line carrying the scenario
config, then one line per instance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_FORMAT_VERSION = 1


class DatasetFormatError(ValueError):
    """A dataset file could not be parsed or failed validation.

    ``line_number`` is 1-based and names the offending line where known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of one downlink scenario.

    ``ue_count`` must equal ``2 * prbs_per_bs * bs_count``: every base station
    schedules ``prbs_per_bs`` resource blocks and every block carries exactly
    two users. Shortfalls are represented by zero-gain surrogate users, not by
    changing ``ue_count``.
    """

    bs_count: int
    prbs_per_bs: int
    ue_count: int
    area_half_width: float
    bs_positions: tuple[tuple[float, float], ...]
    pathloss_exponent: float = 4.0
    tx_power: float = 1.0
    noise_variance: float = 4e-9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self,
            "bs_positions",
            tuple((float(x), float(y)) for x, y in self.bs_positions),
        )
        if self.bs_count < 1:
            raise ValueError(f"bs_count must be >= 1, got {self.bs_count}")
        if self.prbs_per_bs < 1:
            raise ValueError(f"prbs_per_bs must be >= 1, got {self.prbs_per_bs}")
        expected = 2 * self.prbs_per_bs * self.bs_count
        if self.ue_count != expected:
            raise ValueError(
                f"ue_count must be 2 * prbs_per_bs * bs_count = {expected}, "
                f"got {self.ue_count}"
            )
        if len(self.bs_positions) != self.bs_count:
            raise ValueError(
                f"expected {self.bs_count} base station positions, "
                f"got {len(self.bs_positions)}"
            )
        if not self.area_half_width > 0:
            raise ValueError("area_half_width must be positive")
        a = self.area_half_width
        for i, (x, y) in enumerate(self.bs_positions):
            if abs(x) > a or abs(y) > a:
                raise ValueError(
                    f"base station {i} at ({x}, {y}) lies outside the "
                    f"[-{a}, {a}]^2 service area"
                )
        if not self.pathloss_exponent > 0:
            raise ValueError("pathloss_exponent must be positive")
        if not self.tx_power > 0:
            raise ValueError("tx_power must be positive")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")

    def to_dict(self) -> dict:
        return {
            "bs_count": self.bs_count,
            "prbs_per_bs": self.prbs_per_bs,
            "ue_count": self.ue_count,
            "area_half_width": self.area_half_width,
            "bs_positions": [list(p) for p in self.bs_positions],
            "pathloss_exponent": self.pathloss_exponent,
            "tx_power": self.tx_power,
            "noise_variance": self.noise_variance,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            bs_count=int(d["bs_count"]),
            prbs_per_bs=int(d["prbs_per_bs"]),
            ue_count=int(d["ue_count"]),
            area_half_width=float(d["area_half_width"]),
            bs_positions=tuple((float(x), float(y)) for x, y in d["bs_positions"]),
            pathloss_exponent=float(d["pathloss_exponent"]),
            tx_power=float(d["tx_power"]),
            noise_variance=float(d["noise_variance"]),
            seed=int(d["seed"]),
        )

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class NetworkInstance:
    """One channel realization: user drops plus the gain matrix.

    ``csi`` has shape (bs_count, n) with n <= config.ue_count; column j is the
    gain of user j at every base station. Trailing columns beyond
    ``len(ue_positions)`` are surrogates: all-zero gain, no position.
    """

    config: NetworkConfig
    ue_positions: np.ndarray
    csi: np.ndarray

    def __post_init__(self):
        self.ue_positions = np.asarray(self.ue_positions, dtype=np.float64)
        if self.ue_positions.size == 0:
            self.ue_positions = self.ue_positions.reshape(0, 2)
        self.csi = np.asarray(self.csi, dtype=np.float64)
        self.validate()

    @property
    def num_real(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def num_ues(self) -> int:
        return self.csi.shape[1]

    @property
    def num_surrogates(self) -> int:
        return self.num_ues - self.num_real

    def validate(self) -> None:
        cfg = self.config
        if self.ue_positions.ndim != 2 or self.ue_positions.shape[1] != 2:
            raise ValueError(
                f"ue_positions must have shape (n, 2), got {self.ue_positions.shape}"
            )
        if self.csi.ndim != 2 or self.csi.shape[0] != cfg.bs_count:
            raise ValueError(
                f"csi must have shape ({cfg.bs_count}, n), got {self.csi.shape}"
            )
        if self.num_ues > cfg.ue_count:
            raise ValueError(
                f"instance has {self.num_ues} users but the scenario caps it "
                f"at {cfg.ue_count}"
            )
        if self.num_real > self.num_ues:
            raise ValueError(
                f"{self.num_real} positioned users but only {self.num_ues} "
                "csi columns"
            )
        a = cfg.area_half_width
        if self.num_real and np.abs(self.ue_positions).max() > a:
            raise ValueError(f"user positions must lie within [-{a}, {a}]^2")
        if not np.isfinite(self.csi).all():
            raise ValueError("csi entries must be finite")
        if (self.csi < 0).any():
            raise ValueError("csi entries must be nonnegative")
        real = self.csi[:, : self.num_real]
        if real.size and not (real > 0).all():
            raise ValueError("real users must have strictly positive gains")
        surr = self.csi[:, self.num_real :]
        if surr.size and surr.any():
            raise ValueError("surrogate columns must be all-zero")


def channel_gain(distance, pathloss_exponent, fading):
    """Link gain |h|^2 = distance^(-beta) * fading. ``distance`` must be > 0."""
    distance = np.asarray(distance, dtype=np.float64)
    if (distance <= 0).any():
        raise ValueError("distance must be strictly positive")
    return distance ** (-float(pathloss_exponent)) * np.asarray(fading, np.float64)


def _bs_array(config: NetworkConfig) -> np.ndarray:
    return np.asarray(config.bs_positions, dtype=np.float64)


def sample_instance(config: NetworkConfig, rng: np.random.Generator) -> NetworkInstance:
    """Draw one instance: uniform user drops, pathloss-times-exponential gains.

    Users landing exactly on a base station are redrawn, and exact-zero fading
    draws are redrawn, so every real user ends up with strictly positive gain
    at every base station. Draw order is fixed, so a seeded generator yields a
    reproducible instance stream.
    """
    n = config.ue_count
    a = config.area_half_width
    bs = _bs_array(config)

    pos = rng.uniform(-a, a, size=(n, 2))
    while True:
        diff = bs[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        onsite = (dist == 0).any(axis=0)
        if not onsite.any():
            break
        pos[onsite] = rng.uniform(-a, a, size=(int(onsite.sum()), 2))

    fading = rng.standard_exponential(size=(config.bs_count, n))
    while True:
        zero = fading == 0
        if not zero.any():
            break
        fading[zero] = rng.standard_exponential(size=int(zero.sum()))

    csi = channel_gain(dist, config.pathloss_exponent, fading)
    return NetworkInstance(config=config, ue_positions=pos, csi=csi)


def pad_with_surrogates(instance: NetworkInstance, target_n: int) -> NetworkInstance:
    """Append all-zero surrogate columns until the instance has ``target_n`` users.

    ``target_n`` must be the scenario's full user count; an instance that is
    already larger than the target cannot be padded down.
    """
    cfg = instance.config
    if target_n != cfg.ue_count:
        raise ValueError(
            f"target_n must be the scenario user count {cfg.ue_count}, "
            f"got {target_n}"
        )
    if instance.num_ues > target_n:
        raise ValueError(
            f"instance has {instance.num_ues} users, cannot pad to {target_n}"
        )
    if instance.num_ues == target_n:
        return instance
    pad = np.zeros((cfg.bs_count, target_n - instance.num_ues))
    return NetworkInstance(
        config=cfg,
        ue_positions=instance.ue_positions.copy(),
        csi=np.hstack([instance.csi, pad]),
    )


def _instance_record(instance: NetworkInstance, config_hash: str) -> dict:
    return {
        "config_hash": config_hash,
        "csi": [list(map(float, row)) for row in instance.csi],
        "kind": "instance",
        "ue_positions": [list(map(float, p)) for p in instance.ue_positions],
    }


def save_dataset(
    instances: list[NetworkInstance],
    path: str | Path,
    config: NetworkConfig | None = None,
) -> None:
    """Write instances as NDJSON: a header line, then one record per instance.

    All instances must share one config. An explicit ``config`` is required
    only when the list is empty (the header still needs one) and must agree
    with the instances otherwise.
    """
    if instances:
        inferred = instances[0].config
        if config is None:
            config = inferred
        elif config != inferred:
            raise ValueError("explicit config disagrees with the instances")
        for i, inst in enumerate(instances):
            if inst.config != config:
                raise ValueError(f"instance {i} has a different config")
    elif config is None:
        raise ValueError("an empty dataset needs an explicit config")

    h = config.config_hash()
    header = {
        "config": config.to_dict(),
        "config_hash": h,
        "kind": "header",
        "version": _FORMAT_VERSION,
    }
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for inst in instances:
            f.write(json.dumps(_instance_record(inst, h), sort_keys=True) + "\n")


def load_dataset(path: str | Path) -> list[NetworkInstance]:
    """Read an NDJSON dataset back. Raises DatasetFormatError on any defect."""
    path = Path(path)
    instances: list[NetworkInstance] = []
    with path.open("r", encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError("empty file, expected a header line", 1)

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"bad JSON in header: {e.msg}", 1) from e
    if not isinstance(header, dict) or header.get("kind") != "header":
        raise DatasetFormatError("first line must be a header record", 1)
    try:
        config = NetworkConfig.from_dict(header["config"])
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"bad header config: {e}", 1) from e
    h = config.config_hash()
    if header.get("config_hash") != h:
        raise DatasetFormatError("header config_hash does not match its config", 1)

    for lineno, line in enumerate(lines[1:], start=2):
        record_idx = lineno - 2
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(
                f"bad JSON in instance record {record_idx}: {e.msg}", lineno
            ) from e
        if not isinstance(rec, dict) or rec.get("kind") != "instance":
            raise DatasetFormatError(
                f"instance record {record_idx} has kind "
                f"{rec.get('kind')!r}, expected 'instance'",
                lineno,
            )
        if rec.get("config_hash") != h:
            raise DatasetFormatError(
                f"instance record {record_idx} carries a config_hash that "
                "does not match the header",
                lineno,
            )
        try:
            inst = NetworkInstance(
                config=config,
                ue_positions=np.asarray(rec["ue_positions"], dtype=np.float64),
                csi=np.asarray(rec["csi"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetFormatError(
                f"instance record {record_idx} failed validation: {e}", lineno
            ) from e
        instances.append(inst)
    return instances
