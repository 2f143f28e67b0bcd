"""Flat INI serialization of training configurations.

Two sections: [network] for the radio scenario, [train] for the optimizer
loop. Floats are written with repr so a save/load round trip is bit-exact;
base-station positions are "x,y" pairs joined by semicolons.
"""

from __future__ import annotations

from configparser import ConfigParser
from pathlib import Path

from .netsim import NetworkConfig
from .training import TrainConfig

__all__ = ["read_train_config", "write_train_config"]

_NETWORK_INTS = ("bs_count", "prbs_per_bs", "ue_count", "seed")
_NETWORK_FLOATS = (
    "area_half_width",
    "pathloss_exponent",
    "tx_power",
    "noise_variance",
)
_TRAIN_INTS = (
    "episodes",
    "steps_per_episode",
    "batch_size",
    "embed_dim",
    "hidden_dim",
    "seed",
    "eval_size",
    "eval_every",
    "eval_search_budget",
)
_TRAIN_FLOATS = ("learning_rate", "baseline_decay")


def _format_positions(positions) -> str:
    return "; ".join(f"{repr(float(x))},{repr(float(y))}" for x, y in positions)


def _parse_positions(text: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValueError(f"bad base-station position {chunk!r}, expected 'x,y'")
        pairs.append((float(parts[0]), float(parts[1])))
    if not pairs:
        raise ValueError("bs_positions lists no positions")
    return tuple(pairs)


def write_train_config(path, config: TrainConfig) -> None:
    cp = ConfigParser()
    net = config.network
    cp["network"] = {}
    for name in _NETWORK_INTS:
        cp["network"][name] = str(getattr(net, name))
    for name in _NETWORK_FLOATS:
        cp["network"][name] = repr(getattr(net, name))
    cp["network"]["bs_positions"] = _format_positions(net.bs_positions)
    cp["train"] = {}
    for name in _TRAIN_INTS:
        cp["train"][name] = str(getattr(config, name))
    for name in _TRAIN_FLOATS:
        cp["train"][name] = repr(getattr(config, name))
    with open(path, "w") as f:
        cp.write(f)


def _take(section: dict, ints, floats) -> dict:
    out = {}
    for name in ints:
        if name in section:
            out[name] = int(section.pop(name))
    for name in floats:
        if name in section:
            out[name] = float(section.pop(name))
    return out


def read_train_config(path) -> TrainConfig:
    """Parse an INI training config; unknown keys or sections are errors."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file {path} does not exist")
    cp = ConfigParser()
    with open(path) as f:
        cp.read_file(f)

    sections = set(cp.sections())
    if not {"network", "train"} <= sections:
        missing = {"network", "train"} - sections
        raise ValueError(f"config is missing section(s): {sorted(missing)}")
    extra_sections = sections - {"network", "train"}
    if extra_sections:
        raise ValueError(f"unknown config section(s): {sorted(extra_sections)}")

    net_raw = dict(cp["network"])
    net_kwargs = _take(net_raw, _NETWORK_INTS, _NETWORK_FLOATS)
    positions_text = net_raw.pop("bs_positions", None)
    if positions_text is None:
        raise ValueError("[network] needs bs_positions")
    if net_raw:
        raise ValueError(f"unknown [network] key(s): {sorted(net_raw)}")
    network = NetworkConfig(bs_positions=_parse_positions(positions_text), **net_kwargs)

    train_raw = dict(cp["train"])
    train_kwargs = _take(train_raw, _TRAIN_INTS, _TRAIN_FLOATS)
    if train_raw:
        raise ValueError(f"unknown [train] key(s): {sorted(train_raw)}")
    return TrainConfig(network=network, **train_kwargs)
