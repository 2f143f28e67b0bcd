"""Bundled scenario presets: layouts, sizes, and lookup errors."""

import pytest

from nomapair.presets import PRESETS, get_preset, preset_names


def test_preset_names_are_stable():
    assert preset_names() == ("desk", "five-bs", "four-bs", "two-bs")


def test_five_bs_layout():
    net = get_preset("five-bs").network
    assert net.bs_count == 5
    assert net.prbs_per_bs == 1
    assert net.ue_count == 10
    assert net.area_half_width == 50.0
    assert net.bs_positions == (
        (0.0, 0.0),
        (25.0, 25.0),
        (25.0, -25.0),
        (-25.0, 25.0),
        (-25.0, -25.0),
    )


def test_two_bs_layout():
    net = get_preset("two-bs").network
    assert (net.bs_count, net.prbs_per_bs, net.ue_count) == (2, 2, 8)
    assert net.bs_positions == ((25.0, 25.0), (-25.0, -25.0))


def test_four_bs_layout():
    net = get_preset("four-bs").network
    assert (net.bs_count, net.prbs_per_bs, net.ue_count) == (4, 3, 24)


def test_full_scale_training_defaults():
    config = get_preset("five-bs")
    assert config.hidden_dim == 100
    assert config.embed_dim == 128
    assert config.batch_size == 128
    assert config.baseline_decay == 0.9
    assert config.learning_rate == 1e-3


def test_desk_preset_is_minute_scale():
    config = get_preset("desk")
    net = config.network
    assert (net.bs_count, net.prbs_per_bs, net.ue_count) == (2, 1, 4)
    assert config.hidden_dim == 64
    assert config.batch_size == 64
    assert config.total_steps <= 50_000


def test_radio_constants_shared_across_presets():
    for config in PRESETS.values():
        net = config.network
        assert net.tx_power == 1.0
        assert net.noise_variance == 4e-9
        assert net.pathloss_exponent == 4.0
        assert net.ue_count == 2 * net.prbs_per_bs * net.bs_count


def test_unknown_preset_lists_choices():
    with pytest.raises(ValueError, match="desk.*five-bs.*four-bs.*two-bs"):
        get_preset("metropolis")
