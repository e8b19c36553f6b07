import numpy as np
import pytest

from skynoma.errors import DomainError
from skynoma.metrics import pair_coefficients
from skynoma.scheduling import (
    dc_f1,
    dc_f2,
    optimize_power_split,
    pair_ee,
    schedule_users,
    single_ee,
)


def _coeff(channels, config, i=0, k=0):
    g = channels.h_hat_mag2[i, :, k]
    order = np.argsort(g)
    return pair_coefficients(channels, config, i, k,
                             (int(order[-1]), int(order[0])))


def test_pair_ee_matches_dc_split(config, channels):
    coeff = _coeff(channels, config)
    p_sc = config.p_uav_max_w / config.k_subchannels
    b_sc = config.subchannel_bandwidth_hz
    args = (p_sc, config.p_hover_w, b_sc)
    for beta in (0.05, 0.3, 0.6):
        f = dc_f1(coeff, beta, *args) - dc_f2(coeff, beta, *args)
        ee = pair_ee(coeff, beta, *args, config.outage_factor)
        assert ee == pytest.approx(-config.outage_factor * f, rel=1e-12)


def test_single_user_rejects_pair_calls(config, channels):
    g = channels.h_hat_mag2[0, :, 0]
    coeff = pair_coefficients(channels, config, 0, 0, (int(np.argmax(g)),))
    p_sc = config.p_uav_max_w / config.k_subchannels
    assert single_ee(coeff, p_sc, config.p_hover_w,
                     config.subchannel_bandwidth_hz, config.outage_factor) > 0
    with pytest.raises(DomainError):
        pair_ee(coeff, 0.5, p_sc, config.p_hover_w,
                config.subchannel_bandwidth_hz, config.outage_factor)
    with pytest.raises(DomainError):
        optimize_power_split(coeff, p_sc, config.p_hover_w,
                             config.subchannel_bandwidth_hz, config.outage_factor)


def test_optimize_power_split_beats_neighbours(config, channels):
    coeff = _coeff(channels, config, 0, 2)
    p_sc = config.p_uav_max_w / config.k_subchannels
    b_sc = config.subchannel_bandwidth_hz
    res = optimize_power_split(coeff, p_sc, config.p_hover_w, b_sc,
                               config.outage_factor)
    assert 0.0 < res.beta < 1.0
    assert res.converged
    here = pair_ee(coeff, res.beta, p_sc, config.p_hover_w, b_sc, config.outage_factor)
    assert here == pytest.approx(res.ee, rel=1e-9)
    for db in (-1e-3, 1e-3):
        b = min(max(res.beta + db, 1e-9), 1 - 1e-9)
        other = pair_ee(coeff, b, p_sc, config.p_hover_w, b_sc, config.outage_factor)
        assert other <= res.ee * (1 + 1e-9)
    with pytest.raises(DomainError):
        optimize_power_split(coeff, 0.0, config.p_hover_w, b_sc, config.outage_factor)


def test_schedule_is_valid_matching(config, channels):
    asg = schedule_users(channels, config)
    for i in range(config.n_uavs):
        seen = []
        for k in range(config.k_subchannels):
            users = asg.pairs.get((i, k), ())
            assert len(users) <= 2
            seen.extend(users)
            if len(users) == 2:
                ga = channels.h_hat_mag2[i, users[0], k]
                gb = channels.h_hat_mag2[i, users[1], k]
                assert ga >= gb  # strong first
                assert 0.0 < asg.beta[(i, k)] < 1.0
            elif len(users) == 1:
                assert asg.beta[(i, k)] == 1.0
        # every user appears exactly once (N = 2K here)
        assert sorted(seen) == list(range(config.users_per_cell))
        assert asg.matched_users(i) == set(range(config.users_per_cell))


def test_schedule_deterministic(config, channels):
    a = schedule_users(channels, config)
    b = schedule_users(channels, config)
    assert a.pairs == b.pairs
    assert a.beta == b.beta


def test_schedule_odd_user_count(config, channels):
    import dataclasses

    from skynoma.channel import build_channel_set
    from skynoma.scenario import generate_topology

    cfg = dataclasses.replace(config, users_per_cell=5)
    ch = build_channel_set(generate_topology(cfg, seed=3), cfg, seed=3)
    asg = schedule_users(ch, cfg)
    sizes = sorted(len(asg.pairs.get((0, k), ())) for k in range(cfg.k_subchannels))
    assert sizes == [1, 2, 2]  # 5 users on 3 channels

    assert asg.subchannel_of(0, 0) is not None
    assert asg.subchannel_of(0, 99) is None
