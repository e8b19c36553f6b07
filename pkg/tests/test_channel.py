import csv
import math

import numpy as np
import pytest

from skynoma.channel import (
    build_channel_set,
    elevation_angle,
    los_probability,
    macro_link_gain,
    order_users,
    path_loss,
    sample_fading,
)
from skynoma.errors import DomainError


def test_elevation_angle():
    assert elevation_angle(100.0, 100.0) == pytest.approx(90.0)
    assert elevation_angle(100.0, 200.0) == pytest.approx(30.0)
    with pytest.raises(DomainError):
        elevation_angle(100.0, 50.0)
    with pytest.raises(DomainError):
        elevation_angle(0.0, 50.0)


def test_los_probability_monotone(config):
    phis = np.linspace(1.0, 90.0, 50)
    p = [los_probability(phi, config.env_u, config.env_v, config.env_a) for phi in phis]
    assert all(0.0 <= x <= 1.0 for x in p)
    assert np.all(np.diff(p) > 0)
    # at phi = A the sigmoid is exactly 1/(1+u)
    assert los_probability(config.env_a, config.env_u, config.env_v, config.env_a) \
        == pytest.approx(1.0 / (1.0 + config.env_u))
    assert los_probability(-1e5, config.env_u, config.env_v, config.env_a) == 0.0


def test_path_loss_bracketed_by_pure_los_nlos(config):
    h = config.uav_height_m
    for d in (h, 1.5 * h, 4.0 * h):
        pl = path_loss(d, h, config)
        base = d ** (-config.alpha_pl)
        assert config.eta_nlos * base < pl < base


def test_sample_fading_moments():
    rng = np.random.default_rng(0)
    g_hat, e, g = sample_fading(rng, 0.2, size=200_000)
    assert g.shape == (200_000,)
    assert np.mean(np.abs(g_hat) ** 2) == pytest.approx(0.8, rel=0.01)
    assert np.mean(np.abs(e) ** 2) == pytest.approx(0.2, rel=0.01)
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, rel=0.01)
    np.testing.assert_allclose(g, g_hat + e)
    # perfect CSI degenerates to zero error
    _, e0, _ = sample_fading(rng, 0.0, size=100)
    assert np.all(e0 == 0)


def test_order_users_stable():
    assert list(order_users([3.0, 1.0, 2.0])) == [1, 2, 0]
    assert list(order_users([1.0, 1.0, 0.5])) == [2, 0, 1]


def test_channel_set_shapes(config, channels):
    i, n, k = config.n_uavs, config.users_per_cell, config.k_subchannels
    w = config.n_macro_users
    assert channels.g_hat.shape == (i, n, k)
    assert channels.cross_bs.shape == (i, n, k)
    assert channels.cross_uav_macro.shape == (w, i, k)
    assert np.all(channels.pl > 0)
    np.testing.assert_allclose(
        channels.h_hat_mag2,
        channels.pl[:, :, None] ** 2 * np.abs(channels.g_hat) ** 2,
        rtol=1e-12,
    )
    assert channels.noise_power == pytest.approx(config.noise_power_w)


def test_channel_set_deterministic(config):
    from skynoma.scenario import generate_topology

    topo = generate_topology(config, seed=5)
    a = build_channel_set(topo, config, seed=5)
    b = build_channel_set(topo, config, seed=5)
    c = build_channel_set(topo, config, seed=6)
    assert np.array_equal(a.g_true, b.g_true)
    assert not np.array_equal(a.g_true, c.g_true)


def test_link_accessor(channels):
    link = channels.link(0, 1, 2)
    assert link.path_loss_gain == channels.pl[0, 1]
    assert link.g_hat == complex(channels.g_hat[0, 1, 2])
    assert link.h_hat_mag2 == pytest.approx(channels.h_hat_mag2[0, 1, 2])


def test_macro_link_gain_anchor(config):
    # below 1 m the log-distance law is clamped to its reference gain
    near = macro_link_gain(0.5, 1.0, config)
    assert near == pytest.approx(config.macro_ref_gain)
    far = macro_link_gain(100.0, 1.0, config)
    assert far == pytest.approx(config.macro_ref_gain * 100.0 ** -config.macro_pl_exponent)
    assert macro_link_gain(100.0, 2.0, config) == pytest.approx(2 * far)


def test_dump_csv(tmp_path, config, channels):
    path = tmp_path / "links.csv"
    channels.dump_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:4] == ["uav", "user", "subchannel", "path_loss_gain"]
    assert len(rows) == 1 + config.n_uavs * config.users_per_cell * config.k_subchannels
    # repr round trip keeps full precision
    i, n, k = map(int, rows[1][:3])
    assert float(rows[1][8]) == channels.h_hat_mag2[i, n, k]
