"""Air-to-ground channel model and per-trial channel realizations.

UAV-to-user links combine an elevation-dependent LOS/NLOS path-loss mix
with a complex Gaussian small-scale term that is only imperfectly known at
the transmitter: the true coefficient is g = g_hat + e with independent
estimate g_hat ~ CN(0, 1 - sigma_e2) and error e ~ CN(0, sigma_e2).  The
channel amplitude is H = PL(d) * g, so link power gains carry PL(d)^2.

Cross-tier links (macro BS into UAV users, UAVs into macro users) use a
log-distance model anchored at the 1 m free-space gain, with unit-mean
Rayleigh-squared fading per subchannel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DomainError
from .scenario import ScenarioConfig, Topology


def elevation_angle(height_m, slant_distance_m):
    """Elevation angle in degrees seen from the ground node: arcsin(h/d)."""
    if height_m <= 0:
        raise DomainError(f"height_m must be > 0, got {height_m}")
    if slant_distance_m < height_m:
        raise DomainError(
            f"slant distance {slant_distance_m} shorter than height {height_m}"
        )
    return math.degrees(math.asin(height_m / slant_distance_m))


def los_probability(phi_deg, u, v, a_deg):
    """Sigmoid LOS probability 1 / (1 + u * exp(-v * (phi - A)))."""
    z = -v * (phi_deg - a_deg)
    if z > 700.0:  # exp would overflow; probability is numerically 0
        return 0.0
    return 1.0 / (1.0 + u * math.exp(z))


def path_loss(slant_distance_m, height_m, config: ScenarioConfig):
    """LOS/NLOS-mixed distance attenuation for a UAV-to-user link.

    PL(d) = P_LOS * d^-alpha + (1 - P_LOS) * eta * d^-alpha.
    """
    phi = elevation_angle(height_m, slant_distance_m)
    p_los = los_probability(phi, config.env_u, config.env_v, config.env_a)
    base = slant_distance_m ** (-config.alpha_pl)
    return p_los * base + (1.0 - p_los) * config.eta_nlos * base


def sample_fading(rng, sigma_e2, size=None):
    """Draw (g_hat, e, g): estimate, estimation error, and true coefficient.

    g_hat ~ CN(0, 1 - sigma_e2), e ~ CN(0, sigma_e2), g = g_hat + e.
    """
    s_hat = math.sqrt((1.0 - sigma_e2) / 2.0)
    s_err = math.sqrt(sigma_e2 / 2.0)
    if size is None:
        z = rng.standard_normal(4)
        g_hat = complex(s_hat * z[0], s_hat * z[1])
        e = complex(s_err * z[2], s_err * z[3])
        return g_hat, e, g_hat + e
    shape = (size,) if isinstance(size, int) else tuple(size)
    z = rng.standard_normal(shape + (4,))
    g_hat = s_hat * (z[..., 0] + 1j * z[..., 1])
    e = s_err * (z[..., 2] + 1j * z[..., 3])
    return g_hat, e, g_hat + e


def order_users(gains):
    """Indices sorting estimated channel gains ascending (stable on ties)."""
    return np.argsort(np.asarray(gains), kind="stable")


@dataclass
class LinkChannel:
    """One UAV-to-user link on one subchannel."""

    path_loss_gain: float
    g_hat: complex
    g_true: complex
    sigma_e2: float

    @property
    def h_hat_mag2(self) -> float:
        return self.path_loss_gain**2 * abs(self.g_hat) ** 2


@dataclass
class ChannelSet:
    """All per-trial channel state for one topology realization.

    Index convention: i = UAV, n = user within the UAV's cell, k = subchannel,
    w = macro user.
    """

    pl: np.ndarray  # (I, N) path-loss gain of serving links
    g_hat: np.ndarray  # (I, N, K) complex
    g_true: np.ndarray  # (I, N, K) complex
    h_hat_mag2: np.ndarray  # (I, N, K) = pl^2 * |g_hat|^2
    quantile_half_eps: np.ndarray  # (I, N, K) fading-power quantile at eps_out/2
    cross_bs: np.ndarray  # (I, N, K) macro BS -> UAV-user power gain
    cross_uav_macro: np.ndarray  # (W, I, K) UAV -> macro-user power gain
    noise_power: float
    p_macro_per_sc: float
    sigma_e2: float
    eps_out: float

    def link(self, i, n, k) -> LinkChannel:
        return LinkChannel(
            path_loss_gain=float(self.pl[i, n]),
            g_hat=complex(self.g_hat[i, n, k]),
            g_true=complex(self.g_true[i, n, k]),
            sigma_e2=self.sigma_e2,
        )

    def dump_csv(self, path):
        """Write the serving-link table (one row per UAV/user/subchannel)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["uav", "user", "subchannel", "path_loss_gain", "g_hat_re",
                 "g_hat_im", "g_true_re", "g_true_im", "h_hat_mag2", "cross_bs"]
            )
            n_uav, n_user, n_sc = self.g_hat.shape
            for i in range(n_uav):
                for n in range(n_user):
                    for k in range(n_sc):
                        writer.writerow(
                            [i, n, k,
                             repr(float(self.pl[i, n])),
                             repr(float(self.g_hat[i, n, k].real)),
                             repr(float(self.g_hat[i, n, k].imag)),
                             repr(float(self.g_true[i, n, k].real)),
                             repr(float(self.g_true[i, n, k].imag)),
                             repr(float(self.h_hat_mag2[i, n, k])),
                             repr(float(self.cross_bs[i, n, k]))]
                        )


def macro_link_gain(distances, fading, config: ScenarioConfig):
    """Cross-tier power gain: 1 m free-space anchor, log-distance, fading."""
    d = np.maximum(np.asarray(distances, dtype=float), 1.0)
    return config.macro_ref_gain * d ** (-config.macro_pl_exponent) * fading


def build_channel_set(topology: Topology, config: ScenarioConfig, seed: int) -> ChannelSet:
    """Sample every link's fading and assemble derived gain tables."""
    rng = np.random.default_rng([int(seed), 1])
    n_uav = config.n_uavs
    n_user = config.users_per_cell
    n_sc = config.k_subchannels
    n_macro = config.n_macro_users

    pl = np.empty((n_uav, n_user))
    for i in range(n_uav):
        for n in range(n_user):
            pl[i, n] = path_loss(
                float(topology.distances[i, n]), config.uav_height_m, config
            )

    g_hat, _, g_true = sample_fading(rng, config.sigma_e2, size=(n_uav, n_user, n_sc))
    h_hat_mag2 = (pl[:, :, None] ** 2) * np.abs(g_hat) ** 2

    quant = np.empty_like(h_hat_mag2)
    half_eps = config.eps_out / 2.0
    if config.sigma_e2 > 0.0:
        flat_g = np.abs(g_hat.reshape(-1)) ** 2
        out = np.empty(flat_g.shape[0])
        for idx in range(flat_g.shape[0]):
            out[idx] = kernels.fading_quantile(half_eps, float(flat_g[idx]), config.sigma_e2)
        quant = out.reshape(h_hat_mag2.shape)
    else:
        quant = np.abs(g_hat) ** 2  # point mass: every quantile sits at |g_hat|^2

    # macro BS -> UAV users (BS at origin, users on the ground)
    d_bs = np.linalg.norm(topology.uav_user_positions[:, :, :2], axis=-1)
    fade_bs = rng.exponential(1.0, size=(n_uav, n_user, n_sc))
    cross_bs = macro_link_gain(d_bs[:, :, None], fade_bs, config)

    # UAVs -> macro users (slant paths)
    diff = topology.macro_user_positions[:, None, :] - topology.uav_positions[None, :, :]
    d_um = np.linalg.norm(diff, axis=-1)
    fade_um = rng.exponential(1.0, size=(n_macro, n_uav, n_sc))
    cross_um = macro_link_gain(d_um[:, :, None], fade_um, config)

    return ChannelSet(
        pl=pl,
        g_hat=g_hat,
        g_true=g_true,
        h_hat_mag2=h_hat_mag2,
        quantile_half_eps=quant,
        cross_bs=cross_bs,
        cross_uav_macro=cross_um,
        noise_power=config.noise_power_w,
        p_macro_per_sc=config.p_macro_per_sc_w,
        sigma_e2=config.sigma_e2,
        eps_out=config.eps_out,
    )
