"""Scenario configuration and random network topology.

One macro base station at the origin serves legacy users inside a large
disk; several UAV small cells sit inside the macro area, each serving its
own users on shared spectrum.  The configuration is a flat record of scalar
parameters; topology generation is the only randomness here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError

# Sigmoid LOS-probability constants (u, v, A-degrees) for common deployment
# environments.  External defaults; tune per deployment if measurements exist.
ENV_PRESETS = {
    "suburban": (4.88, 0.43, 4.88),
    "urban": (9.61, 0.16, 9.61),
    "dense-urban": (12.08, 0.11, 12.08),
    "highrise": (27.23, 0.08, 27.23),
}

_SPEED_OF_LIGHT = 299792458.0


@dataclass
class ScenarioConfig:
    # geometry
    macro_radius_m: float = 1000.0
    n_macro_users: int = 20
    n_uavs: int = 4
    uav_cell_radius_m: float = 350.0
    uav_height_m: float = 200.0
    min_bs_uav_distance_m: float = 50.0
    users_per_cell: int = 10
    # spectrum
    carrier_ghz: float = 2.0
    bandwidth_hz: float = 10e6
    n_subchannels: int | None = None  # default: ceil(users_per_cell / 2)
    noise_psd_dbm_hz: float = -174.0
    # power
    p_uav_max_w: float = 5.0
    p_hover_w: float = 0.5  # fixed per-user circuit/hover power term
    p_bs_max_w: float = 20.0
    interference_cap_w: float = 1e-12  # per-subchannel cap at each macro user
    # CSI / outage
    eps_out: float = 0.05
    sigma_e2: float = 0.05
    # air-to-ground channel (dense-urban preset by default)
    env_u: float = 12.08
    env_v: float = 0.11
    env_a: float = 12.08
    alpha_pl: float = 2.0
    eta_nlos: float = 0.01
    # macro-tier log-distance model
    macro_pl_exponent: float = 3.5
    # baseline knob
    ftpa_decay: float = 0.4
    # solver tolerances / budgets
    tol_dc: float = 0.01
    tol_power: float = 0.01
    max_iters: int = 50
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        positive = [
            "macro_radius_m",
            "n_macro_users",
            "n_uavs",
            "uav_cell_radius_m",
            "uav_height_m",
            "users_per_cell",
            "carrier_ghz",
            "bandwidth_hz",
            "p_uav_max_w",
            "p_hover_w",
            "p_bs_max_w",
            "env_u",
            "env_v",
            "alpha_pl",
            "macro_pl_exponent",
            "tol_dc",
            "tol_power",
            "max_iters",
        ]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.min_bs_uav_distance_m < 0:
            raise ConfigError(
                f"min_bs_uav_distance_m must be >= 0, got {self.min_bs_uav_distance_m}"
            )
        if self.min_bs_uav_distance_m >= self.macro_radius_m:
            raise ConfigError(
                "min_bs_uav_distance_m must be < macro_radius_m, got "
                f"{self.min_bs_uav_distance_m} >= {self.macro_radius_m}"
            )
        if self.interference_cap_w < 0:
            raise ConfigError(
                f"interference_cap_w must be >= 0, got {self.interference_cap_w}"
            )
        if not 0.0 < self.eps_out < 1.0:
            raise ConfigError(f"eps_out must be in (0, 1), got {self.eps_out}")
        if not 0.0 <= self.sigma_e2 < 1.0:
            raise ConfigError(f"sigma_e2 must be in [0, 1), got {self.sigma_e2}")
        if not 0.0 < self.eta_nlos <= 1.0:
            raise ConfigError(f"eta_nlos must be in (0, 1], got {self.eta_nlos}")
        if self.ftpa_decay < 0:
            raise ConfigError(f"ftpa_decay must be >= 0, got {self.ftpa_decay}")
        if self.n_subchannels is not None and self.n_subchannels < 1:
            raise ConfigError(
                f"n_subchannels must be >= 1 when given, got {self.n_subchannels}"
            )

    # derived quantities -------------------------------------------------

    @property
    def k_subchannels(self) -> int:
        if self.n_subchannels is not None:
            return self.n_subchannels
        return (self.users_per_cell + 1) // 2

    @property
    def subchannel_bandwidth_hz(self) -> float:
        return self.bandwidth_hz / self.k_subchannels

    @property
    def noise_power_w(self) -> float:
        """Per-subchannel thermal noise: (BW/K) * N0, dBm/Hz to watts."""
        n0 = 10.0 ** ((self.noise_psd_dbm_hz - 30.0) / 10.0)
        return self.subchannel_bandwidth_hz * n0

    @property
    def p_macro_per_sc_w(self) -> float:
        """Macro BS transmit power per subchannel (equal split)."""
        return self.p_bs_max_w / self.k_subchannels

    @property
    def outage_factor(self) -> float:
        """Goodput discount (1 - eps_out); unity when CSI is perfect.

        With sigma_e2 = 0 the rate targets are always met, so no outage
        discount applies.  A uniform scale never changes any argmax, only
        the reported EE level.
        """
        if self.sigma_e2 == 0.0:
            return 1.0
        return 1.0 - self.eps_out

    @property
    def macro_ref_gain(self) -> float:
        """Free-space power gain at 1 m for the macro-tier log-distance model."""
        lam = _SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
        return (lam / (4.0 * math.pi)) ** 2


def load_config(path) -> ScenarioConfig:
    """Read a flat ``key = value`` file into a ScenarioConfig.

    Blank lines and ``#`` comments are ignored.  Unknown keys and malformed
    values raise ConfigError naming the offending key.
    """
    known = {f.name for f in fields(ScenarioConfig)}
    int_keys = {
        "n_macro_users",
        "n_uavs",
        "users_per_cell",
        "n_subchannels",
        "max_iters",
        "seed",
    }
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key == "n_subchannels" and val.lower() == "none":
                values[key] = None
            elif key in int_keys:
                values[key] = int(val)
            else:
                values[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {val!r}") from exc
    return ScenarioConfig(**values)


@dataclass
class Topology:
    """Node positions (meters, BS at the origin) and serving-link geometry."""

    bs_position: np.ndarray  # (3,)
    uav_positions: np.ndarray  # (I, 3)
    uav_user_positions: np.ndarray  # (I, N, 3), ground users of each UAV
    macro_user_positions: np.ndarray  # (W, 3)
    distances: np.ndarray  # (I, N) slant UAV -> own user
    elevations_deg: np.ndarray  # (I, N)


def _uniform_disk(rng, n, radius, center=(0.0, 0.0)):
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    return np.stack(
        [center[0] + r * np.cos(phi), center[1] + r * np.sin(phi)], axis=-1
    )


def generate_topology(config: ScenarioConfig, seed: int) -> Topology:
    """Draw one random network layout.

    Macro users are uniform in the macro disk; UAVs are uniform in the
    annulus between the BS stand-off distance and the macro radius; each
    UAV's users are uniform in its ground-projected cell disk.
    """
    rng = np.random.default_rng([int(seed), 0])
    w = config.n_macro_users
    i_uav = config.n_uavs
    n = config.users_per_cell

    macro_xy = _uniform_disk(rng, w, config.macro_radius_m)
    macro = np.concatenate([macro_xy, np.zeros((w, 1))], axis=1)

    r_min = config.min_bs_uav_distance_m
    r_max = config.macro_radius_m
    r = np.sqrt(r_min**2 + rng.random(i_uav) * (r_max**2 - r_min**2))
    phi = 2.0 * np.pi * rng.random(i_uav)
    uav = np.stack(
        [
            r * np.cos(phi),
            r * np.sin(phi),
            np.full(i_uav, config.uav_height_m),
        ],
        axis=-1,
    )

    users = np.empty((i_uav, n, 3))
    for i in range(i_uav):
        xy = _uniform_disk(rng, n, config.uav_cell_radius_m, center=uav[i, :2])
        users[i, :, :2] = xy
        users[i, :, 2] = 0.0

    horiz = np.linalg.norm(users[:, :, :2] - uav[:, None, :2], axis=-1)
    dist = np.sqrt(horiz**2 + config.uav_height_m**2)
    dist = np.maximum(dist, 1.0)  # clamp degenerate co-located draws
    elev = np.degrees(np.arcsin(np.clip(config.uav_height_m / dist, -1.0, 1.0)))

    return Topology(
        bs_position=np.zeros(3),
        uav_positions=uav,
        uav_user_positions=users,
        macro_user_positions=macro,
        distances=dist,
        elevations_deg=elev,
    )
