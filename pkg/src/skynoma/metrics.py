"""Rate and energy-efficiency accounting.

Energy efficiency of one served user is (1 - eps_out) * R / (p_m + p),
where R is the rate target that survives outage with probability
1 - eps_out, p is the user's transmit power share and p_m the fixed
per-user hover/circuit power.  Totals sum this over every served user.

The per-subchannel evaluation is expressed through a small set of
"effective coefficients" (q1, d1, theta2, w2, q2) so that the exact same
algebra serves both CSI modes: with estimation error they come from the
outage-hardened transform; with perfect CSI they collapse to plain
estimated-channel SINRs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import DomainError
from .outage import OutageContext, make_outage_context
from .scenario import ScenarioConfig


def sic_sinr(powers_ordered, gains, cross_gain, noise, n):
    """SINR of the n-th user after SIC, strong-first (descending gain) order.

    A user decodes and removes the signals of every weaker user ordered
    after it, so residual interference comes only from the stronger users
    ordered before it.  Index 0 (the strongest user) is interference-free;
    the last user treats all earlier signals as noise.
    """
    if not 0 <= n < len(powers_ordered):
        raise DomainError(f"user index {n} outside 0..{len(powers_ordered) - 1}")
    interference = 0.0
    for j in range(n):
        interference += powers_ordered[j] * gains[n]
    return powers_ordered[n] * gains[n] / (cross_gain + interference + noise)


def achievable_rate(sinr, bandwidth_hz):
    """Shannon rate over one subchannel, bits/s."""
    if sinr < 0:
        raise DomainError(f"sinr must be >= 0, got {sinr}")
    return bandwidth_hz * math.log2(1.0 + sinr)


def user_ee(rate, eps_out, p_m, p_user):
    """Per-user energy efficiency (1 - eps_out) * rate / (p_m + p_user)."""
    denom = p_m + p_user
    if denom <= 0:
        raise DomainError(f"p_m + p_user must be > 0, got {denom}")
    return (1.0 - eps_out) * rate / denom


@dataclass(frozen=True)
class PairCoefficients:
    """Effective constants of one subchannel's EE terms (strong user first).

    Strong-user SINR:  q1 * beta1 * p / d1
    Weak-user SINR:    q2 * beta2 * p / (theta2 + w2 * beta1 * p)
    Single users use only (q1, d1).
    """

    q1: float
    d1: float
    theta2: float | None = None
    w2: float | None = None
    q2: float | None = None
    strong_ctx: OutageContext | None = None
    weak_ctx: OutageContext | None = None


def link_outage_context(channels: ChannelSet, config: ScenarioConfig, i, n, k):
    """OutageContext of one serving link, reusing the cached quantile."""
    noise_plus_cross = channels.noise_power + channels.p_macro_per_sc * float(
        channels.cross_bs[i, n, k]
    )
    return make_outage_context(
        pl_gain=float(channels.pl[i, n]),
        g_hat_mag2=float(np.abs(channels.g_hat[i, n, k]) ** 2),
        sigma_e2=channels.sigma_e2,
        eps_out=channels.eps_out,
        noise_plus_cross=noise_plus_cross,
        quantile=float(channels.quantile_half_eps[i, n, k]),
    )


def pair_coefficients(channels: ChannelSet, config: ScenarioConfig, i, k, users):
    """Effective EE coefficients for the users of subchannel (i, k).

    ``users`` must already be ordered strong-first by estimated gain.
    """
    eps = channels.eps_out
    s = users[0]
    d1 = channels.noise_power + channels.p_macro_per_sc * float(channels.cross_bs[i, s, k])
    if channels.sigma_e2 > 0.0:
        ctx_s = link_outage_context(channels, config, i, s, k)
        q1 = ctx_s.quantile * ctx_s.pl_gain**2
    else:
        ctx_s = None
        q1 = float(channels.h_hat_mag2[i, s, k])
    if len(users) == 1:
        return PairCoefficients(q1=q1, d1=d1, strong_ctx=ctx_s)
    w = users[1]
    dw = channels.noise_power + channels.p_macro_per_sc * float(channels.cross_bs[i, w, k])
    if channels.sigma_e2 > 0.0:
        ctx_w = link_outage_context(channels, config, i, w, k)
        theta2 = ctx_w.theta
        w2 = 2.0 * ctx_w.psi
        q2 = eps * ctx_w.quantile * ctx_w.pl_gain**2
    else:
        ctx_w = None
        h2 = float(channels.h_hat_mag2[i, w, k])
        theta2 = dw
        w2 = h2
        q2 = h2
    return PairCoefficients(
        q1=q1, d1=d1, theta2=theta2, w2=w2, q2=q2, strong_ctx=ctx_s, weak_ctx=ctx_w
    )


def subchannel_rates(coeff: PairCoefficients, beta1, p_sc, b_sc):
    """(sinr, rate) per user of one subchannel, strong-first order."""
    if coeff.theta2 is None:
        sinr = coeff.q1 * p_sc / coeff.d1
        return [(sinr, b_sc * math.log2(1.0 + sinr))]
    beta2 = 1.0 - beta1
    s1 = coeff.q1 * beta1 * p_sc / coeff.d1
    s2 = coeff.q2 * beta2 * p_sc / (coeff.theta2 + coeff.w2 * beta1 * p_sc)
    return [
        (s1, b_sc * math.log2(1.0 + s1)),
        (s2, b_sc * math.log2(1.0 + s2)),
    ]


@dataclass
class UserEE:
    uav: int
    subchannel: int
    user: int
    role: str  # "strong", "weak", or "single"
    sinr: float
    rate: float
    power: float
    ee: float


@dataclass
class EEReport:
    """Per-user and total energy efficiency of one allocation."""

    records: list[UserEE] = field(default_factory=list)
    total_ee: float = 0.0
    outage_factor: float = 1.0

    @property
    def per_user_ee(self):
        return [r.ee for r in self.records]

    @property
    def per_user_rate(self):
        return [r.rate for r in self.records]

    @property
    def per_user_sinr(self):
        return [r.sinr for r in self.records]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["uav", "subchannel", "user", "role", "sinr", "rate_bps", "power_w", "ee"]
            )
            for r in self.records:
                writer.writerow(
                    [r.uav, r.subchannel, r.user, r.role,
                     repr(r.sinr), repr(r.rate), repr(r.power), repr(r.ee)]
                )
            writer.writerow(["total", "", "", "", "", "", "", repr(self.total_ee)])


def total_ee(assignment, power, channels: ChannelSet, config: ScenarioConfig) -> EEReport:
    """Evaluate the full network allocation.

    ``assignment`` maps (uav, subchannel) to an ordered user tuple (strong
    first) plus per-pair power splits; ``power`` carries the per-subchannel
    transmit powers.  Unassigned subchannels contribute nothing.
    """
    p = np.asarray(power.p if hasattr(power, "p") else power, dtype=float)
    b_sc = config.subchannel_bandwidth_hz
    factor = config.outage_factor  # unity when CSI is perfect
    eps = 1.0 - factor
    report = EEReport(outage_factor=factor)
    total = 0.0
    for i in range(config.n_uavs):
        for k in range(config.k_subchannels):
            users = assignment.pairs.get((i, k), ())
            if not users:
                continue
            coeff = pair_coefficients(channels, config, i, k, users)
            p_sc = float(p[i, k])
            if len(users) == 1:
                beta1 = 1.0
                shares = [p_sc]
                roles = ["single"]
            else:
                beta1 = assignment.beta[(i, k)]
                shares = [beta1 * p_sc, (1.0 - beta1) * p_sc]
                roles = ["strong", "weak"]
            rates = subchannel_rates(coeff, beta1, p_sc, b_sc)
            for (sinr, rate), share, role, user in zip(rates, shares, roles, users):
                ee = user_ee(rate, eps, config.p_hover_w, share)
                total += ee
                report.records.append(
                    UserEE(uav=i, subchannel=k, user=int(user), role=role,
                           sinr=sinr, rate=rate, power=share, ee=ee)
                )
    report.total_ee = total
    return report
