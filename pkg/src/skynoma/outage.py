"""Outage-hardened SINR transform under imperfect CSI.

The decoder only knows the channel estimate, so a rate chosen from the
estimated SINR can exceed the instantaneous capacity.  To keep the outage
probability at eps_out, the rate target is backed off in two steps: the
own-signal power is replaced by its eps_out/2 quantile (exact, via the
conditional fading-power CDF), and the co-channel interference is replaced
by a Markov upper bound spending the remaining eps_out/2.  The resulting
deterministic SINR expression is what all EE objectives in this package
consume.
"""

from __future__ import annotations

from dataclasses import dataclass

from ._backend import kernels
from .errors import DomainError


def marcum_q1(a, b):
    """First-order Marcum Q function; see the kernel docstring for accuracy."""
    if a < 0 or b < 0:
        raise DomainError(f"marcum_q1 arguments must be >= 0, got a={a}, b={b}")
    return kernels.marcum_q1(float(a), float(b))


def fading_cdf(x, g_hat_mag2, sigma_e2):
    """P[|g|^2 <= x | g_hat]; degenerates to a step at |g_hat|^2 when sigma_e2=0."""
    if g_hat_mag2 < 0:
        raise DomainError(f"g_hat_mag2 must be >= 0, got {g_hat_mag2}")
    if not 0.0 <= sigma_e2 < 1.0:
        raise DomainError(f"sigma_e2 must be in [0, 1), got {sigma_e2}")
    return kernels.fading_cdf(float(x), float(g_hat_mag2), float(sigma_e2))


def fading_quantile(eps, g_hat_mag2, sigma_e2):
    """Inverse conditional fading-power CDF (bracketed bisection)."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must be in (0, 1), got {eps}")
    if g_hat_mag2 < 0:
        raise DomainError(f"g_hat_mag2 must be >= 0, got {g_hat_mag2}")
    if sigma_e2 <= 0.0:
        raise DomainError(
            f"fading_quantile requires sigma_e2 > 0, got {sigma_e2}; "
            "the distribution is a point mass at |g_hat|^2 otherwise"
        )
    if sigma_e2 >= 1.0:
        raise DomainError(f"sigma_e2 must be in (0, 1), got {sigma_e2}")
    return kernels.fading_quantile(float(eps), float(g_hat_mag2), float(sigma_e2))


@dataclass(frozen=True)
class OutageContext:
    """Per-link constants entering the outage-hardened SINR.

    theta = eps_out * (noise + macro interference power) at this user;
    psi   = PL^2 * (|g_hat|^2 + sigma_e2), the conditional mean of the true
    link power gain, which feeds the Markov interference bound.
    """

    eps_out: float
    g_hat_mag2: float
    sigma_e2: float
    pl_gain: float
    quantile: float  # fading-power quantile at eps_out / 2
    theta: float
    psi: float


def make_outage_context(pl_gain, g_hat_mag2, sigma_e2, eps_out, noise_plus_cross,
                        quantile=None) -> OutageContext:
    """Assemble an OutageContext; the quantile is computed unless supplied."""
    if quantile is None:
        if sigma_e2 > 0.0:
            quantile = fading_quantile(eps_out / 2.0, g_hat_mag2, sigma_e2)
        else:
            quantile = g_hat_mag2
    return OutageContext(
        eps_out=eps_out,
        g_hat_mag2=g_hat_mag2,
        sigma_e2=sigma_e2,
        pl_gain=pl_gain,
        quantile=quantile,
        theta=eps_out * noise_plus_cross,
        psi=pl_gain**2 * (g_hat_mag2 + sigma_e2),
    )


def markov_interference_bound(interference_powers, gains, threshold):
    """Markov bound on P[sum_j p_j * |H_j|^2 >= threshold].

    ``gains`` are the conditional mean power gains of the interfering
    signals at the receiver.  A non-positive threshold makes the bound
    vacuous and 1.0 is returned; values above 1 are likewise vacuous but
    still valid upper bounds and are returned as computed.
    """
    if threshold <= 0.0:
        return 1.0
    total = 0.0
    for p, g in zip(interference_powers, gains):
        total += p * g
    return total / threshold


def outage_sinr(p_self, interferer_powers, ctx: OutageContext):
    """Deterministic SINR whose rate target holds with probability 1 - eps_out.

        eps_out * Finv(eps_out/2) * p_self * PL^2
        -----------------------------------------
        theta + 2 * psi * sum(interferer_powers)

    With no interferers the eps_out factors cancel against theta and the
    expression reduces to Finv(eps_out/2) * p * PL^2 / (noise + cross).
    """
    if p_self < 0:
        raise DomainError(f"p_self must be >= 0, got {p_self}")
    inter = 0.0
    for p in interferer_powers:
        inter += p
    num = ctx.eps_out * ctx.quantile * p_self * ctx.pl_gain**2
    return num / (ctx.theta + 2.0 * ctx.psi * inter)
