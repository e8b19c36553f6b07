"""Slow reference implementations used only for verification.

Everything here recomputes a quantity the library obtains analytically or
by a fast algorithm, through an independent route: direct quadrature for
the Marcum function, Monte Carlo for fading/outage probabilities, central
finite differences for gradients, and dense grids for small optimisation
problems.  Tests compare the two routes; nothing in the simulation path
imports this module.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate, special

from .errors import SizeGuardError
from .outage import OutageContext, outage_sinr


def marcum_q1_quad(a, b):
    """Marcum Q1 from its defining integral, exponentially-scaled Bessel."""
    if b <= 0.0:
        return 1.0

    def integrand(x):
        # x exp(-(x^2+a^2)/2) I0(ax) = x exp(-(x-a)^2/2) i0e(ax)
        return x * math.exp(-0.5 * (x - a) ** 2) * special.i0e(a * x)

    mid = max(b, a) + 40.0
    head, _ = integrate.quad(integrand, b, mid, limit=400)
    tail, _ = integrate.quad(integrand, mid, np.inf, limit=200)
    return min(1.0, max(0.0, head + tail))


def fading_cdf_mc(x, g_hat_mag2, sigma_e2, n_samples=200_000, seed=0):
    """P(|g_hat + e|^2 <= x) by direct simulation of the error term."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, 2))
    e = math.sqrt(sigma_e2 / 2.0) * (z[:, 0] + 1j * z[:, 1])
    mag2 = np.abs(math.sqrt(g_hat_mag2) + e) ** 2
    return float(np.mean(mag2 <= x))


def fading_quantile_mc(eps, g_hat_mag2, sigma_e2, n_samples=200_000, seed=0):
    """Empirical eps-quantile of the conditional fading power."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, 2))
    e = math.sqrt(sigma_e2 / 2.0) * (z[:, 0] + 1j * z[:, 1])
    mag2 = np.abs(math.sqrt(g_hat_mag2) + e) ** 2
    return float(np.quantile(mag2, eps))


def outage_mc(ctx: OutageContext, p_self, interferer_powers,
              n_samples=200_000, seed=0):
    """Empirical probability that the true SINR falls below the design value.

    The design SINR comes from the outage transform; the true SINR uses a
    fresh fading draw for the same link, with co-channel interference
    riding the same realisation.  The transform promises this frequency
    stays below eps_out.
    """
    s_eff = outage_sinr(p_self, interferer_powers, ctx)
    noise_cross = ctx.theta / ctx.eps_out
    inter = float(np.sum(np.asarray(interferer_powers, dtype=float)))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, 2))
    e = math.sqrt(ctx.sigma_e2 / 2.0) * (z[:, 0] + 1j * z[:, 1])
    x = ctx.pl_gain**2 * np.abs(math.sqrt(ctx.g_hat_mag2) + e) ** 2
    sinr_true = x * p_self / (noise_cross + x * inter)
    return float(np.mean(sinr_true < s_eff))


def fd_gradient(f, x, rel_step=1e-6):
    """Central-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    g = np.zeros_like(flat)
    for j in range(flat.size):
        h = rel_step * max(1.0, abs(flat[j]))
        xp = flat.copy()
        xm = flat.copy()
        xp[j] += h
        xm[j] -= h
        g[j] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2.0 * h)
    return g.reshape(x.shape)


def fd_derivative(f, x, rel_step=1e-6):
    """Central-difference derivative of a scalar function of a scalar."""
    h = rel_step * max(1.0, abs(x))
    return (f(x + h) - f(x - h)) / (2.0 * h)


def grid_max_scalar(f, lo, hi, n=2001):
    """Dense-grid maximiser of a scalar function on [lo, hi]."""
    xs = np.linspace(lo, hi, n)
    vals = [f(float(x)) for x in xs]
    j = int(np.argmax(vals))
    return float(xs[j]), float(vals[j])


def grid_max_power(objective, cons, p_max, n=51, max_dims=3):
    """Dense feasible-grid maximiser of the power objective.

    Enumerates a product grid over the active coordinates only; intended
    for tiny instances that sanity-check the SCA solution.
    """
    active = np.argwhere(cons.active)
    if len(active) > max_dims:
        raise SizeGuardError(
            f"grid search limited to {max_dims} active subchannels, "
            f"got {len(active)}")
    axis = np.linspace(0.0, p_max, n)
    best_p = np.zeros(cons.active.shape)
    best_v = -math.inf
    for combo in itertools.product(axis, repeat=len(active)):
        p = np.zeros(cons.active.shape)
        for (i, k), v in zip(active, combo):
            p[i, k] = v
        if not cons.is_feasible(p):
            continue
        v = objective(p)
        if v > best_v:
            best_v = v
            best_p = p
    return best_p, best_v
