"""Inter-subchannel power allocation by successive convex approximation.

The network objective sums per-user energy efficiencies over all assigned
subchannels; each term depends only on that subchannel's transmit power
(intra-pair splits stay fixed at the values found during matching).  Every
SCA round replaces each rate by the log-tangent lower bound

    log2(1 + z) >= a * log2(z) + b,   a = z0 / (1 + z0),

tight at the current operating point z0, and additionally linearises the
weak user's interference log around the current power so the bounded rate
is concave in p.  The bound direction makes each accepted round a
monotone ascent of the true objective.

The subproblem is handed to a sequential quadratic programming solver
over the feasible polytope: per-UAV sum-power budgets plus per-macro-user
received-interference caps on every subchannel.  A projected-gradient
ascent with a log-spaced step ladder backs it up, and the projection
itself uses a per-row capped-simplex fast path falling back to Dykstra's
alternating scheme when an interference cap is active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channel import ChannelSet
from .errors import DomainError
from .metrics import pair_coefficients
from .scenario import ScenarioConfig

_LN2 = math.log(2.0)
# tiny floor on assigned-subchannel powers keeps surrogate logs finite
_P_FLOOR = 1e-15


@dataclass
class PowerTerms:
    """Vectorised per-subchannel EE coefficients, shape (I, K) throughout."""

    active: np.ndarray   # subchannel serves at least one user
    is_pair: np.ndarray  # subchannel serves two users
    q1: np.ndarray
    d1: np.ndarray
    beta1: np.ndarray    # strong-user share of subchannel power (1 for singles)
    theta2: np.ndarray
    w2: np.ndarray
    q2: np.ndarray
    b_sc: float
    p_m: float
    one_minus_eps: float

    @property
    def beta2(self):
        return 1.0 - self.beta1


def build_power_terms(assignment, channels: ChannelSet,
                      config: ScenarioConfig) -> PowerTerms:
    shape = (config.n_uavs, config.k_subchannels)
    active = np.zeros(shape, dtype=bool)
    is_pair = np.zeros(shape, dtype=bool)
    q1 = np.zeros(shape)
    d1 = np.ones(shape)
    beta1 = np.ones(shape)
    theta2 = np.ones(shape)
    w2 = np.zeros(shape)
    q2 = np.zeros(shape)
    for (i, k), users in assignment.pairs.items():
        if not users:
            continue
        coeff = pair_coefficients(channels, config, i, k, users)
        active[i, k] = True
        q1[i, k] = coeff.q1
        d1[i, k] = coeff.d1
        if len(users) == 2:
            is_pair[i, k] = True
            beta1[i, k] = assignment.beta[(i, k)]
            theta2[i, k] = coeff.theta2
            w2[i, k] = coeff.w2
            q2[i, k] = coeff.q2
    return PowerTerms(
        active=active, is_pair=is_pair, q1=q1, d1=d1, beta1=beta1,
        theta2=theta2, w2=w2, q2=q2,
        b_sc=config.subchannel_bandwidth_hz,
        p_m=config.p_hover_w,
        one_minus_eps=config.outage_factor,
    )


def ee_power_objective(p, terms: PowerTerms, with_grad=False):
    """Total EE at subchannel powers ``p`` (I, K); optionally its gradient."""
    p = np.asarray(p, dtype=float)
    act, pair = terms.active, terms.is_pair
    c = terms.one_minus_eps * terms.b_sc
    b1, b2 = terms.beta1, terms.beta2

    zs = np.where(act, terms.q1 * b1 * p / terms.d1, 0.0)
    den_s = terms.p_m + b1 * p
    rate_s = np.log1p(zs) / _LN2
    ee_s = np.where(act, c * rate_s / den_s, 0.0)

    dw = terms.theta2 + terms.w2 * b1 * p
    zw = np.where(pair, terms.q2 * b2 * p / dw, 0.0)
    den_w = terms.p_m + b2 * p
    rate_w = np.log1p(zw) / _LN2
    ee_w = np.where(pair, c * rate_w / den_w, 0.0)

    z = float(ee_s.sum() + ee_w.sum())
    if not with_grad:
        return z

    a_s = terms.q1 * b1 / terms.d1
    g_s = c * (a_s / ((1.0 + zs) * _LN2) * den_s - b1 * rate_s) / den_s**2
    # d z_w / d p via quotient rule collapses to q2*b2*theta2 / dw^2
    dzw = terms.q2 * b2 * terms.theta2 / dw**2
    g_w = c * (dzw / ((1.0 + zw) * _LN2) * den_w - b2 * rate_w) / den_w**2
    grad = np.where(act, g_s, 0.0) + np.where(pair, g_w, 0.0)
    return z, grad


@dataclass
class SurrogateModel:
    """Concave minorant of the EE objective, tight at the anchor point."""

    terms: PowerTerms
    anchor: np.ndarray
    alpha_s: np.ndarray
    const_s: np.ndarray  # b + a * log2(q1 b1 / d1), folded per term
    alpha_w: np.ndarray
    const_w: np.ndarray  # b + a * (log2(q2 b2) - ell0 + slope * p0)
    slope_w: np.ndarray  # a * d/dp log2(theta2 + w2 b1 p) at anchor

    def value(self, p, total=True):
        t = self.terms
        p = np.asarray(p, dtype=float)
        lp = np.log2(np.maximum(p, _P_FLOOR))
        c = t.one_minus_eps * t.b_sc
        rs = np.where(t.active, self.alpha_s * lp + self.const_s, 0.0)
        vs = np.where(t.active, c * rs / (t.p_m + t.beta1 * p), 0.0)
        rw = np.where(t.is_pair,
                      self.alpha_w * lp - self.slope_w * p + self.const_w, 0.0)
        vw = np.where(t.is_pair, c * rw / (t.p_m + t.beta2 * p), 0.0)
        out = vs + vw
        return float(out.sum()) if total else out

    def grad(self, p):
        t = self.terms
        p = np.asarray(p, dtype=float)
        pc = np.maximum(p, _P_FLOOR)
        c = t.one_minus_eps * t.b_sc
        lp = np.log2(pc)
        den_s = t.p_m + t.beta1 * p
        rs = self.alpha_s * lp + self.const_s
        gs = c * ((self.alpha_s / (pc * _LN2)) * den_s - t.beta1 * rs) / den_s**2
        den_w = t.p_m + t.beta2 * p
        rw = self.alpha_w * lp - self.slope_w * p + self.const_w
        gw = c * ((self.alpha_w / (pc * _LN2) - self.slope_w) * den_w
                  - t.beta2 * rw) / den_w**2
        return np.where(t.active, gs, 0.0) + np.where(t.is_pair, gw, 0.0)


def sca_surrogate(p0, terms: PowerTerms) -> SurrogateModel:
    """Build the log-tangent minorant of the EE objective at ``p0``."""
    p0 = np.maximum(np.asarray(p0, dtype=float), _P_FLOOR)
    b1, b2 = terms.beta1, terms.beta2

    zs = np.where(terms.active, terms.q1 * b1 * p0 / terms.d1, 1.0)
    zs = np.maximum(zs, 1e-300)
    alpha_s = zs / (1.0 + zs)
    beta_s = np.log1p(zs) / _LN2 - alpha_s * np.log2(zs)
    with np.errstate(divide="ignore"):
        const_s = beta_s + alpha_s * np.log2(
            np.where(terms.active, terms.q1 * b1 / terms.d1, 1.0))

    dw0 = terms.theta2 + terms.w2 * b1 * p0
    zw = np.where(terms.is_pair, terms.q2 * b2 * p0 / dw0, 1.0)
    zw = np.maximum(zw, 1e-300)
    alpha_w = zw / (1.0 + zw)
    beta_w = np.log1p(zw) / _LN2 - alpha_w * np.log2(zw)
    ell0 = np.log2(dw0)
    slope = alpha_w * terms.w2 * b1 / (dw0 * _LN2)
    with np.errstate(divide="ignore"):
        const_w = beta_w + alpha_w * (
            np.log2(np.where(terms.is_pair, terms.q2 * b2, 1.0)) - ell0
        ) + slope * p0

    alpha_s = np.where(terms.active, alpha_s, 0.0)
    const_s = np.where(terms.active, const_s, 0.0)
    alpha_w = np.where(terms.is_pair, alpha_w, 0.0)
    const_w = np.where(terms.is_pair, const_w, 0.0)
    slope = np.where(terms.is_pair, slope, 0.0)
    return SurrogateModel(terms=terms, anchor=p0, alpha_s=alpha_s,
                          const_s=const_s, alpha_w=alpha_w,
                          const_w=const_w, slope_w=slope)


# ---------------------------------------------------------------------------
# feasible set


@dataclass
class PowerConstraints:
    """Per-UAV budgets and per-macro-user interference caps.

    Feasible set: p >= 0, sum_k p[i, k] <= p_row[i] for every UAV i, and
    gains[w, :, k] @ p[:, k] <= cap for every macro user w and channel k.
    Inactive subchannels are pinned to zero.
    """

    p_row: np.ndarray       # (I,)
    gains: np.ndarray       # (W, I, K) UAV -> macro-user power gains
    cap: float
    active: np.ndarray      # (I, K) bool
    floor: float = _P_FLOOR

    def interference(self, p):
        return np.einsum("wik,ik->wk", self.gains, p)

    def violation(self, p):
        row = np.maximum(p.sum(axis=1) - self.p_row, 0.0).max(initial=0.0)
        inter = np.maximum(self.interference(p) - self.cap, 0.0).max(initial=0.0)
        neg = np.maximum(-p, 0.0).max(initial=0.0)
        return max(row, inter / max(self.cap, 1e-300), neg)

    def is_feasible(self, p, rtol=1e-9):
        ok_row = np.all(p.sum(axis=1) <= self.p_row * (1.0 + rtol))
        ok_int = np.all(self.interference(p) <= self.cap * (1.0 + rtol))
        return bool(ok_row and ok_int and np.all(p >= 0.0))


def build_power_constraints(channels: ChannelSet, config: ScenarioConfig,
                            active) -> PowerConstraints:
    p_row = np.full(config.n_uavs, config.p_uav_max_w, dtype=float)
    return PowerConstraints(
        p_row=p_row,
        gains=np.asarray(channels.cross_uav_macro, dtype=float),
        cap=config.interference_cap_w,
        active=np.asarray(active, dtype=bool),
    )


def _project_row(x, cap, lo):
    """Project one row onto {p >= lo, sum p <= cap} (coordinates given)."""
    y = x - lo
    budget = cap - lo * len(x)
    w = np.maximum(y, 0.0)
    if w.sum() <= budget:
        return w + lo
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - budget
    ks = np.arange(1, len(y) + 1)
    rho = np.nonzero(u - css / ks > 0.0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(y - tau, 0.0) + lo


def _project_rows(p, cons: PowerConstraints):
    out = np.zeros_like(p)
    for i in range(p.shape[0]):
        mask = cons.active[i]
        if not mask.any():
            continue
        out[i, mask] = _project_row(p[i, mask], cons.p_row[i], cons.floor)
    return out


def _project_macro_halfspaces(p, gains_w, cap, nrm_w):
    """Project onto the product over k of {g[:, k] @ p[:, k] <= cap}."""
    load = np.einsum("ik,ik->k", gains_w, p)
    excess = load - cap
    if not (excess > 0.0).any():
        return p
    shift = np.where(excess > 0.0, excess, 0.0) / nrm_w
    return p - gains_w * shift[None, :]


def repair_scale(p, cons: PowerConstraints):
    """Shrink columns then rows so every constraint holds exactly.

    Both passes only multiply entries by factors <= 1 and all constraint
    coefficients are nonnegative, so one sweep of each suffices.
    """
    out = np.maximum(p, 0.0)
    out[~cons.active] = 0.0
    load = cons.interference(out)  # (W, K)
    with np.errstate(divide="ignore", invalid="ignore"):
        col_scale = np.where(load > cons.cap, cons.cap / load, 1.0)
    out *= col_scale.min(axis=0)[None, :]
    row = out.sum(axis=1)
    scale = np.where(row > cons.p_row, cons.p_row / np.maximum(row, 1e-300), 1.0)
    out *= scale[:, None]
    return out


def _dykstra(p, cons, members, max_cycles, tol):
    """Dykstra cycles over the row set plus the listed macro-user sets."""
    norms = [np.maximum(np.einsum("ik,ik->k", cons.gains[w], cons.gains[w]),
                        1e-300) for w in members]
    n_sets = 1 + len(members)
    incr = [np.zeros_like(p) for _ in range(n_sets)]
    x = p
    prev = None
    for _ in range(max_cycles):
        for s in range(n_sets):
            y = x + incr[s]
            if s == 0:
                x = _project_rows(y, cons)
            else:
                x = _project_macro_halfspaces(y, cons.gains[members[s - 1]],
                                              cons.cap, norms[s - 1])
            incr[s] = y - x
        if prev is not None and np.abs(x - prev).max() <= tol * max(1.0, np.abs(x).max()):
            break
        prev = x.copy()
    return x


def project_feasible(p, cons: PowerConstraints, max_cycles=120, tol=1e-12):
    """Euclidean projection onto the feasible polytope.

    The per-row capped-simplex projection alone is exact whenever the
    interference caps come out slack at its output (projecting onto a
    superset that lands inside the true set).  Otherwise run Dykstra over
    the row set and the halfspace-product sets of the macro users the row
    projection violates; a solution feasible for every omitted set is the
    projection onto the full intersection too, so omitted sets are only
    pulled in when the reduced solve leaves them violated.  Any residual
    cap violation is repaired by monotone shrinking.
    """
    p = np.asarray(p, dtype=float)
    q = _project_rows(p, cons)
    loads = cons.interference(q)  # (W, K)
    slack = cons.cap * (1.0 + 1e-12)
    if np.all(loads <= slack):
        return q

    start = p.copy()
    start[~cons.active] = 0.0
    members = list(np.nonzero((loads > slack).any(axis=1))[0])
    for _ in range(cons.gains.shape[0]):
        x = _dykstra(start, cons, members, max_cycles, tol)
        missing = np.nonzero((cons.interference(x) > slack).any(axis=1))[0]
        extra = [w for w in missing if w not in members]
        if not extra:
            break
        members.extend(extra)
    if not cons.is_feasible(x):
        x = repair_scale(x, cons)
    return x


# ---------------------------------------------------------------------------
# solvers


def solve_convex_subproblem(model, p0, cons: PowerConstraints,
                            max_inner=200, armijo=1e-4):
    """Maximise the surrogate over the polytope.

    Primary path: sequential quadratic programming on the active
    coordinates (the constraints are all linear, the objective smooth),
    with the objective normalised to unit scale and constraint rows to
    unit norm.  If that fails to improve, fall back to projected
    gradient ascent; gradient magnitudes span many decades across
    subchannels, so the fallback probes a log-spaced step ladder rather
    than trusting any single step scale.  Either way the returned point
    is feasible and its surrogate value never falls below the start's.
    """
    p = project_feasible(np.asarray(p0, dtype=float), cons)
    val = model.value(p)
    cand = _sqp_ascent(model, p, cons, max_inner)
    if cand is not None:
        cval = model.value(cand)
        if cval > val:
            return cand
    return _ladder_ascent(model, p, val, cons, max_inner, armijo)


def _sqp_ascent(model, p, cons: PowerConstraints, max_inner):
    act = np.nonzero(cons.active.ravel())[0]
    if act.size == 0:
        return None
    n_i, n_k = cons.active.shape
    rows = []
    rhs = []
    for i in range(n_i):
        e = np.zeros((n_i, n_k))
        e[i, :] = 1.0
        rows.append(e.ravel()[act])
        rhs.append(cons.p_row[i])
    for w in range(cons.gains.shape[0]):
        for k in range(n_k):
            e = np.zeros((n_i, n_k))
            e[:, k] = cons.gains[w, :, k]
            rows.append(e.ravel()[act])
            rhs.append(cons.cap)
    a_mat = np.asarray(rows)
    b_vec = np.asarray(rhs)
    norms = np.maximum(np.linalg.norm(a_mat, axis=1), 1e-300)
    a_mat /= norms[:, None]
    b_vec /= norms

    def unpack(x):
        full = np.zeros(n_i * n_k)
        full[act] = x
        return full.reshape(n_i, n_k)

    scale = max(abs(model.value(p)), 1.0)
    res = minimize(
        lambda x: -model.value(unpack(x)) / scale,
        p.ravel()[act],
        jac=lambda x: -model.grad(unpack(x)).ravel()[act] / scale,
        method="SLSQP",
        bounds=[(0.0, float(cons.p_row.max()))] * act.size,
        constraints=[{"type": "ineq", "fun": lambda x: b_vec - a_mat @ x,
                      "jac": lambda x: -a_mat}],
        options={"maxiter": max_inner, "ftol": 1e-14},
    )
    out = unpack(np.maximum(res.x, 0.0))
    if not cons.is_feasible(out, rtol=1e-9):
        out = project_feasible(out, cons)
    return out


def _ladder_ascent(model, p, val, cons: PowerConstraints, max_inner, armijo):
    move_cap = cons.p_row.max()

    def ladder(pt, g, vt):
        gmax = np.abs(g).max()
        if gmax <= 0.0:
            return 0.0, pt, vt
        s_unit = move_cap / gmax
        best = (0.0, pt, vt)
        for expo in np.linspace(-2.0, 8.0, 21):
            s = s_unit * 10.0 ** expo
            trial = project_feasible(pt + s * g, cons)
            tval = model.value(trial)
            if tval > best[2]:
                best = (s, trial, tval)
        return best

    g = model.grad(p)
    step, p, val = ladder(p, g, val)
    if step == 0.0:
        return p
    for _ in range(max_inner):
        g = model.grad(p)
        accepted = False
        cand = p
        cval = val
        for _bt in range(40):
            cand = project_feasible(p + step * g, cons)
            cval = model.value(cand)
            gain = float(np.sum(g * (cand - p)))
            if cval >= val + armijo * max(gain, 0.0) and cval > val:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            step, cand, cval = ladder(p, g, val)  # retry across scales
            if step == 0.0:
                break
        move = np.abs(cand - p).max()
        p, val = cand, cval
        step *= 2.0
        if move <= 1e-12 * max(1.0, np.abs(p).max()):
            break
    return p


@dataclass
class PowerResult:
    p: np.ndarray
    objective: float
    trace: list = field(default_factory=list)
    converged: bool = False
    iters: int = 0


def equal_split_power(terms: PowerTerms, cons: PowerConstraints,
                      config: ScenarioConfig):
    p = np.where(terms.active, config.p_uav_max_w / config.k_subchannels, 0.0)
    if not cons.is_feasible(p):
        p = project_feasible(p, cons)
    return p


def allocate_power(assignment, channels: ChannelSet, config: ScenarioConfig,
                   terms: PowerTerms | None = None,
                   tol: float | None = None,
                   max_iters: int | None = None) -> PowerResult:
    """SCA outer loop: minorise at the current point, maximise, repeat.

    Stops when the true-objective gain of a round drops to ``tol``
    (absolute, bit/J) or after ``max_iters`` rounds.  The minorant is
    tight at the anchor, so accepted rounds never decrease the true
    objective; a halving safeguard covers inexact subproblem solves.
    """
    if terms is None:
        terms = build_power_terms(assignment, channels, config)
    cons = build_power_constraints(channels, config, terms.active)
    tol = config.tol_power if tol is None else tol
    max_iters = config.max_iters if max_iters is None else max_iters

    p = equal_split_power(terms, cons, config)
    z = ee_power_objective(p, terms)
    result = PowerResult(p=p, objective=z, trace=[z])
    for t in range(max_iters):
        model = sca_surrogate(p, terms)
        cand = solve_convex_subproblem(model, p, cons)
        z_cand = ee_power_objective(cand, terms)
        halved = 0
        while z_cand < z and halved < 20:
            cand = 0.5 * (cand + p)
            z_cand = ee_power_objective(cand, terms)
            halved += 1
        if z_cand < z:
            cand, z_cand = p, z
        delta = z_cand - z
        p, z = cand, z_cand
        result.trace.append(z)
        result.iters = t + 1
        if delta <= tol:
            result.converged = True
            break
    result.p = p
    result.objective = z
    return result
