"""Pure-Python scalar kernels.

Reference implementations of the hot numeric paths: the first-order Marcum Q
function, the conditional fading-power distribution built on it, and the
difference-of-convex (DC) search for the in-subchannel power split.  The
compiled extension ``skynoma._core`` mirrors this module function-for-function;
``skynoma._backend`` picks whichever is available at import time.

Only ``math`` is used here so the module stays dependency-free and easy to
transliterate to C.
"""

import math

_LN2 = math.log(2.0)
_MARGIN = 1e-6  # open-interval guard for the power-split variable
_GOLD = 0.6180339887498949  # (sqrt(5)-1)/2
_GOLDEN_TOL = 1e-8
_SCAN_POINTS = 33


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b).

    Evaluated through the Poisson-mixture form

        Q1(a, b) = sum_k pois(k; a^2/2) * P[Pois(b^2/2) <= k]

    with all-positive terms.  The outer sum is truncated to the window
    ``a^2/2 +- (9*sqrt(a^2/2) + 26)``; the omitted Poisson mass is below
    1e-16 on each side and the inner factor is bounded by 1, so the
    truncation error is below 1e-15 absolute.  Window terms are seeded via
    ``lgamma`` and advanced by stable two-term recurrences, keeping the
    absolute error under 1e-10 across the whole domain used here.
    """
    if b <= 0.0:
        return 1.0
    if a <= 0.0:
        return math.exp(-0.5 * b * b)
    alpha = 0.5 * a * a
    beta = 0.5 * b * b
    if alpha > 1e8:
        # Numerically a point mass at this scale; Gaussian limit of the
        # noncentral chi-square is exact to ~1/sqrt(alpha) which is finer
        # than double precision resolves on the CDF flanks.
        z = (alpha + 1.0 - beta) / math.sqrt(2.0 * alpha + 1.0)
        return 0.5 * math.erfc(-z / math.sqrt(2.0))

    half = 9.0 * math.sqrt(alpha) + 26.0
    klo = int(alpha - half)
    if klo < 0:
        klo = 0
    khi = int(alpha + half) + 1

    if klo == 0:
        pa = math.exp(-alpha)
        pb = math.exp(-beta)
        g = pb
    else:
        pa = math.exp(-alpha + klo * math.log(alpha) - math.lgamma(klo + 1.0))
        if klo >= beta + 9.0 * math.sqrt(beta) + 26.0:
            # Poisson(beta) mass above klo is < 1e-16: inner CDF saturated.
            pb = 0.0
            g = 1.0
        else:
            pb = math.exp(-beta + klo * math.log(beta) - math.lgamma(klo + 1.0))
            g = pb
            t = pb
            j = klo
            while j >= 1:
                t *= j / beta
                g += t
                if t < 1e-20 and j < beta:
                    break
                j -= 1

    s = 0.0
    k = klo
    while k <= khi:
        s += pa * g
        k += 1
        pa *= alpha / k
        pb *= beta / k
        g += pb
        if g > 1.0:
            g = 1.0
    if s > 1.0:
        return 1.0
    if s < 0.0:
        return 0.0
    return s


def fading_cdf(x, g_hat_mag2, sigma_e2):
    """CDF of the true fading power |g|^2 conditioned on the estimate.

    Given g = g_hat + e with e ~ CN(0, sigma_e2), the conditional law of
    |g|^2 is noncentral chi-square (2 dof, noncentrality |g_hat|^2):

        F(x) = 1 - Q1(sqrt(2*|g_hat|^2/sigma_e2), sqrt(2*x/sigma_e2))

    For sigma_e2 == 0 the distribution degenerates to a step at |g_hat|^2.
    """
    if x <= 0.0:
        return 0.0
    if sigma_e2 <= 0.0:
        return 1.0 if x >= g_hat_mag2 else 0.0
    a = math.sqrt(2.0 * g_hat_mag2 / sigma_e2)
    b = math.sqrt(2.0 * x / sigma_e2)
    return 1.0 - marcum_q1(a, b)


def fading_quantile(eps, g_hat_mag2, sigma_e2):
    """Inverse of ``fading_cdf`` in its first argument, by bracketed bisection.

    Returns x with fading_cdf(x) = eps; the bracket is halved until its
    width falls below 1e-13 * max(1, x).
    """
    hi = g_hat_mag2 + sigma_e2
    if hi <= 0.0:
        hi = sigma_e2
    while fading_cdf(hi, g_hat_mag2, sigma_e2) < eps:
        hi *= 2.0
    lo = 0.0
    tol_ref = hi if hi > 1.0 else 1.0
    while hi - lo > 1e-13 * tol_ref:
        mid = 0.5 * (lo + hi)
        if fading_cdf(mid, g_hat_mag2, sigma_e2) < eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def single_ee(p, q1, d1, p_m, b_sc, one_minus_eps):
    """EE of a subchannel carrying one user at full subchannel power."""
    rate = b_sc * math.log2(1.0 + q1 * p / d1)
    return one_minus_eps * rate / (p_m + p)


def pair_ee(beta1, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc, one_minus_eps):
    """EE of a two-user subchannel at power split beta1 (strong-user share).

    The strong user decodes and removes the weak user's signal, so its term
    is interference-free; the weak user sees the strong user's power through
    the outage-hardened denominator theta2 + w2*beta1*p_sc.
    """
    beta2 = 1.0 - beta1
    rs = b_sc * math.log2(1.0 + q1 * beta1 * p_sc / d1)
    rw = b_sc * math.log2(1.0 + q2 * beta2 * p_sc / (theta2 + w2 * beta1 * p_sc))
    return one_minus_eps * (rs / (p_m + beta1 * p_sc) + rw / (p_m + beta2 * p_sc))


def dc_f1(beta1, q1, d1, theta2, w2, p_sc, p_m, b_sc):
    """First part of the DC split of the negated per-subchannel EE."""
    beta2 = 1.0 - beta1
    t_strong = b_sc * math.log2(1.0 + q1 * beta1 * p_sc / d1) / (p_m + beta1 * p_sc)
    t_weak = b_sc * math.log2(theta2 + w2 * beta1 * p_sc) / (p_m + beta2 * p_sc)
    return t_weak - t_strong


def dc_f2(beta1, theta2, w2, q2, p_sc, p_m, b_sc):
    """Second (linearized) part of the DC split.

    The argument collects the weak user's combined numerator:
    (w2 - q2)*beta1*p_sc + theta2 + q2*p_sc.
    """
    c = w2 - q2
    delta = theta2 + q2 * p_sc
    return b_sc * math.log2(c * beta1 * p_sc + delta) / (p_m + (1.0 - beta1) * p_sc)


def dc_grad_f2(beta1, theta2, w2, q2, p_sc, p_m, b_sc):
    """Derivative of ``dc_f2`` in beta1 (quotient rule)."""
    c = w2 - q2
    delta = theta2 + q2 * p_sc
    u = c * beta1 * p_sc + delta
    d = p_m + (1.0 - beta1) * p_sc
    return b_sc * (c * p_sc / (u * d * _LN2) + p_sc * math.log2(u) / (d * d))


def _dc_objective(beta1, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc):
    return dc_f1(beta1, q1, d1, theta2, w2, p_sc, p_m, b_sc) - dc_f2(
        beta1, theta2, w2, q2, p_sc, p_m, b_sc
    )


def _dc_inner_argmin(q1, d1, theta2, w2, p_sc, p_m, b_sc, slope):
    """Global minimizer of the linearized surrogate f1(beta) - slope*beta.

    Coarse scan over the open interval, then golden-section refinement of
    the bracketing cell; the scan keeps the search robust when the surrogate
    is not unimodal.
    """
    lo = _MARGIN
    hi = 1.0 - _MARGIN
    step = (hi - lo) / (_SCAN_POINTS - 1)
    best_i = 0
    best_v = math.inf
    for i in range(_SCAN_POINTS):
        x = lo + step * i
        v = dc_f1(x, q1, d1, theta2, w2, p_sc, p_m, b_sc) - slope * x
        if v < best_v:
            best_v = v
            best_i = i
    a = lo + step * (best_i - 1)
    if a < lo:
        a = lo
    b = lo + step * (best_i + 1)
    if b > hi:
        b = hi
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    v1 = dc_f1(x1, q1, d1, theta2, w2, p_sc, p_m, b_sc) - slope * x1
    v2 = dc_f1(x2, q1, d1, theta2, w2, p_sc, p_m, b_sc) - slope * x2
    while b - a > _GOLDEN_TOL:
        if v1 <= v2:
            b = x2
            x2 = x1
            v2 = v1
            x1 = b - _GOLD * (b - a)
            v1 = dc_f1(x1, q1, d1, theta2, w2, p_sc, p_m, b_sc) - slope * x1
        else:
            a = x1
            x1 = x2
            v1 = v2
            x2 = a + _GOLD * (b - a)
            v2 = dc_f1(x2, q1, d1, theta2, w2, p_sc, p_m, b_sc) - slope * x2
    x = 0.5 * (a + b)
    v = dc_f1(x, q1, d1, theta2, w2, p_sc, p_m, b_sc) - slope * x
    if best_v < v:
        return lo + step * best_i
    return x


def _dc_best_true(q1, d1, theta2, w2, q2, p_sc, p_m, b_sc):
    """Scan + golden refinement on the true DC objective.

    Fallback move for iterates where the linearized step yields no descent
    (the split's second part is not convex in every parameter regime, so
    the surrogate is not always a majorant).
    """
    lo = _MARGIN
    hi = 1.0 - _MARGIN
    step = (hi - lo) / (_SCAN_POINTS - 1)
    best_i = 0
    best_v = math.inf
    for i in range(_SCAN_POINTS):
        x = lo + step * i
        v = _dc_objective(x, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
        if v < best_v:
            best_v = v
            best_i = i
    a = max(lo, lo + step * (best_i - 1))
    b = min(hi, lo + step * (best_i + 1))
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    v1 = _dc_objective(x1, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    v2 = _dc_objective(x2, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    while b - a > _GOLDEN_TOL:
        if v1 <= v2:
            b, x2, v2 = x2, x1, v1
            x1 = b - _GOLD * (b - a)
            v1 = _dc_objective(x1, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
        else:
            a, x1, v1 = x1, x2, v2
            x2 = a + _GOLD * (b - a)
            v2 = _dc_objective(x2, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    x = 0.5 * (a + b)
    v = _dc_objective(x, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    if best_v < v:
        return lo + step * best_i, best_v
    return x, v


def _dc_optimize_impl(
    q1, d1, theta2, w2, q2, p_sc, p_m, b_sc, delta_tol, max_iters, trace
):
    beta = 0.5
    f_cur = _dc_objective(beta, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    if trace is not None:
        trace.append(f_cur)
    converged = False
    iters = 0
    for _ in range(max_iters):
        iters += 1
        slope = dc_grad_f2(beta, theta2, w2, q2, p_sc, p_m, b_sc)
        cand = _dc_inner_argmin(q1, d1, theta2, w2, p_sc, p_m, b_sc, slope)
        f_cand = _dc_objective(cand, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
        tries = 0
        while f_cand >= f_cur and tries < 20 and abs(cand - beta) > 1e-12:
            cand = beta + 0.5 * (cand - beta)
            f_cand = _dc_objective(cand, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
            tries += 1
        if f_cand >= f_cur:
            cand, f_cand = _dc_best_true(q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
            if f_cand >= f_cur:
                converged = True
                break
        df = f_cur - f_cand
        beta = cand
        f_cur = f_cand
        if trace is not None:
            trace.append(f_cur)
        if df <= delta_tol:
            converged = True
            break
    return beta, f_cur, converged, iters


def dc_optimize_beta(
    q1, d1, theta2, w2, q2, p_sc, p_m, b_sc, one_minus_eps, delta_tol, max_iters
):
    """Iterative DC search for the EE-optimal strong-user power share.

    Starts from 0.5, repeatedly minimizes the surrogate obtained by
    linearizing the second DC part at the current iterate, and accepts a
    candidate only if the true objective decreases (halving toward the
    current point otherwise; a direct scan descent of the objective covers
    iterates where the linearized step stalls).  Stops when the objective
    decrease falls to ``delta_tol`` or no descent step exists.

    Returns (beta, ee, converged, iterations).
    """
    beta, f_cur, converged, iters = _dc_optimize_impl(
        q1, d1, theta2, w2, q2, p_sc, p_m, b_sc, delta_tol, max_iters, None
    )
    return beta, -one_minus_eps * f_cur, converged, iters


def dc_optimize_beta_trace(
    q1, d1, theta2, w2, q2, p_sc, p_m, b_sc, one_minus_eps, delta_tol, max_iters
):
    """Like dc_optimize_beta but also returns the accepted-objective trace."""
    trace = []
    beta, f_cur, converged, iters = _dc_optimize_impl(
        q1, d1, theta2, w2, q2, p_sc, p_m, b_sc, delta_tol, max_iters, trace
    )
    return beta, -one_minus_eps * f_cur, converged, iters, trace
