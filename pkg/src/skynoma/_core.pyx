# Compiled mirror of skynoma._purepy — keep the two in lockstep.
# Scalar hot paths only: Marcum Q1 / conditional fading law / DC power-split
# search.  Directives (cdivision, boundscheck off) come from setup.py.

from libc.math cimport erfc, exp, lgamma, log, sqrt

cdef double _LN2 = log(2.0)
cdef double _MARGIN = 1e-6
cdef double _GOLD = 0.6180339887498949
cdef double _GOLDEN_TOL = 1e-8
cdef int _SCAN_POINTS = 33
cdef double _INF = float("inf")


cdef inline double _log2(double x) nogil:
    return log(x) / _LN2


cpdef double marcum_q1(double a, double b):
    """First-order Marcum Q function, windowed Poisson-mixture form."""
    cdef double alpha, beta, z, half, pa, pb, g, t, s
    cdef long klo, khi, k, j
    if b <= 0.0:
        return 1.0
    if a <= 0.0:
        return exp(-0.5 * b * b)
    alpha = 0.5 * a * a
    beta = 0.5 * b * b
    if alpha > 1e8:
        z = (alpha + 1.0 - beta) / sqrt(2.0 * alpha + 1.0)
        return 0.5 * erfc(-z / sqrt(2.0))

    half = 9.0 * sqrt(alpha) + 26.0
    klo = <long>(alpha - half)
    if klo < 0:
        klo = 0
    khi = <long>(alpha + half) + 1

    if klo == 0:
        pa = exp(-alpha)
        pb = exp(-beta)
        g = pb
    else:
        pa = exp(-alpha + klo * log(alpha) - lgamma(klo + 1.0))
        if klo >= beta + 9.0 * sqrt(beta) + 26.0:
            pb = 0.0
            g = 1.0
        else:
            pb = exp(-beta + klo * log(beta) - lgamma(klo + 1.0))
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


cpdef double fading_cdf(double x, double g_hat_mag2, double sigma_e2):
    """Conditional CDF of |g_hat + e|^2 (noncentral chi-square, 2 dof)."""
    if x <= 0.0:
        return 0.0
    if sigma_e2 <= 0.0:
        return 1.0 if x >= g_hat_mag2 else 0.0
    return 1.0 - marcum_q1(sqrt(2.0 * g_hat_mag2 / sigma_e2),
                           sqrt(2.0 * x / sigma_e2))


cpdef double fading_quantile(double eps, double g_hat_mag2, double sigma_e2):
    """Inverse of fading_cdf by bracketed bisection."""
    cdef double hi = g_hat_mag2 + sigma_e2
    cdef double lo = 0.0
    cdef double tol_ref, mid
    if hi <= 0.0:
        hi = sigma_e2
    while fading_cdf(hi, g_hat_mag2, sigma_e2) < eps:
        hi *= 2.0
    tol_ref = hi if hi > 1.0 else 1.0
    while hi - lo > 1e-13 * tol_ref:
        mid = 0.5 * (lo + hi)
        if fading_cdf(mid, g_hat_mag2, sigma_e2) < eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cpdef double single_ee(double p, double q1, double d1, double p_m,
                       double b_sc, double one_minus_eps):
    cdef double rate = b_sc * _log2(1.0 + q1 * p / d1)
    return one_minus_eps * rate / (p_m + p)


cpdef double pair_ee(double beta1, double q1, double d1, double theta2,
                     double w2, double q2, double p_sc, double p_m,
                     double b_sc, double one_minus_eps):
    cdef double beta2 = 1.0 - beta1
    cdef double rs = b_sc * _log2(1.0 + q1 * beta1 * p_sc / d1)
    cdef double rw = b_sc * _log2(
        1.0 + q2 * beta2 * p_sc / (theta2 + w2 * beta1 * p_sc))
    return one_minus_eps * (rs / (p_m + beta1 * p_sc) + rw / (p_m + beta2 * p_sc))


cpdef double dc_f1(double beta1, double q1, double d1, double theta2,
                   double w2, double p_sc, double p_m, double b_sc):
    cdef double beta2 = 1.0 - beta1
    cdef double t_strong = b_sc * _log2(1.0 + q1 * beta1 * p_sc / d1) / (
        p_m + beta1 * p_sc)
    cdef double t_weak = b_sc * _log2(theta2 + w2 * beta1 * p_sc) / (
        p_m + beta2 * p_sc)
    return t_weak - t_strong


cpdef double dc_f2(double beta1, double theta2, double w2, double q2,
                   double p_sc, double p_m, double b_sc):
    cdef double c = w2 - q2
    cdef double delta = theta2 + q2 * p_sc
    return b_sc * _log2(c * beta1 * p_sc + delta) / (p_m + (1.0 - beta1) * p_sc)


cpdef double dc_grad_f2(double beta1, double theta2, double w2, double q2,
                        double p_sc, double p_m, double b_sc):
    cdef double c = w2 - q2
    cdef double delta = theta2 + q2 * p_sc
    cdef double u = c * beta1 * p_sc + delta
    cdef double d = p_m + (1.0 - beta1) * p_sc
    return b_sc * (c * p_sc / (u * d * _LN2) + p_sc * _log2(u) / (d * d))


cdef inline double _dc_objective(double beta1, double q1, double d1,
                                 double theta2, double w2, double q2,
                                 double p_sc, double p_m, double b_sc):
    return dc_f1(beta1, q1, d1, theta2, w2, p_sc, p_m, b_sc) - dc_f2(
        beta1, theta2, w2, q2, p_sc, p_m, b_sc)


cdef double _dc_inner_argmin(double q1, double d1, double theta2, double w2,
                             double p_sc, double p_m, double b_sc,
                             double slope):
    cdef double lo = _MARGIN
    cdef double hi = 1.0 - _MARGIN
    cdef double step = (hi - lo) / (_SCAN_POINTS - 1)
    cdef int best_i = 0
    cdef double best_v = _INF
    cdef int i
    cdef double x, v, a, b, x1, x2, v1, v2
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


cdef (double, double) _dc_best_true(double q1, double d1, double theta2,
                                    double w2, double q2, double p_sc,
                                    double p_m, double b_sc):
    # scan + golden descent on the true objective; fallback for iterates
    # where the linearized step stalls (second part not always convex)
    cdef double lo = _MARGIN
    cdef double hi = 1.0 - _MARGIN
    cdef double step = (hi - lo) / (_SCAN_POINTS - 1)
    cdef int best_i = 0
    cdef double best_v = _INF
    cdef int i
    cdef double x, v, a, b, x1, x2, v1, v2
    for i in range(_SCAN_POINTS):
        x = lo + step * i
        v = _dc_objective(x, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
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
    v1 = _dc_objective(x1, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    v2 = _dc_objective(x2, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    while b - a > _GOLDEN_TOL:
        if v1 <= v2:
            b = x2
            x2 = x1
            v2 = v1
            x1 = b - _GOLD * (b - a)
            v1 = _dc_objective(x1, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
        else:
            a = x1
            x1 = x2
            v1 = v2
            x2 = a + _GOLD * (b - a)
            v2 = _dc_objective(x2, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    x = 0.5 * (a + b)
    v = _dc_objective(x, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
    if best_v < v:
        return lo + step * best_i, best_v
    return x, v


cpdef tuple dc_optimize_beta(double q1, double d1, double theta2, double w2,
                             double q2, double p_sc, double p_m, double b_sc,
                             double one_minus_eps, double delta_tol,
                             int max_iters):
    """DC search for the EE-optimal strong-user share; see the pure mirror."""
    cdef double beta = 0.5
    cdef double f_cur = _dc_objective(beta, q1, d1, theta2, w2, q2,
                                      p_sc, p_m, b_sc)
    cdef bint converged = False
    cdef int iters = 0
    cdef int tries, it
    cdef double slope, cand, f_cand, df
    cdef (double, double) fb
    for it in range(max_iters):
        iters += 1
        slope = dc_grad_f2(beta, theta2, w2, q2, p_sc, p_m, b_sc)
        cand = _dc_inner_argmin(q1, d1, theta2, w2, p_sc, p_m, b_sc, slope)
        f_cand = _dc_objective(cand, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
        tries = 0
        while (f_cand >= f_cur and tries < 20
               and (cand - beta > 1e-12 or beta - cand > 1e-12)):
            cand = beta + 0.5 * (cand - beta)
            f_cand = _dc_objective(cand, q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
            tries += 1
        if f_cand >= f_cur:
            fb = _dc_best_true(q1, d1, theta2, w2, q2, p_sc, p_m, b_sc)
            cand = fb[0]
            f_cand = fb[1]
            if f_cand >= f_cur:
                converged = True
                break
        df = f_cur - f_cand
        beta = cand
        f_cur = f_cand
        if df <= delta_tol:
            converged = True
            break
    return beta, -one_minus_eps * f_cur, converged, iters
