"""End-to-end acceptance suite.

Thirteen checks covering scheme ordering at load, convergence speed,
CSI-error sensitivity, hover-power and altitude trends, kernel accuracy
against independent oracles, the outage guarantee, optimizer
certificates, matching quality against exhaustive search, and constraint
feasibility of every power vector any experiment emitted.  Each test
prints a single verdict line.
"""

import dataclasses
import math
import os
import time

import numpy as np
import pytest

from skynoma import _purepy
from skynoma._backend import kernels
from skynoma.baselines import _best_beta_grid
from skynoma.channel import build_channel_set
from skynoma.harness import (
    ExperimentSpec,
    _sample_pair_contexts,
    oracle_compare,
    run_experiment,
)
from skynoma.oracles import fd_derivative, marcum_q1_quad, outage_mc
from skynoma.outage import make_outage_context
from skynoma.power import (
    allocate_power,
    build_power_constraints,
    build_power_terms,
    ee_power_objective,
    equal_split_power,
    sca_surrogate,
)
from skynoma.scenario import ScenarioConfig, generate_topology
from skynoma.scheduling import schedule_users

_WORKERS = min(4, os.cpu_count() or 1)
_RESULTS = []  # every experiment run here, audited by the final test


def _verdict(tag, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}"
    if detail:
        line += f"  ({detail})"
    print("\n" + line)
    assert ok, line


def _run(spec):
    t0 = time.perf_counter()
    res = run_experiment(spec)
    elapsed = time.perf_counter() - t0
    assert not res.failures, res.failures
    _RESULTS.append(res)
    return res, elapsed


def _means(res, sweep):
    out = {}
    for row in res.rows:
        out[(row[sweep], row["scheme"])] = row["mean_ee"]
    return out


@pytest.fixture(scope="module")
def loaded_cells(config):
    cfg = dataclasses.replace(config, users_per_cell=30)
    spec = ExperimentSpec(
        preset="acceptance-load", sweep_variable="users_per_cell",
        sweep_values=[30], schemes=("proposed", "noma_dc", "ftpa", "ofdma"),
        trials=100, base_config=cfg, seed=0, workers=_WORKERS)
    return _run(spec)


@pytest.fixture(scope="module")
def csi_sweep(config):
    spec = ExperimentSpec(
        preset="acceptance-csi", sweep_variable="sigma_e2",
        sweep_values=[0.0, 0.01, 0.05, 0.2], schemes=("proposed",),
        trials=100, base_config=config, seed=0, workers=_WORKERS)
    return _run(spec)[0]


@pytest.fixture(scope="module")
def hover_sweeps(config):
    out = {}
    for p_max in (5.0, 10.0):
        cfg = dataclasses.replace(config, p_uav_max_w=p_max)
        spec = ExperimentSpec(
            preset="acceptance-hover", sweep_variable="p_hover_w",
            sweep_values=[round(0.1 * j, 1) for j in range(1, 11)],
            schemes=("proposed",), trials=10, base_config=cfg, seed=0,
            workers=_WORKERS)
        out[p_max] = _run(spec)[0]
    return out


def test_a01_scheme_ordering_under_load(loaded_cells):
    res, elapsed = loaded_cells
    m = _means(res, "users_per_cell")
    prop, dc = m[(30, "proposed")], m[(30, "noma_dc")]
    ftpa, ofdma = m[(30, "ftpa")], m[(30, "ofdma")]
    ok = prop > dc > ftpa > ofdma and elapsed <= 600.0
    _verdict(
        "A01 mean EE ordering at 30 users/cell over 100 trials",
        ok,
        f"proposed {prop:.4e} > dc {dc:.4e} > ftpa {ftpa:.4e} > "
        f"ofdma {ofdma:.4e}; {elapsed:.0f}s")


def test_a02_convergence_speed(config):
    t0 = time.perf_counter()
    fast = 0
    mono = True
    for seed in range(100):
        ch = build_channel_set(generate_topology(config, seed), config, seed)
        asg = schedule_users(ch, config)
        res = allocate_power(asg, ch, config)
        if res.converged and res.iters <= 10:
            fast += 1
        tr = res.trace
        mono &= all(b >= a - 1e-9 * abs(a) for a, b in zip(tr, tr[1:]))
    elapsed = time.perf_counter() - t0
    ok = fast >= 95 and mono and elapsed <= 120.0
    _verdict(
        "A02 outer loop reaches its 0.01 bit/J tolerance within 10 rounds",
        ok, f"{fast}/100 trials, traces monotone: {mono}, {elapsed:.0f}s")


def test_a03_csi_error_degrades_ee(csi_sweep):
    m = _means(csi_sweep, "sigma_e2")
    a, b, c = m[(0.01, "proposed")], m[(0.05, "proposed")], m[(0.2, "proposed")]
    ok = a > b > c
    _verdict(
        "A03 mean EE decreasing in estimation error (100 paired trials)",
        ok, f"var 0.01: {a:.4e} > 0.05: {b:.4e} > 0.2: {c:.4e}")


def test_a04_perfect_csi_dominates(csi_sweep):
    m = _means(csi_sweep, "sigma_e2")
    perfect, noisy = m[(0.0, "proposed")], m[(0.2, "proposed")]
    ok = perfect > noisy
    _verdict(
        "A04 perfect CSI beats noisy estimation (paired trials)",
        ok, f"{perfect:.4e} > {noisy:.4e}")


def test_a05_ee_decreasing_in_hover_power(hover_sweeps):
    details = []
    ok = True
    for p_max, res in hover_sweeps.items():
        m = _means(res, "p_hover_w")
        means = [m[(round(0.1 * j, 1), "proposed")] for j in range(1, 11)]
        strict = all(x > y for x, y in zip(means, means[1:]))
        ok &= strict
        details.append(f"P={p_max:g}W strict: {strict}")
    _verdict("A05 mean EE strictly decreasing in hover power 0.1-1.0 W",
             ok, "; ".join(details))


def test_a06_altitude_sweet_spot(config):
    spec = ExperimentSpec(
        preset="acceptance-altitude", sweep_variable="uav_height_m",
        sweep_values=[100.0 + 50.0 * j for j in range(9)],
        schemes=("proposed",), trials=25, base_config=config, seed=0,
        workers=_WORKERS)
    res, _ = _run(spec)
    m = _means(res, "uav_height_m")
    means = [m[(100.0 + 50.0 * j, "proposed")] for j in range(9)]
    peak = int(np.argmax(means))
    signs = [d > 0 for d in np.diff(means)]
    changes = sum(a != b for a, b in zip(signs, signs[1:]))
    ok = 0 < peak < 8 and changes == 1
    _verdict(
        "A06 trial-averaged EE peaks at an interior altitude",
        ok, f"peak {100 + 50 * peak:.0f} m, sign changes {changes}")


def test_a07_fading_kernels_match_oracles():
    # tail function against direct quadrature on a 10x10 grid
    worst_q = 0.0
    for a in np.linspace(0.0, 18.0, 10):
        for b in np.linspace(0.05, 19.0, 10):
            worst_q = max(worst_q, abs(kernels.marcum_q1(float(a), float(b))
                                       - marcum_q1_quad(float(a), float(b))))
    # conditional power CDF against 1e6-sample Monte Carlo
    rng = np.random.default_rng(3)
    worst_c = 0.0
    for g2 in (0.2, 0.9, 1.8):
        for x in (0.05, 0.5, 1.5):
            s2 = 0.05
            z = rng.standard_normal((1_000_000, 2))
            e = math.sqrt(s2 / 2.0) * (z[:, 0] + 1j * z[:, 1])
            emp = float(np.mean(np.abs(math.sqrt(g2) + e) ** 2 <= x))
            worst_c = max(worst_c, abs(kernels.fading_cdf(x, g2, s2) - emp))
    # quantile inverts the CDF
    worst_r = 0.0
    for _ in range(100):
        eps = float(rng.uniform(0.005, 0.5))
        g2 = float(rng.uniform(0.05, 2.0))
        s2 = float(rng.uniform(0.01, 0.5))
        q = kernels.fading_quantile(eps, g2, s2)
        worst_r = max(worst_r, abs(kernels.fading_cdf(q, g2, s2) - eps))
    ok = worst_q <= 1e-8 and worst_c <= 5e-3 and worst_r <= 1e-9
    _verdict(
        "A07 fading kernels match quadrature / Monte Carlo oracles",
        ok,
        f"tail abs {worst_q:.1e} <= 1e-8, cdf sup {worst_c:.1e} <= 5e-3, "
        f"round trip {worst_r:.1e} <= 1e-9")


def test_a08_outage_guarantee_conservative(config):
    rng = np.random.default_rng(8)
    n_draws = 100_000
    bound = config.eps_out + 3.0 * math.sqrt(
        config.eps_out * (1.0 - config.eps_out) / n_draws)
    worst = -1.0
    checked = 0
    seed = 0
    while checked < 1000:
        ch = build_channel_set(generate_topology(config, seed=seed),
                               config, seed=seed)
        for _ in range(50):
            i = int(rng.integers(config.n_uavs))
            n = int(rng.integers(config.users_per_cell))
            k = int(rng.integers(config.k_subchannels))
            ctx = make_outage_context(
                pl_gain=float(ch.pl[i, n]),
                g_hat_mag2=float(np.abs(ch.g_hat[i, n, k]) ** 2),
                sigma_e2=config.sigma_e2, eps_out=config.eps_out,
                noise_plus_cross=ch.noise_power
                + ch.p_macro_per_sc * float(ch.cross_bs[i, n, k]),
                quantile=float(ch.quantile_half_eps[i, n, k]))
            p_self = float(rng.uniform(0.05, 1.0))
            p_int = [float(rng.uniform(0.05, 1.0))] if rng.random() < 0.7 else []
            emp = outage_mc(ctx, p_self, p_int, n_samples=n_draws,
                            seed=1000 + checked)
            worst = max(worst, emp - bound)
            checked += 1
            if checked >= 1000:
                break
        seed += 1
    ok = worst <= 0.0
    _verdict(
        "A08 empirical outage stays below target on 1000 random links",
        ok, f"max (empirical - bound) {worst:.2e}, bound {bound:.4f}")


def test_a09_power_split_search_certified(config):
    p_m = config.p_hover_w
    b_sc = config.subchannel_bandwidth_hz
    ome = config.outage_factor
    contexts = _sample_pair_contexts(config, seed=0, count=1000)
    rng = np.random.default_rng(9)

    # analytic slope of the concave part against central differences
    worst_g = 0.0
    for coeff, p_sc in contexts[:100]:
        beta = float(rng.uniform(0.05, 0.95))
        g = kernels.dc_grad_f2(beta, coeff.theta2, coeff.w2, coeff.q2,
                               p_sc, p_m, b_sc)
        fd = fd_derivative(
            lambda x: kernels.dc_f2(x, coeff.theta2, coeff.w2, coeff.q2,
                                    p_sc, p_m, b_sc), beta)
        worst_g = max(worst_g, abs(g - fd) / max(abs(fd), 1e-300))

    # accepted iterates never increase the difference objective
    descents = 0
    for coeff, p_sc in contexts:
        *_, trace = _purepy.dc_optimize_beta_trace(
            coeff.q1, coeff.d1, coeff.theta2, coeff.w2, coeff.q2,
            p_sc, p_m, b_sc, ome, config.tol_dc, config.max_iters)
        if all(b <= a + 1e-12 * abs(a) for a, b in zip(trace, trace[1:])):
            descents += 1

    # final value against a dense grid
    worst_s = 0.0
    for coeff, p_sc in contexts[:100]:
        _, ee, _, _ = kernels.dc_optimize_beta(
            coeff.q1, coeff.d1, coeff.theta2, coeff.w2, coeff.q2,
            p_sc, p_m, b_sc, ome, config.tol_dc, config.max_iters)
        _, grid_ee = _best_beta_grid(coeff, p_sc, p_m, b_sc, ome, step=1e-4)
        worst_s = max(worst_s, (grid_ee - ee) / max(abs(grid_ee), 1e-300))

    ok = worst_g <= 1e-6 and descents == 1000 and worst_s <= 1e-4
    _verdict(
        "A09 split search: exact slope, descending, grid-optimal",
        ok,
        f"grad rel {worst_g:.1e} <= 1e-6, descent {descents}/1000, "
        f"grid shortfall {worst_s:.1e} <= 1e-4")


def test_a10_difference_form_matches_objective(config):
    p_m = config.p_hover_w
    b_sc = config.subchannel_bandwidth_hz
    ome = config.outage_factor
    worst = 0.0
    for coeff, p_sc in _sample_pair_contexts(config, seed=1, count=1000):
        for beta in (0.1, 0.5, 0.9):
            diff = (kernels.dc_f1(beta, coeff.q1, coeff.d1, coeff.theta2,
                                  coeff.w2, p_sc, p_m, b_sc)
                    - kernels.dc_f2(beta, coeff.theta2, coeff.w2, coeff.q2,
                                    p_sc, p_m, b_sc))
            ee = kernels.pair_ee(beta, coeff.q1, coeff.d1, coeff.theta2,
                                 coeff.w2, coeff.q2, p_sc, p_m, b_sc, ome)
            worst = max(worst, abs(diff * ome + ee) / max(abs(ee), 1e-300))
    ok = worst <= 1e-9
    _verdict(
        "A10 two-part difference equals the pair objective",
        ok, f"max rel err {worst:.1e} <= 1e-9")


def test_a11_surrogate_certificates(config):
    worst_tight = 0.0
    worst_grad = 0.0
    worst_bound = -np.inf
    rng = np.random.default_rng(11)
    for seed in (0, 1, 2):
        ch = build_channel_set(generate_topology(config, seed=seed),
                               config, seed=seed)
        asg = schedule_users(ch, config)
        terms = build_power_terms(asg, ch, config)
        cons = build_power_constraints(ch, config, terms.active)
        for anchor in (equal_split_power(terms, cons, config),
                       allocate_power(asg, ch, config, terms=terms).p):
            model = sca_surrogate(anchor, terms)
            z, g = ee_power_objective(anchor, terms, with_grad=True)
            scale = max(abs(z), 1.0)
            worst_tight = max(worst_tight, abs(model.value(anchor) - z) / scale)
            worst_grad = max(worst_grad,
                             np.abs(model.grad(anchor) - g).max()
                             / np.abs(g).max())
            for _ in range(500):  # 2 anchors x 500 = 1000 points per instance
                p = np.where(terms.active,
                             rng.uniform(0.0, 2.0, size=anchor.shape)
                             * config.p_uav_max_w / config.k_subchannels, 0.0)
                gap = model.value(p) - ee_power_objective(p, terms)
                worst_bound = max(worst_bound, gap / scale)
    ok = worst_tight <= 1e-9 and worst_grad <= 1e-9 and worst_bound <= 1e-9
    _verdict(
        "A11 surrogate tight at anchor and a global lower bound",
        ok,
        f"value rel {worst_tight:.1e}, grad rel {worst_grad:.1e}, "
        f"max excess {worst_bound:.1e}; all <= 1e-9")


def test_a12_matching_near_exhaustive():
    stats = oracle_compare(n_instances=100, seed=0)
    ok = (stats.min_ratio <= 1.0 + 1e-9
          and stats.mean_ratio > stats.mean_random_ratio)
    _verdict(
        "A12 matching within exhaustive bound and above random",
        ok,
        f"ratio mean {stats.mean_ratio:.4f} min {stats.min_ratio:.4f}, "
        f"random mean {stats.mean_random_ratio:.4f}")


def test_a13_every_power_vector_feasible(config):
    if not _RESULTS:  # standalone invocation: produce something to audit
        cfg = dataclasses.replace(config, users_per_cell=4, n_uavs=2,
                                  n_macro_users=5, n_subchannels=2)
        spec = ExperimentSpec(
            preset="acceptance-mini", sweep_variable="sigma_e2",
            sweep_values=[0.01, 0.2], schemes=("proposed", "ftpa"),
            trials=3, base_config=cfg, seed=0)
        _run(spec)
    total = 0
    bad = 0
    for res in _RESULTS:
        for s in res.samples:
            total += 1
            bad += 0 if s["feasible"] else 1
    ok = total > 0 and bad == 0
    _verdict(
        "A13 every emitted power vector satisfies the constraint set",
        ok, f"{total - bad}/{total} samples feasible at 1e-9")
