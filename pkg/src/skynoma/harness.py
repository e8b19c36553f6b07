"""Monte Carlo experiment runner, figure presets, and release checks.

``run_experiment`` drives sweeps: for each sweep value and trial it drops a
topology, draws channels, runs the requested schemes end-to-end, and
aggregates mean/stderr per (value, scheme) into a deterministic CSV (trial
t always uses seed base+t, so sweeps sharing a base seed are paired
draw-for-draw).  ``validate`` is the quick release gate over the library's
numeric invariants; ``oracle_compare`` measures the matching heuristic
against exhaustive enumeration on small instances.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .baselines import SCHEMES, _best_beta_grid, exhaustive_schedule
from .channel import build_channel_set
from .errors import ConfigError, SkynomaError
from .metrics import pair_coefficients
from .oracles import (
    fading_cdf_mc,
    fd_derivative,
    fd_gradient,
    marcum_q1_quad,
    outage_mc,
)
from .outage import make_outage_context, markov_interference_bound
from .power import (
    allocate_power,
    build_power_constraints,
    build_power_terms,
    ee_power_objective,
    sca_surrogate,
)
from .scenario import ScenarioConfig, generate_topology
from .scheduling import Assignment, schedule_users

_SHARED_MATCHING = ("proposed", "noma_dc", "ftpa")  # reuse one matching per trial


@dataclass
class ExperimentSpec:
    preset: str
    sweep_variable: str
    sweep_values: list
    schemes: tuple[str, ...]
    trials: int
    base_config: ScenarioConfig
    output_path: str | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes: {unknown}")
        for value in self.sweep_values:
            self.config_at(value)  # raises ConfigError on invalid combos

    def config_at(self, value) -> ScenarioConfig:
        if self.sweep_variable == "iteration":
            return self.base_config
        return dataclasses.replace(self.base_config, **{self.sweep_variable: value})


def make_spec(preset, config=None, trials=None, seed=0, out=None,
              workers=1) -> ExperimentSpec:
    """Build the spec for a named figure preset (or raise ConfigError)."""
    base = config if config is not None else ScenarioConfig()
    if preset not in PRESETS:
        raise ConfigError(
            f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    builder = PRESETS[preset]
    spec = builder(base)
    if trials is not None:
        spec.trials = trials
    spec.seed = seed
    spec.output_path = out
    spec.workers = workers
    spec.preset = preset
    return spec


def _preset_fig2(base):
    # total EE vs users per cell, all schemes
    return ExperimentSpec(
        preset="fig2", sweep_variable="users_per_cell",
        sweep_values=[10, 20, 30, 40],
        schemes=("proposed", "noma_dc", "ftpa", "ofdma"),
        trials=100, base_config=base)


def _preset_fig3(base):
    # objective trace per SCA round (padded with the converged value)
    return ExperimentSpec(
        preset="fig3", sweep_variable="iteration", sweep_values=[None],
        schemes=("proposed", "noma_dc"), trials=100, base_config=base)


def _preset_fig4(base):
    return ExperimentSpec(
        preset="fig4", sweep_variable="sigma_e2",
        sweep_values=[0.01, 0.05, 0.1, 0.2, 0.5],
        schemes=("proposed",), trials=100, base_config=base)


def _preset_fig5(base):
    # perfect CSI (sigma_e2 = 0) against estimation-error operation
    return ExperimentSpec(
        preset="fig5", sweep_variable="sigma_e2",
        sweep_values=[0.0, 0.05, 0.2],
        schemes=("proposed",), trials=100, base_config=base)


def _preset_fig6(base):
    cfg = dataclasses.replace(base, p_uav_max_w=5.0)
    return ExperimentSpec(
        preset="fig6", sweep_variable="p_hover_w",
        sweep_values=[round(0.1 * j, 1) for j in range(1, 11)],
        schemes=("proposed",), trials=100, base_config=cfg)


def _preset_fig7(base):
    cfg = dataclasses.replace(base, p_uav_max_w=10.0)
    return ExperimentSpec(
        preset="fig7", sweep_variable="p_hover_w",
        sweep_values=[round(0.1 * j, 1) for j in range(1, 11)],
        schemes=("proposed",), trials=100, base_config=cfg)


def _preset_fig8(base):
    cfg = dataclasses.replace(base, users_per_cell=30)
    return ExperimentSpec(
        preset="fig8", sweep_variable="sigma_e2",
        sweep_values=[0.01, 0.05, 0.2],
        schemes=("proposed",), trials=100, base_config=cfg)


def _preset_fig9(base):
    return ExperimentSpec(
        preset="fig9", sweep_variable="uav_height_m",
        sweep_values=[100.0 + 50.0 * j for j in range(9)],  # 100..500 m
        schemes=("proposed",), trials=100, base_config=base)


PRESETS = {
    "fig2": _preset_fig2,
    "fig3": _preset_fig3,
    "fig4": _preset_fig4,
    "fig5": _preset_fig5,
    "fig6": _preset_fig6,
    "fig7": _preset_fig7,
    "fig8": _preset_fig8,
    "fig9": _preset_fig9,
}


def _run_single(config: ScenarioConfig, schemes, seed):
    """One trial: topology -> channels -> every scheme; returns records."""
    topology = generate_topology(config, seed=seed)
    channels = build_channel_set(topology, config, seed=seed)
    shared = None
    if any(s in _SHARED_MATCHING for s in schemes):
        shared = schedule_users(channels, config)
    out = {}
    for name in schemes:
        fn = SCHEMES[name]
        if name in _SHARED_MATCHING:
            res = fn(channels, config, assignment=shared)
        else:
            res = fn(channels, config)
        cons = build_power_constraints(
            channels, config, _active_mask(res.assignment, config))
        out[name] = {
            "objective": res.objective,
            "iters": res.iters,
            "converged": res.converged,
            "trace": list(res.trace) if res.trace is not None else None,
            "feasible": cons.is_feasible(res.p, rtol=1e-9),
        }
    return out


def _active_mask(assignment: Assignment, config: ScenarioConfig):
    mask = np.zeros((config.n_uavs, config.k_subchannels), dtype=bool)
    for (i, k), users in assignment.pairs.items():
        if users:
            mask[i, k] = True
    return mask


def _trial_task(args):
    config, schemes, seed, vi, trial = args
    try:
        return vi, trial, _run_single(config, schemes, seed), None
    except SkynomaError as exc:  # record and skip
        return vi, trial, None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    csv_text: str = ""


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    tasks = []
    for vi, value in enumerate(spec.sweep_values):
        config = spec.config_at(value)
        for t in range(spec.trials):
            tasks.append((config, spec.schemes, spec.seed + t, vi, t))

    results: dict[tuple[int, int], dict] = {}
    failures = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for vi, t, rec, err in pool.map(_trial_task, tasks, chunksize=1):
                if err is None:
                    results[(vi, t)] = rec
                else:
                    failures.append((spec.sweep_values[vi], t, err))
    else:
        for task in tasks:
            vi, t, rec, err = _trial_task(task)
            if err is None:
                results[(vi, t)] = rec
            else:
                failures.append((spec.sweep_values[vi], t, err))

    out = ExperimentResult(spec=spec, failures=failures)
    if spec.sweep_variable == "iteration":
        _aggregate_traces(spec, results, out)
    else:
        _aggregate_sweep(spec, results, out)
    out.csv_text = _render_csv(spec, out)
    if spec.output_path:
        with open(spec.output_path, "w", newline="") as fh:
            fh.write(out.csv_text)
    return out


def _aggregate_sweep(spec, results, out):
    for vi, value in enumerate(spec.sweep_values):
        for name in spec.schemes:
            vals = []
            for t in range(spec.trials):
                rec = results.get((vi, t))
                if rec is None:
                    continue
                vals.append(rec[name]["objective"])
                out.samples.append({
                    "value": value, "trial": t, "scheme": name,
                    **rec[name]})
            if not vals:
                continue
            arr = np.asarray(vals)
            stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
            out.rows.append({
                spec.sweep_variable: value, "scheme": name,
                "mean_ee": float(arr.mean()), "stderr": stderr,
                "trials": len(arr)})


def _aggregate_traces(spec, results, out):
    for name in spec.schemes:
        traces = []
        for t in range(spec.trials):
            rec = results.get((0, t))
            if rec is None or rec[name]["trace"] is None:
                continue
            traces.append(rec[name]["trace"])
            out.samples.append({"value": None, "trial": t, "scheme": name,
                                **rec[name]})
        if not traces:
            continue
        depth = max(len(tr) for tr in traces)
        padded = np.array([tr + [tr[-1]] * (depth - len(tr)) for tr in traces])
        for it in range(depth):
            col = padded[:, it]
            stderr = float(col.std(ddof=1) / math.sqrt(len(col))) if len(col) > 1 else 0.0
            out.rows.append({
                "iteration": it, "scheme": name,
                "mean_ee": float(col.mean()), "stderr": stderr,
                "trials": len(col)})


def _render_csv(spec: ExperimentSpec, out: ExperimentResult) -> str:
    lines = [f"# preset={spec.preset}",
             f"# sweep_variable={spec.sweep_variable}",
             f"# sweep_values={spec.sweep_values!r}",
             f"# schemes={','.join(spec.schemes)}",
             f"# trials={spec.trials}",
             f"# seed={spec.seed}",
             f"# failures={len(out.failures)}"]
    for f in dataclasses.fields(spec.base_config):
        lines.append(f"# {f.name}={getattr(spec.base_config, f.name)!r}")
    first = "iteration" if spec.sweep_variable == "iteration" else spec.sweep_variable
    lines.append(f"{first},scheme,mean_ee,stderr,trials")
    for row in out.rows:
        lines.append(",".join([
            repr(row[first]), row["scheme"], repr(row["mean_ee"]),
            repr(row["stderr"]), str(row["trials"])]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# release gate


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    skipped: bool = False


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed or c.skipped for c in self.checks)

    def add(self, name, passed, detail="", skipped=False):
        self.checks.append(CheckResult(name, bool(passed), detail, skipped))

    def render(self):
        lines = []
        for c in self.checks:
            tag = "SKIP" if c.skipped else ("PASS" if c.passed else "FAIL")
            suffix = f"  ({c.detail})" if c.detail else ""
            lines.append(f"[{tag}] {c.name}{suffix}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _sample_pair_contexts(config: ScenarioConfig, seed, count):
    """Realistic pair coefficients straight from channel draws."""
    rng = np.random.default_rng([seed, 7])
    contexts = []
    inst = 0
    while len(contexts) < count:
        topo = generate_topology(config, seed=seed + 1000 + inst)
        ch = build_channel_set(topo, config, seed=seed + 1000 + inst)
        for i in range(config.n_uavs):
            for k in range(config.k_subchannels):
                order = np.argsort(ch.h_hat_mag2[i, :, k])
                pair = (int(order[-1]), int(order[rng.integers(0, len(order) - 1)]))
                if pair[0] == pair[1]:
                    continue
                coeff = pair_coefficients(ch, config, i, k, pair)
                p_sc = float(rng.uniform(0.2, 2.0) * config.p_uav_max_w
                             / config.k_subchannels)
                contexts.append((coeff, p_sc))
                if len(contexts) >= count:
                    return contexts
        inst += 1
    return contexts


def validate(config: ScenarioConfig | None = None, seed=0,
             grad_fn=None) -> ValidationReport:
    """Run the numeric invariant suite; every failure becomes a report entry."""
    config = config if config is not None else ScenarioConfig()
    grad_fn = grad_fn if grad_fn is not None else kernels.dc_grad_f2
    rep = ValidationReport()
    rng = np.random.default_rng([seed, 11])

    # Marcum Q vs quadrature
    worst = 0.0
    for a in [0.0, 0.3, 1.0, 3.0, 8.0, 20.0]:
        for b in [0.1, 0.9, 2.0, 5.0, 19.0]:
            worst = max(worst, abs(kernels.marcum_q1(a, b) - marcum_q1_quad(a, b)))
    rep.add("marcum_q1 vs quadrature", worst <= 1e-8, f"max abs err {worst:.2e}")

    if config.sigma_e2 > 0.0:
        # conditional fading CDF vs Monte Carlo
        worst = 0.0
        for g2 in [0.2, 0.9]:
            for x in [0.05, 0.5, 1.5]:
                mc = fading_cdf_mc(x, g2, config.sigma_e2, n_samples=1_000_000,
                                   seed=seed + 3)
                worst = max(worst, abs(kernels.fading_cdf(x, g2, config.sigma_e2) - mc))
        rep.add("fading_cdf vs Monte Carlo", worst <= 5e-3, f"sup err {worst:.2e}")

        # quantile round trip
        worst = 0.0
        for _ in range(100):
            eps = float(rng.uniform(0.005, 0.3))
            g2 = float(rng.uniform(0.05, 2.0))
            q = kernels.fading_quantile(eps, g2, config.sigma_e2)
            worst = max(worst, abs(kernels.fading_cdf(q, g2, config.sigma_e2) - eps))
        rep.add("quantile round trip", worst <= 1e-9, f"max |cdf(q)-eps| {worst:.2e}")

        # outage transform conservative on sampled links
        topo = generate_topology(config, seed=seed)
        ch = build_channel_set(topo, config, seed=seed)
        worst_margin = -1.0
        for _ in range(20):
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
            n_draws = 100_000
            emp = outage_mc(ctx, p_self, p_int, n_samples=n_draws, seed=seed + 17)
            bound = config.eps_out + 3.0 * math.sqrt(
                config.eps_out * (1 - config.eps_out) / n_draws)
            worst_margin = max(worst_margin, emp - bound)
        rep.add("outage transform conservative", worst_margin <= 0.0,
                f"max (empirical - bound) {worst_margin:.2e}")
    else:
        for name in ["fading_cdf vs Monte Carlo", "quantile round trip",
                     "outage transform conservative"]:
            rep.add(name, True, "sigma_e2=0: degenerate CSI, check not applicable",
                    skipped=True)

    # Markov bound on interference tails, checked against exponential fading
    rng_m = np.random.default_rng([seed, 13])
    worst_margin = -np.inf
    for _ in range(20):
        m = int(rng_m.integers(1, 4))
        powers = rng_m.uniform(0.05, 1.0, m)
        gains = 10.0 ** rng_m.uniform(-14.0, -10.0, m)
        t = float(powers @ gains) * float(rng_m.uniform(1.5, 30.0))
        bound = markov_interference_bound(powers, gains, t)
        draws = rng_m.exponential(1.0, size=(200_000, m)) * gains
        emp = float(((draws * powers).sum(axis=1) >= t).mean())
        sig = math.sqrt(max(emp * (1.0 - emp), 1e-12) / 200_000)
        worst_margin = max(worst_margin, emp - (min(bound, 1.0) + 3.0 * sig))
    rep.add("Markov interference bound valid", worst_margin <= 0.0,
            f"max (empirical - bound) {worst_margin:.2e}")

    contexts = _sample_pair_contexts(config, seed, 60)
    p_m = config.p_hover_w
    b_sc = config.subchannel_bandwidth_hz
    ome = config.outage_factor

    # DC split identity: f1 - f2 == -EE/(1 - eps)
    worst = 0.0
    for coeff, p_sc in contexts:
        for beta in (0.1, 0.5, 0.9):
            lhs = (kernels.dc_f1(beta, coeff.q1, coeff.d1, coeff.theta2,
                                 coeff.w2, p_sc, p_m, b_sc)
                   - kernels.dc_f2(beta, coeff.theta2, coeff.w2, coeff.q2,
                                   p_sc, p_m, b_sc))
            ee = kernels.pair_ee(beta, coeff.q1, coeff.d1, coeff.theta2,
                                 coeff.w2, coeff.q2, p_sc, p_m, b_sc, ome)
            worst = max(worst, abs(lhs * ome + ee) / max(abs(ee), 1e-300))
    rep.add("DC split identity", worst <= 1e-9, f"max rel err {worst:.2e}")

    # gradient of the linearized part vs finite differences
    worst = 0.0
    for coeff, p_sc in contexts[:40]:
        beta = float(rng.uniform(0.05, 0.95))
        g = grad_fn(beta, coeff.theta2, coeff.w2, coeff.q2, p_sc, p_m, b_sc)
        fd = fd_derivative(
            lambda x: kernels.dc_f2(x, coeff.theta2, coeff.w2, coeff.q2,
                                    p_sc, p_m, b_sc), beta, rel_step=1e-6)
        worst = max(worst, abs(g - fd) / max(abs(fd), 1e-300))
    rep.add("dc_grad_f2 vs finite differences", worst <= 1e-6,
            f"max rel err {worst:.2e}")

    # DC search descends and matches a dense grid
    worst = 0.0
    for coeff, p_sc in contexts[:20]:
        beta, ee, _conv, _it = kernels.dc_optimize_beta(
            coeff.q1, coeff.d1, coeff.theta2, coeff.w2, coeff.q2, p_sc,
            p_m, b_sc, ome, config.tol_dc, config.max_iters)
        _, grid_ee = _best_beta_grid(coeff, p_sc, p_m, b_sc, ome, step=1e-4)
        worst = max(worst, (grid_ee - ee) / max(abs(grid_ee), 1e-300))
    rep.add("dc_optimize_beta vs grid", worst <= 1e-4,
            f"max rel shortfall {worst:.2e}")

    # SCA surrogate: tight at anchor, global lower bound, feasible output
    topo = generate_topology(config, seed=seed + 5)
    ch = build_channel_set(topo, config, seed=seed + 5)
    assignment = schedule_users(ch, config)
    terms = build_power_terms(assignment, ch, config)
    cons = build_power_constraints(ch, config, terms.active)
    res = allocate_power(assignment, ch, config, terms=terms)
    scale = max(abs(res.objective), 1.0)

    model = sca_surrogate(res.p, terms)
    z0, g0 = ee_power_objective(res.p, terms, with_grad=True)
    tight = abs(model.value(res.p) - z0) / scale
    gdiff = np.abs(model.grad(res.p) - g0).max() / max(np.abs(g0).max(), 1e-300)
    rep.add("surrogate tight at anchor", tight <= 1e-9 and gdiff <= 1e-6,
            f"value rel {tight:.2e}, grad rel {gdiff:.2e}")

    worst = -np.inf
    for _ in range(300):
        p = np.where(terms.active,
                     rng.uniform(0.0, 1.0, size=res.p.shape)
                     * config.p_uav_max_w / config.k_subchannels, 0.0)
        gap = model.value(p) - ee_power_objective(p, terms)
        worst = max(worst, gap / scale)
    rep.add("surrogate lower bound", worst <= 1e-9, f"max rel excess {worst:.2e}")

    mono = all(b >= a - 1e-9 * scale for a, b in zip(res.trace, res.trace[1:]))
    rep.add("SCA trace monotone", mono, f"{len(res.trace)} points")
    rep.add("power vector feasible", cons.is_feasible(res.p, rtol=1e-9),
            f"iters {res.iters}")
    return rep


# ---------------------------------------------------------------------------
# matching oracle


@dataclass
class OracleStats:
    ratios: list
    random_ratios: list

    @property
    def min_ratio(self):
        return min(self.ratios)

    @property
    def mean_ratio(self):
        return sum(self.ratios) / len(self.ratios)

    @property
    def mean_random_ratio(self):
        return sum(self.random_ratios) / len(self.random_ratios)


def score_matching(pairs, channels, config, p_sc) -> float:
    """Equal-power EE of a matching with per-pair splits grid-optimised.

    The common scoring basis for heuristic, exhaustive, and random
    matchings, so ratios compare matchings and nothing else.
    """
    p_m = config.p_hover_w
    b_sc = config.subchannel_bandwidth_hz
    ome = config.outage_factor
    total = 0.0
    for (i, k), users in pairs.items():
        if not users:
            continue
        coeff = pair_coefficients(channels, config, i, k, users)
        if len(users) == 1:
            total += kernels.single_ee(p_sc, coeff.q1, coeff.d1, p_m, b_sc, ome)
        else:
            total += _best_beta_grid(coeff, p_sc, p_m, b_sc, ome)[1]
    return total


def _random_matching(config, rng):
    pairs = {}
    for i in range(config.n_uavs):
        slots = list(range(config.k_subchannels)) * 2
        rng.shuffle(slots)
        users = list(range(config.users_per_cell))
        rng.shuffle(users)
        chan: dict[int, list[int]] = {}
        for u, k in zip(users, slots):
            chan.setdefault(int(k), []).append(int(u))
        for k, members in chan.items():
            pairs[(i, k)] = tuple(members)
    return pairs


def oracle_compare(config: ScenarioConfig | None = None, n_instances=100,
                   seed=0, n_random=20) -> OracleStats:
    """EE(matching heuristic) / EE(exhaustive) on small instances.

    Pair order inside a channel is normalised by estimated gain during
    scoring, so random matchings stay valid.  Raises SizeGuardError via
    the exhaustive search when the instance is too large.
    """
    config = config if config is not None else dataclasses.replace(
        ScenarioConfig(), users_per_cell=4, n_subchannels=2)
    rng = np.random.default_rng([seed, 23])
    p_sc = config.p_uav_max_w / config.k_subchannels
    ratios = []
    random_ratios = []
    for inst in range(n_instances):
        topo = generate_topology(config, seed=seed + inst)
        ch = build_channel_set(topo, config, seed=seed + inst)
        best_asg, best_ee = exhaustive_schedule(ch, config, p_sc=p_sc)
        asg = schedule_users(ch, config, p_sc=p_sc)
        heur = score_matching(_ordered(asg.pairs, ch), ch, config, p_sc)
        ratios.append(heur / best_ee)
        rnd = 0.0
        for _ in range(n_random):
            rnd += score_matching(_ordered(_random_matching(config, rng), ch),
                                  ch, config, p_sc)
        random_ratios.append(rnd / n_random / best_ee)
    return OracleStats(ratios=ratios, random_ratios=random_ratios)


def _ordered(pairs, channels):
    out = {}
    for (i, k), users in pairs.items():
        if len(users) == 2:
            a, b = users
            ga = float(channels.h_hat_mag2[i, a, k])
            gb = float(channels.h_hat_mag2[i, b, k])
            users = (a, b) if (ga > gb or (ga == gb and a < b)) else (b, a)
        out[(i, k)] = tuple(users)
    return out
