import dataclasses

import pytest

from skynoma.errors import ConfigError
from skynoma.harness import (
    PRESETS,
    ExperimentSpec,
    make_spec,
    oracle_compare,
    run_experiment,
    validate,
)
from skynoma.scenario import ScenarioConfig


@pytest.fixture(scope="module")
def tiny():
    # enough structure to exercise every code path, cheap enough to sweep
    return dataclasses.replace(
        ScenarioConfig(), users_per_cell=4, n_uavs=2, n_macro_users=5,
        n_subchannels=2)


def test_presets_build():
    for name in PRESETS:
        spec = make_spec(name, trials=3, seed=1)
        assert spec.preset == name
        assert spec.trials == 3
        assert spec.seed == 1
        assert len(spec.sweep_values) >= 1
    assert make_spec("fig9").sweep_values == [100.0 + 50.0 * j for j in range(9)]
    assert make_spec("fig6").base_config.p_uav_max_w == 5.0
    assert make_spec("fig7").base_config.p_uav_max_w == 10.0
    with pytest.raises(ConfigError):
        make_spec("fig99")


def test_spec_rejects_bad_inputs(tiny):
    with pytest.raises(ConfigError):
        ExperimentSpec(preset="x", sweep_variable="users_per_cell",
                       sweep_values=[4], schemes=("proposed",), trials=0,
                       base_config=tiny)
    with pytest.raises(ConfigError):
        ExperimentSpec(preset="x", sweep_variable="users_per_cell",
                       sweep_values=[4], schemes=("magic",), trials=1,
                       base_config=tiny)
    with pytest.raises(ConfigError):
        ExperimentSpec(preset="x", sweep_variable="users_per_cell",
                       sweep_values=[4, -2], schemes=("proposed",), trials=1,
                       base_config=tiny)


def test_run_experiment_sweep(tiny, tmp_path):
    out = tmp_path / "sweep.csv"
    spec = ExperimentSpec(
        preset="custom", sweep_variable="p_hover_w", sweep_values=[0.3, 0.6],
        schemes=("proposed", "ofdma"), trials=2, base_config=tiny,
        output_path=str(out), seed=5)
    res = run_experiment(spec)
    assert not res.failures
    assert len(res.rows) == 2 * 2            # values x schemes
    assert len(res.samples) == 2 * 2 * 2     # values x schemes x trials
    for row in res.rows:
        assert row["trials"] == 2
        assert row["mean_ee"] > 0
    # lower hover power -> better EE, scheme by scheme
    by = {(r["p_hover_w"], r["scheme"]): r["mean_ee"] for r in res.rows}
    assert by[(0.3, "proposed")] > by[(0.6, "proposed")]
    assert by[(0.3, "ofdma")] > by[(0.6, "ofdma")]

    text = out.read_text()
    assert text == res.csv_text
    lines = text.splitlines()
    assert lines[0] == "# preset=custom"
    assert "# trials=2" in lines
    assert "# p_uav_max_w=5.0" in lines      # full config echo
    header = next(l for l in lines if not l.startswith("#"))
    assert header == "p_hover_w,scheme,mean_ee,stderr,trials"
    data = [l for l in lines if not l.startswith("#")][1:]
    assert len(data) == len(res.rows)


def test_run_experiment_deterministic_and_parallel(tiny):
    spec = lambda w: ExperimentSpec(  # noqa: E731
        preset="custom", sweep_variable="sigma_e2", sweep_values=[0.01, 0.2],
        schemes=("proposed",), trials=3, base_config=tiny, seed=2, workers=w)
    a = run_experiment(spec(1))
    b = run_experiment(spec(1))
    c = run_experiment(spec(2))
    assert a.csv_text == b.csv_text
    assert a.csv_text == c.csv_text  # worker count must not leak into results


def test_run_experiment_iteration_trace(tiny):
    spec = ExperimentSpec(
        preset="custom", sweep_variable="iteration", sweep_values=[None],
        schemes=("proposed", "noma_dc"), trials=3, base_config=tiny, seed=3)
    res = run_experiment(spec)
    prop = [r for r in res.rows if r["scheme"] == "proposed"]
    assert [r["iteration"] for r in prop] == list(range(len(prop)))
    means = [r["mean_ee"] for r in prop]
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(means, means[1:]))
    assert means[-1] > means[0]
    assert "iteration,scheme,mean_ee,stderr,trials" in res.csv_text


def test_validate_passes_default():
    rep = validate(seed=0)
    assert rep.passed, rep.render()
    names = [c.name for c in rep.checks]
    assert "marcum_q1 vs quadrature" in names
    assert "Markov interference bound valid" in names
    assert "surrogate lower bound" in names
    text = rep.render()
    assert "[PASS]" in text and "overall: PASS" in text


def test_validate_catches_wrong_gradient():
    from skynoma._backend import kernels

    def sign_flipped(beta, theta2, w2, q2, p_sc, p_m, b_sc):
        return -kernels.dc_grad_f2(beta, theta2, w2, q2, p_sc, p_m, b_sc)

    rep = validate(seed=0, grad_fn=sign_flipped)
    assert not rep.passed
    bad = {c.name: c for c in rep.checks}["dc_grad_f2 vs finite differences"]
    assert not bad.passed
    assert "[FAIL]" in rep.render()


def test_validate_perfect_csi_skips():
    cfg = dataclasses.replace(ScenarioConfig(), sigma_e2=0.0)
    rep = validate(config=cfg, seed=0)
    assert rep.passed
    skipped = {c.name for c in rep.checks if c.skipped}
    assert skipped == {"fading_cdf vs Monte Carlo", "quantile round trip",
                       "outage transform conservative"}
    assert "[SKIP]" in rep.render()


def test_oracle_compare_small():
    stats = oracle_compare(n_instances=4, seed=0, n_random=5)
    assert stats.min_ratio <= 1.0 + 1e-9
    assert stats.mean_ratio > stats.mean_random_ratio
    assert 0.0 < stats.mean_ratio <= 1.0 + 1e-9


def test_oracle_compare_trivial_instance_is_exact():
    # two users on one channel: only one matching exists, so the heuristic
    # must reproduce the exhaustive optimum identically
    cfg = dataclasses.replace(
        ScenarioConfig(), users_per_cell=2, n_subchannels=1, n_uavs=2,
        n_macro_users=4)
    stats = oracle_compare(config=cfg, n_instances=3, seed=1, n_random=2)
    assert stats.ratios == [1.0, 1.0, 1.0]
