import json
import math

import numpy as np
import pytest

from polarvol import experiments, geom, measure
from polarvol.cli import parse_experiment_config, serialize_config
from polarvol.experiments import ConfigError, ExperimentConfig


def small_config(mode="expectation", m=None, trials=30, budget=10_000, seed=5):
    return ExperimentConfig(
        n=2,
        N=4,
        gauge=geom.LqBall(1.0, 4),
        rball=0.0,
        law_x=measure.UniformBodyDensity("cube", 2),
        m=m if m is not None else measure.LebesgueRestricted(5.0, 2),
        trials=trials,
        budget_per_trial=budget,
        seed=seed,
        mode=mode,
    )


def test_config_rejects_non_condnu2_measure_in_dominance():
    t = np.linspace(0.0, 10.0, 40)
    concave_k = measure.PowerKernel(np.column_stack([t, np.sqrt(1.0 + t)]), 2)
    with pytest.raises(ConfigError):
        small_config(mode="dominance", m=concave_k)


def test_config_rejects_bad_dimensions():
    with pytest.raises(ConfigError):
        ExperimentConfig(
            n=2,
            N=4,
            gauge=geom.LqBall(1.0, 3),  # gauge dim != N
            rball=0.0,
            law_x=measure.UniformBodyDensity("cube", 2),
            m=measure.LebesgueRestricted(5.0, 2),
            trials=10,
            budget_per_trial=1000,
            seed=0,
            mode="expectation",
        )


def test_santalo_report_shape_and_determinism():
    cfg = small_config()
    a = experiments.santalo_expectation_experiment(cfg)
    b = experiments.santalo_expectation_experiment(cfg, threads=4)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().strip().split("\n")
    assert lines[0] == "trial_index,side,value,stderr"
    assert len(lines) == 1 + 2 * cfg.trials
    assert {"mean_x", "mean_z", "stderr_x", "stderr_z", "margin", "threshold"} <= set(a.summary)


def test_dominance_small_run_passes():
    cfg = small_config(mode="dominance", m=measure.GaussianLike(1.0, 2), trials=60)
    rep = experiments.stochastic_dominance_experiment(cfg)
    assert rep.verdict
    assert rep.summary["levels"] == 50


def test_config_echo_round_trips():
    cfg = small_config()
    echoed = serialize_config(cfg)
    reparsed = parse_experiment_config(json.dumps(echoed))
    assert serialize_config(reparsed) == echoed


def test_report_self_containment():
    # re-running the echoed config reproduces every number bit-exactly
    cfg = small_config(trials=10, budget=5_000)
    rep = experiments.santalo_expectation_experiment(cfg)
    cfg2 = parse_experiment_config(json.dumps(serialize_config(cfg)))
    rep2 = experiments.santalo_expectation_experiment(cfg2)
    assert rep.to_json() == rep2.to_json()
    assert np.array_equal(rep.trials_x, rep2.trials_x)
    assert np.array_equal(rep.trials_z, rep2.trials_z)


def test_convergence_monotone_and_continuity():
    rep = experiments.convergence_experiment(n=2, seed=3)
    vals = np.asarray(rep.summary["values"])
    steps = np.asarray(rep.summary["hausdorff_steps"])
    assert rep.summary["monotone"]
    assert np.all(np.diff(vals) <= 1e-12)
    # continuity probe: value increments shrink together with the
    # hausdorff steps along the path (monotone correlation, not rate)
    diffs = -np.diff(vals)
    order = np.argsort(steps)
    assert np.corrcoef(steps, diffs)[0, 1] > 0.5
    assert diffs[order[0]] <= diffs[order[-1]] + 1e-9


def test_rearrangement_gap_ordering_three_way():
    # a non-monotone radial law, its rearrangement, and the uniform ball:
    # expected polar measures must come out ordered (within noise)
    a = 0.3
    b = math.sqrt(a * a + (1.0 - 0.1 * math.pi * a * a) / math.pi)
    law = measure.RadialStepDensity(np.array([a, b]), np.array([0.1, 1.0]), 2)
    star_fn = measure.rearrange_density(law)
    star = measure.RadialStepDensity(star_fn.breaks, star_fn.values, 2)

    means = []
    for lx in (law, star, measure.UniformBodyDensity("Dn", 2)):
        cfg = ExperimentConfig(
            n=2, N=4, gauge=geom.LqBall(1.0, 4), rball=0.0, law_x=lx,
            m=measure.LebesgueRestricted(5.0, 2),
            trials=300, budget_per_trial=20_000, seed=17, mode="expectation",
        )
        rep = experiments.santalo_expectation_experiment(cfg)
        means.append((rep.summary["mean_x"], rep.summary["stderr_x"]))
    for (m1, s1), (m2, s2) in zip(means, means[1:]):
        assert m1 <= m2 + 3 * math.hypot(s1, s2)


def test_centroid_equality_for_uniform_ball_law():
    rep = experiments.centroid_polar_experiment(
        measure.UniformBodyDensity("Dn", 2),
        p=2.0,
        m=measure.LebesgueRestricted(math.inf, 2),
        budget=60_000,
        seed=4,
    )
    assert rep.verdict
    gap = rep.summary["rhs"] - rep.summary["lhs"]
    assert abs(gap) <= 3 * rep.summary["lhs_stderr"] + 0.05 * rep.summary["rhs"]


def test_newsan_cube_closed_forms():
    # K = [-1,1]^2: |K°| = 2 and the ball side is pi^2/4
    normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    body = geom.HPolytopeBody(normals, np.ones(4))
    rep = experiments.newsan_experiment(
        body, measure.LebesgueRestricted(math.inf, 2), budget=200_000, seed=6
    )
    assert rep.verdict
    assert rep.summary["rhs"] == pytest.approx(math.pi ** 2 / 4)
    assert abs(rep.summary["lhs"] - 2.0) <= 3 * rep.summary["lhs_stderr"]


def test_newsan_cross_polytope_closed_forms():
    body = geom.HPolytopeBody(
        np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]), np.ones(4)
    )
    rep = experiments.newsan_experiment(
        body, measure.LebesgueRestricted(50.0, 2), budget=200_000, seed=6
    )
    assert rep.verdict
    assert rep.summary["rhs"] == pytest.approx(math.pi ** 2 / 2)
    assert abs(rep.summary["lhs"] - 4.0) <= 3 * rep.summary["lhs_stderr"]


def test_newsan_ball_is_equality():
    rep = experiments.newsan_experiment(
        geom.BallBody(1.3, 2), measure.GaussianLike(1.0, 2), budget=50_000, seed=8
    )
    assert rep.verdict
    assert rep.summary["lhs"] == pytest.approx(rep.summary["rhs"], abs=3 * rep.summary["lhs_stderr"] + 1e-9)
