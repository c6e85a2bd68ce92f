"""Command-line front end: JSON configs in, report.json + CSV out.

Exit codes: 0 PASS, 1 FAIL, 2 configuration error, 3 I/O failure.
All randomness flows from the config seed (or --seed override); the
--threads flag affects speed only, never results, and report.json is
byte-identical across reruns (wall-clock time is printed, not stored).
"""

from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import analysis, experiments, geom, measure
from .experiments import ConfigError, ExperimentConfig, ExperimentReport
from .geom import GeometryError
from .measure import MeasureError
from .rng import RngStream
from .volume import default_level_grid, mc_polar_measure

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# config parsing, with field-path diagnostics


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}: missing required field")
    return obj[key]


def parse_gauge(obj: dict, N: int, path: str = "gauge"):
    kind = _require(obj, "type", path)
    if kind == "lq":
        q = float(_require(obj, "q", path))
        if q < 1:
            raise ConfigError(f"{path}.q: gauge.q must be >= 1")
        return geom.LqBall(q, N)
    raise ConfigError(f"{path}.type: unknown gauge type {kind!r}")


def parse_measure(obj: dict, n: int, path: str = "measure"):
    kind = _require(obj, "kind", path)
    try:
        if kind == "lebesgue_ball":
            R = _require(obj, "R", path)
            R = math.inf if R in ("inf", None) else float(R)
            return measure.LebesgueRestricted(R, n)
        if kind == "gaussian":
            return measure.GaussianLike(float(_require(obj, "sigma", path)), n)
        if kind == "power_kernel":
            return measure.PowerKernel(np.asarray(_require(obj, "k_table", path), dtype=float), n)
    except MeasureError as e:
        raise ConfigError(f"{path}: {e}") from e
    raise ConfigError(f"{path}.kind: unknown measure kind {kind!r}")


def parse_density(obj: dict, n: int, path: str = "law"):
    kind = _require(obj, "kind", path)
    try:
        if kind == "uniform_cube":
            return measure.UniformBodyDensity("cube", n)
        if kind == "uniform_Dn":
            return measure.UniformBodyDensity("Dn", n)
        if kind == "uniform_simplex":
            return measure.UniformBodyDensity("simplex", n)
        if kind == "radial_step":
            return measure.RadialStepDensity(
                np.asarray(_require(obj, "breaks", path), dtype=float),
                np.asarray(_require(obj, "values", path), dtype=float),
                n,
            )
    except MeasureError as e:
        raise ConfigError(f"{path}: {e}") from e
    raise ConfigError(f"{path}.kind: unknown density kind {kind!r}")


def parse_body(obj: dict, path: str = "body"):
    kind = _require(obj, "kind", path)
    try:
        if kind == "matrix_image":
            cols = np.asarray(_require(obj, "columns", path), dtype=float)
            if cols.ndim != 2:
                raise ConfigError(f"{path}.columns: must be a list of equal-length vectors")
            A = cols.T  # config stores columns as rows of vectors
            gauge = parse_gauge(_require(obj, "gauge", path), A.shape[1], f"{path}.gauge")
            r = float(obj.get("r", 0.0))
            return geom.MatrixImageBody(A, gauge, r)
        if kind == "ball":
            return geom.BallBody(float(_require(obj, "R", path)), int(_require(obj, "n", path)))
        if kind == "hpolytope":
            return geom.HPolytopeBody(
                np.asarray(_require(obj, "normals", path), dtype=float),
                np.asarray(_require(obj, "offsets", path), dtype=float),
            )
    except GeometryError as e:
        raise ConfigError(f"{path}: {e}") from e
    raise ConfigError(f"{path}.kind: unknown body kind {kind!r}")


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Parse and fully validate an expectation/dominance config."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: malformed JSON ({e})") from e
    mode = _require(obj, "mode", "config")
    n = int(_require(obj, "n", "config"))
    N = int(_require(obj, "N", "config"))
    gauge = parse_gauge(_require(obj, "gauge", "config"), N)
    law = parse_density(_require(obj, "law", "config"), n)
    m = parse_measure(_require(obj, "measure", "config"), n)
    return ExperimentConfig(
        n=n,
        N=N,
        gauge=gauge,
        rball=float(obj.get("r", 0.0)),
        law_x=law,
        m=m,
        trials=int(_require(obj, "trials", "config")),
        budget_per_trial=int(_require(obj, "budget", "config")),
        seed=int(_require(obj, "seed", "config")),
        mode=mode,
    )


def serialize_config(cfg: ExperimentConfig) -> dict:
    gauge = {"type": "lq", "q": cfg.gauge.q} if isinstance(cfg.gauge, geom.LqBall) else {"type": "oracle"}
    if isinstance(cfg.m, measure.LebesgueRestricted):
        m = {"kind": "lebesgue_ball", "R": "inf" if math.isinf(cfg.m.R) else cfg.m.R}
    elif isinstance(cfg.m, measure.GaussianLike):
        m = {"kind": "gaussian", "sigma": cfg.m.sigma}
    else:
        m = {"kind": "power_kernel", "k_table": cfg.m.k_table.tolist()}
    if isinstance(cfg.law_x, measure.UniformBodyDensity):
        law = {"kind": {"cube": "uniform_cube", "Dn": "uniform_Dn", "simplex": "uniform_simplex"}[cfg.law_x.shape]}
    else:
        law = {
            "kind": "radial_step",
            "breaks": cfg.law_x.breaks.tolist(),
            "values": cfg.law_x.values.tolist(),
        }
    return {
        "mode": cfg.mode,
        "n": cfg.n,
        "N": cfg.N,
        "gauge": gauge,
        "r": cfg.rball,
        "law": law,
        "measure": m,
        "trials": cfg.trials,
        "budget": cfg.budget_per_trial,
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# named density/function registries for the analytic commands


def named_density(name: str, sigma: float = 1.0):
    if name == "gaussian":
        return lambda x: math.exp(-float(np.dot(x, x)) / (2 * sigma * sigma)), 12.0 * sigma
    if name == "uniform_square":
        return lambda x: 1.0 if np.all(np.abs(x) <= 1.0) else 0.0, 2.0
    if name == "uniform_ball":
        return lambda x: 1.0 if float(np.dot(x, x)) <= 1.0 else 0.0, 2.0
    raise ConfigError(f"density: unknown named density {name!r}")


def named_brunn_phi(name: str):
    if name == "sqrt_quadratic":
        return lambda t, x: math.sqrt(1.0 + t * t + float(np.dot(x, x)))
    if name == "exp_abs":
        return lambda t, x: math.exp(abs(t) + float(np.linalg.norm(x)))
    if name == "constant_slab":
        return lambda t, x: 1.0 if float(np.dot(x, x)) <= 1.0 else math.inf
    raise ConfigError(f"phi: unknown named profile function {name!r}")


# ---------------------------------------------------------------------------
# output plumbing


def _load_config(config_path: str) -> dict:
    try:
        text = Path(config_path).read_text()
    except OSError as e:
        click.echo(f"error: cannot read config: {e}", err=True)
        sys.exit(EXIT_IO)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: malformed JSON ({e})") from e


def _write_outputs(out_dir: str, command: str, config: dict, verdict: bool, summary: dict, csv_text: str = ""):
    payload = {
        "command": command,
        "config": config,
        "verdict": "PASS" if verdict else "FAIL",
        "summary": summary,
        "timing": None,  # wall clock printed, not stored: reports must be byte-identical
    }
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        if csv_text:
            (out / "trials.csv").write_text(csv_text)
    except OSError as e:
        click.echo(f"error: cannot write outputs: {e}", err=True)
        sys.exit(EXIT_IO)


def _finish(command: str, verdict: bool, summary_line: str, elapsed: float) -> None:
    status = "PASS" if verdict else "FAIL"
    click.echo(f"{command}: {status} {summary_line} ({elapsed:.2f}s)")
    sys.exit(EXIT_PASS if verdict else EXIT_FAIL)


def common_options(f):
    f = click.option("--config", "config_path", required=True, type=click.Path())(f)
    f = click.option("--out", "out_dir", default="out", type=click.Path())(f)
    f = click.option("--seed", default=None, type=int, help="override config seed")(f)
    f = click.option("--budget", default=None, type=int, help="override config budget")(f)
    f = click.option("--threads", default=1, type=int, help="speed only; never affects results")(f)
    return f


@click.group()
def main():
    """Estimators and experiments for measures of polar bodies."""


def _run_experiment_command(command: str, config_path, out_dir, seed, budget, threads, runner):
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        if seed is not None:
            obj["seed"] = seed
        if budget is not None:
            obj["budget"] = budget
        report = runner(obj, threads)
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_outputs(out_dir, command, report.config, report.verdict, report.summary, report.to_csv())
    _finish(command, report.verdict, json.dumps(report.summary, sort_keys=True, default=str)[:200], time.perf_counter() - t0)


@main.command("santalo")
@common_options
def santalo_cmd(config_path, out_dir, seed, budget, threads):
    """Expectation comparison against the uniform-ball extremizer."""

    def runner(obj, threads):
        obj.setdefault("mode", "expectation")
        cfg = parse_experiment_config(json.dumps(obj))
        return experiments.santalo_expectation_experiment(cfg, threads)

    _run_experiment_command("santalo", config_path, out_dir, seed, budget, threads, runner)


@main.command("dominance")
@common_options
def dominance_cmd(config_path, out_dir, seed, budget, threads):
    """Survival-curve (stochastic dominance) comparison."""

    def runner(obj, threads):
        obj.setdefault("mode", "dominance")
        cfg = parse_experiment_config(json.dumps(obj))
        return experiments.stochastic_dominance_experiment(cfg, threads)

    _run_experiment_command("dominance", config_path, out_dir, seed, budget, threads, runner)


@main.command("polar-volume")
@common_options
def polar_volume_cmd(config_path, out_dir, seed, budget, threads):
    """Monte Carlo estimate of nu(K°) for a configured body."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        body = parse_body(_require(obj, "body", "config"))
        m = parse_measure(_require(obj, "measure", "config"), body.dim)
        use_seed = seed if seed is not None else int(obj.get("seed", 0))
        use_budget = budget if budget is not None else int(obj.get("budget", 10 ** 6))
        est = mc_polar_measure(body, m, use_budget, RngStream(use_seed, 0), threads)
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    summary = est.to_dict()
    _write_outputs(out_dir, "polar-volume", obj, True, summary)
    _finish("polar-volume", True, f"value={est.value:.6g} stderr={est.stderr:.3g}", time.perf_counter() - t0)


@main.command("converge")
@common_options
def converge_cmd(config_path, out_dir, seed, budget, threads):
    """Exact polar volumes along a growing random path."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        use_seed = seed if seed is not None else int(obj.get("seed", 0))
        report = experiments.convergence_experiment(
            n=int(_require(obj, "n", "config")),
            seed=use_seed,
            schedule=obj.get("schedule", (4, 8, 16, 32, 64, 128, 256, 512)),
            band=float(obj.get("band", 0.05)),
        )
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_outputs(out_dir, "converge", report.config, report.verdict, report.summary, report.to_csv())
    _finish("converge", report.verdict, f"rel_err={report.summary['relative_error']:.4f}", time.perf_counter() - t0)


@main.command("shadow")
@common_options
def shadow_cmd(config_path, out_dir, seed, budget, threads):
    """Shadow-system profile with evenness/convexity verdicts."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        n = int(_require(obj, "n", "config"))
        base = np.asarray(_require(obj, "base_positions", "config"), dtype=float)
        theta = np.asarray(_require(obj, "theta", "config"), dtype=float)
        gauge = parse_gauge(_require(obj, "gauge", "config"), base.shape[0])
        m = parse_measure(_require(obj, "measure", "config"), n)
        cfg = analysis.ShadowConfig(theta, base, gauge, float(obj.get("r", 0.0)), m)
        direction = np.asarray(_require(obj, "direction", "config"), dtype=float)
        t_grid = np.asarray(_require(obj, "t_grid", "config"), dtype=float)
        use_seed = seed if seed is not None else int(obj.get("seed", 0))
        use_budget = budget if budget is not None else int(obj.get("budget", 10 ** 5))
        report = analysis.shadow_profile(cfg, direction, t_grid, use_budget, RngStream(use_seed, 0), threads)
    except (ConfigError, GeometryError, MeasureError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    verdict = bool(report.even) and bool(report.midpoint_convex)
    _write_outputs(out_dir, "shadow", obj, verdict, report.verdict(), report.to_csv())
    _finish("shadow", verdict, f"worst_violation={report.worst_violation:.3g}", time.perf_counter() - t0)


@main.command("busemann")
@common_options
def busemann_cmd(config_path, out_dir, seed, budget, threads):
    """Triangle-inequality battery for the hyperplane-mass gauge."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        psi, radius = named_density(
            _require(obj, "density", "config"), float(obj.get("sigma", 1.0))
        )
        pairs = int(obj.get("pairs", 200))
        use_seed = seed if seed is not None else int(obj.get("seed", 0))
        gen = RngStream(use_seed, 0).generator()
        worst = -math.inf
        hypothesis_ok = analysis.spot_check_neg_recip_concavity(psi, 2, RngStream(use_seed, 1))
        for _ in range(pairs):
            z1 = gen.uniform(-1.0, 1.0, size=2)
            z2 = gen.uniform(-1.0, 1.0, size=2)
            if np.linalg.norm(z1) < 1e-6 or np.linalg.norm(z2) < 1e-6 or np.linalg.norm(z1 + z2) < 1e-6:
                continue
            f1 = analysis.busemann_gauge(psi, z1, radius)
            f2 = analysis.busemann_gauge(psi, z2, radius)
            f12 = analysis.busemann_gauge(psi, z1 + z2, radius)
            worst = max(worst, f12 - f1 - f2)
        verdict = worst <= 1e-6
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    summary = {"worst_violation": worst, "pairs": pairs, "hypothesis_verified": hypothesis_ok}
    _write_outputs(out_dir, "busemann", obj, verdict, summary)
    _finish("busemann", verdict, f"worst={worst:.3g}", time.perf_counter() - t0)


@main.command("gauge")
@common_options
def gauge_cmd(config_path, out_dir, seed, budget, threads):
    """Homogeneity battery for the radial-integral gauges."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        f, radius = named_density(_require(obj, "density", "config"), float(obj.get("sigma", 1.0)))
        p = float(obj.get("p", 1.0))
        use_seed = seed if seed is not None else int(obj.get("seed", 0))
        gen = RngStream(use_seed, 0).generator()
        worst = 0.0
        for _ in range(int(obj.get("checks", 100))):
            x = gen.uniform(-1.0, 1.0, size=2)
            if np.linalg.norm(x) < 1e-3:
                continue
            lam = float(gen.uniform(0.5, 3.0))
            fx = analysis.ball_bobkov_gauge(f, p, x, upper=radius * 10)
            flx = analysis.ball_bobkov_gauge(f, p, lam * x, upper=radius * 10)
            worst = max(worst, abs(flx - lam * fx) / max(1e-12, lam * fx))
        verdict = worst <= 1e-9
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    summary = {"worst_relative_error": worst, "p": p}
    _write_outputs(out_dir, "gauge", obj, verdict, summary)
    _finish("gauge", verdict, f"worst={worst:.3g}", time.perf_counter() - t0)


@main.command("brunn")
@common_options
def brunn_cmd(config_path, out_dir, seed, budget, threads):
    """Convexity of the integral profile of a positive convex function."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        phi = named_brunn_phi(_require(obj, "phi", "config"))
        report = analysis.brunn_profile(
            phi,
            alpha=float(obj.get("alpha", 1.0)),
            n=int(obj.get("n", 1)),
            t_grid=np.asarray(obj.get("t_grid", np.linspace(-2, 2, 9)), dtype=float),
            domain_radius=float(obj.get("domain_radius", 30.0)),
        )
        verdict = bool(report.midpoint_convex)
    except (ConfigError, GeometryError, MeasureError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_outputs(out_dir, "brunn", obj, verdict, report.verdict(), report.to_csv())
    _finish("brunn", verdict, f"worst_violation={report.worst_violation:.3g}", time.perf_counter() - t0)


@main.command("rbll")
@common_options
def rbll_cmd(config_path, out_dir, seed, budget, threads):
    """Exhaustive small-family check of the 1-D rearrangement inequality."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        shifts = obj.get("shifts", [-2, -1, 0, 1, 2])
        worst = -math.inf
        cases = 0
        from itertools import product as iproduct

        coeff_choices = [-1.0, 0.0, 1.0]
        for k in (1, 2, 3):
            for placement in iproduct(shifts, repeat=k):
                gs = [
                    analysis.Step1D(np.array([float(a), float(a) + 1.0]), np.array([1.0]))
                    for a in placement
                ]
                for flat in iproduct(coeff_choices, repeat=k * 2):
                    coeffs = np.array(flat, dtype=float).reshape(k, 2)
                    res = analysis.rbll_check_1d(gs, coeffs, box_halfwidth=float(obj.get("box", 6.0)))
                    worst = max(worst, res["lhs"] - res["rhs"])
                    cases += 1
        verdict = worst <= 1e-9
    except (ConfigError, GeometryError, MeasureError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    summary = {"cases": cases, "worst_gap": worst}
    _write_outputs(out_dir, "rbll", obj, verdict, summary)
    _finish("rbll", verdict, f"cases={cases} worst={worst:.3g}", time.perf_counter() - t0)


@main.command("centroid")
@common_options
def centroid_cmd(config_path, out_dir, seed, budget, threads):
    """Moment-body polar comparison against the uniform-ball law."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        n = int(_require(obj, "n", "config"))
        mu = parse_density(_require(obj, "law", "config"), n)
        m = parse_measure(_require(obj, "measure", "config"), n)
        report = experiments.centroid_polar_experiment(
            mu,
            p=float(_require(obj, "p", "config")),
            m=m,
            budget=budget if budget is not None else int(obj.get("budget", 200_000)),
            seed=seed if seed is not None else int(obj.get("seed", 0)),
            threads=threads,
        )
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_outputs(out_dir, "centroid", obj, report.verdict, report.summary, report.to_csv())
    _finish("centroid", report.verdict, f"lhs={report.summary['lhs']:.6g} rhs={report.summary['rhs']:.6g}", time.perf_counter() - t0)


@main.command("newsan")
@common_options
def newsan_cmd(config_path, out_dir, seed, budget, threads):
    """Polar-measure comparison of a body against its volume-matched ball."""
    t0 = time.perf_counter()
    try:
        obj = _load_config(config_path)
        body = parse_body(_require(obj, "body", "config"))
        m = parse_measure(_require(obj, "measure", "config"), body.dim)
        report = experiments.newsan_experiment(
            body,
            m,
            budget=budget if budget is not None else int(obj.get("budget", 200_000)),
            seed=seed if seed is not None else int(obj.get("seed", 0)),
            threads=threads,
        )
    except (ConfigError, GeometryError, MeasureError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_outputs(out_dir, "newsan", obj, report.verdict, report.summary, report.to_csv())
    _finish("newsan", report.verdict, f"lhs={report.summary['lhs']:.6g} rhs={report.summary['rhs']:.6g}", time.perf_counter() - t0)


if __name__ == "__main__":
    main()
