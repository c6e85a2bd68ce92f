"""Reproducible statistical experiments on measures of random polars.

Every experiment is driven by a single seed; X-side and Z-side trials
use disjoint streams but shared grids, and verdicts use one-sided
3-sigma margins: the underlying statements are inequalities in
expectation/distribution, so Monte Carlo can only certify them up to
noise.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import measure as measure_mod
from .geom import (
    Body,
    BallBody,
    CoefficientGauge,
    DirectionGrid,
    GeometryError,
    HPolytopeBody,
    LqBall,
    MatrixImageBody,
    SupportOracleBody,
    hausdorff_estimate,
    unit_ball_volume,
)
from .measure import (
    PnDensity,
    RadialMeasure,
    UniformBodyDensity,
    check_condnu2,
    dn_radius,
    radial_mass_in_ball,
    sample_density,
    sample_uniform_ball,
)
from .rng import RngStream
from .volume import exact_polar_volume_crosspoly, halfspace_volume, mc_polar_measure

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "ConfigError",
    "santalo_expectation_experiment",
    "stochastic_dominance_experiment",
    "convergence_experiment",
    "centroid_polar_experiment",
    "newsan_experiment",
    "centroid_body_oracle",
    "body_volume_exact",
]

MODES = ("expectation", "dominance", "convergence", "centroid", "newsan")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    N: int
    gauge: CoefficientGauge
    rball: float
    law_x: PnDensity
    m: RadialMeasure
    trials: int
    budget_per_trial: int
    seed: int
    mode: str
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: unknown mode {self.mode!r}")
        if self.n < 1 or self.N < 1:
            raise ConfigError("n, N: must be >= 1")
        if self.trials < 1 or self.budget_per_trial < 1:
            raise ConfigError("trials, budget: must be >= 1")
        if self.law_x.dim != self.n or self.m.dim != self.n:
            raise ConfigError("law/measure: dimension must equal n")
        if self.gauge.dim != self.N:
            raise ConfigError("gauge: dimension must equal N")
        if self.mode in ("expectation", "dominance"):
            if isinstance(self.gauge, LqBall):
                pass  # LqBall is always unconditional
            elif not self.gauge.unconditional:
                raise ConfigError("gauge: must be unconditional in expectation/dominance mode")
        if self.mode == "dominance":
            grid = np.linspace(1e-6, 10.0, 64)
            flags = check_condnu2(self.m, grid)
            if not (flags["decreasing"] and flags["condnu2"]):
                raise ConfigError(
                    "measure: dominance mode needs a decreasing rho with convex rho^(-1/(n+1))"
                )


@dataclass
class ExperimentReport:
    mode: str
    config: dict
    seed: int
    verdict: bool
    summary: dict
    trials_x: list = field(default_factory=list)
    trials_z: list = field(default_factory=list)
    survival: Optional[dict] = None
    wall_clock: float = 0.0  # informational only, never serialized

    def to_json(self) -> str:
        payload = {
            "mode": self.mode,
            "config": self.config,
            "seed": self.seed,
            "verdict": "PASS" if self.verdict else "FAIL",
            "summary": self.summary,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["trial_index,side,value,stderr"]
        for i, (v, s) in enumerate(self.trials_x):
            lines.append(f"{i},X,{v!r},{s!r}")
        for i, (v, s) in enumerate(self.trials_z):
            lines.append(f"{i},Z,{v!r},{s!r}")
        return "\n".join(lines) + "\n"


def _trial_values(cfg: ExperimentConfig, threads: int = 1):
    """Per-trial ν(polar) draws for the X side and the Z side.

    Stream layout: trial i uses streams 4i..4i+3 (X points, X
    estimator, Z points, Z estimator), so the two sides and any subset
    of trials are reproducible in isolation.
    """
    n, N = cfg.n, cfg.N
    rn = dn_radius(n)
    vx, vz = [], []
    for i in range(cfg.trials):
        pts_x = np.atleast_2d(sample_density(cfg.law_x, RngStream(cfg.seed, 4 * i), size=N))
        body_x = MatrixImageBody(pts_x.T, cfg.gauge, cfg.rball)
        est_x = mc_polar_measure(body_x, cfg.m, cfg.budget_per_trial, RngStream(cfg.seed, 4 * i + 1), threads)
        pts_z = np.atleast_2d(sample_uniform_ball(n, rn, RngStream(cfg.seed, 4 * i + 2), size=N))
        body_z = MatrixImageBody(pts_z.T, cfg.gauge, cfg.rball)
        est_z = mc_polar_measure(body_z, cfg.m, cfg.budget_per_trial, RngStream(cfg.seed, 4 * i + 3), threads)
        vx.append((est_x.value, est_x.stderr))
        vz.append((est_z.value, est_z.stderr))
    return vx, vz


def _config_echo(cfg: ExperimentConfig) -> dict:
    from .cli import serialize_config  # late import: cli owns the schema

    return serialize_config(cfg)


def santalo_expectation_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Compare E[ν(polar)] for columns drawn from law_x vs uniform(D_n).

    PASS iff mean_Z - mean_X >= -3·(combined stderr of the two means).
    """
    if cfg.mode != "expectation":
        raise ConfigError("mode: expected 'expectation'")
    t0 = time.perf_counter()
    vx, vz = _trial_values(cfg, threads)
    ax = np.array([v for v, _ in vx])
    az = np.array([v for v, _ in vz])
    mean_x, mean_z = float(ax.mean()), float(az.mean())
    se_x = float(ax.std(ddof=1) / math.sqrt(len(ax))) if len(ax) > 1 else math.inf
    se_z = float(az.std(ddof=1) / math.sqrt(len(az))) if len(az) > 1 else math.inf
    combined = math.sqrt(se_x ** 2 + se_z ** 2)
    verdict = (mean_z - mean_x) >= -3.0 * combined
    report = ExperimentReport(
        mode="expectation",
        config=_config_echo(cfg),
        seed=cfg.seed,
        verdict=bool(verdict),
        summary={
            "mean_x": mean_x,
            "mean_z": mean_z,
            "stderr_x": se_x,
            "stderr_z": se_z,
            "margin": mean_z - mean_x,
            "threshold": -3.0 * combined,
            "trials": cfg.trials,
        },
        trials_x=vx,
        trials_z=vz,
    )
    report.wall_clock = time.perf_counter() - t0
    return report


def stochastic_dominance_experiment(
    cfg: ExperimentConfig, threads: int = 1, levels: int = 50
) -> ExperimentReport:
    """Survival-curve ordering S_X(t) <= S_Z(t) on a shared level grid.

    PASS iff S_X(t) <= S_Z(t) + 3·(combined binomial SE) at every grid
    point.
    """
    if cfg.mode != "dominance":
        raise ConfigError("mode: expected 'dominance'")
    t0 = time.perf_counter()
    vx, vz = _trial_values(cfg, threads)
    ax = np.array([v for v, _ in vx])
    az = np.array([v for v, _ in vz])
    pooled = np.concatenate([ax, az])
    tgrid = np.linspace(float(pooled.min()), float(pooled.max()), levels)
    T = len(ax)
    s_x = np.array([(ax >= t).mean() for t in tgrid])
    s_z = np.array([(az >= t).mean() for t in tgrid])
    se = np.sqrt(s_x * (1 - s_x) / T + s_z * (1 - s_z) / T)
    gaps = s_x - s_z - 3.0 * se
    verdict = bool(np.all(gaps <= 1e-12))
    report = ExperimentReport(
        mode="dominance",
        config=_config_echo(cfg),
        seed=cfg.seed,
        verdict=verdict,
        summary={
            "levels": levels,
            "worst_gap": float(gaps.max()),
            "trials": cfg.trials,
        },
        trials_x=vx,
        trials_z=vz,
        survival={
            "t": tgrid.tolist(),
            "s_x": s_x.tolist(),
            "s_z": s_z.tolist(),
        },
    )
    report.wall_clock = time.perf_counter() - t0
    return report


def convergence_experiment(
    n: int,
    seed: int,
    schedule: Sequence[int] = (4, 8, 16, 32, 64, 128, 256, 512),
    band: float = 0.05,
) -> ExperimentReport:
    """Exact polar volumes along one seeded path of D_n samples.

    The polar volume of conv{±Z_1..±Z_N} is pathwise nonincreasing in N
    (set inclusion) and approaches |D_n°| = ω_n²; PASS iff both hold,
    the limit within the given relative band at the final N.
    """
    if n not in (2, 3):
        raise ConfigError("n: exact convergence oracle needs n in {2, 3}")
    t0 = time.perf_counter()
    schedule = sorted(schedule)
    pts = np.atleast_2d(sample_uniform_ball(n, dn_radius(n), RngStream(seed, 0), size=schedule[-1]))
    values, dists = [], []
    prev_body = None
    for N in schedule:
        sub = pts[:N]
        values.append(exact_polar_volume_crosspoly(sub))
        body = MatrixImageBody(sub.T, LqBall(1.0, N), 0.0)
        if prev_body is not None:
            dists.append(hausdorff_estimate(prev_body, body, DirectionGrid.default(n)))
        prev_body = body
    target = unit_ball_volume(n) ** 2
    monotone = all(values[i + 1] <= values[i] + 1e-12 for i in range(len(values) - 1))
    rel_err = abs(values[-1] - target) / target
    verdict = monotone and rel_err <= band
    report = ExperimentReport(
        mode="convergence",
        config={"n": n, "schedule": list(schedule), "band": band},
        seed=seed,
        verdict=bool(verdict),
        summary={
            "values": values,
            "target": target,
            "relative_error": rel_err,
            "monotone": monotone,
            "hausdorff_steps": dists,
        },
        trials_x=[(v, 0.0) for v in values],
    )
    report.wall_clock = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# centroid bodies


def _sphere_nodes(n: int, count: int):
    """Quadrature nodes/weights for the uniform probability measure on S^{n-1}."""
    if n == 2:
        ang = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
        w = np.full(count, 1.0 / count)
        return pts, w
    if n == 3:
        k = max(4, int(math.sqrt(count)))
        x, wx = np.polynomial.legendre.leggauss(k)  # cos(polar angle)
        phi = np.linspace(0.0, 2 * math.pi, 2 * k, endpoint=False)
        pts, w = [], []
        for xi, wi in zip(x, wx):
            s = math.sqrt(1 - xi * xi)
            for ph in phi:
                pts.append([s * math.cos(ph), s * math.sin(ph), xi])
                w.append(wi / (2 * len(phi)))
        return np.array(pts), np.array(w)
    raise ConfigError("sphere quadrature implemented for n in {2, 3}")


def _density_nodes(mu: PnDensity):
    """Quadrature nodes (m, n) and weights for ∫ h dμ."""
    n = mu.dim
    if isinstance(mu, UniformBodyDensity) and mu.shape == "cube":
        k = 48 if n == 2 else 16
        x, w = np.polynomial.legendre.leggauss(k)
        x = 0.5 * x  # map [-1, 1] -> [-1/2, 1/2]
        w = 0.5 * w
        grids = np.meshgrid(*([x] * n), indexing="ij")
        pts = np.column_stack([g.ravel() for g in grids])
        ws = np.prod(np.meshgrid(*([w] * n), indexing="ij"), axis=0).ravel()
        return pts, ws
    # radial kinds: tensor radial Gauss x sphere rule, weighted by f(t) t^{n-1}
    if isinstance(mu, UniformBodyDensity) and mu.shape == "Dn":
        step = measure_mod.RadialStepFn(np.array([dn_radius(n)]), np.array([1.0]), n)
    elif isinstance(mu, UniformBodyDensity):
        raise ConfigError("centroid oracle supports cube, Dn and radial_step laws")
    else:
        step = mu.as_step()
    sphere, sw = _sphere_nodes(n, 256 if n == 2 else 256)
    surface = n * unit_ball_volume(n)
    pts_list, w_list = [], []
    edges = np.concatenate([[0.0], step.breaks])
    x, w = np.polynomial.legendre.leggauss(32)
    for j, val in enumerate(step.values):
        if val <= 0:
            continue
        lo, hi = edges[j], edges[j + 1]
        t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * w * val * t ** (n - 1) * surface
        for ti, wi in zip(t, wt):
            pts_list.append(ti * sphere)
            w_list.append(wi * sw)
    pts = np.vstack(pts_list)
    ws = np.concatenate(w_list)
    return pts, ws


def centroid_body_oracle(mu: PnDensity, p: float) -> SupportOracleBody:
    """Support oracle of the moment body h(y) = (∫ |<x,y>|^p dμ)^{1/p}."""
    if p < 1:
        raise ConfigError("p: must be >= 1")
    nodes, weights = _density_nodes(mu)
    wsum = float(weights.sum())
    if abs(wsum - 1.0) > 1e-6:
        raise ConfigError(f"density quadrature mass {wsum:.8f} != 1")
    weights = weights / wsum

    def evaluator(Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        out = np.empty(Y.shape[0])
        block = 8192
        for i in range(0, Y.shape[0], block):
            sub = Y[i : i + block]
            out[i : i + block] = (weights @ np.abs(nodes @ sub.T) ** p) ** (1.0 / p)
        return out

    return SupportOracleBody(evaluator, mu.dim)


def centroid_polar_experiment(
    mu: PnDensity,
    p: float,
    m: RadialMeasure,
    budget: int = 200_000,
    seed: int = 0,
    threads: int = 1,
) -> ExperimentReport:
    """Test ν(Z_p(μ)°) <= ν(Z_p(λ_{D_n})°) at 3-sigma."""
    t0 = time.perf_counter()
    n = mu.dim
    body_mu = centroid_body_oracle(mu, p)
    ref = centroid_body_oracle(UniformBodyDensity("Dn", n), p)
    # Z_p of the uniform ball law is a centered ball; its radius is the
    # support value in any direction
    e1 = np.zeros(n)
    e1[0] = 1.0
    radius = float(ref.evaluator(e1[None, :])[0])
    rhs = radial_mass_in_ball(m, 1.0 / radius)
    est = mc_polar_measure(body_mu, m, budget, RngStream(seed, 0), threads)
    verdict = est.value <= rhs + 3.0 * est.stderr
    report = ExperimentReport(
        mode="centroid",
        config={"p": p, "budget": budget},
        seed=seed,
        verdict=bool(verdict),
        summary={
            "lhs": est.value,
            "lhs_stderr": est.stderr,
            "rhs": rhs,
            "ball_radius": radius,
        },
        trials_x=[(est.value, est.stderr)],
        trials_z=[(rhs, 0.0)],
    )
    report.wall_clock = time.perf_counter() - t0
    return report


def body_volume_exact(body: Body) -> float:
    """|K| for the body kinds with a closed-form or low-dim exact volume."""
    if isinstance(body, BallBody):
        return unit_ball_volume(body.dim) * body.R ** body.dim
    if isinstance(body, HPolytopeBody):
        return halfspace_volume(body.normals, body.offsets)
    if isinstance(body, MatrixImageBody):
        if not (isinstance(body.gauge, LqBall) and body.gauge.q == 1.0 and body.rball == 0.0):
            raise GeometryError("exact |K| available for cross-polytope images only")
        if body.dim > 3:
            raise GeometryError("exact |K| implemented for n <= 3")
        from scipy.spatial import ConvexHull

        pts = body.matrix.T
        return float(ConvexHull(np.vstack([pts, -pts])).volume)
    raise GeometryError(f"no exact volume for {type(body)!r}")


def newsan_experiment(
    body: Body,
    m: RadialMeasure,
    budget: int = 200_000,
    seed: int = 0,
    threads: int = 1,
) -> ExperimentReport:
    """Test ν(K°) <= ν((t_K B)°) where t_K matches |K| to a ball volume."""
    t0 = time.perf_counter()
    n = body.dim
    vol_k = body_volume_exact(body)
    if not math.isfinite(vol_k) or vol_k <= 0:
        raise GeometryError("newsan needs a bounded body of positive volume")
    t_k = (vol_k / unit_ball_volume(n)) ** (1.0 / n)
    rhs = radial_mass_in_ball(m, 1.0 / t_k)
    est = mc_polar_measure(body, m, budget, RngStream(seed, 0), threads)
    verdict = est.value <= rhs + 3.0 * est.stderr
    report = ExperimentReport(
        mode="newsan",
        config={"budget": budget},
        seed=seed,
        verdict=bool(verdict),
        summary={
            "lhs": est.value,
            "lhs_stderr": est.stderr,
            "rhs": rhs,
            "t_k": t_k,
            "volume_k": vol_k,
        },
        trials_x=[(est.value, est.stderr)],
        trials_z=[(rhs, 0.0)],
    )
    report.wall_clock = time.perf_counter() - t0
    return report
