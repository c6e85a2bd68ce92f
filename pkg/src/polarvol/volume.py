"""Estimators of ν(K°): Monte Carlo with honest error bars, a
layer-cake reduction to balls, and an exact oracle in dimensions 2, 3.

Monte Carlo runs are chunked into fixed 2^16-sample blocks, chunk k
drawing from stream sub-key k, and merged in chunk order; the result is
bit-identical for a given (seed, stream, budget) no matter how many
workers execute the chunks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import integrate

from . import measure
from .geom import (
    Body,
    GeometryError,
    UnboundedBody,
    polar_contains,
    polar_sampling_radius,
    unit_ball_volume,
)
from .measure import InfiniteMass, RadialMeasure, rho_eval, total_mass
from .rng import RngStream

__all__ = [
    "Estimate",
    "EstimationError",
    "mc_polar_measure",
    "layer_cake_measure",
    "exact_polar_volume_crosspoly",
    "halfspace_volume",
    "default_level_grid",
    "CHUNK",
]

CHUNK = 1 << 16


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int
    seed: int
    streams: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _merge_chunks(chunks):
    """Welford combination of per-chunk (count, mean, M2), in order."""
    count, mean, m2 = 0, 0.0, 0.0
    for c, mu, s2 in chunks:
        if c == 0:
            continue
        delta = mu - mean
        tot = count + c
        mean += delta * c / tot
        m2 += s2 + delta * delta * count * c / tot
        count = tot
    return count, mean, m2


def _chunk_stats(values: np.ndarray):
    c = values.size
    mu = float(values.mean())
    m2 = float(((values - mu) ** 2).sum())
    return c, mu, m2


def _run_chunks(budget: int, worker, threads: int = 1):
    sizes = []
    left = int(budget)
    while left > 0:
        take = min(CHUNK, left)
        sizes.append(take)
        left -= take
    if threads <= 1:
        results = [worker(k, sz) for k, sz in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, range(len(sizes)), sizes))
    count, mean, m2 = _merge_chunks(results)
    var = m2 / (count - 1) if count > 1 else 0.0
    stderr = math.sqrt(var / count) if count > 0 else math.inf
    return mean, stderr, count, len(sizes)


def mc_polar_measure(
    body: Body,
    m: RadialMeasure,
    budget: int,
    rng: RngStream,
    threads: int = 1,
) -> "Estimate":
    """Monte Carlo estimate of ν(K°) with its standard error.

    Bounded polar: sample uniformly in a certified bounding ball and
    average ρ(|Y|)·1{Y ∈ K°} times the ball volume.  Unbounded polar
    with finite-mass ν: sample Y ~ ν/ν(R^n) and average the membership
    indicator times the total mass.  Refuses when neither applies.
    """
    if body.dim != m.dim:
        raise EstimationError("body and measure dimensions differ")
    n = body.dim
    try:
        rstar = polar_sampling_radius(body)
    except UnboundedBody:
        rstar = math.inf
    if math.isfinite(rstar):
        vol_box = unit_ball_volume(n) * rstar ** n

        def worker(k: int, size: int):
            gen = rng.chunk_generator(k)
            dirs = gen.standard_normal((size, n))
            dirs /= np.linalg.norm(dirs, axis=1)[:, None]
            Y = dirs * (rstar * gen.random(size) ** (1.0 / n))[:, None]
            w = rho_eval(m, np.linalg.norm(Y, axis=1))
            v = vol_box * w * polar_contains(body, Y)
            return _chunk_stats(v)

        mean, stderr, count, nstreams = _run_chunks(budget, worker, threads)
        return Estimate(mean, stderr, count, rng.seed, nstreams)

    mass = total_mass(m)
    if math.isinf(mass):
        raise EstimationError(
            "polar is unbounded and the measure has infinite mass: "
            "no rigorous estimator applies to this configuration"
        )

    def worker(k: int, size: int):
        gen = rng.chunk_generator(k)
        pts = _radial_measure_chunk(m, gen, size)
        v = mass * polar_contains(body, pts).astype(float)
        return _chunk_stats(v)

    mean, stderr, count, nstreams = _run_chunks(budget, worker, threads)
    return Estimate(mean, stderr, count, rng.seed, nstreams)


def _radial_measure_chunk(m: RadialMeasure, gen: np.random.Generator, size: int) -> np.ndarray:
    """ν-normalized sample of given size from an explicit generator."""
    n = m.dim
    if isinstance(m, measure.LebesgueRestricted):
        dirs = gen.standard_normal((size, n))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        return dirs * (m.R * gen.random(size) ** (1.0 / n))[:, None]
    hi = measure.level_radius(m, float(rho_eval(m, 0.0)) * 1e-12)
    if math.isinf(hi):
        hi = 1e6
    ts = np.concatenate([[0.0], np.geomspace(hi * 1e-6, hi, 4095)])
    dens = rho_eval(m, ts) * ts ** (n - 1)
    cdf = integrate.cumulative_trapezoid(dens, ts, initial=0.0)
    cdf /= cdf[-1]
    radii = np.interp(gen.random(size), cdf, ts)
    dirs = gen.standard_normal((size, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return dirs * radii[:, None]


def default_level_grid(m: RadialMeasure, levels: int = 64) -> np.ndarray:
    """Geometric grid of 64 levels between ρ(0) and ρ(0)·1e-6."""
    top = float(rho_eval(m, 0.0))
    return np.geomspace(top * 1e-6, top, levels)


def layer_cake_measure(
    body: Body,
    m: RadialMeasure,
    level_grid: np.ndarray,
    budget: int,
    rng: RngStream,
    threads: int = 1,
) -> Estimate:
    """ν(K°) via ν(A) = ∫_0^{ρ(0)} |A ∩ R(t)B_2^n| dt.

    Each level's ball intersection is estimated on shared sample
    points; the per-point estimator integrates the level indicator so
    the reported stderr is honest.
    """
    if body.dim != m.dim:
        raise EstimationError("body and measure dimensions differ")
    n = body.dim
    levels = np.sort(np.asarray(level_grid, dtype=float))
    top = float(rho_eval(m, 0.0))
    if not math.isfinite(top):
        raise EstimationError("layer cake needs finite rho(0)")
    if levels.size < 1 or levels[0] <= 0 or levels[-1] > top * (1 + 1e-12):
        raise EstimationError("level grid must lie in (0, rho(0)]")
    radii = np.array([measure.level_radius(m, float(t)) for t in levels])
    try:
        r_polar = polar_sampling_radius(body)
    except UnboundedBody:
        r_polar = math.inf
    r_box = min(r_polar, float(radii.max()))
    if math.isinf(r_box):
        raise EstimationError("both the polar and the top superlevel ball are unbounded")
    vol_box = unit_ball_volume(n) * r_box ** n

    # trapezoid weights over [0, top], approximating the head
    # [0, levels[0]] by the value at levels[0]
    grid_t = np.concatenate([[0.0], levels, [top]]) if levels[-1] < top else np.concatenate([[0.0], levels])
    grid_r = np.concatenate([[radii.max()], radii, [measure.level_radius(m, top)]]) if levels[-1] < top else np.concatenate([[radii.max()], radii])
    weights = np.zeros_like(grid_t)
    for j in range(len(grid_t) - 1):
        h = grid_t[j + 1] - grid_t[j]
        weights[j] += 0.5 * h
        weights[j + 1] += 0.5 * h

    def worker(k: int, size: int):
        gen = rng.chunk_generator(k)
        dirs = gen.standard_normal((size, n))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        Y = dirs * (r_box * gen.random(size) ** (1.0 / n))[:, None]
        inside = polar_contains(body, Y)
        rY = np.linalg.norm(Y, axis=1)
        # tau(s) = quadrature weight of {t : R(t) >= s}
        in_levels = rY[:, None] <= np.minimum(grid_r, r_box)[None, :]
        tau = in_levels @ weights
        v = vol_box * inside * tau
        return _chunk_stats(v)

    mean, stderr, count, nstreams = _run_chunks(budget, worker, threads)
    return Estimate(mean, stderr, count, rng.seed, nstreams)


# ---------------------------------------------------------------------------
# exact polytope volumes, n <= 3


def _clip_polygon(poly: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by {<a, y> <= b}."""
    if poly.shape[0] == 0:
        return poly
    d = poly @ a - b
    out = []
    k = poly.shape[0]
    for i in range(k):
        j = (i + 1) % k
        pi, pj = poly[i], poly[j]
        di, dj = d[i], d[j]
        if di <= 1e-12:
            out.append(pi)
        if (di < -1e-12 and dj > 1e-12) or (di > 1e-12 and dj < -1e-12):
            t = di / (di - dj)
            out.append(pi + t * (pj - pi))
    return np.array(out) if out else np.empty((0, 2))


def _shoelace(poly: np.ndarray) -> float:
    if poly.shape[0] < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def halfspace_volume(normals: np.ndarray, offsets: np.ndarray) -> float:
    """Exact volume of {y : <a_i, y> <= b_i} in dimension 1, 2 or 3.

    The polytope must be bounded; raises GeometryError otherwise.
    n = 2 uses half-plane clipping of a bounding square then shoelace;
    n = 3 uses facet-triple vertex enumeration and hull decomposition.
    """
    A = np.atleast_2d(np.asarray(normals, dtype=float))
    b = np.asarray(offsets, dtype=float)
    n = A.shape[1]
    if n == 1:
        lo, hi = -math.inf, math.inf
        for ai, bi in zip(A[:, 0], b):
            if ai > 1e-15:
                hi = min(hi, bi / ai)
            elif ai < -1e-15:
                lo = max(lo, bi / ai)
            elif bi < 0:
                return 0.0
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise GeometryError("unbounded 1-D halfspace intersection")
        return max(0.0, hi - lo)
    # bounding radius from the smallest singular value of the active rows
    sigma_min = float(np.linalg.svd(A, compute_uv=False).min()) if A.shape[0] >= n else 0.0
    if sigma_min < 1e-12:
        raise GeometryError("halfspace normals do not span; polytope unbounded")
    bound = math.sqrt(A.shape[0]) * float(np.abs(b).max(initial=1.0)) / sigma_min + 1.0
    if n == 2:
        L = bound
        # grow the clipping square until no vertex touches it, so the
        # result is the true (bounded) intersection
        for _ in range(60):
            poly = np.array([[-L, -L], [L, -L], [L, L], [-L, L]])
            for ai, bi in zip(A, b):
                poly = _clip_polygon(poly, ai, float(bi))
                if poly.shape[0] == 0:
                    return 0.0
            if np.abs(poly).max() < L - 1e-9:
                return _shoelace(poly)
            L *= 4.0
        raise GeometryError("2-D halfspace intersection appears unbounded")
    if n == 3:
        verts = []
        for idx in combinations(range(A.shape[0]), 3):
            sub = A[list(idx)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            v = np.linalg.solve(sub, b[list(idx)])
            if np.all(A @ v <= b + 1e-9):
                verts.append(v)
        if len(verts) < 4:
            return 0.0
        pts = np.array(verts)
        dedup = []
        for v in pts:
            if not any(np.linalg.norm(v - w) < 1e-9 for w in dedup):
                dedup.append(v)
        if len(dedup) < 4:
            return 0.0
        from scipy.spatial import ConvexHull, QhullError

        try:
            return float(ConvexHull(np.array(dedup)).volume)
        except QhullError:
            return float(ConvexHull(np.array(dedup), qhull_options="QJ Pp").volume)
    raise GeometryError("exact halfspace volume implemented for n <= 3 only")


def exact_polar_volume_crosspoly(points: np.ndarray) -> float:
    """Exact |K°| for K = conv{±x_1, ..., ±x_N}, n in {2, 3}.

    K° = {y : |<x_i, y>| <= 1 for all i}; rank-deficient point sets
    make the polar a slab of infinite volume and raise GeometryError.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = P.shape[1]
    if n not in (2, 3):
        raise GeometryError("exact polar volume implemented for n in {2, 3}")
    if np.linalg.matrix_rank(P, tol=1e-10) < n:
        raise UnboundedBody("points do not span; polar volume is infinite")
    A = np.vstack([P, -P])
    b = np.ones(A.shape[0])
    return halfspace_volume(A, b)
