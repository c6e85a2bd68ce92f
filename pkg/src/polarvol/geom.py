"""Convex bodies of the form A·C + r·B and their support oracles.

A body is represented by what the estimators actually need: a support
function.  The canonical form is the matrix image of a coefficient
gauge plus a Euclidean ball; the support function then splits as
h(y) = h_C(Aᵀy) + r|y|, which makes polar membership an O(nN) test in
any dimension.  H-polytopes are supported only at desk scale (n <= 3,
via vertex enumeration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "GeometryError",
    "DimensionMismatch",
    "UnboundedBody",
    "LqBall",
    "GaugeOracle",
    "CoefficientGauge",
    "MatrixImageBody",
    "BallBody",
    "HPolytopeBody",
    "SupportOracleBody",
    "Body",
    "DirectionGrid",
    "dual_exponent",
    "gauge_support",
    "support_value",
    "support_values",
    "polar_membership",
    "polar_contains",
    "polar_bounding_radius",
    "polar_sampling_radius",
    "hausdorff_estimate",
    "unit_ball_volume",
]

DEGENERATE_TOL = 1e-12


class GeometryError(ValueError):
    pass


class DimensionMismatch(GeometryError):
    pass


class UnboundedBody(GeometryError):
    pass


def unit_ball_volume(n: int) -> float:
    """omega_n, the volume of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def dual_exponent(q: float) -> float:
    """q' with 1/q + 1/q' = 1; the endpoints 1 and inf are explicit cases."""
    if q == 1:
        return math.inf
    if q == math.inf:
        return 1.0
    return q / (q - 1.0)


# ---------------------------------------------------------------------------
# coefficient gauges


@dataclass(frozen=True)
class LqBall:
    """Unit ball of l_q^N, q >= 1.  Always unconditional."""

    q: float
    dim: int

    def __post_init__(self):
        if self.q < 1:
            raise GeometryError(f"LqBall requires q >= 1, got {self.q}")
        if self.dim < 1:
            raise GeometryError("gauge dimension must be >= 1")


@dataclass(frozen=True)
class GaugeOracle:
    """Gauge given as a callable u -> ||u||_C on R^N.

    `support_evaluator`, when given, evaluates the support function of
    the unit ball of the gauge; otherwise h_C is approximated by
    maximizing <c, u> over a fixed seeded sample of gauge-normalized
    directions.
    """

    evaluator: Callable[[np.ndarray], float]
    dim: int
    unconditional: bool = False
    symmetric: bool = True
    support_evaluator: Optional[Callable[[np.ndarray], float]] = None
    support_samples: int = 4096
    _sample_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def _samples(self) -> np.ndarray:
        cached = self._sample_cache.get("dirs")
        if cached is None:
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(7, spawn_key=(self.dim,))))
            raw = rng.standard_normal((self.support_samples, self.dim))
            norms = np.array([self.evaluator(u) for u in raw])
            good = norms > DEGENERATE_TOL
            cached = raw[good] / norms[good, None]
            self._sample_cache["dirs"] = cached
        return cached


CoefficientGauge = Union[LqBall, GaugeOracle]


def check_gauge_samples(gauge: CoefficientGauge, rng: np.random.Generator, count: int = 64) -> None:
    """Sample checks of the declared gauge invariants.

    Positive homogeneity always; sign-flip invariance when the gauge is
    declared unconditional.  Raises GeometryError on violation.
    """
    if isinstance(gauge, LqBall):
        return
    for _ in range(count):
        u = rng.standard_normal(gauge.dim)
        lam = float(rng.uniform(0.1, 5.0))
        base = gauge.evaluator(u)
        if not math.isclose(gauge.evaluator(lam * u), lam * base, rel_tol=1e-9, abs_tol=1e-12):
            raise GeometryError("gauge is not positively homogeneous on samples")
        if gauge.unconditional:
            signs = rng.choice([-1.0, 1.0], size=gauge.dim)
            if not math.isclose(gauge.evaluator(signs * u), base, rel_tol=1e-9, abs_tol=1e-12):
                raise GeometryError("gauge declared unconditional fails sign-flip invariance")


def gauge_support(gauge: CoefficientGauge, U: np.ndarray) -> np.ndarray:
    """Support function h_C of the gauge's unit ball, batched.

    U has shape (m, N); returns shape (m,).  For LqBall this is the
    dual-exponent norm; +inf never occurs since LqBall is bounded.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if isinstance(gauge, LqBall):
        qp = dual_exponent(gauge.q)
        absU = np.abs(U)
        if qp == math.inf:
            return absU.max(axis=1)
        if qp == 1.0:
            return absU.sum(axis=1)
        return (absU ** qp).sum(axis=1) ** (1.0 / qp)
    if gauge.support_evaluator is not None:
        return np.array([gauge.support_evaluator(u) for u in U])
    dirs = gauge._samples()  # (M, N), gauge-normalized
    return (U @ dirs.T).max(axis=1)


# ---------------------------------------------------------------------------
# bodies


@dataclass(frozen=True)
class MatrixImageBody:
    """K = [x_1 ... x_N] C + r B_2^n; columns of `matrix` are the x_i."""

    matrix: np.ndarray  # (n, N)
    gauge: CoefficientGauge
    rball: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2:
            raise GeometryError("matrix must be n x N")
        object.__setattr__(self, "matrix", A)
        if A.shape[1] != self.gauge.dim:
            raise DimensionMismatch(
                f"matrix has {A.shape[1]} columns but gauge lives in R^{self.gauge.dim}"
            )
        if self.rball < 0:
            raise GeometryError("rball must be >= 0")
        if not np.all(np.isfinite(A)):
            raise GeometryError("matrix entries must be finite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class BallBody:
    R: float
    dim: int

    def __post_init__(self):
        if self.R < 0:
            raise GeometryError("ball radius must be >= 0")


@dataclass(frozen=True)
class HPolytopeBody:
    """Intersection of halfspaces <a_i, y> <= b_i; support solved for n <= 3."""

    normals: np.ndarray  # (m, n)
    offsets: np.ndarray  # (m,)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.asarray(self.offsets, dtype=float)
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatch("normals/offsets length mismatch")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]


@dataclass(frozen=True)
class SupportOracleBody:
    """Body known only through a (vectorized) support function oracle."""

    evaluator: Callable[[np.ndarray], np.ndarray]  # (m, n) -> (m,)
    dim: int


Body = Union[MatrixImageBody, BallBody, HPolytopeBody, SupportOracleBody]


def body_dim(body: Body) -> int:
    return body.dim


def hpolytope_vertices(body: HPolytopeBody) -> np.ndarray:
    """Vertex enumeration by exhaustive facet-tuple intersection, n <= 3."""
    n = body.dim
    if n > 3:
        raise GeometryError("HPolytope support values are only solved for n <= 3")
    A, b = body.normals, body.offsets
    m = A.shape[0]
    verts = []
    for idx in combinations(range(m), n):
        sub = A[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, b[list(idx)])
        if np.all(A @ v <= b + 1e-9):
            verts.append(v)
    if not verts:
        raise GeometryError("H-polytope is empty or degenerate")
    out = []
    for v in verts:
        if not any(np.linalg.norm(v - w) < 1e-9 for w in out):
            out.append(v)
    return np.array(out)


def support_values(body: Body, Y: np.ndarray) -> np.ndarray:
    """Support function h_K at a batch of points.  Y: (m, n) -> (m,)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != body.dim:
        raise DimensionMismatch(f"points have dim {Y.shape[1]}, body has dim {body.dim}")
    if isinstance(body, BallBody):
        return body.R * np.linalg.norm(Y, axis=1)
    if isinstance(body, MatrixImageBody):
        U = Y @ body.matrix  # (m, N)
        h = gauge_support(body.gauge, U)
        if body.rball > 0:
            h = h + body.rball * np.linalg.norm(Y, axis=1)
        return h
    if isinstance(body, HPolytopeBody):
        V = hpolytope_vertices(body)
        return (Y @ V.T).max(axis=1)
    if isinstance(body, SupportOracleBody):
        return np.asarray(body.evaluator(Y), dtype=float)
    raise TypeError(f"unknown body type {type(body)!r}")


def support_value(body: Body, y: np.ndarray) -> float:
    return float(support_values(body, np.asarray(y, dtype=float)[None, :])[0])


def polar_contains(body: Body, Y: np.ndarray) -> np.ndarray:
    """Membership of a batch of points in K° = {y : h_K(y) <= 1}."""
    return support_values(body, Y) <= 1.0


def polar_membership(body: Body, y: np.ndarray) -> bool:
    return bool(support_value(body, y) <= 1.0)


# ---------------------------------------------------------------------------
# direction grids


@dataclass(frozen=True)
class DirectionGrid:
    directions: np.ndarray  # (m, n), unit rows

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if D.shape[0] == 0:
            raise GeometryError("direction grid must be nonempty")
        norms = np.linalg.norm(D, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise GeometryError("direction grid entries must be unit vectors")
        object.__setattr__(self, "directions", D)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @classmethod
    def lattice(cls, n: int, resolution: int = 720) -> "DirectionGrid":
        """Deterministic lattice on S^{n-1}, n <= 3."""
        if n == 1:
            return cls(np.array([[1.0], [-1.0]]))
        if n == 2:
            ang = np.linspace(0.0, 2 * math.pi, resolution, endpoint=False)
            return cls(np.column_stack([np.cos(ang), np.sin(ang)]))
        if n == 3:
            # Fibonacci sphere
            k = np.arange(resolution)
            z = 1.0 - (2 * k + 1.0) / resolution
            phi = k * math.pi * (3.0 - math.sqrt(5.0))
            s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
            D = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
            D /= np.linalg.norm(D, axis=1)[:, None]
            return cls(D)
        raise GeometryError("deterministic lattice only available for n <= 3")

    @classmethod
    def sampled(cls, n: int, count: int, rng: np.random.Generator) -> "DirectionGrid":
        """Seeded uniform sphere sample, any dimension."""
        D = rng.standard_normal((count, n))
        D /= np.linalg.norm(D, axis=1)[:, None]
        return cls(D)

    @classmethod
    def default(cls, n: int) -> "DirectionGrid":
        if n <= 3:
            return cls.lattice(n, 720 if n < 3 else 2048)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(11, spawn_key=(n,))))
        return cls.sampled(n, 4096, rng)


def polar_bounding_radius(body: Body, grid: DirectionGrid):
    """Radius of a ball containing K°, or math.inf when degenerate.

    If the body carries a Euclidean-ball summand of radius r > 0 the
    answer is exactly 1/r; otherwise 1/min_grid h_K.  A minimum below
    1e-12 is classified as unbounded rather than returned as a huge
    radius.
    """
    if isinstance(body, BallBody):
        if body.R < DEGENERATE_TOL:
            return math.inf
        return 1.0 / body.R
    if isinstance(body, MatrixImageBody) and body.rball > 0:
        return 1.0 / body.rball
    h = support_values(body, grid.directions)
    hmin = float(h.min())
    if hmin < DEGENERATE_TOL:
        return math.inf
    return 1.0 / hmin


def polar_sampling_radius(body: Body) -> float:
    """Rigorous (conservative) radius of a ball containing K°.

    Unlike :func:`polar_bounding_radius` this never undershoots: for
    matrix-image bodies with an LqBall gauge it uses
    h_K(θ) >= σ_min(A)·min(1, N^{1/q'-1/2}) + r; for H-polytopes the
    inradius bound; elsewhere a grid minimum with a safety factor.
    Raises UnboundedBody when no finite radius can be certified.
    """
    if isinstance(body, BallBody):
        if body.R < DEGENERATE_TOL:
            raise UnboundedBody("polar of a degenerate ball is unbounded")
        return 1.0 / body.R
    if isinstance(body, MatrixImageBody) and isinstance(body.gauge, LqBall):
        s = np.linalg.svd(body.matrix, compute_uv=False)
        # fewer columns than rows means A^T has a kernel: h_C(A^T y) can vanish
        sigma_min = float(s.min()) if body.matrix.shape[1] >= body.dim else 0.0
        qp = dual_exponent(body.gauge.q)
        N = body.gauge.dim
        factor = 1.0 if qp == math.inf else min(1.0, N ** (1.0 / qp - 0.5))
        if qp == math.inf:
            factor = N ** (-0.5)  # ||u||_inf >= ||u||_2 / sqrt(N)
        lower = sigma_min * factor + body.rball
        if lower < DEGENERATE_TOL:
            raise UnboundedBody("rank-deficient matrix image with r = 0 has unbounded polar")
        return 1.0 / lower
    if isinstance(body, HPolytopeBody):
        scale = body.offsets / np.linalg.norm(body.normals, axis=1)
        if np.any(scale < DEGENERATE_TOL):
            raise UnboundedBody("H-polytope does not contain 0 in its interior")
        # K ⊇ ball of radius min_i b_i/|a_i| only if that ball satisfies all
        # constraints; it does since <a_i, y> <= |a_i||y| <= b_i.
        return 1.0 / float(scale.min())
    grid = DirectionGrid.default(body.dim)
    h = support_values(body, grid.directions)
    hmin = float(h.min())
    if hmin < DEGENERATE_TOL:
        raise UnboundedBody("support minimum degenerate; polar unbounded")
    return 1.0 / (0.95 * hmin)


def hausdorff_estimate(a: Body, b: Body, grid: DirectionGrid) -> float:
    """Grid estimate max_θ |h_a − h_b|; a lower bound of the true δ^H."""
    if a.dim != b.dim or grid.dim != a.dim:
        raise DimensionMismatch("bodies and grid must share a dimension")
    ha = support_values(a, grid.directions)
    hb = support_values(b, grid.directions)
    if not (np.all(np.isfinite(ha)) and np.all(np.isfinite(hb))):
        raise UnboundedBody("hausdorff_estimate requires bounded bodies")
    return float(np.abs(ha - hb).max())
