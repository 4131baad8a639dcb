"""Support-function approximation of joint numerical ranges and their volumes.

A convex body ``K`` in R^k is probed through a *support oracle*: a callable
``oracle(obs, directions) -> SupportBatch`` returning, for each unit
direction ``u``, an upper bound on ``max_{x in K} u.x`` together with a point
of ``K`` that is actually achieved by some state. Achieved points give an
inner polytope, the upper bounds give an outer polytope, and the two
sandwich the body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.stats import beta

from .errors import (ConfigError, DegenerateBody, GeometryError,
                     UnsupportedDimension)
from .qlinalg import ObservableSet, make_rng, traceless_part

SNAP = 1e-9
GOLDEN_ANGLE = np.pi * (3 - np.sqrt(5))


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SupportSample:
    direction: np.ndarray
    support_value: float
    support_point: np.ndarray
    achiever: object = None
    certified: bool = True


@dataclass(eq=False)
class SupportBatch:
    """Support data for ``N`` directions at once.

    ``values[i]`` bounds the support function from above (exactly or
    certifiably when ``certified[i]``); ``points[i]`` is an achieved member of
    the body with ``directions[i] . points[i] <= values[i]``.
    """

    directions: np.ndarray
    values: np.ndarray
    points: np.ndarray
    certified: np.ndarray
    achievers: list | None = None

    def __len__(self):
        return len(self.values)

    def sample(self, i: int) -> SupportSample:
        ach = None if self.achievers is None else self.achievers[i]
        return SupportSample(self.directions[i], float(self.values[i]), self.points[i],
                             ach, bool(self.certified[i]))


SupportOracle = Callable[[ObservableSet, np.ndarray], SupportBatch]


@dataclass(eq=False)
class BodyApprox:
    """Inner vertex cloud and outer supporting halfspaces ``u.x <= offset``."""

    k: int
    inner_vertices: np.ndarray
    directions: np.ndarray
    offsets: np.ndarray
    certified: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.certified is None:
            self.certified = np.ones(len(self.offsets), dtype=bool)

    def sandwich_violation(self) -> float:
        """Largest amount by which an inner vertex leaves an outer halfspace."""
        if len(self.inner_vertices) == 0:
            return 0.0
        return float(np.max(self.directions @ self.inner_vertices.T - self.offsets[:, None]))

    def check(self, tol: float = 1e-9) -> None:
        viol = self.sandwich_violation()
        if viol > tol:
            raise GeometryError(f"inner vertex violates outer halfspace by {viol:.3e}")

    def affine_rank(self, tol: float = SNAP) -> int:
        v = self.inner_vertices
        if len(v) <= 1:
            return 0
        s = np.linalg.svd(v - v.mean(axis=0), compute_uv=False)
        return int(np.sum(s > tol * max(1.0, s[0])))

    def axis_bounds(self) -> np.ndarray:
        """(k, 2) array of ``[lo, hi]`` from the axis-aligned halfspaces."""
        out = np.empty((self.k, 2))
        for i in range(self.k):
            e = np.zeros(self.k)
            e[i] = 1
            out[i, 1] = self._offset_for(e)
            out[i, 0] = -self._offset_for(-e)
        return out

    def _offset_for(self, u) -> float:
        hit = np.flatnonzero(np.all(np.abs(self.directions - u) < 1e-12, axis=1))
        if len(hit) == 0:
            raise GeometryError(f"no halfspace with normal {u}")
        return float(np.min(self.offsets[hit]))

    @property
    def fully_certified(self) -> bool:
        return bool(np.all(self.certified))


@dataclass(frozen=True)
class VolumeBracket:
    lower: float
    upper: float
    estimate: float
    rank: int
    degenerate: bool = False


class RatioBracket(NamedTuple):
    lower: float
    upper: float
    estimate: float


# ---------------------------------------------------------------------------
# directions and oracles
# ---------------------------------------------------------------------------

def direction_grid(k: int, n: int) -> np.ndarray:
    """Deterministic unit directions: signs (k=1), equal angles (k=2), Fibonacci sphere (k=3)."""
    if k not in (1, 2, 3):
        raise UnsupportedDimension(f"direction grids exist for k in 1..3, not {k}")
    if n < 2 * k:
        raise ConfigError(f"need at least {2 * k} directions for k={k}, got {n}")
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        t = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(t), np.sin(t)])
    i = np.arange(n)
    z = 1 - (2 * i + 1) / n
    r = np.sqrt(1 - z * z)
    t = GOLDEN_ANGLE * i
    return np.column_stack([r * np.cos(t), r * np.sin(t), z])


def _with_axes(dirs: np.ndarray) -> np.ndarray:
    k = dirs.shape[1]
    extra = []
    for i in range(k):
        for s in (1.0, -1.0):
            e = np.zeros(k)
            e[i] = s
            if not np.any(np.all(np.abs(dirs - e) < 1e-12, axis=1)):
                extra.append(e)
    return np.vstack([dirs] + extra) if extra else dirs


def support_all_batch(obs: ObservableSet, directions) -> SupportBatch:
    """Exact support data of the joint numerical range over all states."""
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    w, v = np.linalg.eigh(obs.combine(u))
    top = v[:, :, -1]
    points = obs.expectations(top)
    return SupportBatch(u, w[:, -1].copy(), points, np.ones(len(u), dtype=bool), list(top))


def support_all(obs: ObservableSet, u) -> SupportSample:
    """``lambda_max(sum u_i A_i)`` and the expectation vector of its top eigenvector."""
    return support_all_batch(obs, np.atleast_2d(u)).sample(0)


# ---------------------------------------------------------------------------
# body construction
# ---------------------------------------------------------------------------

def _dedupe(points: np.ndarray) -> np.ndarray:
    keys = np.round(points / SNAP).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[idx]


def build_body(obs: ObservableSet, oracle: SupportOracle = support_all_batch,
               n_directions: int = 360) -> BodyApprox:
    """Polytope sandwich of ``L(obs)`` (or of whatever body ``oracle`` describes)."""
    k = obs.k
    dirs = _with_axes(direction_grid(k, n_directions))
    try:
        batch = oracle(obs, dirs)
    except Exception as exc:
        if hasattr(exc, "add_note"):
            exc.add_note(f"while evaluating support oracle on {len(dirs)} directions in R^{k}")
        raise
    body = BodyApprox(k, _dedupe(np.asarray(batch.points, dtype=float)), batch.directions,
                      np.asarray(batch.values, dtype=float), np.asarray(batch.certified, dtype=bool))
    body.check()
    return body


# ---------------------------------------------------------------------------
# volumes
# ---------------------------------------------------------------------------

def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_2d(points) -> np.ndarray:
    """Counter-clockwise convex hull (monotone chain); collinear points dropped."""
    pts = sorted(map(tuple, np.asarray(points, dtype=float)))
    if len(pts) <= 2:
        return np.array(pts)
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def shoelace(poly) -> float:
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def hull_volume(points) -> float:
    """Volume of the convex hull of ``points`` in R^1, R^2 or R^3."""
    p = np.asarray(points, dtype=float)
    k = p.shape[1]
    if k == 1:
        return float(p.max() - p.min())
    if k == 2:
        return shoelace(hull_2d(p))
    if k == 3:
        hull = ConvexHull(p)
        c = p[hull.vertices].mean(axis=0)
        tri = p[hull.simplices] - c
        return float(np.sum(np.abs(np.linalg.det(tri))) / 6)
    raise UnsupportedDimension(f"hull volumes are implemented for k <= 3, not {k}")


def _count_inside(body: BodyApprox, samples: np.ndarray, chunk: int = 20000) -> int:
    inside = 0
    slack = 1e-12
    for s in range(0, len(samples), chunk):
        x = samples[s:s + chunk]
        ok = np.ones(len(x), dtype=bool)
        for d in range(0, len(body.offsets), 256):
            ok &= np.all(x @ body.directions[d:d + 256].T <= body.offsets[d:d + 256] + slack, axis=1)
        inside += int(ok.sum())
    return inside


def volume_bracket(body: BodyApprox, mc_samples: int = 100_000, seed=0,
                   confidence: float = 0.99) -> VolumeBracket:
    """Certified lower/upper volume of the body sandwiched by ``body``.

    The lower value is the exact volume of the inner hull, which also serves
    as the point estimate. The upper value is a Monte-Carlo estimate of the
    outer polytope volume inflated to a one-sided Clopper-Pearson bound at
    ``confidence``, never below the exact outer polytope volume, so the
    bracket holds deterministically whenever the outer offsets are certified.
    """
    if mc_samples < 1000:
        raise ConfigError(f"mc_samples must be at least 1000, got {mc_samples}")
    k = body.k
    if k > 3:
        raise UnsupportedDimension(f"volume brackets are implemented for k <= 3, not {k}")
    rank = body.affine_rank()
    if rank < k:
        return VolumeBracket(0.0, 0.0, 0.0, rank, degenerate=True)
    lower = hull_volume(body.inner_vertices)

    box = body.axis_bounds()
    widths = box[:, 1] - box[:, 0]
    box_vol = float(np.prod(widths))
    rng = make_rng(seed)
    samples = box[:, 0] + rng.random((mc_samples, k)) * widths
    hits = _count_inside(body, samples)
    if hits >= mc_samples:
        p_up = 1.0
    else:
        p_up = float(beta.ppf(confidence, hits + 1, mc_samples - hits))
    upper = max(box_vol * p_up, outer_volume(body), lower)
    return VolumeBracket(lower, upper, lower, rank)


def outer_volume(body: BodyApprox) -> float:
    """Exact volume of the outer polytope (intersection of all supporting halfspaces)."""
    if body.k == 1:
        lo, hi = body.axis_bounds()[0]
        return float(hi - lo)
    interior = body.inner_vertices.mean(axis=0)
    halfspaces = np.column_stack([body.directions, -body.offsets])
    verts = HalfspaceIntersection(halfspaces, interior).intersections
    return hull_volume(verts)


def ratio_bracket(sep: VolumeBracket, full: VolumeBracket) -> RatioBracket:
    if full.degenerate or full.lower <= 0:
        raise DegenerateBody("the all-states body has zero volume")
    return RatioBracket(sep.lower / full.upper,
                        min(1.0, sep.upper / full.lower),
                        sep.estimate / full.estimate)


# ---------------------------------------------------------------------------
# radial function in the plane
# ---------------------------------------------------------------------------

def ray_radius_2d(obs: ObservableSet, oracle: SupportOracle, phi: float,
                  tol: float = 1e-12) -> float:
    """Distance from the origin to the body boundary along angle ``phi``.

    Sweeps the supporting direction ``psi`` through ``[phi - pi/2, phi + pi/2]``
    by bisection until the achieved support point crosses the ray, then
    intersects the ray with the chord between the two bracketing points.
    The observables should be traceless so that the origin is interior.
    """
    if obs.k != 2:
        raise UnsupportedDimension("ray_radius_2d needs exactly two observables")
    ray = np.array([np.cos(phi), np.sin(phi)])

    def probe(psi):
        b = oracle(obs, np.array([[np.cos(psi), np.sin(psi)]]))
        if b.values[0] <= 0:
            raise GeometryError("origin is not interior to the body")
        x = np.asarray(b.points[0], dtype=float)
        return x, ray[0] * x[1] - ray[1] * x[0]

    lo, hi = phi - np.pi / 2 + 1e-9, phi + np.pi / 2 - 1e-9
    x_lo, c_lo = probe(lo)
    x_hi, c_hi = probe(hi)
    if c_lo > 0 or c_hi < 0:
        raise GeometryError("origin is not interior to the body")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        x, c = probe(mid)
        if c == 0:
            return float(np.linalg.norm(x))
        if c < 0:
            lo, x_lo = mid, x
        else:
            hi, x_hi = mid, x
    # intersect the ray t*ray with the segment x_lo -> x_hi
    d = x_hi - x_lo
    den = ray[0] * d[1] - ray[1] * d[0]
    if abs(den) < 1e-15:
        return float(np.dot(x_lo, ray))
    s = -(ray[0] * x_lo[1] - ray[1] * x_lo[0]) / den
    return float(np.dot(x_lo + s * d, ray))


def polar_area_2d(obs: ObservableSet, oracle: SupportOracle, n_angles: int = 256) -> float:
    """``(1/2) * integral R(phi)^2 dphi`` by the periodic trapezoid rule."""
    phis = 2 * np.pi * np.arange(n_angles) / n_angles
    r = np.array([ray_radius_2d(obs, oracle, p) for p in phis])
    return float(np.pi * np.mean(r ** 2))


# ---------------------------------------------------------------------------
# observable reduction
# ---------------------------------------------------------------------------

@dataclass
class ReductionReport:
    kept: list[int]
    dropped: dict[int, np.ndarray]
    offsets: np.ndarray

    def __str__(self):
        parts = [f"kept {self.kept}"]
        for i, c in self.dropped.items():
            terms = " + ".join(f"{ci:.6g}*B{j}" for ci, j in zip(c, self.kept))
            parts.append(f"dropped {i} = {terms or '0'}")
        return "; ".join(parts)


def reduce_observables(obs: ObservableSet, tol: float = 1e-10) -> tuple[ObservableSet, ReductionReport]:
    """Traceless parts of a maximal linearly independent subset of ``obs``.

    Greedy pivoting in input order: an observable is kept when the Gram matrix
    of the normalized traceless parts kept so far (plus this one) has smallest
    eigenvalue above ``tol``. Dropped observables are reported with their
    expansion coefficients in the kept traceless parts.
    """
    tl = [traceless_part(a) for a in obs]
    offsets = np.array([np.real(np.trace(a)) / obs.D for a in obs])
    norms = np.array([np.linalg.norm(b) for b in tl])
    kept: list[int] = []
    dropped: dict[int, np.ndarray] = {}
    for i, b in enumerate(tl):
        if norms[i] > tol:
            cand = kept + [i]
            g = np.array([[np.real(np.vdot(tl[a], tl[c])) / (norms[a] * norms[c])
                           for c in cand] for a in cand])
            if np.linalg.eigvalsh(g)[0] > tol:
                kept.append(i)
                continue
        dropped[i] = np.zeros(0)
    if kept:
        basis = np.array([tl[j].ravel() for j in kept]).T
        for i in dropped:
            if norms[i] > tol:
                coef, *_ = np.linalg.lstsq(basis, tl[i].ravel(), rcond=None)
                dropped[i] = np.real(coef)
            else:
                dropped[i] = np.zeros(len(kept))
    reduced = ObservableSet([tl[j] for j in kept], obs.dims)
    return reduced, ReductionReport(kept, dropped, offsets)
