"""Closed-form volumes, lower bounds and special functions.

Elliptic integrals use the parameter convention
``K(m) = int_0^{pi/2} dt / sqrt(1 - m sin^2 t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBody, DomainError
from .qlinalg import (PHI_PLUS, X, Y, Z, ObservableSet, as_profile, direct_sum, kron,
                      projector)

_AGM_TOL = 1e-15
_AGM_MAX = 64


# ---------------------------------------------------------------------------
# elliptic integrals
# ---------------------------------------------------------------------------

def _agm_terms(m: np.ndarray):
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    csum = 0.5 * m  # 2^{n-1} c_n^2 at n = 0, with c_0^2 = m
    for n in range(1, _AGM_MAX):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        csum = csum + 2.0 ** (n - 1) * c * c
        if np.all(np.abs(c) <= _AGM_TOL * np.abs(a)):
            break
    return a, csum


def _as_param(m, upper_ok: bool):
    arr = np.asarray(m, dtype=float)
    bad = ~np.isfinite(arr) | (arr > 1) | ((arr == 1) & (not upper_ok))
    if np.any(bad):
        raise DomainError(f"elliptic parameter out of domain: {arr[bad].ravel()[:3]}")
    return arr


def elliptic_K(m):
    """Complete elliptic integral of the first kind, ``m < 1`` (negative ``m`` allowed)."""
    arr = _as_param(m, upper_ok=False)
    a, _ = _agm_terms(arr)
    out = np.pi / (2 * a)
    return float(out) if out.ndim == 0 else out


def elliptic_E(m):
    """Complete elliptic integral of the second kind, ``m <= 1``."""
    arr = _as_param(m, upper_ok=True)
    one = arr == 1
    safe = np.where(one, 0.0, arr)
    a, csum = _agm_terms(safe)
    out = np.where(one, 1.0, np.pi / (2 * a) * (1 - csum))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# locally traceless product pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductAngles:
    """Angles of ``A_2 = (cos a X + sin a Z) x (cos b X + sin b Z)``; ``A_1 = X x X``."""

    theta_A: float
    theta_B: float

    def __post_init__(self):
        for v in (self.theta_A, self.theta_B):
            if not (0 <= v <= math.pi):
                raise DomainError(f"angle {v} outside [0, pi]")

    @property
    def theta_minus(self) -> float:
        return self.theta_A - self.theta_B

    @property
    def theta_plus(self) -> float:
        return self.theta_A + self.theta_B


def product_observables(angles: ProductAngles) -> ObservableSet:
    a, b = angles.theta_A, angles.theta_B
    a2 = kron(math.cos(a) * X + math.sin(a) * Z, math.cos(b) * X + math.sin(b) * Z)
    return ObservableSet.of(kron(X, X), a2, dims=(2, 2))


def _minkowski_semi_axes(angles: ProductAngles):
    """Semi-axes of the two aligned ellipses whose Minkowski sum is the separable range."""
    r = 1 / math.sqrt(2)
    return [(r * abs(math.cos(t / 2)), r * abs(math.sin(t / 2)))
            for t in (angles.theta_minus, angles.theta_plus)]


def minkowski_area(axes) -> float:
    """Area of a Minkowski sum of axis-aligned centred ellipses.

    Expands into areas plus mixed areas. For ellipses with semi-axes
    ``(a1, b1)``, ``(a2, b2)`` the mixed area is
    ``1/2 int_0^{2 pi} sqrt((a1 b2 cos t)^2 + (b1 a2 sin t)^2) dt``, which is
    an elliptic integral and stays accurate for arbitrarily thin ellipses.
    """
    axes = [(abs(a), abs(b)) for a, b in axes]
    area = sum(math.pi * a * b for a, b in axes)
    for i in range(len(axes)):
        for j in range(i + 1, len(axes)):
            (a1, b1), (a2, b2) = axes[i], axes[j]
            p, q = a1 * b2, b1 * a2
            hi, lo = max(p, q), min(p, q)
            if hi > 0:
                area += 4 * hi * elliptic_E(1 - (lo / hi) ** 2)
    return area


def _F(x, y):
    t = abs(math.tan(x / 2) / math.tan(y / 2))
    m = 1 - t * t
    return abs(math.sin(x / 2) * math.cos(y / 2)) * (elliptic_K(m) - elliptic_E(m))


def _T(x, y):
    return abs(math.tan(x / 2) / math.tan(y / 2))


_REGULAR = 1e-4


def _closed_form_regular(angles: ProductAngles) -> bool:
    tm, tp = angles.theta_minus, angles.theta_plus
    trig = [abs(math.sin(tm / 2)), abs(math.cos(tm / 2)), abs(math.sin(tp / 2)), abs(math.cos(tp / 2))]
    if min(trig) < _REGULAR:
        return False
    return abs(_T(tp, tm) - _T(tm, tp)) > _REGULAR


def sep_volume_product_2q(angles: ProductAngles) -> float:
    """Area of the separable numerical range of the locally traceless product pair."""
    if not _closed_form_regular(angles):
        return minkowski_area(_minkowski_semi_axes(angles))
    tm, tp = angles.theta_minus, angles.theta_plus
    return (math.pi / 4 * (abs(math.sin(tm)) + abs(math.sin(tp)))
            + 2 * (_F(tm, tp) - _F(tp, tm)) / (_T(tp, tm) - _T(tm, tp)))


def all_volume_product_2q(angles: ProductAngles) -> float:
    """Area of the full numerical range of the locally traceless product pair."""
    sa, sb = math.sin(angles.theta_A), math.sin(angles.theta_B)
    if min(abs(sa), abs(sb)) < 1e-12:
        # one local observable is X, so the range is an ellipse of area pi * |sin|
        big = max(abs(sa), abs(sb))
        return math.pi * big if big >= 1e-12 else 0.0
    tm, tp = angles.theta_minus, angles.theta_plus
    # cos(tm) - cos(tp) written without cancellation
    return 2 * (2 * sa * sb + abs(tm / 2 * math.sin(tm))
                + abs((tp / 2 - math.pi / 2) * math.sin(tp)))


def ratio_product_2q(angles: ProductAngles) -> float:
    full = all_volume_product_2q(angles)
    if full <= 1e-12:
        raise DegenerateBody(f"numerical range is not two-dimensional at {angles}")
    return sep_volume_product_2q(angles) / full


def _ratio_grid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ratio_product_2q`; ``inf`` where the range is degenerate."""
    tm, tp = a - b, a + b
    with np.errstate(all="ignore"):
        tan_m, tan_p = np.abs(np.tan(tm / 2)), np.abs(np.tan(tp / 2))
        t_mp, t_pm = tan_m / tan_p, tan_p / tan_m
        trig = np.min(np.abs([np.sin(tm / 2), np.cos(tm / 2), np.sin(tp / 2), np.cos(tp / 2)]), axis=0)
        ok = (trig >= _REGULAR) & (np.abs(t_pm - t_mp) > _REGULAR)
        t_mp, t_pm = np.where(ok, t_mp, 0.5), np.where(ok, t_pm, 2.0)
        f_mp = np.abs(np.sin(tm / 2) * np.cos(tp / 2)) * (elliptic_K(1 - t_mp ** 2) - elliptic_E(1 - t_mp ** 2))
        f_pm = np.abs(np.sin(tp / 2) * np.cos(tm / 2)) * (elliptic_K(1 - t_pm ** 2) - elliptic_E(1 - t_pm ** 2))
        sep = np.pi / 4 * (np.abs(np.sin(tm)) + np.abs(np.sin(tp))) + 2 * (f_mp - f_pm) / (t_pm - t_mp)
    out = np.empty_like(a)
    for i in range(len(a)):
        ang = ProductAngles(float(a[i]), float(b[i]))
        full = all_volume_product_2q(ang)
        if full <= 1e-12:
            out[i] = np.inf
        else:
            out[i] = (sep[i] if ok[i] else sep_volume_product_2q(ang)) / full
    return out


def _golden_min(f, lo, hi, tol=1e-10):
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def min_ratio_product_2q(grid: int = 256, rounds: int = 4):
    """Minimum of :func:`ratio_product_2q` over both angles.

    Grid search on ``[0, pi]^2`` followed by alternating golden-section line
    searches inside the neighbouring cells.

    Returns
    -------
    (value, ProductAngles)
    """
    ts = np.linspace(0, math.pi, grid + 1)

    def safe(a, b):
        try:
            return ratio_product_2q(ProductAngles(min(max(a, 0.0), math.pi),
                                                  min(max(b, 0.0), math.pi)))
        except DegenerateBody:
            return math.inf

    aa, bb = np.meshgrid(ts, ts, indexing="ij")
    vals = _ratio_grid(aa.ravel(), bb.ravel())
    i = int(np.argmin(vals))
    best = (float(vals[i]), float(aa.ravel()[i]), float(bb.ravel()[i]))
    v, a, b = best
    h = ts[1] - ts[0]
    for _ in range(rounds):
        a, _ = _golden_min(lambda x: safe(x, b), max(a - h, 0.0), min(a + h, math.pi))
        b, v = _golden_min(lambda y: safe(a, y), max(b - h, 0.0), min(b + h, math.pi))
    if best[0] < v:
        v, a, b = best
    return v, ProductAngles(a, b)


# ---------------------------------------------------------------------------
# lower bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    value: float
    formula_id: str

    def __post_init__(self):
        if not (0 <= self.value <= 1):
            raise DomainError(f"bound {self.value} outside [0, 1]")


def separable_ball_bound(profile, k: int) -> BoundReport:
    """Lower bound on the separable-to-full volume ratio for ``k`` observables.

    Follows from the radius of the separable ball around the maximally mixed
    state: the general multipartite radius, and for two equal local
    dimensions the sharper ``1/(d^2 - 1)`` radius.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    p = as_profile(profile)
    n, D = p.n, p.total
    b2 = D ** n / ((2 * D - 1) ** (n - 2) * (D * D - 1) + 1)
    general = (math.sqrt(b2) / D * math.sqrt((D - 1) / (D - b2))) ** k
    if n == 2 and p[0] == p[1]:
        bip = 1.0 / (p[0] ** 2 - 1) ** k
        if bip >= general:
            return BoundReport(bip, "bipartite")
    return BoundReport(general, "general")


def hoeffding_bound(m: int, t, rescale_widths=None) -> float:
    """Probability that some estimator deviates by at least ``t_j`` after ``m`` shots each."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w = np.ones_like(t) if rescale_widths is None else np.atleast_1d(np.asarray(rescale_widths, float))
    if m < 1 or np.any(t <= 0) or np.any(w <= 0) or t.shape != w.shape:
        raise DomainError("need m >= 1 and positive t, widths of equal length")
    fail = 2 * np.exp(-2 * m * (t / w) ** 2)
    return float(1 - np.prod(np.clip(1 - fail, 0, 1)))


def _check_ratio(r):
    if not (0 <= r <= 1):
        raise DomainError(f"volume ratio {r} outside [0, 1]")


def projection_bound_2d(ratio: float) -> float:
    """Worst-case area ratio of planar projections given a volume ratio."""
    _check_ratio(ratio)
    return 1 - math.sqrt(1 - ratio)


def projection_bound_conjecture(ratio: float, k: int) -> float:
    """Root ``c`` of ``ratio = c [1 + (k-1)(1 - c^{1/(k-1)})]`` in ``[0, 1]`` by bisection."""
    _check_ratio(ratio)
    if k < 2:
        raise DomainError("k must be >= 2")
    if ratio == 1:
        # double root there; bisection alone would only reach sqrt(eps)
        return 1.0

    def lhs(c):
        if c == 0:
            return 0.0
        # (k-1)(1 - c^{1/(k-1)}) without cancellation for large k
        return c * (1 - (k - 1) * math.expm1(math.log(c) / (k - 1)))

    lo, hi = 0.0, 1.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if lhs(mid) < ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# named instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NamedInstance:
    name: str
    observables: ObservableSet
    expected_ratio: float
    analytic_only: bool = False


def solids_of_revolution_ratios() -> tuple[float, float]:
    """Ratios for {XX, XY, ZZ} and {XX, XY, ZZ, YZ}.

    Both ranges are rotation-symmetric. With three observables the full
    range is the cylinder ``rho <= 1, |z| <= 1`` (volume ``2 pi``) and the
    separable range the double cone ``rho <= 1 - |z|`` (``2 pi / 3``). With
    four it is the product of two unit discs (``pi^2``) against
    ``r + R <= 1`` (``int_0^1 2 pi R * pi (1 - R)^2 dR = pi^2 / 6``).
    """
    three = (2 * math.pi / 3) / (2 * math.pi)
    four = (math.pi ** 2 / 6) / math.pi ** 2
    return three, four


def named_instances(angles: ProductAngles | None = None) -> list[NamedInstance]:
    angles = angles or ProductAngles(3 * math.pi / 4, math.pi / 3)
    blk = lambda p: direct_sum([0, p, 0])  # noqa: E731
    three, four = solids_of_revolution_ratios()
    xx, xy, zz, yz = kron(X, X), kron(X, Y), kron(Z, Z), kron(Y, Z)
    return [
        NamedInstance("bell-projector", ObservableSet.of(projector(PHI_PLUS), dims=(2, 2)), 0.5),
        NamedInstance("pauli-block-xy", ObservableSet.of(blk(X), blk(Y), dims=(2, 2)), 0.25),
        NamedInstance("pauli-block-xyz", ObservableSet.of(blk(X), blk(Y), blk(Z), dims=(2, 2)), 0.2),
        NamedInstance("xx-xy-zz", ObservableSet.of(xx, xy, zz, dims=(2, 2)), three),
        NamedInstance("xx-xy-zz-yz", ObservableSet.of(xx, xy, zz, yz, dims=(2, 2)), four,
                      analytic_only=True),
        NamedInstance("product-pair", product_observables(angles), ratio_product_2q(angles)),
    ]
