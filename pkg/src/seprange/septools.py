"""Optimization over product states and spectra of separable states.

Two routes to the product-state support function are provided:

* a seesaw (alternating eigenvector) heuristic that works for any tensor
  structure and always returns a value achieved by an explicit product
  state, and
* for two qubits, a certified upper bound. Fixing the first qubit with
  Bloch vector ``r`` leaves the second-qubit operator
  ``N(r) = Tr_A[(rho_r x 1) M]``, which is affine in ``r``, so
  ``g(r) = lambda_max(N(r))`` is convex. Its maximum over the Bloch ball is
  therefore bounded by its maximum over the vertices of any polytope that
  contains the ball; grid points on the sphere pushed outwards by
  ``1/cos(delta)`` (``delta`` = covering radius of the grid) form such a
  polytope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .qlinalg import (PAULIS, ObservableSet, ProductState, as_profile, hermitian,
                      make_rng, partial_transpose, sample_goe, sample_hs_state,
                      split_seeds)
from .rangegeom import SupportBatch, SupportSample

_LETTERS = "abcdefghijklmnopqrstuvwxy"


@dataclass(frozen=True)
class SeesawConfig:
    restarts: int = 64
    max_iters: int = 200
    tol: float = 1e-12
    seed: int | None = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(eq=False)
class SeesawResult:
    value: float
    state: ProductState
    converged: bool
    trace: np.ndarray = field(repr=False)
    """Objective after every site update, shape (updates, restarts)."""


@dataclass(frozen=True, eq=False)
class CertifiedBound:
    heuristic_value: float
    certified_upper: float
    grid_resolution: float
    lipschitz_constant: float
    state: ProductState | None = None

    @property
    def gap(self) -> float:
        return self.certified_upper - self.heuristic_value


# ---------------------------------------------------------------------------
# seesaw
# ---------------------------------------------------------------------------

def _local_operator(xt: np.ndarray, factors: list[np.ndarray], site: int) -> np.ndarray:
    """Contract every tensor factor except ``site`` with its current vector."""
    n = len(factors)
    rows, cols = _LETTERS[:n], _LETTERS[:n].upper()
    operands = [xt]
    subs = ["z" + rows + cols]
    for j in range(n):
        if j != site:
            operands += [factors[j].conj(), factors[j]]
            subs += ["z" + rows[j], "z" + cols[j]]
    expr = ",".join(subs) + "->z" + rows[site] + cols[site]
    return np.einsum(expr, *operands, optimize=True)


def _top_vectors(ops: np.ndarray, prev: np.ndarray, tie: float = 1e-10):
    """Top eigenpairs; ties are broken towards the previous iterate."""
    w, v = np.linalg.eigh(ops)
    top = v[..., -1]
    if ops.shape[-1] > 1:
        mask = w >= (w[..., -1:] - tie)
        tied = mask.sum(axis=-1) > 1
        if np.any(tied):
            coef = np.einsum("bji,bj->bi", v[tied].conj(), prev[tied]) * mask[tied]
            proj = np.einsum("bji,bi->bj", v[tied], coef)
            nrm = np.linalg.norm(proj, axis=-1)
            good = nrm > 1e-8
            sub = top[tied]
            sub[good] = proj[good] / nrm[good, None]
            top[tied] = sub
    return w[..., -1], top


def seesaw_batch(ops: np.ndarray, dims, restarts: int = 64, max_iters: int = 200,
                 tol: float = 1e-12, seed=None, init: list[np.ndarray] | None = None):
    """Maximize ``<psi|M_b|psi>`` over product states for a batch of operators.

    Returns
    -------
    values : ndarray (B,)
        Best achieved value per operator.
    factors : list of ndarray, each (B, d_s)
        Achieving product-state factors.
    converged : ndarray (B,) of bool
    trace : ndarray (updates, B, restarts)
    """
    profile = as_profile(dims)
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim == 2:
        ops = ops[None]
    b, dim = ops.shape[0], ops.shape[-1]
    if dim != profile.total:
        raise ShapeError(f"operator dimension {dim} does not match profile {profile.local_dims}")
    n = profile.n
    if init is not None:
        restarts = init[0].shape[0] // b
    r = restarts
    xt = np.repeat(ops, r, axis=0).reshape((b * r,) + profile.local_dims * 2)
    rng = make_rng(seed)
    if init is None:
        factors = []
        for d in profile.local_dims:
            f = rng.standard_normal((b * r, d)) + 1j * rng.standard_normal((b * r, d))
            factors.append(f / np.linalg.norm(f, axis=1, keepdims=True))
    else:
        factors = [np.asarray(f, dtype=complex).copy() for f in init]

    trace = []
    prev = np.full(b * r, -np.inf)
    done = np.zeros(b * r, dtype=bool)
    val = prev
    active = [s for s in range(n) if profile[s] > 1]
    for _ in range(max_iters if active else 0):
        for s in active:
            loc = _local_operator(xt, factors, s)
            val, vec = _top_vectors(loc, factors[s])
            factors[s] = vec
            trace.append(val.reshape(b, r))
        done = np.abs(val - prev) < tol
        if np.all(done):
            break
        prev = val
    if not trace:  # all factors one-dimensional
        val = np.real(np.repeat(ops[:, 0, 0], r))
        done = np.ones(b * r, dtype=bool)
        trace.append(val.reshape(b, r))
    vals = val.reshape(b, r)
    best = np.argmax(vals, axis=1)
    pick = np.arange(b) * r + best
    out_factors = [f[pick] for f in factors]
    converged = done.reshape(b, r)[np.arange(b), best]
    return vals[np.arange(b), best], out_factors, converged, np.array(trace)


def seesaw_product_extremum(x, dims, sense: str = "max",
                            cfg: SeesawConfig = SeesawConfig()) -> SeesawResult:
    """Extremal expectation value of ``x`` over pure product states (inner bound)."""
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    x = hermitian(x)
    sign = 1.0 if sense == "max" else -1.0
    vals, factors, conv, trace = seesaw_batch(sign * x, dims, cfg.restarts, cfg.max_iters,
                                              cfg.tol, cfg.seed)
    state = ProductState.normalized([f[0] for f in factors])
    return SeesawResult(sign * float(vals[0]), state, bool(conv[0]), sign * trace[:, 0, :])


# ---------------------------------------------------------------------------
# two-qubit certification
# ---------------------------------------------------------------------------

def _bloch_grid(n: int):
    """Grid points on the unit sphere and a bound on their angular covering radius."""
    theta = np.pi * np.arange(1, n) / n
    phi = 2 * np.pi * np.arange(n) / n
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    pts = np.column_stack([np.sin(tt).ravel() * np.cos(pp).ravel(),
                           np.sin(tt).ravel() * np.sin(pp).ravel(),
                           np.cos(tt).ravel()])
    pts = np.vstack([[0.0, 0.0, 1.0], pts, [0.0, 0.0, -1.0]])
    # any sphere point reaches a grid corner along a meridian (<= dtheta/2) and then along
    # a parallel (<= sin(theta) * dphi/2); the equatorial band has sin(theta) = 1
    delta = np.pi / (2 * n) + np.pi / n
    return pts, delta


def _bloch_to_ket(r: np.ndarray) -> np.ndarray:
    theta = np.arccos(np.clip(r[..., 2], -1, 1))
    phi = np.arctan2(r[..., 1], r[..., 0])
    return np.stack([np.cos(theta / 2) + 0j, np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _reduced_components(mats: np.ndarray) -> np.ndarray:
    """``N_c = (1/2) Tr_A[(sigma_c x 1) M]`` for c = identity, X, Y, Z.

    Returns shape (..., 4, 2, 2); the second-qubit operator for first-qubit
    Bloch vector ``r`` is ``N_0 + sum_c r_c N_c``.
    """
    xt = mats.reshape(mats.shape[:-2] + (2, 2, 2, 2))
    basis = [np.eye(2)] + list(PAULIS)
    # ((P x 1) M) traced over A: sum_{a,a'} P[a,a'] M[(a',i),(a,j)]
    return np.stack([0.5 * np.einsum("pq,...qipj->...ij", p, xt) for p in basis], axis=-3)


def _lmax2(a, d, b):
    return 0.5 * (a + d) + np.sqrt(0.25 * (a - d) ** 2 + np.abs(b) ** 2)


def _grid_max(comp: np.ndarray, pts: np.ndarray, scale: float, chunk: int = 128):
    """Max over grid points of lambda_max(N_0 + scale * r.N) for each operator.

    ``comp`` has shape (B, 4, 2, 2). Returns (max values, argmax indices).
    """
    best = np.empty(comp.shape[0])
    arg = np.empty(comp.shape[0], dtype=int)
    rs = scale * pts.T
    for s in range(0, comp.shape[0], chunk):
        c = comp[s:s + chunk]
        a = np.real(c[:, 0, 0, 0])[:, None] + np.real(c[:, 1:, 0, 0]) @ rs
        d = np.real(c[:, 0, 1, 1])[:, None] + np.real(c[:, 1:, 1, 1]) @ rs
        b = c[:, 0, 0, 1][:, None] + c[:, 1:, 0, 1] @ rs
        lam = _lmax2(a, d, b)
        arg[s:s + chunk] = np.argmax(lam, axis=1)
        best[s:s + chunk] = lam[np.arange(len(c)), arg[s:s + chunk]]
    return best, arg


def _grid_chain(n: int) -> list[int]:
    chain = [n]
    while chain[-1] % 2 == 0 and chain[-1] // 2 >= 8:
        chain.append(chain[-1] // 2)
    return chain


def certified_sep_support_batch(mats, grid_per_axis: int = 64, refine_iters: int = 50):
    """Certified product-state maxima of a batch of two-qubit operators.

    Returns
    -------
    heuristic : ndarray (B,)
        Values achieved by explicit product states.
    certified : ndarray (B,)
        Rigorous upper bounds on the product-state maximum.
    factors : (ndarray (B, 2), ndarray (B, 2))
        The achieving product states.
    delta : float
        Angular covering radius of the finest grid used.
    """
    if grid_per_axis < 8:
        raise ValueError("grid_per_axis must be >= 8")
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.shape[-2:] != (4, 4):
        raise ShapeError("certified bounds need two-qubit (4x4) operators")
    comp = _reduced_components(mats)

    certified = np.full(len(mats), np.inf)
    alphas, betas = [], []
    for n in _grid_chain(grid_per_axis):
        pts, delta = _bloch_grid(n)
        up, _ = _grid_max(comp, pts, 1.0 / math.cos(delta))
        certified = np.minimum(certified, up)
        # best unscaled grid point seeds a seesaw refinement; coarser grids are
        # subsets of finer ones, so refining every level keeps results monotone
        _, arg = _grid_max(comp, pts, 1.0)
        nb = comp[:, 0] + np.einsum("bc,bcij->bij", pts[arg], comp[:, 1:])
        alphas.append(_bloch_to_ket(pts[arg]))
        betas.append(np.linalg.eigh(nb)[1][..., -1])
    _, delta = _bloch_grid(grid_per_axis)
    init = [np.stack(alphas, axis=1).reshape(-1, 2), np.stack(betas, axis=1).reshape(-1, 2)]
    vals, factors, _, _ = seesaw_batch(mats, (2, 2), max_iters=refine_iters, tol=1e-14, init=init)
    # product states are states, so lambda_max is a valid bound as well
    certified = np.minimum(certified, np.linalg.eigvalsh(mats)[:, -1])
    certified = np.maximum(certified, vals)
    return vals, certified, factors, delta


def certified_sep_support_2qubit(x, grid_per_axis: int = 64) -> CertifiedBound:
    """Bracket ``max_{product psi} <psi|x|psi>`` for a two-qubit observable."""
    x = hermitian(x)
    vals, cert, factors, delta = certified_sep_support_batch(x, grid_per_axis)
    w = np.linalg.eigvalsh(x)
    state = ProductState.normalized([factors[0][0], factors[1][0]])
    return CertifiedBound(float(vals[0]), float(cert[0]), float(delta),
                          float((w[-1] - w[0]) / 2), state)


# ---------------------------------------------------------------------------
# separable support oracle
# ---------------------------------------------------------------------------

@dataclass
class SeparableOracle:
    """Support oracle of the separable numerical range.

    Two-qubit observable sets get certified support values; other tensor
    structures get seesaw values flagged as uncertified.
    """

    config: SeesawConfig = field(default_factory=SeesawConfig)
    grid_per_axis: int = 64
    chunk: int = 512

    def __call__(self, obs: ObservableSet, directions) -> SupportBatch:
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        mats = obs.combine(u)
        if tuple(obs.dims) == (2, 2):
            vals, cert, factors, _ = certified_sep_support_batch(mats, self.grid_per_axis)
            certified = np.ones(len(u), dtype=bool)
        else:
            parts = [seesaw_batch(mats[s:s + self.chunk], obs.dims, self.config.restarts,
                                  self.config.max_iters, self.config.tol, seed)
                     for s, seed in zip(range(0, len(u), self.chunk),
                                        split_seeds(self.config.seed, -(-len(u) // self.chunk)))]
            vals = np.concatenate([p[0] for p in parts])
            factors = [np.concatenate([p[1][j] for p in parts]) for j in range(len(obs.dims))]
            cert = vals
            certified = np.zeros(len(u), dtype=bool)
        vecs = factors[0]
        for f in factors[1:]:
            vecs = np.einsum("bi,bj->bij", vecs, f).reshape(len(u), -1)
        points = obs.expectations(vecs)
        # the achieved point defines the value; keep the sandwich exact in floating point
        cert = np.maximum(cert, np.einsum("bk,bk->b", u, points))
        achievers = [ProductState.normalized([f[i] for f in factors]) for i in range(len(u))]
        return SupportBatch(u, cert, points, certified, achievers)


def sep_support_oracle(obs: ObservableSet, u, cfg: SeesawConfig | None = None,
                       grid_per_axis: int = 64) -> SupportSample:
    oracle = SeparableOracle(cfg or SeesawConfig(), grid_per_axis)
    return oracle(obs, np.atleast_2d(u)).sample(0)


# ---------------------------------------------------------------------------
# GOE statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GoeStatistic:
    mean_ratio: float
    stderr: float
    mean_abs_lmin: float
    mean_abs_lsep_min: float
    ratios: np.ndarray = field(repr=False)

    @property
    def samples(self) -> int:
        return len(self.ratios)


def min_separable_expectation(mats, dims, cfg: SeesawConfig = SeesawConfig(), chunk: int = 256):
    """Seesaw estimate of ``min <a x b|M|a x b>`` for a batch of operators."""
    mats = np.asarray(mats)
    seeds = split_seeds(cfg.seed, -(-len(mats) // chunk))
    out = []
    for s, seed in zip(range(0, len(mats), chunk), seeds):
        vals, *_ = seesaw_batch(-mats[s:s + chunk], dims, cfg.restarts, cfg.max_iters, cfg.tol, seed)
        out.append(-vals)
    return np.concatenate(out)


def goe_ratio_statistic(d: int, samples: int, cfg: SeesawConfig = SeesawConfig(), seed=0,
                        scale: float = 1.0) -> GoeStatistic:
    """Average of ``lambda_sep_min / lambda_min`` over GOE matrices of size ``d^2``."""
    if d < 2:
        raise ShapeError("local dimension must be >= 2")
    x = sample_goe(d * d, seed, size=samples, scale=scale)
    lmin = np.linalg.eigvalsh(x)[:, 0]
    lsep = min_separable_expectation(x, (d, d), cfg)
    ratios = lsep / lmin
    se = float(np.std(ratios, ddof=1) / np.sqrt(samples)) if samples > 1 else float("nan")
    return GoeStatistic(float(np.mean(ratios)), se, float(np.mean(np.abs(lmin))),
                        float(np.mean(np.abs(lsep))), ratios)


# ---------------------------------------------------------------------------
# spectra of separable states
# ---------------------------------------------------------------------------

def ppt_check(rho, dims, tol: float = 1e-10) -> bool:
    """True iff the partial transpose of ``rho`` has no eigenvalue below ``-tol``."""
    pt = partial_transpose(hermitian(rho), dims, site=1)
    return bool(np.linalg.eigvalsh(hermitian(pt))[0] >= -tol)


def is_absolutely_separable(spectrum, slack: float = 1e-12) -> bool:
    """Two-qubit criterion ``(l1 - l3)^2 <= 4 l2 l4`` on the sorted spectrum."""
    lam = np.sort(np.asarray(spectrum, dtype=float).ravel())[::-1]
    if lam.shape != (4,):
        raise ShapeError("absolute separability test needs exactly four eigenvalues")
    return bool((lam[0] - lam[2]) ** 2 <= 4 * lam[1] * lam[3] + slack)


_INVPHI = (math.sqrt(5) - 1) / 2


def _golden_max(f, lo, hi, tol=1e-12):
    """Maximize a concave function on ``[lo, hi]``; returns (x, f(x))."""
    a, b = lo, hi
    c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    cands = [(fa, xa) for xa, fa in ((a, f(a)), (b, f(b)), (c, fc), (d, fd))]
    fbest, xbest = max(cands)
    return xbest, fbest


def _bisect_root(f, good, bad, tol=1e-14):
    """Boundary between ``f >= 0`` (at ``good``) and ``f < 0`` (at ``bad``)."""
    while abs(bad - good) > tol:
        mid = (good + bad) / 2
        if f(mid) >= 0:
            good = mid
        else:
            bad = mid
    return good


def _abs_sep_max(e: np.ndarray, tol: float = 1e-12) -> float:
    """``max lambda.e`` over descending absolutely separable two-qubit spectra.

    With ``l2, l4`` fixed the objective grows with ``l1 - l3``, which is
    capped by ``min(2 sqrt(l2 l4), l1 + l3 - 2 l4)``; the remaining problem
    in ``(l2, l4)`` is concave on a convex domain and solved by nested
    golden-section search.
    """
    e1, e2, e3, e4 = e

    def delta_max(l2, l4):
        s = 1 - l2 - l4
        return min(2 * math.sqrt(max(l2 * l4, 0.0)), s - 2 * l4)

    def slack(l2, l4):
        s = 1 - l2 - l4
        return delta_max(l2, l4) - abs(2 * l2 - s)

    def objective(l2, l4):
        s = 1 - l2 - l4
        return 0.5 * (e1 + e3) * s + 0.5 * (e1 - e3) * delta_max(l2, l4) + e2 * l2 + e4 * l4

    def inner(l4):
        lo, hi = l4, 0.5
        x0, f0 = _golden_max(lambda l2: slack(l2, l4), lo, hi, tol)
        if f0 < 0:
            return -math.inf
        a = lo if slack(lo, l4) >= 0 else _bisect_root(lambda l2: slack(l2, l4), x0, lo)
        b = hi if slack(hi, l4) >= 0 else _bisect_root(lambda l2: slack(l2, l4), x0, hi)
        if b - a <= tol:
            return objective(x0, l4)
        return _golden_max(lambda l2: objective(l2, l4), a, b, tol)[1]

    return _golden_max(inner, 0.0, 0.25, tol)[1]


def abs_sep_extremum(obs_spectrum, sense: str = "max") -> float:
    """Extremal expectation of an observable with the given spectrum over
    absolutely separable two-qubit states."""
    e = np.sort(np.asarray(obs_spectrum, dtype=float).ravel())[::-1]
    if e.shape != (4,):
        raise ShapeError("need exactly four observable eigenvalues")
    if sense == "max":
        return _abs_sep_max(e)
    if sense == "min":
        return -_abs_sep_max(np.sort(-e)[::-1])
    raise ValueError("sense must be 'max' or 'min'")


def ppt_fraction(samples: int, seed=0, dims=(2, 2), chunk: int = 20_000) -> float:
    """Fraction of Hilbert-Schmidt random states with positive partial transpose."""
    da, db = dims
    hits = 0
    for s, ss in zip(range(0, samples, chunk), split_seeds(seed, -(-samples // chunk))):
        n = min(chunk, samples - s)
        rho = sample_hs_state(da * db, ss, size=n).reshape(n, da, db, da, db)
        pt = rho.transpose(0, 1, 4, 3, 2).reshape(n, da * db, da * db)
        hits += int(np.sum(np.linalg.eigvalsh(pt)[:, 0] >= -1e-12))
    return hits / samples
