"""Entanglement certification from finite measurement data.

Each observable is measured ``m`` times. After rescaling every observable
to unit spectral width the sample means lie in a hyperrectangle around the
true expectation vector with probability at least ``1 - alpha``
(Hoeffding plus a union bound). Entanglement is certified when a direction
``u`` separates the whole rectangle from the separable numerical range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import hoeffding_bound
from .errors import ConfigError, DataFormatError, InvalidMatrix, UnsupportedDimension
from .qlinalg import ObservableSet, hermitian, make_rng
from .rangegeom import direction_grid
from .septools import certified_sep_support_batch


@dataclass(frozen=True, eq=False)
class ConfidenceRect:
    center: np.ndarray
    half_widths: np.ndarray
    alpha: float
    shots: int

    def __post_init__(self):
        if np.any(self.half_widths <= 0):
            raise ConfigError("half widths must be positive")
        if hoeffding_bound(self.shots, self.half_widths) > self.alpha * (1 + 1e-12):
            raise ConfigError("half widths too small for the requested alpha")

    @property
    def k(self) -> int:
        return len(self.center)

    def contains(self, point) -> bool:
        return bool(np.all(np.abs(np.asarray(point) - self.center) <= self.half_widths))

    def min_along(self, u) -> np.ndarray:
        """``min_{x in rect} u.x`` for one direction or a batch."""
        u = np.asarray(u, dtype=float)
        return u @ self.center - np.abs(u) @ self.half_widths


@dataclass(frozen=True, eq=False)
class Certificate:
    direction: np.ndarray
    sep_support_certified: float
    rect_min_along_direction: float
    margin: float

    def as_dict(self) -> dict:
        return {"direction": [float(v) for v in self.direction],
                "sep_support_certified": self.sep_support_certified,
                "rect_min_along_direction": self.rect_min_along_direction,
                "margin": self.margin}


def rescale_observables(obs: ObservableSet):
    """Map each observable affinely onto spectrum range ``[0, 1]``.

    Returns
    -------
    scaled : ObservableSet
    lows, widths : ndarray
        ``A_j = lows_j + widths_j * scaled_j``.
    """
    lows, widths, mats = [], [], []
    for a in obs:
        w = np.linalg.eigvalsh(a)
        lo, width = w[0], w[-1] - w[0]
        if width <= 1e-12:
            raise InvalidMatrix("observable is proportional to the identity")
        lows.append(lo)
        widths.append(width)
        mats.append((a - lo * np.eye(obs.D)) / width)
    return ObservableSet.of(*mats, dims=obs.dims), np.array(lows), np.array(widths)


def equal_split_half_width(k: int, m: int, alpha: float) -> float:
    """``t`` with ``1 - (1 - 2 exp(-2 m t^2))^k <= alpha`` (unit widths)."""
    if not (0 < alpha < 1):
        raise ConfigError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2 * k / alpha) / (2 * m))


def confidence_rect(outcomes, obs: ObservableSet, alpha: float, half_widths=None) -> ConfidenceRect:
    """Rectangle in rescaled coordinates from raw per-shot outcomes of shape (m, k)."""
    data = np.asarray(outcomes, dtype=float)
    if data.ndim != 2 or data.shape[1] != obs.k or len(data) < 1:
        raise DataFormatError(f"expected an (m, {obs.k}) array of outcomes, got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DataFormatError("outcomes contain non-finite values")
    _, lows, widths = rescale_observables(obs)
    scaled = (data - lows) / widths
    if np.any(scaled < -1e-9) or np.any(scaled > 1 + 1e-9):
        raise DataFormatError("an outcome lies outside its observable's spectrum range")
    m = len(data)
    if half_widths is None:
        t = np.full(obs.k, equal_split_half_width(obs.k, m, alpha))
    else:
        t = np.asarray(half_widths, dtype=float)
    return ConfidenceRect(scaled.mean(axis=0), t, alpha, m)


def simulate_shots(obs: ObservableSet, rho, m: int, seed=None) -> np.ndarray:
    """Projective measurement outcomes (eigenvalues), ``m`` shots per observable."""
    rho = hermitian(rho)
    rng = make_rng(seed)
    out = np.empty((m, obs.k))
    for j, a in enumerate(obs):
        w, v = np.linalg.eigh(a)
        p = np.clip(np.real(np.einsum("ij,ik,kj->j", v.conj(), rho, v)), 0, None)
        out[:, j] = rng.choice(w, size=m, p=p / p.sum())
    return out


def _sep_support(scaled: ObservableSet, dirs: np.ndarray, grid: int) -> np.ndarray:
    _, cert, _, _ = certified_sep_support_batch(scaled.combine(dirs), grid)
    return cert


def find_certificate(obs: ObservableSet, rect: ConfidenceRect, n_directions: int = 256,
                     grid_per_axis: int = 64, refine_steps: int = 40) -> Certificate | None:
    """Search for a direction separating ``rect`` from the separable range.

    ``obs`` are the original observables; the rectangle lives in rescaled
    coordinates. Only two-qubit observables are accepted, since
    certification needs a rigorous upper bound on the separable support.
    """
    if tuple(obs.dims) != (2, 2):
        raise UnsupportedDimension("certification needs two-qubit observables")
    scaled, _, _ = rescale_observables(obs)
    k = scaled.k
    dirs = direction_grid(k, max(n_directions, 2 * k))
    score = rect.min_along(dirs) - _sep_support(scaled, dirs, grid_per_axis)
    i = int(np.argmax(score))
    u, best = dirs[i], score[i]

    if k > 1:
        step = 0.5 * math.pi / math.sqrt(len(dirs))
        rng = make_rng(0)
        for _ in range(refine_steps):
            cand = u + step * rng.standard_normal((4 * k, k))
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            s = rect.min_along(cand) - _sep_support(scaled, cand, grid_per_axis)
            j = int(np.argmax(s))
            if s[j] > best:
                u, best = cand[j], s[j]
            else:
                step *= 0.6
    if best <= 0:
        return None

    # independent re-check on a finer grid before emitting anything
    sep = float(_sep_support(scaled, u[None], 2 * grid_per_axis)[0])
    rmin = float(rect.min_along(u))
    margin = rmin - sep
    if margin <= 0:
        return None
    return Certificate(np.array(u, dtype=float), sep, rmin, margin)
