"""Hermitian linear algebra, tensor-product constructors and random samplers.

Matrices are plain ``numpy`` arrays. Functions that build a Hermitian
matrix pass it through :func:`hermitian`, which symmetrizes and rejects
inputs that were not Hermitian to begin with.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidMatrix, ShapeError

HERMITIAN_ATOL = 1e-8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)


# ---------------------------------------------------------------------------
# random numbers
# ---------------------------------------------------------------------------

def make_rng(seed=None) -> np.random.Generator:
    """Counter-based (Philox) generator from an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def split_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """Independent child seeds, one per parallel task."""
    if isinstance(seed, np.random.SeedSequence):
        return seed.spawn(n)
    return np.random.SeedSequence(seed).spawn(n)


# ---------------------------------------------------------------------------
# Hermitian matrices
# ---------------------------------------------------------------------------

def hermitian(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return ``(m + m^dagger)/2`` as a complex array.

    Raises
    ------
    InvalidMatrix
        If ``m`` is not square, has non-finite entries, or differs from its
        Hermitian part by more than ``atol`` (relative to its largest entry
        when that exceeds one).
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidMatrix(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix has non-finite entries")
    h = (a + a.conj().T) / 2
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - h)) > atol * scale:
        raise InvalidMatrix("matrix is not Hermitian within tolerance")
    return h


def eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with eigenvalues sorted in descending order.

    Returns
    -------
    values : ndarray, shape (D,)
    vectors : ndarray, shape (D, D)
        Column ``i`` is the eigenvector for ``values[i]``.
    """
    h = hermitian(m)
    w, v = np.linalg.eigh(h)
    return w[::-1].copy(), v[:, ::-1].copy()


def lambda_max(m) -> float:
    return float(np.linalg.eigvalsh(np.asarray(m))[..., -1])


def lambda_min(m) -> float:
    return float(np.linalg.eigvalsh(np.asarray(m))[..., 0])


def spectral_width(m) -> float:
    w = np.linalg.eigvalsh(np.asarray(m))
    return float(w[-1] - w[0])


def kron(*mats) -> np.ndarray:
    """Tensor product with the row-major convention ``(A x B)[(a i),(a' j)] = A[a,a'] B[i,j]``."""
    if not mats:
        raise ShapeError("kron needs at least one factor")
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def direct_sum(blocks: Iterable) -> np.ndarray:
    """Block-diagonal assembly; scalars count as 1x1 blocks."""
    parts = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in blocks]
    n = sum(p.shape[0] for p in parts)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for p in parts:
        if p.shape[0] != p.shape[1]:
            raise ShapeError(f"block of shape {p.shape} is not square")
        j = i + p.shape[0]
        out[i:j, i:j] = p
        i = j
    return hermitian(out)


def traceless_part(a) -> np.ndarray:
    a = hermitian(a)
    d = a.shape[0]
    return a - (np.trace(a) / d) * np.eye(d)


def gellmann_basis(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices normalized to ``Tr(G_i G_j) = delta_ij``.

    Order: symmetric off-diagonal, antisymmetric off-diagonal, diagonal.
    """
    if d < 2:
        raise ShapeError("Gell-Mann basis needs d >= 2")
    sym, asym, diag = [], [], []
    r = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = r
            sym.append(s)
            t = np.zeros((d, d), dtype=complex)
            t[j, k] = -1j * r
            t[k, j] = 1j * r
            asym.append(t)
    for l in range(1, d):
        g = np.zeros((d, d), dtype=complex)
        g[np.arange(l), np.arange(l)] = 1
        g[l, l] = -l
        diag.append(g / np.sqrt(l * (l + 1)))
    return sym + asym + diag


# ---------------------------------------------------------------------------
# tensor structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionProfile:
    """Local dimensions ``(d_1, ..., d_n)`` of a multipartite system."""

    local_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeError(f"invalid local dimensions {self.local_dims!r}")
        object.__setattr__(self, "local_dims", dims)

    @property
    def n(self) -> int:
        return len(self.local_dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.local_dims))

    def __iter__(self):
        return iter(self.local_dims)

    def __len__(self):
        return len(self.local_dims)

    def __getitem__(self, i):
        return self.local_dims[i]


def as_profile(dims) -> DimensionProfile:
    if isinstance(dims, DimensionProfile):
        return dims
    if np.isscalar(dims):
        return DimensionProfile((int(dims),))
    return DimensionProfile(tuple(dims))


def _check_square(m, profile: DimensionProfile) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.shape[-2:] != (profile.total, profile.total):
        raise ShapeError(f"matrix shape {a.shape} does not match profile {profile.local_dims}")
    return a


def conditional_operator(x, alpha, dims, site: int = 0) -> np.ndarray:
    """Sandwich ``x`` with the unit vector ``alpha`` on one tensor factor.

    Returns ``(<alpha| x 1) x (|alpha> x 1)`` acting on the remaining factors
    (in their original order).
    """
    profile = as_profile(dims)
    a = _check_square(x, profile)
    n = profile.n
    if not 0 <= site < n:
        raise ShapeError(f"site {site} out of range for {n} factors")
    alpha = np.asarray(alpha, dtype=complex).ravel()
    if alpha.shape[0] != profile[site]:
        raise ShapeError(f"vector of length {alpha.shape[0]} does not match local dim {profile[site]}")
    t = a.reshape(profile.local_dims * 2)
    t = np.tensordot(alpha.conj(), t, axes=([0], [site]))
    # column axis of the chosen site moved down by one after contracting the row axis
    t = np.tensordot(t, alpha, axes=([n - 1 + site], [0]))
    rest = profile.total // profile[site]
    return hermitian(t.reshape(rest, rest))


def partial_transpose(rho, dims, site: int = 1) -> np.ndarray:
    """Transpose one tensor factor of ``rho``; involutive."""
    profile = as_profile(dims)
    a = _check_square(rho, profile)
    n = profile.n
    if not 0 <= site < n:
        raise ShapeError(f"site {site} out of range for {n} factors")
    t = a.reshape(profile.local_dims * 2)
    t = np.swapaxes(t, site, n + site)
    return t.reshape(profile.total, profile.total)


@dataclass(frozen=True, eq=False)
class ProductState:
    """Pure product state given by one unit vector per tensor factor."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=complex).ravel() for f in self.factors)
        for f in fs:
            if abs(np.linalg.norm(f) - 1) > 1e-12:
                raise InvalidMatrix("product-state factor is not normalized")
        object.__setattr__(self, "factors", fs)

    @classmethod
    def normalized(cls, factors) -> "ProductState":
        return cls(tuple(np.asarray(f, dtype=complex) / np.linalg.norm(f) for f in factors))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def vector(self) -> np.ndarray:
        return reduce(np.kron, self.factors)

    def density(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    def expectation(self, m) -> float:
        v = self.vector
        return float(np.real(v.conj() @ np.asarray(m) @ v))


# ---------------------------------------------------------------------------
# observable sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ObservableSet:
    """Ordered Hermitian observables ``(A_1, ..., A_k)`` on a common system."""

    matrices: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        mats = [hermitian(m) for m in self.matrices] if len(self.matrices) else []
        profile = as_profile(self.dims)
        if mats:
            shapes = {m.shape for m in mats}
            if len(shapes) != 1:
                raise ShapeError(f"observables have differing shapes {sorted(shapes)}")
            if mats[0].shape[0] != profile.total:
                raise ShapeError(
                    f"observables are {mats[0].shape[0]}-dimensional but dims {profile.local_dims} "
                    f"multiply to {profile.total}")
            stack = np.stack(mats)
        else:
            stack = np.zeros((0, profile.total, profile.total), dtype=complex)
        stack.setflags(write=False)
        object.__setattr__(self, "matrices", stack)
        object.__setattr__(self, "dims", profile.local_dims)

    @classmethod
    def of(cls, *mats, dims=None) -> "ObservableSet":
        if dims is None:
            dims = (np.asarray(mats[0]).shape[0],)
        return cls(list(mats), dims)

    @property
    def k(self) -> int:
        return self.matrices.shape[0]

    @property
    def D(self) -> int:
        return self.matrices.shape[1]

    @property
    def profile(self) -> DimensionProfile:
        return DimensionProfile(self.dims)

    def __len__(self):
        return self.k

    def __getitem__(self, i):
        return self.matrices[i]

    def __iter__(self):
        return iter(self.matrices)

    def select(self, indices: Sequence[int]) -> "ObservableSet":
        return ObservableSet([self.matrices[i] for i in indices], self.dims)

    def combine(self, u) -> np.ndarray:
        """``sum_i u_i A_i``; ``u`` may be a batch of shape (N, k)."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.k:
            raise ShapeError(f"direction has {u.shape[-1]} components, expected {self.k}")
        return np.tensordot(u, self.matrices, axes=([-1], [0]))

    def expectations(self, state) -> np.ndarray:
        """Expectation vector for a state vector, density matrix or ProductState.

        A 2-D input is read as a density matrix when it is ``D x D``, otherwise
        as a batch of state vectors (one per row).
        """
        if isinstance(state, ProductState):
            state = state.vector
        s = np.asarray(state, dtype=complex)
        if s.ndim == 2 and s.shape == (self.D, self.D):
            return np.real(np.einsum("kij,ji->k", self.matrices, s))
        return np.real(np.einsum("...i,kij,...j->...k", s.conj(), self.matrices, s))


# ---------------------------------------------------------------------------
# random ensembles
# ---------------------------------------------------------------------------

def sample_goe(d: int, seed=None, size: int | None = None, scale: float = 1.0) -> np.ndarray:
    """Real symmetric matrices with density proportional to ``exp(-Tr A^2 / 2)``.

    Diagonal entries have variance 1, off-diagonal entries variance 1/2.
    ``scale`` multiplies the result (``scale = 1/sqrt(2)`` gives the
    ``exp(-Tr A^2)`` convention).
    """
    rng = make_rng(seed)
    shape = (d, d) if size is None else (size, d, d)
    g = rng.standard_normal(shape)
    a = (g + np.swapaxes(g, -1, -2)) / 2
    return scale * a


def sample_hs_state(d: int, seed=None, size: int | None = None) -> np.ndarray:
    """Density matrices distributed according to the Hilbert-Schmidt measure."""
    rng = make_rng(seed)
    shape = (d, d) if size is None else (size, d, d)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w = g @ np.conj(np.swapaxes(g, -1, -2))
    tr = np.real(np.trace(w, axis1=-2, axis2=-1))
    return w / tr[..., None, None]


def random_unit_vectors(d: int, n: int, seed=None) -> np.ndarray:
    """``n`` Haar-random complex unit vectors of length ``d``."""
    rng = make_rng(seed)
    v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# common states and observables
# ---------------------------------------------------------------------------

def ket(*bits: int, d: int = 2) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for b in bits:
        e = np.zeros(d, dtype=complex)
        e[b] = 1
        out = np.kron(out, e)
    return out


PHI_PLUS = (ket(0, 0) + ket(1, 1)) / np.sqrt(2)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def bloch_vector_state(r) -> np.ndarray:
    """Qubit unit vector whose Bloch vector is ``r`` (``|r| = 1``)."""
    x, y, z = (float(c) for c in r)
    theta = np.arccos(np.clip(z, -1, 1))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
