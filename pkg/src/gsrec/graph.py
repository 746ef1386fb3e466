"""Graph shift operators, total variation, and graph spectral transforms.

A graph on N nodes is represented by its weighted adjacency matrix acting as a
shift operator. The orientation convention used throughout the package:
``weights[n, m]`` is the weight of the edge from node ``m`` into node ``n``, so
``weights @ x`` replaces the value at each node by a weighted aggregate over its
in-neighbors. Directed graphs and non-symmetric weights are fully supported.

Signals are plain numpy arrays: a vector signal has shape ``(N,)`` and a signal
matrix (one signal per column) has shape ``(N, L)``. Masks of accessible entries
are boolean arrays of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NotDiagonalizable,
    ZeroSpectralRadius,
)

# Matrices up to this size use a dense eigensolve for the spectral radius;
# larger ones fall back to power iteration.
_DENSE_EIG_LIMIT = 2000
_POWER_TOL = 1e-10
_POWER_MAXIT = 10000

# Relative conditioning limit beyond which an eigenvector matrix is rejected.
_DIAG_COND_LIMIT = 1e10
_DIAG_RECON_TOL = 1e-8


@dataclass(frozen=True)
class GraphShift:
    """Weighted adjacency matrix acting as the shift operator of a graph.

    Parameters
    ----------
    weights : ndarray, shape (N, N)
        Edge weights; ``weights[n, m]`` is the weight from node m into node n.
    normalized : bool
        True once the matrix has been scaled to unit spectral radius.
    spectral_radius : float or None
        The pre-scaling spectral radius, recorded by :func:`normalize_shift`.
    """

    weights: np.ndarray
    normalized: bool = False
    spectral_radius: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionMismatch(
                f"shift weights must be square, got shape {w.shape}"
            )
        if w.shape[0] < 1:
            raise DimensionMismatch("shift needs at least one node")
        if not np.all(np.isfinite(w)):
            raise ValueError("shift weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class SpectralBasis:
    """Eigendecomposition of a shift: ``weights = vectors @ diag(values) @ inverse``."""

    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class BlockPartition:
    """The four blocks of a matrix under an accessible/inaccessible node split."""

    mm: np.ndarray
    mu: np.ndarray
    um: np.ndarray
    uu: np.ndarray
    accessible: np.ndarray = field(repr=False)
    inaccessible: np.ndarray = field(repr=False)


def cycle_shift(n: int) -> GraphShift:
    """Directed cycle on n nodes: the classical time-shift operator.

    ``(A x)[k] = x[k-1 mod n]``; already has unit spectral radius.
    """
    if n < 1:
        raise DimensionMismatch("cycle needs at least one node")
    w = np.zeros((n, n))
    w[np.arange(n), np.arange(-1, n - 1)] = 1.0
    return GraphShift(w, normalized=True, spectral_radius=1.0)


def _power_iteration_radius(w: np.ndarray) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(w.shape[0])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(_POWER_MAXIT):
        u = w @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        if abs(norm - estimate) <= _POWER_TOL * max(1.0, norm):
            return norm
        estimate = norm
        v = u / norm
    return estimate


def spectral_radius(weights: np.ndarray) -> float:
    """Largest eigenvalue magnitude of a square matrix.

    Dense eigensolve up to 2000 nodes, power iteration beyond that.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape[0] <= _DENSE_EIG_LIMIT:
        return float(np.max(np.abs(np.linalg.eigvals(w))))
    return _power_iteration_radius(w)


def normalize_shift(shift: GraphShift) -> GraphShift:
    """Scale a shift to unit spectral radius.

    Returns a new :class:`GraphShift` with ``normalized=True`` and the
    pre-scaling radius recorded in ``spectral_radius``. Raises
    :class:`ZeroSpectralRadius` when the radius is numerically zero (zero or
    nilpotent weights), since no scaling can fix that.
    """
    if shift.normalized:
        return shift
    radius = spectral_radius(shift.weights)
    if radius <= 1e-12 * (1.0 + np.max(np.abs(shift.weights))):
        raise ZeroSpectralRadius(
            f"spectral radius {radius:.3e} is numerically zero"
        )
    return GraphShift(shift.weights / radius, normalized=True, spectral_radius=radius)


def _require_normalized(shift: GraphShift) -> None:
    if not shift.normalized:
        raise ValueError(
            "shift must be normalized to unit spectral radius first "
            "(use normalize_shift)"
        )


def _check_signal(x: np.ndarray, n: int, ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[0] != n:
        raise DimensionMismatch(
            f"signal has {arr.shape[0]} rows, shift has {n} nodes"
        )
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatch(f"expected {ndim}-d signal, got {arr.ndim}-d")
    return arr


def quadratic_variation(x: np.ndarray, shift: GraphShift) -> float:
    """Quadratic total variation of a vector signal: ``||x - A x||_2^2``.

    The shift must be normalized so the difference is scale-free.
    """
    _require_normalized(shift)
    x = _check_signal(x, shift.n, ndim=1)
    d = x - shift.weights @ x
    return float(d @ d)


def matrix_variation(X: np.ndarray, shift: GraphShift) -> float:
    """Quadratic total variation of a signal matrix: ``||X - A X||_F^2``.

    Equals the sum of :func:`quadratic_variation` over columns.
    """
    _require_normalized(shift)
    X = _check_signal(X, shift.n, ndim=2)
    d = X - shift.weights @ X
    return float(np.sum(d * d))


def tilde_shift(shift: GraphShift) -> np.ndarray:
    """The symmetric PSD matrix ``(I - A)^T (I - A)``.

    Quadratic variation is the quadratic form of this matrix:
    ``x^T tilde_shift x = ||x - A x||_2^2``.
    """
    _require_normalized(shift)
    d = np.eye(shift.n) - shift.weights
    return d.T @ d


def spectral_decomposition(shift: GraphShift) -> SpectralBasis:
    """Eigendecompose a shift into its graph Fourier basis.

    Symmetric shifts use a Hermitian eigensolve (real orthonormal basis);
    general shifts use the dense nonsymmetric solver and may return a complex
    basis. Raises :class:`NotDiagonalizable` when the eigenvector matrix is
    ill-conditioned (relative condition number above 1e10) or does not
    reconstruct the shift to within 1e-8 relative Frobenius error.
    """
    w = shift.weights
    if np.allclose(w, w.T, rtol=0.0, atol=1e-12):
        values, vectors = np.linalg.eigh(w)
        inverse = vectors.T.copy()
        return SpectralBasis(values=values, vectors=vectors, inverse=inverse)
    values, vectors = np.linalg.eig(w)
    cond = np.linalg.cond(vectors)
    if not np.isfinite(cond) or cond > _DIAG_COND_LIMIT:
        raise NotDiagonalizable(
            f"eigenvector condition number {cond:.3e} exceeds {_DIAG_COND_LIMIT:.0e}"
        )
    inverse = np.linalg.inv(vectors)
    recon = (vectors * values) @ inverse
    err = np.linalg.norm(recon - w) / max(1.0, np.linalg.norm(w))
    if err > _DIAG_RECON_TOL:
        raise NotDiagonalizable(
            f"eigendecomposition reconstruction error {err:.3e}"
        )
    return SpectralBasis(values=values, vectors=vectors, inverse=inverse)


def gft(x: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Graph Fourier transform: expansion coefficients ``basis.inverse @ x``."""
    x = np.asarray(x)
    if x.shape[0] != basis.n:
        raise DimensionMismatch(
            f"signal has {x.shape[0]} rows, basis has {basis.n}"
        )
    return basis.inverse @ x


def igft(coeffs: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Inverse graph Fourier transform: ``basis.vectors @ coeffs``."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != basis.n:
        raise DimensionMismatch(
            f"coefficients have {coeffs.shape[0]} rows, basis has {basis.n}"
        )
    return basis.vectors @ coeffs


def check_node_mask(mask: np.ndarray, n: int) -> np.ndarray:
    """Validate a boolean node mask of accessible entries."""
    m = np.asarray(mask)
    if m.dtype != np.bool_:
        raise DimensionMismatch("mask must be a boolean array")
    if m.shape != (n,):
        raise DimensionMismatch(f"node mask shape {m.shape} != ({n},)")
    return m


def partition_blocks(matrix: np.ndarray, node_mask: np.ndarray) -> BlockPartition:
    """Split a square matrix into accessible/inaccessible blocks.

    Parameters
    ----------
    matrix : ndarray, shape (N, N)
    node_mask : bool ndarray, shape (N,)
        True marks accessible nodes.

    Returns
    -------
    BlockPartition
        Blocks ``mm`` (accessible rows and columns), ``mu``, ``um``, ``uu``,
        plus the index arrays that generated them.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got {matrix.shape}")
    mask = check_node_mask(node_mask, matrix.shape[0])
    acc = np.flatnonzero(mask)
    inacc = np.flatnonzero(~mask)
    return BlockPartition(
        mm=matrix[np.ix_(acc, acc)],
        mu=matrix[np.ix_(acc, inacc)],
        um=matrix[np.ix_(inacc, acc)],
        uu=matrix[np.ix_(inacc, inacc)],
        accessible=acc,
        inaccessible=inacc,
    )
