"""Dense decomposition primitives with explicit rank and ordering contracts.

The analysis update in :mod:`eakf.update` is only exact when two conventions
are enforced that general-purpose solvers do not guarantee:

* the SVD of a rank-``r`` matrix must be returned in the shape
  ``(n, r) x (r, m) x (m, m)`` so the rectangular singular-value factor has a
  well defined Moore-Penrose pseudoinverse, and
* the symmetric eigendecomposition used downstream must place eigenvectors
  lying in the null space of the decomposed perturbation matrix in the
  *trailing* columns of the eigenvector matrix.

``ordered_eig_psd`` enforces the second contract constructively: instead of
sorting the output of a black-box eigensolver (which cannot distinguish a
zero eigenvalue inside the row space from one in the null space), it
eigendecomposes the input projected onto the row-space basis and appends the
null-space basis as the trailing columns. The contract then holds even when
the symmetric input has a larger null space than the perturbation matrix,
e.g. for unobserved or partially observed ensembles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._arrays import frobenius, require_matrix, symmetrize

# Relative rank threshold: sigma_i is retained iff
# sigma_i > rank_tol * sigma_1 * max(n, m). The default matches the usual
# numerical-rank convention (machine epsilon scale).
DEFAULT_RANK_TOL = float(np.finfo(np.float64).eps)

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class SvdFactors:
    """Rank-revealing SVD ``M = left @ sigma_rect @ right.T``.

    Attributes
    ----------
    left : ndarray, shape (n, r)
        Orthonormal columns spanning the range of the input.
    sigma_rect : ndarray, shape (r, m)
        Rectangular diagonal factor; diagonal holds the retained singular
        values in strictly decreasing order, all positive.
    right : ndarray, shape (m, m)
        Orthogonal matrix. The leading ``r`` columns span the row space of
        the input, the trailing ``m - r`` columns span its null space.
    rank : int
        Number of singular values above the rank threshold.
    """

    left: np.ndarray
    sigma_rect: np.ndarray
    right: np.ndarray
    rank: int

    def __post_init__(self):
        r = self.rank
        n = self.left.shape[0]
        m = self.right.shape[0]
        if self.left.shape != (n, r) or self.sigma_rect.shape != (r, m):
            raise ValueError("SvdFactors: inconsistent factor shapes")
        if self.right.shape != (m, m):
            raise ValueError("SvdFactors: right factor must be square")
        sigma = self.singular_values
        if r and (np.any(sigma <= 0.0) or np.any(np.diff(sigma) > 0.0)):
            raise ValueError("SvdFactors: singular values must be positive and descending")
        if frobenius(self.left.T @ self.left - np.eye(r)) > _ORTHO_TOL * max(r, 1):
            raise ValueError("SvdFactors: left factor columns not orthonormal")
        if frobenius(self.right.T @ self.right - np.eye(m)) > _ORTHO_TOL * max(m, 1):
            raise ValueError("SvdFactors: right factor not orthogonal")

    @property
    def singular_values(self) -> np.ndarray:
        """Retained singular values as a 1-D array of length ``rank``."""
        return np.diagonal(self.sigma_rect).copy()

    def row_space_basis(self) -> np.ndarray:
        """Leading ``rank`` columns of ``right`` (row space of the input)."""
        return self.right[:, : self.rank]

    def null_space_basis(self) -> np.ndarray:
        """Trailing columns of ``right`` (null space of the input)."""
        return self.right[:, self.rank :]

    def reconstruct(self) -> np.ndarray:
        return self.left @ self.sigma_rect @ self.right.T


@dataclass(frozen=True)
class OrderedEigen:
    """Eigendecomposition ``S = vectors @ diag(values) @ vectors.T``.

    ``values`` is descending and clamped at zero. When produced by
    :func:`ordered_eig_psd` the trailing columns of ``vectors`` are exactly
    the supplied null-space basis, which is what the analysis update relies
    on.
    """

    vectors: np.ndarray
    values: np.ndarray
    effective_rank: int

    def __post_init__(self):
        m = self.vectors.shape[0]
        if self.vectors.shape != (m, m):
            raise ValueError("OrderedEigen: vectors must be square")
        if self.values.shape != (m,):
            raise ValueError("OrderedEigen: values length must match vectors")
        if np.any(self.values < 0.0):
            raise ValueError("OrderedEigen: values must be nonnegative")
        if np.any(np.diff(self.values) > 0.0):
            raise ValueError("OrderedEigen: values must be descending")

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def svd_full(matrix, rank_tol: float = DEFAULT_RANK_TOL) -> SvdFactors:
    """Rank-revealing SVD with a deterministic sign convention.

    Parameters
    ----------
    matrix : array_like, shape (n, m)
        Dense input, all entries finite, both dimensions positive.
    rank_tol : float
        Relative rank threshold; singular values are retained iff
        ``sigma > rank_tol * sigma_max * max(n, m)``.

    Returns
    -------
    SvdFactors
        Factors satisfying ``left @ sigma_rect @ right.T == matrix`` to
        rounding. Signs are fixed so that in every retained left singular
        vector the entry of largest magnitude (smallest index on ties) is
        positive, with the paired right singular vector flipped to match;
        the same rule is applied to the trailing (null-space) columns of
        ``right`` on their own.
    """
    arr = require_matrix(matrix, "svd_full input")
    n, m = arr.shape
    if n == 0 or m == 0:
        raise ValueError("svd_full: empty matrix")
    u, s, vt = np.linalg.svd(arr, full_matrices=True)
    threshold = rank_tol * float(s[0]) * max(n, m)
    rank = int(np.count_nonzero(s > threshold))

    left = u[:, :rank].copy()
    right = vt.T.copy()
    for j in range(rank):
        pivot = int(np.argmax(np.abs(left[:, j])))
        if left[pivot, j] < 0.0:
            left[:, j] *= -1.0
            right[:, j] *= -1.0
    for j in range(rank, m):
        pivot = int(np.argmax(np.abs(right[:, j])))
        if right[pivot, j] < 0.0:
            right[:, j] *= -1.0

    sigma_rect = np.zeros((rank, m))
    idx = np.arange(rank)
    sigma_rect[idx, idx] = s[:rank]
    return SvdFactors(left=left, sigma_rect=sigma_rect, right=right, rank=rank)


def pinv_rect_diag(sigma_rect) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a rectangular diagonal matrix.

    For an ``(r, m)`` input with strictly positive diagonal this is the
    ``(m, r)`` rectangular diagonal matrix with diagonal ``1/sigma_i``; the
    product ``pinv @ input`` is then the ``(m, m)`` diagonal projector whose
    first ``r`` diagonal entries are 1 and whose remaining entries are 0.

    Raises
    ------
    ValueError
        If the input has nonzero off-diagonal entries, or a diagonal entry
        that is not strictly positive (truncate to numerical rank first).
    """
    arr = require_matrix(sigma_rect, "pinv_rect_diag input")
    r, m = arr.shape
    diag = np.diagonal(arr)
    off = arr.copy()
    off[np.arange(diag.size), np.arange(diag.size)] = 0.0
    if np.any(off != 0.0):
        raise ValueError("pinv_rect_diag: input is not rectangular diagonal")
    if np.any(diag <= 0.0):
        raise ValueError(
            "pinv_rect_diag: zero or negative diagonal entry; "
            "truncate to numerical rank before inverting"
        )
    out = np.zeros((m, r))
    idx = np.arange(diag.size)
    out[idx, idx] = 1.0 / diag
    return out


def ordered_eig_psd(
    sym,
    row_space_basis,
    null_basis,
    *,
    sym_tol: float = 1e-10,
    basis_tol: float = 1e-8,
) -> OrderedEigen:
    """Eigendecomposition of a symmetric PSD matrix with ordered null vectors.

    Parameters
    ----------
    sym : array_like, shape (m, m)
        Symmetric positive semidefinite matrix whose range is contained in
        the span of ``row_space_basis`` (equivalently ``sym @ null_basis``
        vanishes).
    row_space_basis : array_like, shape (m, r)
        Leading right singular vectors of the associated perturbation
        matrix.
    null_basis : array_like, shape (m, m - r)
        Trailing right singular vectors of the associated perturbation
        matrix; these become the trailing columns of the output verbatim.
    sym_tol, basis_tol : float
        Relative tolerances for the symmetry and basis-consistency checks.

    Returns
    -------
    OrderedEigen
        ``vectors`` has the projected eigenvectors first (eigenvalues
        descending, clamped at zero) and ``null_basis`` last, so the ordering
        contract holds regardless of how many zero eigenvalues the projected
        block contains.
    """
    s_arr = require_matrix(sym, "ordered_eig_psd input")
    m = s_arr.shape[0]
    if s_arr.shape != (m, m):
        raise ValueError("ordered_eig_psd: input must be square")
    basis_r = require_matrix(row_space_basis, "row_space_basis")
    basis_n = require_matrix(null_basis, "null_basis")
    r = basis_r.shape[1]
    if basis_r.shape[0] != m or basis_n.shape != (m, m - r):
        raise ValueError(
            "ordered_eig_psd: bases must partition the columns of an m x m orthogonal matrix"
        )

    scale = frobenius(s_arr)
    if frobenius(s_arr - s_arr.T) > sym_tol * max(scale, 1e-300):
        raise ValueError("ordered_eig_psd: input not symmetric within tolerance")
    if frobenius(s_arr @ basis_n) > basis_tol * max(scale, 1e-300):
        raise ValueError("ordered_eig_psd: basis inconsistent with S")

    if r:
        projected = symmetrize(basis_r.T @ s_arr @ basis_r)
        lam, q = np.linalg.eigh(projected)
        order = np.argsort(-lam, kind="stable")
        lam = np.maximum(lam[order], 0.0)
        leading = basis_r @ q[:, order]
    else:
        lam = np.zeros(0)
        leading = np.zeros((m, 0))

    vectors = np.hstack([leading, basis_n])
    values = np.concatenate([lam, np.zeros(m - r)])
    if values.size and values[0] > 0.0:
        eff = int(np.count_nonzero(values > DEFAULT_RANK_TOL * values[0] * m))
    else:
        eff = 0
    return OrderedEigen(vectors=vectors, values=values, effective_rank=eff)
