"""Deterministic ensemble adjustment analysis step.

The filter updates the scaled perturbation matrix ``Z`` (shape ``(n, m)``,
``P_f = Z @ Z.T``) with a linear adjustment ``Za = A @ Z`` chosen so that the
analysis covariance ``Za @ Za.T`` equals the Kalman posterior

    P_a = (I - K H) P_f,    K = P_f H.T inv(H P_f H.T + R)

exactly, not just in expectation. With the rank-revealing SVD
``Z = left @ sig @ right.T`` (``left`` is ``(n, r)``, ``sig`` is ``(r, m)``
rectangular diagonal, ``right`` is ``(m, m)``) and the ordered
eigendecomposition ``S = C @ diag(g) @ C.T`` of the whitened observation-space
Gram matrix ``S = V inv(R) V.T``, ``V = (H Z).T``, the adjustment is

    A = Z @ C @ diag(1 / sqrt(1 + g)) @ pinv(sig) @ left.T

Two implementation details decide whether this is exact or silently wrong:

* ``pinv(sig)`` must be the Moore-Penrose pseudoinverse of the *rectangular*
  factor. A formulation with a square inverted singular-value factor would
  need ``rank(Z) = m`` to be dimensionally consistent, but centered
  perturbations annihilate the ones vector, so ``rank(Z) <= min(n, m - 1)``
  always; no compute path for the square-inverse form exists here.

* Multiplying out ``A @ Z`` shows that ``pinv(sig) @ sig`` truncates the
  trailing ``m - r`` columns of ``Z @ C @ diag(1/sqrt(1+g))``. That is
  harmless exactly when those columns of ``C`` lie in the null space of
  ``Z``, i.e. when the null-space eigenvectors are ordered last. If an
  eigensolver scatters them elsewhere, the truncation zeroes live columns
  instead and the analysis ensemble loses variance it should have kept.
  ``mode="misordered"`` reproduces that failure on purpose (seeded, for
  demonstrations and negative tests); ``mode="correct"`` uses
  :func:`eakf.linalg.ordered_eig_psd`, which guarantees the ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._arrays import frobenius, symmetrize
from .ensemble import ForecastEnsemble, ObservationModel, PerturbationMatrix, perturbation_matrix
from .linalg import DEFAULT_RANK_TOL, OrderedEigen, SvdFactors, ordered_eig_psd, pinv_rect_diag, svd_full

MODE_CORRECT = "correct"
MODE_MISORDERED = "misordered"


@dataclass(frozen=True)
class ObsSpaceProjection:
    """Observation-space image of the perturbations.

    ``observed`` is ``(H Z).T`` with shape ``(m, p)``; ``gram`` is the
    symmetric PSD matrix ``observed @ inv(R) @ observed.T`` of shape
    ``(m, m)``, equal to ``Z.T H.T inv(R) H Z``.
    """

    observed: np.ndarray
    gram: np.ndarray


@dataclass(frozen=True)
class AdjustmentMatrix:
    """Adjustment ``A`` with the decompositions it was assembled from.

    The defining contract is that ``(A @ Z) @ (A @ Z).T`` matches the exact
    Kalman posterior covariance (checked against :mod:`eakf.oracle` in the
    test suite). ``permutation`` records the column shuffle applied in
    misordered mode, ``None`` in correct mode.
    """

    matrix: np.ndarray
    svd: SvdFactors
    eig: OrderedEigen
    mode: str
    permutation: np.ndarray | None = None


@dataclass(frozen=True)
class AnalysisResult:
    """Analysis mean, scaled perturbations, covariance, and Kalman gain."""

    mean: np.ndarray
    perturbations: np.ndarray
    covariance: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        za = self.perturbations
        row_sums = za.sum(axis=1)
        if np.linalg.norm(row_sums) > 1e-12 * max(frobenius(za), 1.0):
            raise ValueError("analysis perturbation rows must sum to zero")

    def members(self) -> np.ndarray:
        """Analysis ensemble members, ``mean + sqrt(m-1) * perturbations``."""
        m = self.perturbations.shape[1]
        return self.mean[:, None] + np.sqrt(m - 1) * self.perturbations


def project_observations(pert: PerturbationMatrix, obs: ObservationModel) -> ObsSpaceProjection:
    """Form ``V = (H Z).T`` and the whitened Gram matrix ``V inv(R) V.T``.

    The inverse of R is never formed; the product is computed through the
    Cholesky factorization of R and the result is symmetrized.
    """
    if obs.state_dim != pert.state_dim:
        raise ValueError(
            f"observation operator has {obs.state_dim} state columns, "
            f"expected {pert.state_dim}"
        )
    observed = (obs.operator @ pert.matrix).T
    factor = sla.cho_factor(obs.covariance, lower=True)
    gram = symmetrize(observed @ sla.cho_solve(factor, observed.T))
    return ObsSpaceProjection(observed=observed, gram=gram)


def kalman_gain(pert: PerturbationMatrix, obs: ObservationModel) -> np.ndarray:
    """Kalman gain ``P_f H.T inv(H P_f H.T + R)`` via an SPD solve."""
    if obs.state_dim != pert.state_dim:
        raise ValueError(
            f"observation operator has {obs.state_dim} state columns, "
            f"expected {pert.state_dim}"
        )
    z = pert.matrix
    hz = obs.operator @ z
    innovation_cov = symmetrize(hz @ hz.T + obs.covariance)
    try:
        factor = sla.cho_factor(innovation_cov, lower=True)
    except sla.LinAlgError as exc:
        raise np.linalg.LinAlgError("innovation covariance not positive definite") from exc
    # K.T = inv(H P_f H.T + R) @ (H Z) @ Z.T
    return sla.cho_solve(factor, hz @ z.T).T


def _displacing_permutation(rng: np.random.Generator, rank: int, m: int) -> np.ndarray:
    """Random permutation moving at least one trailing (null) column forward.

    Draws are repeated until some index >= rank lands in the leading block,
    which forces at least one live column into the truncated trailing block.
    With 0 < rank < m a draw succeeds with probability at least 1/2.
    """
    if rank == 0 or rank == m:
        return np.arange(m)
    while True:
        perm = rng.permutation(m)
        if np.any(perm[:rank] >= rank):
            return perm


def adjustment_matrix(
    pert: PerturbationMatrix,
    obs: ObservationModel,
    mode: str = MODE_CORRECT,
    *,
    seed: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> AdjustmentMatrix:
    """Assemble the ensemble adjustment matrix.

    Parameters
    ----------
    pert, obs
        Scaled forecast perturbations and the observation model.
    mode : {"correct", "misordered"}
        ``"correct"`` enforces the null-vectors-last eigenvector ordering.
        ``"misordered"`` applies a seeded random column permutation that
        displaces at least one null-space eigenvector out of the trailing
        block, reproducing the under-dispersion failure; use only for
        demonstrations and negative tests.
    seed : int, optional
        Required for ``"misordered"``; ignored otherwise.
    rank_tol : float
        Rank threshold forwarded to :func:`eakf.linalg.svd_full`.

    Notes
    -----
    A zero-spread ensemble (numerical rank 0) yields the zero adjustment:
    the empty pseudoinverse factors make the product vanish, which is the
    correct limit since a zero forecast covariance forces a zero posterior.
    """
    if mode not in (MODE_CORRECT, MODE_MISORDERED):
        raise ValueError(f"unknown mode {mode!r}")
    factors = svd_full(pert.matrix, rank_tol)
    proj = project_observations(pert, obs)
    eig = ordered_eig_psd(proj.gram, factors.row_space_basis(), factors.null_space_basis())

    vectors = eig.vectors
    values = eig.values
    permutation = None
    if mode == MODE_MISORDERED:
        if seed is None:
            raise ValueError("misordered mode requires a seed")
        rng = np.random.default_rng(seed)
        permutation = _displacing_permutation(rng, factors.rank, pert.size)
        vectors = vectors[:, permutation]
        values = values[permutation]

    scaled_vectors = vectors / np.sqrt(1.0 + values)[None, :]
    matrix = pert.matrix @ scaled_vectors @ pinv_rect_diag(factors.sigma_rect) @ factors.left.T
    return AdjustmentMatrix(
        matrix=matrix, svd=factors, eig=eig, mode=mode, permutation=permutation
    )


def analyze(
    ens: ForecastEnsemble,
    obs: ObservationModel,
    mode: str = MODE_CORRECT,
    *,
    seed: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> AnalysisResult:
    """Run one analysis step: adjusted perturbations plus the gain-based mean.

    The perturbation update only constrains the covariance; the analysis
    mean follows the standard Kalman formula
    ``mean + K (y - H mean)`` with the gain of :func:`kalman_gain`.
    """
    pert = perturbation_matrix(ens)
    adj = adjustment_matrix(pert, obs, mode, seed=seed, rank_tol=rank_tol)
    gain = kalman_gain(pert, obs)
    innovation = obs.observation - obs.operator @ ens.mean
    mean_a = ens.mean + gain @ innovation
    za = adj.matrix @ pert.matrix
    # A @ Z annihilates the ones vector in exact arithmetic; remove the
    # matmul rounding residue so the centering invariant holds exactly.
    za = za - za.mean(axis=1, keepdims=True)
    return AnalysisResult(
        mean=mean_a,
        perturbations=za,
        covariance=symmetrize(za @ za.T),
        gain=gain,
    )
