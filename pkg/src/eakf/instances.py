"""Seeded random assimilation instances covering the degenerate regimes.

Categories:

* ``generic``: dense random observation operator, n and m independent.
* ``zero_spread``: identical members, so the scaled perturbations vanish.
* ``rank_deficient``: forces ``n >= m`` so the perturbations cannot span
  the state space (``rank <= m - 1 < n``).
* ``partial_obs``: coordinate-selection operator with fewer rows than the
  perturbation rank, so the observed Gram matrix has extra null directions
  inside the row space.
* ``zero_h``: zero observation operator (no information in the update).

Each instance is fully determined by its seed: all draws come from one
``numpy`` generator in a fixed order (sizes, members, operator, error
covariance, observation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import ForecastEnsemble, ObservationModel

GENERIC = "generic"
ZERO_SPREAD = "zero_spread"
RANK_DEFICIENT = "rank_deficient"
PARTIAL_OBS = "partial_obs"
ZERO_H = "zero_h"

ALL_CATEGORIES = (GENERIC, ZERO_SPREAD, RANK_DEFICIENT, PARTIAL_OBS, ZERO_H)

_MAX_R_CONDITION = 1e4


@dataclass(frozen=True)
class RandomInstance:
    ensemble: ForecastEnsemble
    observation: ObservationModel
    category: str
    seed: int


def category_pool(
    include_rank_deficient: bool = False,
    include_partial_obs: bool = False,
    include_zero_h: bool = False,
) -> list[str]:
    """Categories cycled through by the verification sweep."""
    pool = [GENERIC, ZERO_SPREAD]
    if include_rank_deficient:
        pool.append(RANK_DEFICIENT)
    if include_partial_obs:
        pool.append(PARTIAL_OBS)
    if include_zero_h:
        pool.append(ZERO_H)
    return pool


def _draw_spd(rng: np.random.Generator, p: int) -> np.ndarray:
    """Random SPD matrix ``D + L L.T`` with condition number capped at 1e4."""
    low = rng.standard_normal((p, p))
    base = low @ low.T + np.diag(rng.uniform(0.1, 1.0, p))
    eigvals = np.linalg.eigvalsh(base)
    lo, hi = float(eigvals[0]), float(eigvals[-1])
    shift = max(0.0, (hi - _MAX_R_CONDITION * lo) / (_MAX_R_CONDITION - 1.0))
    return base + shift * np.eye(p)


def random_instance(
    seed: int,
    category: str = GENERIC,
    n_range: tuple[int, int] = (1, 20),
    m_range: tuple[int, int] = (2, 12),
    p_range: tuple[int, int] = (1, 20),
) -> RandomInstance:
    """Draw a reproducible instance of the requested category.

    The observation dimension is clamped to ``[1, n]``; for ``partial_obs``
    the state and ensemble sizes are raised to at least (2, 3) and ``p`` is
    forced below the expected perturbation rank regardless of ``p_range``.
    """
    if category not in ALL_CATEGORIES:
        raise ValueError(f"unknown instance category {category!r}")
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    if m < 2:
        raise ValueError("m_range must allow at least 2 members")

    if category == RANK_DEFICIENT:
        n = int(rng.integers(max(n_range[0], m), max(n_range[1], m) + 1))
    elif category == PARTIAL_OBS:
        n = max(n, 2)
        m = max(m, 3)

    if category == PARTIAL_OBS:
        expected_rank = min(n, m - 1)
        p = int(rng.integers(1, expected_rank))
    else:
        lo = min(max(p_range[0], 1), n)
        hi = min(max(p_range[1], lo), n)
        p = int(rng.integers(lo, hi + 1))

    if category == ZERO_SPREAD:
        center = rng.standard_normal(n)
        members = np.repeat(center[:, None], m, axis=1)
        ensemble = ForecastEnsemble(members=members, mean=center.copy())
    else:
        ensemble = ForecastEnsemble.from_members(rng.standard_normal((n, m)))

    if category == ZERO_H:
        operator = np.zeros((p, n))
    elif category == PARTIAL_OBS:
        rows = rng.choice(n, size=p, replace=False)
        operator = np.eye(n)[np.sort(rows)]
    else:
        operator = rng.standard_normal((p, n))

    if rng.random() < 0.5:
        covariance = np.diag(rng.uniform(0.1, 10.0, p))
    else:
        covariance = _draw_spd(rng, p)
    observation = rng.standard_normal(p)

    model = ObservationModel(operator=operator, covariance=covariance, observation=observation)
    return RandomInstance(ensemble=ensemble, observation=model, category=category, seed=seed)
