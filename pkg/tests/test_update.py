import numpy as np
import pytest

from eakf.ensemble import ForecastEnsemble, ObservationModel, forecast_cov, perturbation_matrix
from eakf.instances import ALL_CATEGORIES, random_instance
from eakf.linalg import SvdFactors, ordered_eig_psd, pinv_rect_diag, svd_full
from eakf.oracle import compare_cov, posterior_cov_direct
from eakf.update import (
    MODE_CORRECT,
    MODE_MISORDERED,
    adjustment_matrix,
    analyze,
    kalman_gain,
    project_observations,
)


def scalar_case():
    ens = ForecastEnsemble.from_members(np.array([[1.0, -1.0]]))
    obs = ObservationModel(operator=[[1.0]], covariance=[[2.0]], observation=[1.0])
    return ens, obs


def three_member_case():
    ens = ForecastEnsemble.from_members(np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]))
    obs = ObservationModel(operator=[[1.0, 0.0]], covariance=[[1.0]], observation=[1.0])
    return ens, obs


# ---------------------------------------------------------------- projection


def test_project_observations_scalar():
    ens, obs = scalar_case()
    proj = project_observations(perturbation_matrix(ens), obs)
    np.testing.assert_allclose(proj.observed, [[1.0], [-1.0]])
    np.testing.assert_allclose(proj.gram, 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]]))


def test_project_observations_zero_operator():
    ens, _ = three_member_case()
    obs = ObservationModel(operator=np.zeros((1, 2)), covariance=[[1.0]], observation=[0.0])
    proj = project_observations(perturbation_matrix(ens), obs)
    np.testing.assert_array_equal(proj.observed, np.zeros((3, 1)))
    np.testing.assert_array_equal(proj.gram, np.zeros((3, 3)))


def test_project_observations_three_members():
    ens, obs = three_member_case()
    proj = project_observations(perturbation_matrix(ens), obs)
    expected = 0.5 * np.array([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_allclose(proj.gram, expected, atol=1e-15)


@pytest.mark.parametrize("seed", range(8))
def test_project_observations_identity(seed):
    # algebraic identity: gram == Z.T H.T inv(R) H Z, checked with an
    # explicit inverse (small instances only)
    inst = random_instance(seed, "generic", n_range=(1, 6), m_range=(2, 6), p_range=(1, 6))
    pert = perturbation_matrix(inst.ensemble)
    proj = project_observations(pert, inst.observation)
    h, r = inst.observation.operator, inst.observation.covariance
    explicit = pert.matrix.T @ h.T @ np.linalg.inv(r) @ h @ pert.matrix
    np.testing.assert_allclose(proj.gram, explicit, rtol=0, atol=1e-11 * max(1.0, np.linalg.norm(explicit)))


def test_project_observations_shape_mismatch():
    ens, _ = three_member_case()
    obs = ObservationModel(operator=np.ones((1, 3)), covariance=[[1.0]], observation=[0.0])
    with pytest.raises(ValueError, match="state columns"):
        project_observations(perturbation_matrix(ens), obs)


# ---------------------------------------------------------------------- gain


def test_kalman_gain_scalar():
    ens, obs = scalar_case()
    np.testing.assert_allclose(kalman_gain(perturbation_matrix(ens), obs), [[0.5]])


def test_kalman_gain_zero_operator():
    ens, _ = three_member_case()
    obs = ObservationModel(operator=np.zeros((1, 2)), covariance=[[1.0]], observation=[0.0])
    np.testing.assert_array_equal(kalman_gain(perturbation_matrix(ens), obs), np.zeros((2, 1)))


def test_kalman_gain_three_members():
    ens, obs = three_member_case()
    np.testing.assert_allclose(
        kalman_gain(perturbation_matrix(ens), obs), [[0.5], [-0.25]], atol=1e-15
    )


# ---------------------------------------------------------------- adjustment


def test_adjustment_scalar_value():
    ens, obs = scalar_case()
    adj = adjustment_matrix(perturbation_matrix(ens), obs)
    np.testing.assert_allclose(adj.matrix, [[1.0 / np.sqrt(2.0)]], rtol=1e-14)
    za = adj.matrix @ perturbation_matrix(ens).matrix
    np.testing.assert_allclose(za @ za.T, [[1.0]], rtol=1e-14)


def test_adjustment_zero_operator_preserves_cov():
    ens, _ = three_member_case()
    obs = ObservationModel(operator=np.zeros((1, 2)), covariance=[[1.0]], observation=[0.0])
    pert = perturbation_matrix(ens)
    adj = adjustment_matrix(pert, obs)
    za = adj.matrix @ pert.matrix
    np.testing.assert_allclose(za @ za.T, forecast_cov(pert), atol=1e-14)


def test_adjustment_zero_spread():
    ens = ForecastEnsemble.from_members(np.full((2, 3), 4.0))
    obs = ObservationModel(operator=np.eye(2), covariance=np.eye(2), observation=np.zeros(2))
    adj = adjustment_matrix(perturbation_matrix(ens), obs)
    assert adj.svd.rank == 0
    np.testing.assert_array_equal(adj.matrix, np.zeros((2, 2)))


def test_adjustment_misordered_scalar_kills_variance():
    ens, obs = scalar_case()
    pert = perturbation_matrix(ens)
    adj = adjustment_matrix(pert, obs, MODE_MISORDERED, seed=0)
    np.testing.assert_array_equal(adj.permutation, [1, 0])
    za = adj.matrix @ pert.matrix
    assert abs(np.trace(za @ za.T)) <= 1e-12
    # trace deficit of 1 against the oracle posterior
    oracle = posterior_cov_direct(forecast_cov(pert), obs)
    assert np.trace(oracle) - np.trace(za @ za.T) == pytest.approx(1.0, abs=1e-12)


def test_adjustment_misordered_always_displaces():
    for seed in range(10):
        inst = random_instance(seed, "rank_deficient")
        pert = perturbation_matrix(inst.ensemble)
        adj = adjustment_matrix(pert, inst.observation, MODE_MISORDERED, seed=seed)
        r = adj.svd.rank
        assert adj.permutation is not None
        assert np.any(adj.permutation[:r] >= r)


def test_adjustment_misordered_zero_spread_is_noop():
    # rank 0 leaves nothing to displace; the permutation must degenerate
    # instead of looping, and the adjustment stays zero
    ens = ForecastEnsemble.from_members(np.full((2, 4), 1.5))
    obs = ObservationModel(operator=np.eye(2), covariance=np.eye(2), observation=np.zeros(2))
    adj = adjustment_matrix(perturbation_matrix(ens), obs, MODE_MISORDERED, seed=5)
    np.testing.assert_array_equal(adj.permutation, np.arange(4))
    np.testing.assert_array_equal(adj.matrix, np.zeros((2, 2)))


def test_adjustment_mode_errors():
    ens, obs = scalar_case()
    with pytest.raises(ValueError, match="unknown mode"):
        adjustment_matrix(perturbation_matrix(ens), obs, "sorted")
    with pytest.raises(ValueError, match="seed"):
        adjustment_matrix(perturbation_matrix(ens), obs, MODE_MISORDERED)


# ------------------------------------------------------------------- analyze


def test_analyze_scalar():
    ens, obs = scalar_case()
    res = analyze(ens, obs)
    np.testing.assert_allclose(res.mean, [0.5], atol=1e-15)
    np.testing.assert_allclose(res.covariance, [[1.0]], rtol=1e-14)


def test_analyze_zero_innovation_keeps_mean():
    ens, _ = three_member_case()
    obs = ObservationModel(
        operator=[[1.0, 0.0]], covariance=[[1.0]], observation=[float(ens.mean[0])]
    )
    res = analyze(ens, obs)
    np.testing.assert_allclose(res.mean, ens.mean, atol=1e-15)


def test_analyze_three_members():
    ens, obs = three_member_case()
    res = analyze(ens, obs)
    np.testing.assert_allclose(res.mean, [0.5, -0.25], atol=1e-14)
    np.testing.assert_allclose(
        res.covariance, [[0.5, -0.25], [-0.25, 0.875]], atol=1e-14
    )
    np.testing.assert_allclose(res.gain, [[0.5], [-0.25]], atol=1e-14)


@pytest.mark.parametrize("category", ALL_CATEGORIES)
def test_analyze_consistency_by_category(category):
    for seed in range(25):
        inst = random_instance(seed, category)
        pert = perturbation_matrix(inst.ensemble)
        oracle = posterior_cov_direct(forecast_cov(pert), inst.observation)
        res = analyze(inst.ensemble, inst.observation)
        assert compare_cov(res.covariance, oracle, 1e-10).passed, (category, seed)


def test_analyze_row_sums():
    for seed in range(30):
        inst = random_instance(seed, "generic")
        res = analyze(inst.ensemble, inst.observation)
        za = res.perturbations
        assert np.linalg.norm(za.sum(axis=1)) <= 1e-12 * max(np.linalg.norm(za), 1.0)


def test_analyze_deterministic():
    inst = random_instance(123, "generic")
    a = analyze(inst.ensemble, inst.observation)
    b = analyze(inst.ensemble, inst.observation)
    np.testing.assert_array_equal(a.perturbations, b.perturbations)
    np.testing.assert_array_equal(a.mean, b.mean)
    m1 = analyze(inst.ensemble, inst.observation, MODE_MISORDERED, seed=7)
    m2 = analyze(inst.ensemble, inst.observation, MODE_MISORDERED, seed=7)
    np.testing.assert_array_equal(m1.perturbations, m2.perturbations)


# ------------------------------------------------------------------ theorems


def test_truncation_identity():
    # with the ordering contract in force, appending the rank truncation
    # pinv(sig) @ sig changes nothing: the truncated columns are already zero
    for seed in range(10):
        inst = random_instance(seed, "rank_deficient")
        pert = perturbation_matrix(inst.ensemble)
        if not pert.matrix.any():
            continue
        f = svd_full(pert.matrix)
        proj = project_observations(pert, inst.observation)
        eig = ordered_eig_psd(proj.gram, f.row_space_basis(), f.null_space_basis())
        scaled = pert.matrix @ (eig.vectors / np.sqrt(1.0 + eig.values)[None, :])
        truncation = pinv_rect_diag(f.sigma_rect) @ f.sigma_rect
        np.testing.assert_allclose(
            scaled @ truncation, scaled, atol=1e-12 * max(np.linalg.norm(scaled), 1.0)
        )


def test_misordering_under_disperses():
    for seed in range(30):
        inst = random_instance(seed, "generic")
        correct = analyze(inst.ensemble, inst.observation, MODE_CORRECT)
        mis = analyze(inst.ensemble, inst.observation, MODE_MISORDERED, seed=seed)
        t_correct = np.trace(correct.covariance)
        t_mis = np.trace(mis.covariance)
        assert t_mis <= t_correct + 1e-10 * max(t_correct, 1.0)
        pert = perturbation_matrix(inst.ensemble)
        adj = adjustment_matrix(pert, inst.observation, MODE_MISORDERED, seed=seed)
        displaced = adj.permutation is not None and np.any(
            adj.permutation[: adj.svd.rank] >= adj.svd.rank
        )
        if displaced and adj.svd.rank > 0:
            assert t_mis < t_correct


def test_sign_convention_invariance_of_posterior():
    # flipping the sign of any matched (left, right) singular-vector pair, or
    # of any trailing null vector, is still a valid SVD; the analysis
    # covariance must not change
    for seed in range(8):
        inst = random_instance(seed, "generic")
        pert = perturbation_matrix(inst.ensemble)
        proj = project_observations(pert, inst.observation)
        f = svd_full(pert.matrix)
        if f.rank == 0:
            continue
        rng = np.random.default_rng(seed + 1000)
        left = f.left.copy()
        right = f.right.copy()
        for j in range(f.rank):
            if rng.random() < 0.5:
                left[:, j] *= -1.0
                right[:, j] *= -1.0
        for j in range(f.rank, right.shape[1]):
            if rng.random() < 0.5:
                right[:, j] *= -1.0
        flipped = SvdFactors(left=left, sigma_rect=f.sigma_rect, right=right, rank=f.rank)

        def posterior(factors):
            eig = ordered_eig_psd(
                proj.gram, factors.row_space_basis(), factors.null_space_basis()
            )
            scaled = eig.vectors / np.sqrt(1.0 + eig.values)[None, :]
            a = pert.matrix @ scaled @ pinv_rect_diag(factors.sigma_rect) @ factors.left.T
            za = a @ pert.matrix
            return za @ za.T

        base = posterior(f)
        alt = posterior(flipped)
        assert np.linalg.norm(alt - base) <= 1e-10 * max(np.linalg.norm(base), 1e-300)
