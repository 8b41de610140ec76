import math

import numpy as np
import pytest

from dpcov.adaptive import noise_hat
from dpcov.bounds import eta, lap_vec_bound, omega, slw_frob_bound, slw_op_bound, upsilon
from dpcov.linalg import (
    Dataset,
    clip_dataset,
    covariance,
    eig_sym,
    frobenius_dist,
    tail_gamma,
    trace_stat,
)
from dpcov.mechanisms import (
    MechanismReport,
    clip_mechanism,
    gauss_cov,
    lap_cov,
    sensitivity_probe,
    separate_cov,
    separate_cov_pure,
    zero_cov,
)
from dpcov.privacy import pure, zcdp
from dpcov.randomness import RandomStream, gaussian_vector


def ball_dataset(d, n, seed, norm_groups=None):
    """Random directions with controlled norms (default: uniform in (0,1])."""
    rng = np.random.default_rng(seed)
    cols = rng.standard_normal((d, n))
    cols /= np.linalg.norm(cols, axis=0)
    if norm_groups is None:
        norms = rng.uniform(0.05, 1.0, size=n)
    else:
        norms = np.concatenate([np.full(k, v) for k, v in norm_groups])
        assert norms.size == n
    return Dataset(cols * norms, ball_constrained=True)


class TestZeroNoiseExactness:
    def test_gauss_lap_exact(self):
        x = ball_dataset(6, 40, seed=0)
        stream = RandomStream(1, zero_noise=True)
        assert np.array_equal(gauss_cov(x, 0.5, stream).estimate, covariance(x))
        assert np.array_equal(lap_cov(x, 0.5, stream).estimate, covariance(x))

    def test_separate_round_trips(self):
        x = ball_dataset(6, 40, seed=1)
        stream = RandomStream(1, zero_noise=True)
        sigma = covariance(x)
        tol = 1e-8 * np.linalg.norm(sigma)
        assert frobenius_dist(separate_cov(x, 0.5, stream).estimate, sigma) <= tol
        assert frobenius_dist(separate_cov_pure(x, 0.5, stream).estimate, sigma) <= tol

    def test_clipped_zero_noise_is_clipped_covariance(self):
        x = ball_dataset(5, 30, seed=2)
        tau = 0.3
        got = clip_mechanism(x, zcdp(1.0), tau, RandomStream(0, zero_noise=True), "gauss")
        want = covariance(clip_dataset(x, tau))
        assert frobenius_dist(got.estimate, want) < 1e-15


class TestGaussCov:
    def test_requires_ball(self):
        big = Dataset(2.0 * np.eye(3))
        with pytest.raises(ValueError, match="norms exceed 1"):
            gauss_cov(big, 1.0, RandomStream(0))

    def test_entry_noise_scale(self):
        # off-diagonal noise std should be 1/(sqrt(rho) n)
        x = Dataset(np.eye(2), ball_constrained=True)
        n, rho = x.count, 1.0
        stream = RandomStream(3)
        draws = np.array([gauss_cov(x, rho, stream).estimate[0, 1] for _ in range(20_000)])
        assert abs(draws.std() - 1 / (math.sqrt(rho) * n)) / (1 / n) < 0.03

    def test_error_within_frobenius_bound(self):
        d, n, rho, beta = 64, 1000, 0.1, 0.05
        x = ball_dataset(d, n, seed=4, norm_groups=[(n, 1.0)])
        sigma = covariance(x)
        bound = omega(d, beta) / (math.sqrt(rho) * n)
        stream = RandomStream(5)
        hits = sum(
            frobenius_dist(gauss_cov(x, rho, stream).estimate, sigma) <= bound
            for _ in range(200)
        )
        assert hits >= 0.95 * 200

    def test_deterministic_given_seed(self):
        x = ball_dataset(4, 10, seed=6)
        a = gauss_cov(x, 0.3, RandomStream(7)).estimate
        b = gauss_cov(x, 0.3, RandomStream(7)).estimate
        assert np.array_equal(a, b)

    def test_report_fields(self):
        x = ball_dataset(3, 5, seed=8)
        rep = gauss_cov(x, 0.25, RandomStream(0))
        assert rep.variant == "gauss"
        assert rep.budget_spent == zcdp(0.25)
        assert np.array_equal(rep.estimate, rep.estimate.T)


class TestLapCov:
    def test_entry_noise_scale(self):
        # Laplace entries have variance 2 * (sqrt(2) d / (eps n))^2
        x = Dataset(np.eye(2), ball_constrained=True)
        d, n, eps = 2, 2, 1.0
        scale = math.sqrt(2) * d / (eps * n)
        stream = RandomStream(9)
        draws = np.array([lap_cov(x, eps, stream).estimate[0, 1] for _ in range(30_000)])
        assert abs(draws.var() - 2 * scale**2) / (2 * scale**2) < 0.03

    def test_error_within_frobenius_bound(self):
        d, n, eps, beta = 32, 2000, 1.0, 0.05
        x = ball_dataset(d, n, seed=10, norm_groups=[(n, 1.0)])
        sigma = covariance(x)
        bound = (math.sqrt(2) * d / (eps * n)) * slw_frob_bound(d, beta)
        stream = RandomStream(11)
        hits = sum(
            frobenius_dist(lap_cov(x, eps, stream).estimate, sigma) <= bound
            for _ in range(200)
        )
        assert hits >= 0.95 * 200


class TestSeparateCov:
    def test_output_spectrum_is_noisy_eigenvalues(self):
        x = ball_dataset(8, 60, seed=12)
        rho, seed = 0.4, 13
        rep = separate_cov(x, rho, RandomStream(seed))
        # replay the eigenvalue noise draw from an identical stream
        twin = RandomStream(seed)
        lam = eig_sym(covariance(x)).values
        lam_noisy = lam + (math.sqrt(2) / (math.sqrt(rho) * x.count)) * gaussian_vector(
            twin, x.dim
        )
        got = np.sort(eig_sym(rep.estimate).values)
        assert np.max(np.abs(got - np.sort(lam_noisy))) < 1e-8

    def test_theorem_style_error_bound(self):
        d, n, rho, beta = 64, 1000, 0.1, 0.05
        x = ball_dataset(d, n, seed=14, norm_groups=[(n, 1.0)])
        sigma = covariance(x)
        tr = trace_stat(x)
        bound = (2**1.25) * math.sqrt(tr) / (rho**0.25 * math.sqrt(n)) * math.sqrt(
            upsilon(d, beta / 2)
        ) + math.sqrt(2) / (math.sqrt(rho) * n) * eta(d, beta / 2)
        stream = RandomStream(15)
        hits = sum(
            frobenius_dist(separate_cov(x, rho, stream).estimate, sigma) <= bound
            for _ in range(100)
        )
        assert hits >= 95

    def test_projection_flag(self):
        x = ball_dataset(6, 12, seed=16)
        rep = separate_cov(x, 0.01, RandomStream(17), project_nonnegative=True)
        assert np.min(eig_sym(rep.estimate).values) >= -1e-10


class TestSeparateCovPure:
    def test_eigenvalue_noise_replay(self):
        # the estimate's spectrum must be exactly lam + Lap(4/(eps n))^d
        from dpcov.randomness import laplace_vector

        x = ball_dataset(6, 40, seed=18)
        eps, seed = 1.0, 19
        rep = separate_cov_pure(x, eps, RandomStream(seed))
        lam = eig_sym(covariance(x)).values
        lam_noisy = lam + laplace_vector(RandomStream(seed), x.dim, 4.0 / (eps * x.count))
        got = np.sort(eig_sym(rep.estimate).values)
        assert np.max(np.abs(got - np.sort(lam_noisy))) < 1e-8

    def test_eigenvalue_noise_scale(self):
        # top output eigenvalue tracks lam_1 + Lap(4/(eps n)) when the
        # eigengap dwarfs the noise scale (no crossover)
        cols = np.zeros((2, 100))
        cols[0, :50] = 0.9
        cols[1, 50:] = 0.3
        x = Dataset(cols, ball_constrained=True)
        eps = 1.0
        top = eig_sym(covariance(x)).values[0]
        stream = RandomStream(19)
        draws = np.array(
            [
                np.max(eig_sym(separate_cov_pure(x, eps, stream).estimate).values) - top
                for _ in range(30_000)
            ]
        )
        scale = 4.0 / (eps * x.count)
        assert abs(draws.var() - 2 * scale**2) / (2 * scale**2) < 0.1

    def test_error_bound_holds(self):
        d, n, eps, beta = 128, 4000, 1.0, 0.05
        x = ball_dataset(d, n, seed=20, norm_groups=[(n, 1.0)])
        sigma = covariance(x)
        tr = trace_stat(x)
        op_noise = (2 * math.sqrt(2) * d / (eps * n)) * slw_op_bound(d, beta / 2)
        bound = 2 * math.sqrt(tr * op_noise) + (4 / (eps * n)) * lap_vec_bound(d, beta / 2)
        stream = RandomStream(21)
        hits = sum(
            frobenius_dist(separate_cov_pure(x, eps, stream).estimate, sigma) <= bound
            for _ in range(100)
        )
        assert hits >= 95


class TestClipMechanism:
    def test_tau_one_matches_base(self):
        x = ball_dataset(5, 25, seed=22)
        a = clip_mechanism(x, zcdp(0.5), 1.0, RandomStream(23), "gauss").estimate
        b = gauss_cov(x, 0.5, RandomStream(23)).estimate
        assert np.array_equal(a, b)

    def test_threshold_recorded(self):
        x = ball_dataset(4, 8, seed=24)
        rep = clip_mechanism(x, zcdp(0.5), 0.25, RandomStream(0), "separate")
        assert rep.clip_threshold == 0.25
        assert rep.variant == "separate"

    def test_invalid_tau(self):
        x = ball_dataset(3, 6, seed=25)
        for bad in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                clip_mechanism(x, zcdp(1.0), bad, RandomStream(0), "gauss")

    def test_budget_kind_checked(self):
        x = ball_dataset(3, 6, seed=26)
        with pytest.raises(ValueError):
            clip_mechanism(x, pure(1.0), 0.5, RandomStream(0), "gauss")

    def test_total_error_bounded_by_noise_plus_tail(self):
        # skewed norms: clipping trades the tail mass for reduced noise
        d, n, rho, beta, tau = 32, 500, 0.1, 0.05, 0.25
        x = ball_dataset(d, n, seed=27, norm_groups=[(5, 1.0), (n - 5, 0.1)])
        sigma = covariance(x)
        tr_clip = trace_stat(clip_dataset(x, tau))
        budget_bound = noise_hat(tr_clip, tau, rho, beta, d, n) + tail_gamma(x, tau)
        stream = RandomStream(28)
        hits = sum(
            frobenius_dist(clip_mechanism(x, zcdp(rho), tau, stream, "gauss").estimate, sigma)
            <= budget_bound
            for _ in range(100)
        )
        assert hits >= 95


class TestZeroCov:
    def test_error_is_sigma_norm_and_under_trace(self):
        x = ball_dataset(7, 50, seed=29)
        rep = zero_cov(x)
        sigma = covariance(x)
        assert frobenius_dist(rep.estimate, sigma) == np.linalg.norm(sigma)
        assert np.linalg.norm(sigma) <= trace_stat(x) + 1e-12

    def test_no_budget_consumed(self):
        x = ball_dataset(2, 3, seed=30)
        assert zero_cov(x).budget_spent is None


class TestSensitivityProbe:
    def test_identical_datasets(self):
        x = ball_dataset(4, 9, seed=31)
        probe = sensitivity_probe(x, x)
        assert all(v == 0.0 for v in probe.values())

    def test_zeroed_basis_column(self):
        cols = np.zeros((2, 2))
        cols[0, 0] = 1.0
        cols[1, 1] = 0.5
        x = Dataset(cols, ball_constrained=True)
        primed = cols.copy()
        primed[:, 0] = 0.0
        probe = sensitivity_probe(x, Dataset(primed, ball_constrained=True))
        assert abs(probe["sigma_fro"] - 0.5) < 1e-12
        assert probe["sigma_fro"] <= math.sqrt(2) / 2

    def test_random_neighbor_pairs_respect_bounds(self):
        rng = np.random.default_rng(32)
        slack = 1e-9
        for _ in range(2000):
            d = int(rng.integers(2, 16))
            n = int(rng.integers(2, 32))
            cols = rng.standard_normal((d, n))
            cols /= np.maximum(np.linalg.norm(cols, axis=0), 1.0)
            primed = cols.copy()
            new_col = rng.standard_normal(d)
            new_col /= max(np.linalg.norm(new_col), 1.0)
            primed[:, rng.integers(n)] = new_col
            probe = sensitivity_probe(
                Dataset(cols, ball_constrained=True), Dataset(primed, ball_constrained=True)
            )
            assert probe["sigma_fro"] <= math.sqrt(2) / n + slack
            assert probe["lambda_fro"] <= math.sqrt(2) / n + slack
            assert probe["sigma_l1"] <= math.sqrt(2) * d / n + slack
            assert probe["lambda_l1"] <= 2.0 / n + slack


class TestReportValidation:
    def test_asymmetric_estimate_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            MechanismReport(np.array([[0.0, 1.0], [0.5, 0.0]]), zcdp(1.0), "gauss")

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="variant"):
            MechanismReport(np.zeros((2, 2)), zcdp(1.0), "fancy")
