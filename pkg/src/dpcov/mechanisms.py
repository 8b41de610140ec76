"""Private covariance estimators.

Four noise-addition mechanisms over the empirical covariance of a dataset in
the unit l2-ball:

* ``gauss_cov``    -- symmetric Gaussian noise calibrated to zCDP.
* ``lap_cov``      -- symmetric Laplace noise calibrated to pure DP.
* ``separate_cov`` -- eigenvalues and eigenvectors privatized separately,
  each with half the zCDP budget: noisy eigenvalues from a Gaussian vector,
  eigenvectors from an eigendecomposition of the Gaussian-noised covariance,
  then reassembled.  Noisy eigenvalues are used as produced (no projection or
  re-sorting) unless ``project_nonnegative`` is requested.
* ``separate_cov_pure`` -- the same split under pure DP with Laplace noise.

``clip_mechanism`` wraps any of them: clip columns to radius tau, feed the
mechanism the (1/tau)-rescaled data, and scale the estimate back by tau^2.

All outputs are exactly symmetric and, for a fixed stream, deterministic
functions of the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import Dataset, covariance, eig_sym, radius, reconstruct
from .privacy import PrivacyBudget, gaussian_scale, laplace_scale, pure, zcdp
from .randomness import RandomStream, gaussian_vector, laplace_vector, sgw_matrix, slw_matrix

__all__ = [
    "MechanismReport",
    "gauss_cov",
    "lap_cov",
    "separate_cov",
    "separate_cov_pure",
    "clip_mechanism",
    "zero_cov",
    "sensitivity_probe",
    "BASE_MECHANISMS",
]

_BALL_RTOL = 1e-9

VARIANTS = ("gauss", "lap", "separate", "separate_pure", "zero")


@dataclass(frozen=True)
class MechanismReport:
    """What a mechanism returned and what it cost.

    ``budget_spent`` is None only for the zero mechanism, which consumes no
    budget.  ``clip_threshold`` is set when the estimate came from clipped
    data.  ``details`` carries mechanism-specific diagnostics (the adaptive
    mechanism records its internal ledger there).
    """

    estimate: np.ndarray
    budget_spent: PrivacyBudget | None
    variant: str
    clip_threshold: float | None = None
    details: dict | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not np.array_equal(self.estimate, self.estimate.T):
            raise ValueError("mechanism estimate must be exactly symmetric")


def _require_ball(x: Dataset):
    worst = radius(x)
    if worst > 1.0 + _BALL_RTOL:
        raise ValueError(f"norms exceed 1 (max norm {worst})")


def gauss_cov(x: Dataset, rho: float, stream: RandomStream) -> MechanismReport:
    """Covariance plus a symmetric Gaussian Wigner matrix scaled by
    1/(sqrt(rho) * n)."""
    _require_ball(x)
    scale = gaussian_scale(math.sqrt(2.0) / x.count, zcdp(rho))
    est = covariance(x) + scale * sgw_matrix(stream, x.dim)
    return MechanismReport(est, zcdp(rho), "gauss")


def lap_cov(x: Dataset, eps: float, stream: RandomStream) -> MechanismReport:
    """Covariance plus a symmetric Laplace Wigner matrix scaled by
    sqrt(2)*d/(eps*n)."""
    _require_ball(x)
    scale = laplace_scale(math.sqrt(2.0) * x.dim / x.count, pure(eps))
    est = covariance(x) + scale * slw_matrix(stream, x.dim)
    return MechanismReport(est, pure(eps), "lap")


def separate_cov(
    x: Dataset, rho: float, stream: RandomStream, *, project_nonnegative: bool = False
) -> MechanismReport:
    """Privatize eigenvalues and eigenvectors separately, rho/2 each.

    Eigenvalue noise is an i.i.d. Gaussian vector calibrated to the
    sqrt(2)/n l2-sensitivity of the sorted spectrum.  The basis comes from
    eigendecomposing the Gaussian-noised covariance.
    """
    _require_ball(x)
    zcdp(rho)  # validate
    sigma = covariance(x)
    lam = eig_sym(sigma).values
    lam_noisy = lam + gaussian_scale(math.sqrt(2.0) / x.count, zcdp(rho / 2)) * gaussian_vector(
        stream, x.dim
    )
    noised = sigma + gaussian_scale(math.sqrt(2.0) / x.count, zcdp(rho / 2)) * sgw_matrix(
        stream, x.dim
    )
    basis = eig_sym(noised).basis
    if project_nonnegative:
        lam_noisy = np.maximum(lam_noisy, 0.0)
    return MechanismReport(reconstruct(basis, lam_noisy), zcdp(rho), "separate")


def separate_cov_pure(
    x: Dataset, eps: float, stream: RandomStream, *, project_nonnegative: bool = False
) -> MechanismReport:
    """Pure-DP variant of the eigenvalue/eigenvector split, eps/2 each.

    Eigenvalues get Laplace noise calibrated to their 2/n l1-sensitivity;
    the basis comes from the Laplace-noised covariance.
    """
    _require_ball(x)
    pure(eps)  # validate
    sigma = covariance(x)
    lam = eig_sym(sigma).values
    lam_noisy = lam + laplace_vector(
        stream, x.dim, laplace_scale(2.0 / x.count, pure(eps / 2))
    )
    noised = sigma + laplace_scale(math.sqrt(2.0) * x.dim / x.count, pure(eps / 2)) * slw_matrix(
        stream, x.dim
    )
    basis = eig_sym(noised).basis
    if project_nonnegative:
        lam_noisy = np.maximum(lam_noisy, 0.0)
    return MechanismReport(reconstruct(basis, lam_noisy), pure(eps), "separate_pure")


BASE_MECHANISMS = {
    "gauss": lambda x, budget, stream: gauss_cov(x, budget.value, stream),
    "lap": lambda x, budget, stream: lap_cov(x, budget.value, stream),
    "separate": lambda x, budget, stream: separate_cov(x, budget.value, stream),
    "separate_pure": lambda x, budget, stream: separate_cov_pure(x, budget.value, stream),
}


def clip_mechanism(
    x: Dataset, budget: PrivacyBudget, tau: float, stream: RandomStream, base: str
) -> MechanismReport:
    """Run a base mechanism on columns clipped to radius tau and rescaled to
    the unit ball, then scale the estimate back by tau^2."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("clip threshold must lie in (0, 1]")
    if base not in BASE_MECHANISMS:
        raise ValueError(f"unknown base mechanism {base!r}")
    expected = "pure" if base in ("lap", "separate_pure") else "zcdp"
    if budget.kind != expected:
        raise ValueError(f"base mechanism {base!r} needs a {expected} budget")
    cols = x.columns
    norms = np.linalg.norm(cols, axis=0)
    # clip-then-rescale in one step: X_i / max(tau, ||X_i||) stays finite for
    # subnormal tau and zero columns, unlike multiplying by 1/tau
    scaled = cols / np.maximum(norms, tau)[np.newaxis, :]
    inner = BASE_MECHANISMS[base](Dataset(scaled, ball_constrained=True), budget, stream)
    return MechanismReport(tau * tau * inner.estimate, budget, base, clip_threshold=tau)


def zero_cov(x: Dataset) -> MechanismReport:
    """The trivial trace-sensitive baseline: a zero matrix, zero budget."""
    return MechanismReport(np.zeros((x.dim, x.dim)), None, "zero")


def sensitivity_probe(x: Dataset, x_prime: Dataset) -> dict[str, float]:
    """Distances between the covariances and sorted spectra of two datasets.

    Test support for validating the sensitivity bounds on neighboring pairs:
    returns Frobenius and entry-wise l1 distances for the covariance, and l2
    and l1 distances for the descending eigenvalue vectors.
    """
    if x.dim != x_prime.dim or x.count != x_prime.count:
        raise ValueError("datasets must share shape")
    sig_a, sig_b = covariance(x), covariance(x_prime)
    lam_a, lam_b = eig_sym(sig_a).values, eig_sym(sig_b).values
    return {
        "sigma_fro": float(np.linalg.norm(sig_a - sig_b)),
        "lambda_fro": float(np.linalg.norm(lam_a - lam_b)),
        "sigma_l1": float(np.sum(np.abs(sig_a - sig_b))),
        "lambda_l1": float(np.sum(np.abs(lam_a - lam_b))),
    }
