"""Exact (non-private) linear algebra: covariance, symmetric eigendecomposition,
norm clipping, and the trace/tail statistics the private mechanisms are built on.

Matrices are plain float64 ndarrays.  Symmetric matrices are kept *exactly*
symmetric (entry-wise equal to their transpose); every function returning one
symmetrizes its result.  Datasets are column-vector collections: shape (d, n),
one column per individual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Dataset",
    "EigenDecomp",
    "covariance",
    "eig_sym",
    "jacobi_eig_sym",
    "reconstruct",
    "frobenius_dist",
    "clip_vector",
    "clip_dataset",
    "trace_stat",
    "tail_gamma",
    "radius",
]

# Relative slack for "norm <= bound" checks; clipping can overshoot by a few ulp.
_NORM_RTOL = 1e-9


@dataclass(frozen=True)
class Dataset:
    """A d x n collection of column vectors, one column per individual.

    ``ball_constrained=True`` asserts that every column lies in the unit
    l2-ball; this is validated at construction time.
    """

    columns: np.ndarray
    ball_constrained: bool = False

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim != 2:
            raise ValueError("dataset columns must be a 2-D array of shape (d, n)")
        if cols.shape[1] == 0:
            raise ValueError("empty dataset")
        if cols.shape[0] == 0:
            raise ValueError("dataset dimension must be at least 1")
        if not np.all(np.isfinite(cols)):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "columns", cols)
        if self.ball_constrained:
            worst = float(np.max(np.linalg.norm(cols, axis=0)))
            if worst > 1.0 + _NORM_RTOL:
                raise ValueError(f"norms exceed 1 (max norm {worst})")

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def count(self) -> int:
        return self.columns.shape[1]

    def norms(self) -> np.ndarray:
        """Column l2 norms, shape (n,)."""
        return np.linalg.norm(self.columns, axis=0)


class EigenDecomp(NamedTuple):
    """Orthonormal basis (columns of ``basis``) and descending eigenvalues."""

    basis: np.ndarray
    values: np.ndarray


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def covariance(x: Dataset) -> np.ndarray:
    """Empirical second-moment matrix (1/n) * sum_i X_i X_i^T."""
    cols = x.columns
    return _symmetrize(cols @ cols.T / x.count)


def _check_square_symmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite matrix")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric")
    return a


def eig_sym(a: np.ndarray) -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix with deterministic output.

    Eigenvalues are returned in descending order.  Each eigenvector's sign is
    fixed so that its largest-magnitude component is positive, which makes the
    decomposition a deterministic function of the input (up to eigenvalue
    degeneracy, where any orthonormal basis of the eigenspace is valid).
    """
    a = _check_square_symmetric(a)
    vals, vecs = np.linalg.eigh(a)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    pick = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pick, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return EigenDecomp(basis=vecs * signs, values=vals)


def jacobi_eig_sym(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> EigenDecomp:
    """Cyclic Jacobi eigendecomposition, kept as a self-contained reference
    solver to cross-check :func:`eig_sym` (it is much slower at large d).

    Sweeps over all (p, q) pairs, rotating each off-diagonal entry to zero,
    until the off-diagonal Frobenius mass falls below ``tol * ||A||_F``.
    """
    a = _check_square_symmetric(a).copy()
    d = a.shape[0]
    v = np.eye(d)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        # measured entry-wise; the ||A||^2 - sum(diag^2) form cancels badly
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rot_p, rot_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                rot_p, rot_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p, rot_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * rot_p - s * rot_q
                v[:, q] = s * rot_p + c * rot_q
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = v[:, order]
    pick = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pick, np.arange(d)])
    signs[signs == 0] = 1.0
    return EigenDecomp(basis=vecs * signs, values=vals)


def reconstruct(basis: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Assemble P diag(values) P^T, symmetrized.  Negative entries in
    ``values`` are legal (noisy eigenvalues may dip below zero)."""
    basis = np.asarray(basis, dtype=float)
    values = np.asarray(values, dtype=float)
    if basis.ndim != 2 or values.ndim != 1 or basis.shape[1] != values.shape[0]:
        raise ValueError("dimension mismatch between basis and values")
    return _symmetrize((basis * values) @ basis.T)


def frobenius_dist(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance ||A - B||_F."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(a - b))


def clip_vector(x: np.ndarray, tau: float) -> np.ndarray:
    """Rescale x onto the radius-tau ball: min(1, tau/||x||) * x.

    tau = 0 sends every vector to the origin; the zero vector maps to itself.
    """
    if tau < 0:
        raise ValueError("clip threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(x))
    if norm <= tau:
        return x.copy()
    if norm == 0.0:
        return x.copy()
    return x * (tau / norm)


def clip_dataset(x: Dataset, tau: float) -> Dataset:
    """Column-wise :func:`clip_vector`."""
    if tau < 0:
        raise ValueError("clip threshold must be nonnegative")
    cols = x.columns
    norms = np.linalg.norm(cols, axis=0)
    factors = np.ones_like(norms)
    over = norms > tau
    factors[over] = tau / norms[over]
    return Dataset(cols * factors, ball_constrained=x.ball_constrained or tau <= 1.0)


def trace_stat(x: Dataset) -> float:
    """Average squared column norm (1/n) sum_i ||X_i||^2; equals the
    eigenvalue sum of the covariance matrix."""
    return float(np.sum(x.columns**2) / x.count)


def tail_gamma(x: Dataset, tau: float) -> float:
    """Squared-norm mass above the threshold: (1/n) sum ||X_i||^2 over
    columns with ||X_i|| strictly greater than tau."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    sq = np.sum(x.columns**2, axis=0)
    return float(np.sum(sq[np.sqrt(sq) > tau]) / x.count)


def radius(x: Dataset) -> float:
    """Largest column norm max_i ||X_i||."""
    return float(np.max(x.norms()))
