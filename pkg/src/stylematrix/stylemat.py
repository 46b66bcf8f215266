"""Style matrices and the whitening / coloring operators built from them.

Semantic vectors are stored as columns: ``Z`` has shape (d, N). Operator
application also accepts a single d-vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


class NotSymmetricError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class StyleMatrix:
    S: np.ndarray
    mean: np.ndarray
    n: int

    @property
    def dim(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class EigenFactorization:
    """``S = P @ diag(lam) @ P.T`` with eigenvalues in descending order."""

    P: np.ndarray
    lam: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.P * self.lam) @ self.P.T


@dataclass(frozen=True)
class NeutralizeOp:
    P: np.ndarray
    inv_sqrt_lambda: np.ndarray
    mean: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return (self.P * self.inv_sqrt_lambda) @ self.P.T


@dataclass(frozen=True)
class StylizeOp:
    P: np.ndarray
    sqrt_lambda: np.ndarray
    mean: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return (self.P * self.sqrt_lambda) @ self.P.T


def compute_style_matrix(Z: np.ndarray) -> StyleMatrix:
    """Sample covariance of the columns of ``Z`` (normalised by N - 1)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ValueError("Z must be a (d, N) matrix")
    d, n = Z.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(Z)):
        raise ValueError("Z contains non-finite entries")
    mean = Z.mean(axis=1)
    Zc = Z - mean[:, None]
    S = (Zc @ Zc.T) / (n - 1)
    S = 0.5 * (S + S.T)
    return StyleMatrix(S, mean, n)


@numba.njit(cache=True)
def _jacobi_sweep(A, Vt):
    """One cyclic sweep over all (p, q), p < q, updating A and Vt in place.

    Only rows are touched (A stays symmetric, the mirrored column entries are
    copied over), so memory access is contiguous.
    """
    d = A.shape[0]
    for p in range(d - 1):
        for q in range(p + 1, d):
            apq = A[p, q]
            if apq == 0.0:
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            if theta == 0.0:
                t = 1.0
            else:
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            app = A[p, p]
            aqq = A[q, q]
            for k in range(d):
                if k == p or k == q:
                    continue
                apk = A[p, k]
                aqk = A[q, k]
                A[p, k] = c * apk - s * aqk
                A[q, k] = s * apk + c * aqk
                A[k, p] = A[p, k]
                A[k, q] = A[q, k]
            A[p, p] = app - t * apq
            A[q, q] = aqq + t * apq
            A[p, q] = 0.0
            A[q, p] = 0.0
            for k in range(d):
                vpk = Vt[p, k]
                vqk = Vt[q, k]
                Vt[p, k] = c * vpk - s * vqk
                Vt[q, k] = s * vpk + c * vqk


def symmetric_eigen(S: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> EigenFactorization:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm is below
    ``tol * ||S||_F``. Eigenpairs are sorted by descending eigenvalue and
    every eigenvector is signed so that its largest-magnitude entry (first
    one on ties) is positive. Slightly negative eigenvalues at roundoff level
    are set to 0.
    """
    S = np.array(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix contains non-finite entries")
    d = S.shape[0]
    norm = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-9 * max(1.0, norm):
        raise NotSymmetricError("matrix is not symmetric")
    A = 0.5 * (S + S.T)
    Vt = np.eye(d)

    def off_norm() -> float:
        return np.linalg.norm(A - np.diag(np.diag(A)))

    threshold = tol * norm
    for _sweep in range(max_sweeps):
        if off_norm() <= threshold:
            break
        _jacobi_sweep(A, Vt)
    else:
        if off_norm() > threshold:
            raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    lam = np.diag(A).copy()
    idx = np.argsort(-lam, kind="stable")
    lam, V = lam[idx], np.ascontiguousarray(Vt[idx].T)
    lam[(lam < 0) & (lam > -1e-10 * max(1.0, norm))] = 0.0
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pivot, np.arange(d)] < 0, -1.0, 1.0)
    return EigenFactorization(V * signs, lam)


def make_neutralizer(sm: StyleMatrix, eps: float = 1e-5) -> NeutralizeOp:
    if not eps > 0:
        raise ValueError("eps must be positive")
    ef = symmetric_eigen(sm.S)
    return NeutralizeOp(ef.P, np.maximum(ef.lam, eps) ** -0.5, sm.mean.copy())


def make_stylizer(sm: StyleMatrix, eps: float = 1e-5) -> StylizeOp:
    # eps is accepted for symmetry with make_neutralizer; sqrt is fine at 0
    if not eps > 0:
        raise ValueError("eps must be positive")
    ef = symmetric_eigen(sm.S)
    return StylizeOp(ef.P, np.sqrt(np.maximum(ef.lam, 0.0)), sm.mean.copy())


def _columns(op_dim: int, Z: np.ndarray) -> tuple[np.ndarray, bool]:
    Z = np.asarray(Z, dtype=np.float64)
    vector = Z.ndim == 1
    if vector:
        Z = Z[:, None]
    if Z.ndim != 2 or Z.shape[0] != op_dim:
        raise ValueError(f"expected {op_dim} rows, got shape {Z.shape}")
    return Z, vector


def apply_neutralize(op: NeutralizeOp, Z: np.ndarray) -> np.ndarray:
    Z, vector = _columns(op.P.shape[0], Z)
    out = op.P @ (op.inv_sqrt_lambda[:, None] * (op.P.T @ (Z - op.mean[:, None])))
    return out[:, 0] if vector else out


def apply_stylize(op: StylizeOp, Z: np.ndarray) -> np.ndarray:
    Z, vector = _columns(op.P.shape[0], Z)
    out = op.P @ (op.sqrt_lambda[:, None] * (op.P.T @ Z)) + op.mean[:, None]
    return out[:, 0] if vector else out
