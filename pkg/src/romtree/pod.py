"""SVD-based POD bases.

Singular vectors are sign-normalised so that the entry of largest magnitude
in each left singular vector is positive; the matching right singular
vector is flipped with it. This makes every factorisation deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DimensionMismatch, NonFiniteValue, RankError, SvdConvergenceError

# relative threshold below which singular values count as zero for rank decisions
RANK_RTOL = 1e-12
ORTHO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ThinSvd:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def k(self) -> int:
        return self.sigma.size

    def numerical_rank(self, rtol: float = RANK_RTOL) -> int:
        if self.sigma.size == 0 or self.sigma[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.sigma > rtol * self.sigma[0]))


@dataclass(frozen=True, eq=False)
class PodBasis:
    """Column-orthonormal ``n x r`` matrix representing a point on G(r, n)."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] < 1 or phi.shape[1] > phi.shape[0]:
            raise DimensionMismatch(f"basis must be n x r with 1 <= r <= n, got {phi.shape}")
        phi = np.asfortranarray(phi)
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def rank(self) -> int:
        return self.phi.shape[1]

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.phi.T @ self.phi - np.eye(self.rank))))


def as_basis_array(basis) -> np.ndarray:
    return basis.phi if isinstance(basis, PodBasis) else np.asarray(basis, dtype=np.float64)


def _fix_signs(U, V=None):
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    if V is not None:
        V = V * signs
    return U, V


def _lapack_svd(M, compute_v=True):
    last = None
    for driver in ("gesdd", "gesvd"):
        try:
            if compute_v:
                return la.svd(M, full_matrices=False, lapack_driver=driver, check_finite=False)
            U, s, _ = la.svd(M, full_matrices=False, lapack_driver=driver, check_finite=False)
            return U, s, None
        except la.LinAlgError as exc:
            last = exc
    raise SvdConvergenceError(f"SVD did not converge for a {M.shape} matrix") from last


def _check(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise DimensionMismatch(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteValue("matrix contains NaN or Inf")
    return M


def thin_svd(M) -> ThinSvd:
    """Economy SVD ``M = U diag(sigma) V^T`` with ``k = min(rows, cols)``."""
    M = _check(M)
    U, s, Vt = _lapack_svd(M)
    U, V = _fix_signs(U, Vt.T)
    return ThinSvd(U, s, V)


def _left_svd(M):
    """Left singular vectors and values only.

    For wide matrices the columns are first compressed with a QR of ``M^T``;
    ``M = R^T Q^T`` shares its left singular pairs with the square ``R^T``.
    """
    rows, cols = M.shape
    if cols > 2 * rows:
        R = la.qr(M.T, mode="r", check_finite=False)[0]
        M = R[:rows].T
    U, s, _ = _lapack_svd(M, compute_v=False)
    U, _ = _fix_signs(U)
    return U, s


def pod_basis(D, r: int) -> PodBasis:
    """First ``r`` left singular vectors of ``D``.

    When ``r`` exceeds the numerical rank the trailing SVD columns are kept as
    padding; they stay orthonormal but carry no energy.
    """
    D = _check(D)
    r = int(r)
    if r < 1 or r > min(D.shape):
        raise RankError(f"rank {r} infeasible for a {D.shape[0]} x {D.shape[1]} snapshot matrix")
    U, _ = _left_svd(D)
    return PodBasis(U[:, :r])


def randomized_svd(D, r: int, oversample: int = 10, seed: int = 0) -> ThinSvd:
    """Randomized range-finder SVD truncated to ``r`` components.

    Samples the column space with a Gaussian test matrix of ``r + oversample``
    columns, orthonormalises it by QR and takes the exact SVD of the small
    projected matrix. No power iterations are applied.
    """
    D = _check(D)
    r, oversample = int(r), int(oversample)
    if r < 1 or oversample < 0:
        raise RankError("rank must be positive and oversampling non-negative")
    width = r + oversample
    if width > D.shape[1]:
        raise RankError(f"r + oversample = {width} exceeds the {D.shape[1]} columns of D")
    if r > D.shape[0]:
        raise RankError(f"rank {r} exceeds the {D.shape[0]} rows of D")
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((D.shape[1], width))
    Q, _ = np.linalg.qr(D @ P)
    small = thin_svd(Q.T @ D)
    U, V = _fix_signs(Q @ small.U, small.V)
    return ThinSvd(U[:, :r], small.sigma[:r].copy(), V[:, :r])


def reconstruction_error(D, basis) -> float:
    """Squared Frobenius norm of the projection residual ``D - phi phi^T D``."""
    D = _check(D)
    phi = as_basis_array(basis)
    if phi.shape[0] != D.shape[0]:
        raise DimensionMismatch(f"basis has {phi.shape[0]} rows, snapshots have {D.shape[0]}")
    residual = D - phi @ (phi.T @ D)
    return float(np.sum(residual * residual))
