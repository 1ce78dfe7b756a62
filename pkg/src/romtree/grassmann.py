"""Subspace geometry on the Grassmann manifold G(r, n).

Points are represented by column-orthonormal ``n x r`` matrices (or
:class:`~romtree.pod.PodBasis`). Tangent vectors at a point ``Y`` are
``n x r`` matrices ``G`` with ``Y^T G = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la
from scipy.interpolate import BarycentricInterpolator

from .errors import DimensionMismatch, LogMapUndefined, ValidationError
from .pod import PodBasis, as_basis_array

HALF_PI = 0.5 * np.pi
# margin below pi/2 at which interpolated tangent vectors are flagged unstable
STABILITY_MARGIN = 1e-3
# subspaces closer than this are considered equal
EQUAL_TOL = 1e-8
# smallest admissible singular value of ref^T target in the logarithm
LOG_SINGULAR_TOL = 1e-12
IDW_POWER = 2.0


def _pair(A, B):
    A, B = as_basis_array(A), as_basis_array(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"subspace shapes differ: {A.shape} vs {B.shape}")
    return A, B


def principal_angles(A, B) -> np.ndarray:
    """Principal angles between span(A) and span(B), sorted ascending in [0, pi/2].

    Cosines come from the singular values of ``A^T B``. Angles below pi/4 are
    taken from the sines (singular values of ``B - A A^T B``) instead, where
    ``arccos`` would lose half the working precision.
    """
    A, B = _pair(A, B)
    M = A.T @ B
    cos = np.clip(la.svdvals(M, check_finite=False), 0.0, 1.0)
    theta = np.sort(np.arccos(cos))
    sin = np.clip(np.sort(la.svdvals(B - A @ M, check_finite=False)), 0.0, 1.0)
    small = theta < 0.25 * np.pi
    theta[small] = np.arcsin(sin[small])
    return np.sort(theta)


def riemannian_distance(A, B) -> float:
    """Geodesic distance ``sqrt(sum theta_i^2)`` between two subspaces."""
    theta = principal_angles(A, B)
    return float(np.sqrt(np.dot(theta, theta)))


def same_subspace(A, B, tol: float = EQUAL_TOL) -> bool:
    return riemannian_distance(A, B) < tol


@dataclass(frozen=True, eq=False)
class TangentVector:
    gamma: np.ndarray
    reference: PodBasis

    def tangency_defect(self) -> float:
        return float(np.max(np.abs(self.reference.phi.T @ self.gamma)))


@dataclass(frozen=True)
class Stability:
    stable: bool
    max_angle: float

    def __bool__(self):
        return self.stable


def _as_pod(basis) -> PodBasis:
    return basis if isinstance(basis, PodBasis) else PodBasis(basis)


def log_map(ref, target, pair=None) -> TangentVector:
    """Grassmann logarithm of span(target) at span(ref).

    ``pair`` labels the two subspaces in the error raised when
    ``ref^T target`` is singular.
    """
    ref = _as_pod(ref)
    Y, X = _pair(ref, target)
    M = Y.T @ X
    smin = la.svdvals(M, check_finite=False)[-1]
    if smin < LOG_SINGULAR_TOL:
        label = f" for pair {pair}" if pair is not None else ""
        raise LogMapUndefined(
            f"log-map undefined{label}: reference and target have a principal angle of pi/2",
            pair=pair,
        )
    # (I - Y Y^T) X (Y^T X)^{-1}, solved rather than inverted
    L = la.solve(M.T, (X - Y @ M).T, check_finite=False).T
    U, s, Vt = la.svd(L, full_matrices=False, check_finite=False)
    gamma = (U * np.arctan(s)) @ Vt
    return TangentVector(gamma, ref)


def exp_map(ref, t: TangentVector) -> PodBasis:
    """Grassmann exponential of ``t`` at ``ref``, re-orthonormalised by QR."""
    ref = _as_pod(ref)
    if t.reference is not ref and not np.array_equal(t.reference.phi, ref.phi):
        raise ValidationError("tangent vector is attached to a different reference point")
    if t.gamma.shape != ref.phi.shape:
        raise DimensionMismatch(f"tangent shape {t.gamma.shape} does not match reference {ref.phi.shape}")
    U, s, Vt = la.svd(t.gamma, full_matrices=False, check_finite=False)
    Y = (ref.phi @ (Vt.T * np.cos(s)) + U * np.sin(s)) @ Vt
    Q, R = np.linalg.qr(Y)
    # keep columns close to Y rather than arbitrarily signed
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return PodBasis(Q * signs)


def stability_check(t: TangentVector, margin: float = STABILITY_MARGIN) -> Stability:
    """Unstable when some singular value of the tangent vector reaches pi/2 - margin."""
    s = la.svdvals(t.gamma, check_finite=False) if t.gamma.size else np.zeros(1)
    top = float(s[0]) if s.size else 0.0
    return Stability(stable=bool(top < HALF_PI - margin), max_angle=top)


def _weighted_mean(w, rows):
    """``sum_j w_j rows_j / sum_j w_j`` accumulated row by row.

    A BLAS matrix-vector product here gives results that depend on buffer
    alignment, which breaks bit-identical reruns.
    """
    acc = np.zeros(rows.shape[1])
    for wj, row in zip(w, rows):
        acc += wj * row
    return acc / math.fsum(w)


class TangentInterpolator:
    """Interpolates subspaces in the tangent space at one training point.

    Log maps of all training bases are computed once at construction, so
    predicting many targets for the same reference is cheap. One-dimensional
    parameters use Lagrange interpolation (barycentric form); higher
    dimensions use inverse-distance weighting with power 2.
    """

    def __init__(self, params, bases: Sequence, ref_index: int, ids: Sequence[str] | None = None):
        params = np.asarray(params, dtype=np.float64)
        if params.ndim == 1:
            params = params[:, None]
        if len(bases) != params.shape[0]:
            raise ValidationError("need one parameter point per training basis")
        if len(bases) < 2:
            raise ValidationError("interpolation needs at least 2 training points")
        if not 0 <= ref_index < len(bases):
            raise ValidationError(f"reference index {ref_index} out of range")
        ids = list(ids) if ids is not None else [str(i) for i in range(len(bases))]
        shape = as_basis_array(bases[0]).shape
        for b in bases:
            if as_basis_array(b).shape != shape:
                raise DimensionMismatch("all training bases must share n and r")

        # one memory layout for every basis, so results do not depend on the caller's
        bases = [_as_pod(b) for b in bases]
        self.params = params
        self.ref_index = ref_index
        self.reference = bases[ref_index]
        self.shape = shape
        gammas = []
        for i, b in enumerate(bases):
            tv = log_map(self.reference, b, pair=(ids[ref_index], ids[i]))
            gammas.append(tv.gamma.reshape(-1))
        self._gammas = np.vstack(gammas)
        self._lagrange = None
        if params.shape[1] == 1:
            nodes = params[:, 0]
            if np.unique(nodes).size != nodes.size:
                raise ValidationError("duplicate training parameters")
            # fixed rng: scipy otherwise shuffles nodes at random when forming the weights
            self._lagrange = BarycentricInterpolator(nodes, rng=0)

    def tangent(self, target) -> TangentVector:
        target = np.asarray(target, dtype=np.float64).reshape(-1)
        if target.size != self.params.shape[1]:
            raise DimensionMismatch(f"target has d={target.size}, training d={self.params.shape[1]}")
        if self._lagrange is not None:
            # second barycentric form with scipy's node weights
            diff = target[0] - self.params[:, 0]
            hit = np.flatnonzero(diff == 0.0)
            w = None if hit.size else self._lagrange.wi / diff
        else:
            dist = np.linalg.norm(self.params - target, axis=1)
            hit = np.flatnonzero(dist == 0.0)
            w = None if hit.size else dist ** -IDW_POWER
        flat = self._gammas[hit[0]] if w is None else _weighted_mean(w, self._gammas)
        return TangentVector(flat.reshape(self.shape), self.reference)

    def __call__(self, target) -> tuple[PodBasis, Stability]:
        tv = self.tangent(target)
        return exp_map(self.reference, tv), stability_check(tv)


def interpolate_basis(train: Sequence, ref_index: int, target, ids=None) -> tuple[PodBasis, Stability]:
    """Interpolate a basis at ``target`` from ``(param, basis)`` training pairs."""
    params = [np.asarray(p, dtype=np.float64).reshape(-1) for p, _ in train]
    bases = [b for _, b in train]
    dims = {p.size for p in params}
    if len(dims) > 1:
        raise DimensionMismatch("training parameters differ in dimension")
    interp = TangentInterpolator(np.vstack(params) if params else np.empty((0, 1)), bases, ref_index, ids)
    return interp(target)
