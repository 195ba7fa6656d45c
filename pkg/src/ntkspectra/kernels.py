"""Closed-form multilayer ReLU tangent kernel, sphere lift, and kernel algebra.

The kernel on R^d is assembled from the arc-cosine maps kappa0/kappa1 through
the lift x -> (x, 1): evaluate the homogeneous dot-product profile at the
cosine of the lifted angle, scale by the lifted norms, and add the constant
bias term. Gram assembly is fully vectorized; positive-definiteness
diagnostics live on the returned matrix object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Cosine arguments may drift past +-1 by roundoff; clamp within this slack,
# error beyond it (a larger excess indicates a logic bug, not roundoff).
COS_CLAMP_TOL = 1e-9


def _clamped(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    excess = np.abs(u) - 1.0
    if excess.size and float(np.max(excess)) > COS_CLAMP_TOL:
        raise ValueError("argument out of range: cosine input exceeds [-1, 1] beyond roundoff slack")
    return np.clip(u, -1.0, 1.0)


def kappa0(u) -> float | np.ndarray:
    """First arc-cosine map: (pi - arccos u) / pi, increasing from 0 to 1."""
    arr = _clamped(u)
    res = (math.pi - np.arccos(arr)) / math.pi
    return res if res.shape else float(res)


def kappa1(u) -> float | np.ndarray:
    """Second arc-cosine map: (sqrt(1-u^2) + u (pi - arccos u)) / pi."""
    arr = _clamped(u)
    res = (np.sqrt(np.clip(1.0 - arr * arr, 0.0, None)) + arr * (math.pi - np.arccos(arr))) / math.pi
    return res if res.shape else float(res)


@dataclass(frozen=True)
class NtkDescriptor:
    """Which tangent kernel to evaluate: depth, bias constant, variant.

    variant 'full' is the kernel on R^d (lift + norm scaling + bias constant);
    'homogeneous' is the bare dot-product profile on the sphere and never
    carries the bias constant.
    """

    L: int
    variant: str = "full"
    include_bias_constant: bool = True

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("at least one hidden layer is required")
        if self.variant not in ("full", "homogeneous"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "homogeneous" and self.include_bias_constant:
            object.__setattr__(self, "include_bias_constant", False)


@dataclass(frozen=True)
class LiftedPoint:
    """A point of R^d with its appended-one lift and sphere projection."""

    x: np.ndarray
    x_tilde: np.ndarray
    norm_tilde: float
    y: np.ndarray


def lift(x) -> LiftedPoint:
    """Lift x in R^d to (x, 1) and project onto the upper half sphere."""
    x = np.asarray(x, dtype=float).ravel()
    xt = np.append(x, 1.0)
    nt = float(np.linalg.norm(xt))
    return LiftedPoint(x=x, x_tilde=xt, norm_tilde=nt, y=xt / nt)


def _lift_batch(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xt = np.hstack([X, np.ones((X.shape[0], 1))])
    norms = np.linalg.norm(Xt, axis=1)
    return Xt, norms


def ntk_profile(desc: NtkDescriptor, u) -> float | np.ndarray:
    """Homogeneous dot-product profile: sum over layers of composed arc-cosine maps.

    With k1s the iterated kappa1 values, the profile is
    sum_{r=0..L} k1s[r] * prod_{s=r..L-1} kappa0(k1s[s]); the empty product is 1.
    """
    if desc.variant != "homogeneous":
        raise ValueError("ntk_profile requires a homogeneous descriptor")
    return _profile_raw(desc.L, u)


def _profile_raw(L: int, u) -> float | np.ndarray:
    arr = _clamped(u)
    k1s = [arr]
    for _ in range(L):
        k1s.append(kappa1(k1s[-1]))
    prods = [np.ones_like(arr)]
    for s in range(L - 1, -1, -1):
        prods.insert(0, prods[0] * kappa0(k1s[s]))
    res = np.zeros_like(arr)
    for r in range(L + 1):
        res = res + k1s[r] * prods[r]
    return res if res.shape else float(res)


def ntk_eval(desc: NtkDescriptor, x, xp) -> float:
    """Kernel value on R^d: |x~||x'~| * profile(cos angle of lifts) + bias constant."""
    if desc.variant != "full":
        raise ValueError("ntk_eval requires a full descriptor")
    a, b = lift(x), lift(xp)
    u = float(np.dot(a.x_tilde, b.x_tilde) / (a.norm_tilde * b.norm_tilde))
    val = a.norm_tilde * b.norm_tilde * _profile_raw(desc.L, u)
    if desc.include_bias_constant:
        val += 1.0
    return float(val)


def ntk_cross(desc: NtkDescriptor, Z, X) -> np.ndarray:
    """Cross kernel matrix K(z_i, x_j), vectorized."""
    if desc.variant == "full":
        Zt, nz = _lift_batch(Z)
        Xt, nx = _lift_batch(X)
        U = (Zt @ Xt.T) / np.outer(nz, nx)
        K = np.outer(nz, nx) * _profile_raw(desc.L, U)
        if desc.include_bias_constant:
            K = K + 1.0
        return K
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _require_unit_norms(Z)
    _require_unit_norms(X)
    return _profile_raw(desc.L, Z @ X.T)


def _require_unit_norms(P: np.ndarray) -> None:
    norms = np.linalg.norm(P, axis=1)
    if np.abs(norms - 1.0).max() > 1e-6:
        raise ValueError("homogeneous kernel requires unit-norm points on the sphere")


@dataclass
class KernelMatrix:
    """Symmetric PSD Gram matrix with a cached symmetric eigendecomposition."""

    entries: np.ndarray
    _eigvals: Optional[np.ndarray] = field(default=None, repr=False)
    _eigvecs: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        K = np.asarray(self.entries, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("kernel matrix must be square")
        scale = max(np.abs(K).max(), 1e-300)
        if np.abs(K - K.T).max() > 1e-10 * scale:
            raise ValueError("kernel matrix is not symmetric")
        self.entries = K

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def eigendecompose(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues descending with matching orthonormal eigenvectors, cached."""
        if self._eigvals is None:
            vals, vecs = np.linalg.eigh(self.entries)
            self._eigvals = vals[::-1].copy()
            self._eigvecs = vecs[:, ::-1].copy()
        return self._eigvals, self._eigvecs

    def eigenvalues(self) -> np.ndarray:
        return self.eigendecompose()[0]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues()[-1])

    def save_csv(self, path, header: Optional[dict] = None) -> None:
        """Row-major CSV with a comment header recording d, L, n, seed."""
        meta = dict(header or {})
        meta.setdefault("n", self.n)
        with open(path, "w") as fh:
            fh.write("# " + ",".join(f"{k}={v}" for k, v in meta.items()) + "\n")
            for row in self.entries:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> tuple["KernelMatrix", dict]:
        with open(path) as fh:
            first = fh.readline().strip()
            meta = {}
            if first.startswith("#"):
                for item in first[1:].strip().split(","):
                    k, _, v = item.partition("=")
                    meta[k.strip()] = v.strip()
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        return cls(entries=rows), meta


def gram(desc: NtkDescriptor, X) -> KernelMatrix:
    """Gram matrix of the kernel on the given points; symmetrized after assembly."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.isfinite(X).all():
        raise ValueError("points must be finite-valued")
    K = ntk_cross(desc, X, X)
    return KernelMatrix(entries=0.5 * (K + K.T))


Kernel = Callable[[np.ndarray, np.ndarray], float]


def profile_kernel(desc: NtkDescriptor) -> Kernel:
    """The homogeneous profile as a pointwise kernel on sphere points."""
    def k(y, yp):
        y = np.asarray(y, dtype=float).ravel()
        yp = np.asarray(yp, dtype=float).ravel()
        return float(_profile_raw(desc.L, float(np.dot(y, yp))))
    return k


def scaled_kernel(k: Kernel, rho: Callable[[np.ndarray], float]) -> Kernel:
    """(rho . k)(x, x') = rho(x) k(x, x') rho(x')."""
    def scaled(x, xp):
        return rho(x) * k(x, xp) * rho(xp)
    return scaled


def pullback_kernel(k2: Kernel, phi: Callable[[np.ndarray], np.ndarray]) -> Kernel:
    """(phi* k2)(x, x') = k2(phi(x), phi(x'))."""
    def pulled(x, xp):
        return k2(phi(x), phi(xp))
    return pulled


def sum_kernel(k1: Kernel, k2: Kernel) -> Kernel:
    def summed(x, xp):
        return k1(x, xp) + k2(x, xp)
    return summed


def gram_from_kernel(k: Kernel, X) -> KernelMatrix:
    """Generic (loop-based) Gram assembly for composed kernel callables."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.isfinite(X).all():
        raise ValueError("points must be finite-valued")
    n = X.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = K[j, i] = k(X[i], X[j])
    return KernelMatrix(entries=0.5 * (K + K.T))
