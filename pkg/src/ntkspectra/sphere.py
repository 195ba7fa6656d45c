"""Gegenbauer polynomials, zonal sums, Funk-Hecke mode extraction, Cesaro kernel.

Mode extraction follows the normalized-measure convention: the Mercer
expansion of a dot-product kernel on the d-sphere is taken with respect to
the uniform probability measure, so that the per-degree eigenvalues mu_n
satisfy sum_n mu_n a_n = f(1) (trace calibration). The normalization
constant in front of the one-dimensional mode integral is the surface-area
ratio fixed by that convention and is cross-checked by the trace and
orthogonality tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .errors import NumericalError
from .seqcalc import binom_a

# Upward recurrence is reliable well past the degrees used here; refuse beyond.
MAX_GEGENBAUER_DEGREE = 200


def surface_area(d: int) -> float:
    """Surface area of the unit d-sphere embedded in R^{d+1}."""
    return 2.0 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


@dataclass(frozen=True)
class SphereGeometry:
    """Ambient data of S^d: dimension, Gegenbauer index, surface area."""

    d: int
    lam: float = field(init=False)
    omega_d: float = field(init=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("invalid dimension: the Gegenbauer path requires d >= 2")
        object.__setattr__(self, "lam", (self.d - 1) / 2)
        object.__setattr__(self, "omega_d", surface_area(self.d))


def multiplicity(n: int, d: int) -> int:
    """Dimension a_n of the space of degree-n spherical harmonics on S^d."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if n < 2:
        return 1 if n == 0 else d + 1
    return math.comb(n + d, n) - math.comb(n - 2 + d, n - 2)


def multiplicity_cumsum(N: int, d: int) -> int:
    """sum_{n<=N} a_n = C(N+d, N) + C(N-1+d, N-1), exactly."""
    if N < 0:
        raise ValueError("degree must be nonnegative")
    if N == 0:
        return 1
    return math.comb(N + d, N) + math.comb(N - 1 + d, N - 1)


def _gegenbauer_table(n_max: int, lam: float, u: np.ndarray) -> np.ndarray:
    """C_n^lam(u) for n = 0..n_max; extended-precision accumulation."""
    if n_max > MAX_GEGENBAUER_DEGREE:
        raise ValueError(
            f"Gegenbauer recurrence refused beyond degree {MAX_GEGENBAUER_DEGREE} (asked {n_max})")
    u = np.asarray(u, dtype=np.longdouble)
    out = np.empty((n_max + 1,) + u.shape, dtype=np.longdouble)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2 * lam * u
    for n in range(2, n_max + 1):
        out[n] = (2 * (n + lam - 1) * u * out[n - 1] - (n + 2 * lam - 2) * out[n - 2]) / n
    return out


def gegenbauer(n: int, lam: float, u) -> float | np.ndarray:
    """Gegenbauer polynomial C_n^lam(u) by the three-term upward recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if lam <= 0:
        raise ValueError("Gegenbauer index must be positive")
    table = _gegenbauer_table(n, lam, np.asarray(u, dtype=float))
    res = np.asarray(table[n], dtype=float)
    return res if res.shape else float(res)


def gegenbauer_at_one(n: int, lam: float) -> float:
    """C_n^lam(1) = (2 lam)_n / n! via a multiplicative recurrence."""
    out = 1.0
    for j in range(1, n + 1):
        out *= (2 * lam + j - 1) / j
    return out


def zonal(n: int, geometry: SphereGeometry, u) -> float | np.ndarray:
    """Zonal polynomial Z_n(u) = ((n + lam)/lam) C_n^lam(u); Z_n(1) = a_n."""
    lam = geometry.lam
    return (n + lam) / lam * gegenbauer(n, lam, u)


@dataclass
class ModeSpectrum:
    """Per-degree eigenvalues mu_n with multiplicities a_n for a dot-product kernel."""

    mu: np.ndarray
    mult: np.ndarray
    geometry: SphereGeometry

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.mult = np.asarray(self.mult, dtype=np.int64)
        if self.mu.shape != self.mult.shape:
            raise ValueError("mu and mult must have matching length")
        expected = np.array([multiplicity(n, self.geometry.d) for n in range(len(self.mu))])
        if not np.array_equal(self.mult, expected):
            raise ValueError("multiplicities do not match the sphere dimension")

    @property
    def n_max(self) -> int:
        return len(self.mu) - 1

    @property
    def has_negative(self) -> bool:
        """Negative modes are storable but flag a non-PD profile."""
        return bool((self.mu < 0).any())

    def trace_partial_sums(self) -> np.ndarray:
        """Cumulative sums of mu_n * a_n; converges to f(1) for PD profiles."""
        return np.cumsum(self.mu * self.mult)

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("n,a_n,mu_n\n")
            for n in range(len(self.mu)):
                fh.write(f"{n},{int(self.mult[n])},{float(self.mu[n])!r}\n")

    @classmethod
    def load_csv(cls, path, d: int) -> "ModeSpectrum":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(mu=rows[:, 2], mult=rows[:, 1].astype(np.int64), geometry=SphereGeometry(d))


def funk_hecke_normalization(d: int) -> float:
    """Constant c_d of the mode integral, pinned by trace calibration.

    Equals the surface-area ratio of S^{d-1} to S^d: with it, the profile
    f(t) = 1 yields mu_0 = 1 and f(t) = t yields mu_1 = 1/(d+1) under the
    normalized uniform measure.
    """
    return surface_area(d - 1) / surface_area(d)


def _mode_integrals(profile: Callable[[np.ndarray], np.ndarray], geometry: SphereGeometry,
                    n_max: int, order: int) -> np.ndarray:
    """Quadrature pass: mu_n = c_d * int f(t) (C_n(t)/C_n(1)) (1-t^2)^{(d-2)/2} dt.

    Evaluated after the substitution t = cos(theta), where the weighted
    integrand of the kernels handled here is analytic in theta (the arccos
    endpoint kinks of the profile disappear), so Gauss-Legendre nodes in the
    angle converge geometrically. Sums are compensated to keep the tiny
    high-degree modes above the roundoff floor.
    """
    d, lam = geometry.d, geometry.lam
    x, w = roots_legendre(order)
    theta = (x + 1.0) * (math.pi / 2)
    wt = w * (math.pi / 2)
    u = np.cos(theta)
    fu = np.asarray(profile(u), dtype=float)
    if fu.shape != u.shape:
        raise ValueError("profile must map an array of u-values to an array of the same shape")
    table = _gegenbauer_table(n_max, lam, u)
    weight = wt * np.sin(theta) ** (d - 1) * fu
    cd = funk_hecke_normalization(d)
    mu = np.empty(n_max + 1)
    for n in range(n_max + 1):
        cn1 = gegenbauer_at_one(n, lam)
        terms = weight * np.asarray(table[n] / cn1, dtype=float)
        mu[n] = cd * math.fsum(terms)
    return mu


def funk_hecke_modes(profile: Callable[[np.ndarray], np.ndarray], geometry: SphereGeometry,
                     n_max: int, quad_order: int = 256) -> ModeSpectrum:
    """Extract per-degree eigenvalues of the dot-product kernel with the given profile.

    A second pass at twice the order must agree to relative 1e-8 for every
    degree up to n_max, otherwise the extraction fails with a convergence
    error (raise quad_order for profiles with sharper features).
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if quad_order < n_max + 1:
        raise ValueError("quad_order must exceed the highest requested degree")
    mu_a = _mode_integrals(profile, geometry, n_max, quad_order)
    mu_b = _mode_integrals(profile, geometry, n_max, 2 * quad_order)
    # relative 1e-8 per degree, with an absolute floor at 1e-12 of the largest
    # mode: degenerate profiles have exact-zero modes whose two passes differ
    # only by roundoff, where a pure ratio test is meaningless
    scale = float(np.abs(mu_b).max())
    denom = np.maximum(np.maximum(np.abs(mu_a), np.abs(mu_b)), 1e-4 * scale + 1e-300)
    rel = np.abs(mu_a - mu_b) / denom
    if (rel > 1e-8).any():
        worst = int(np.argmax(rel))
        raise NumericalError(
            f"quadrature not converged: relative doubling gap {rel[worst]:.2e} at degree {worst}; "
            f"increase quad_order (currently {quad_order})")
    mult = np.array([multiplicity(n, geometry.d) for n in range(n_max + 1)], dtype=np.int64)
    return ModeSpectrum(mu=mu_b, mult=mult, geometry=geometry)


def modes_to_lambda(spectrum: ModeSpectrum, count: int) -> np.ndarray:
    """Expand mu_n with multiplicity a_n and return the count largest, descending."""
    if spectrum.has_negative:
        raise ValueError("modes_to_lambda requires nonnegative per-degree eigenvalues")
    total = int(spectrum.mult.sum())
    if total < count:
        raise ValueError(f"insufficient stored degrees: {total} eigenvalues available, {count} requested")
    lams = np.repeat(spectrum.mu, spectrum.mult)
    lams[::-1].sort()
    return lams[:count]


def cesaro_kernel(n: int, geometry: SphereGeometry, u) -> float | np.ndarray:
    """Order-d Cesaro sum of the zonal polynomials: nonnegative on [-1, 1].

    K_n(u) = (1/A_n^d) sum_{k<=n} A_{n-k}^d Z_k(u).
    """
    if n < 1:
        raise ValueError("cesaro_kernel requires n >= 1")
    d, lam = geometry.d, geometry.lam
    arr = np.asarray(u, dtype=float)
    table = _gegenbauer_table(n, lam, arr)
    acc = np.zeros(arr.shape, dtype=np.longdouble)
    for k in range(n + 1):
        acc += float(binom_a(n - k, d)) * (k + lam) / lam * table[k]
    res = np.asarray(acc / float(binom_a(n, d)), dtype=float)
    return res if res.shape else float(res)


def cesaro_kernel_envelope(n: int, geometry: SphereGeometry, u) -> float | np.ndarray:
    """Envelope n^-1 (1 - u + n^-2)^-(lam+1) that bounds K_n up to a constant."""
    arr = np.asarray(u, dtype=float)
    env = (1.0 - arr + n ** -2.0) ** (-(geometry.lam + 1)) / n
    return env if env.shape else float(env)
