"""Empirical eigenvalue-decay estimation.

Samples points from the supported input distributions, builds kernel Gram
matrices, converts their spectra into integral-operator eigenvalue estimates
(the 1/n scaling), and fits log-log decay rates over an index window. The
grid experiment reproduces the tabulated reference rates; the spherical-cap
experiment probes invariance of the rate under restriction of the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError
from .kernels import NtkDescriptor, gram
from .rng import rng_for

# Eigenvalues below this fraction of the trace are numerical noise: the
# kernel is strictly PD, so anything at roundoff level is dropped rather
# than regularized away (additive regularization would bias the fit).
NOISE_FLOOR = 1e-10

DISTRIBUTION_KINDS = ("uniform_cube", "uniform_sphere", "triangular", "clipped_normal", "sphere_cap")


@dataclass(frozen=True)
class SampleDistribution:
    """Input distribution for the decay experiments.

    uniform_cube draws each coordinate from U(a, b); triangular draws each
    coordinate from the symmetric triangular density on [-1, 1]; clipped_normal
    redraws standard normals landing outside (-limit, limit); uniform_sphere
    and sphere_cap return points of R^{d+1} on the unit d-sphere (the cap is
    centered at the last coordinate axis with the given opening angle).
    """

    kind: str
    d: int
    seed: int
    a: float = -1.0
    b: float = 1.0
    limit: float = 10.0
    angle: float = math.pi

    def __post_init__(self):
        if self.kind not in DISTRIBUTION_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform_cube" and not self.b > self.a:
            raise ValueError("uniform_cube requires b > a")
        if self.kind == "sphere_cap" and not 0.0 < self.angle <= math.pi:
            raise ValueError("cap angle must lie in (0, pi]")
        if self.d < 1:
            raise ValueError("dimension must be positive")

    def with_seed(self, seed: int) -> "SampleDistribution":
        return replace(self, seed=seed)


def _sphere_points(rng: np.random.Generator, d: int, n: int, angle: Optional[float]) -> np.ndarray:
    """Uniform points on S^d; rejection into the cap around the last axis."""
    cos_cut = None if angle is None or angle >= math.pi else math.cos(angle)
    out = np.empty((n, d + 1))
    got = 0
    while got < n:
        block = rng.standard_normal(size=(max(2 * (n - got), 256), d + 1))
        block /= np.linalg.norm(block, axis=1, keepdims=True)
        if cos_cut is not None:
            block = block[block[:, -1] > cos_cut]
        take = min(n - got, block.shape[0])
        out[got:got + take] = block[:take]
        got += take
    return out


def sample(dist: SampleDistribution, n: int) -> np.ndarray:
    """n i.i.d. draws; deterministic given the distribution's seed."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(dist.seed))
    d = dist.d
    if dist.kind == "uniform_cube":
        return rng.uniform(dist.a, dist.b, size=(n, d))
    if dist.kind == "triangular":
        # inverse CDF of the tent density 1-|x| on [-1, 1], coordinatewise
        v = rng.random(size=(n, d))
        return np.where(v < 0.5, np.sqrt(2.0 * v) - 1.0, 1.0 - np.sqrt(2.0 * (1.0 - v)))
    if dist.kind == "clipped_normal":
        x = rng.standard_normal(size=(n, d))
        while True:
            bad = np.abs(x) >= dist.limit
            if not bad.any():
                return x
            x[bad] = rng.standard_normal(int(bad.sum()))
    if dist.kind == "uniform_sphere":
        return _sphere_points(rng, d, n, angle=None)
    if dist.kind == "sphere_cap":
        return _sphere_points(rng, d, n, angle=dist.angle)
    raise AssertionError(dist.kind)


def empirical_eigenvalues(desc: NtkDescriptor, X: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of Gram/n: consistent integral-operator estimates.

    Values at or below the noise floor (1e-10 of the scaled trace) are
    dropped; negatives further below it would indicate an eigensolver
    failure and raise.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("at least one sample point is required")
    K = gram(desc, X)
    n = K.n
    lams = K.eigenvalues() / n
    floor = NOISE_FLOOR * float(np.trace(K.entries)) / n
    if (lams < -floor).any():
        raise NumericalError("eigensolve produced negatives beyond the noise floor")
    return lams[lams > floor]


@dataclass(frozen=True)
class DecayFit:
    """Log-log least-squares fit of eigenvalue decay over an index window.

    rate is the positive decay exponent (minus the fitted slope of
    ln lambda_i against ln i, indices 1-based).
    """

    rate: float
    intercept: float
    window: tuple[int, int]
    r2: float
    n_samples: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        lo, hi = self.window
        if lo < 1 or hi < lo:
            raise ValueError("window must satisfy 1 <= i_lo <= i_hi")
        if not -1e-12 <= self.r2 <= 1 + 1e-12:
            raise ValueError("r2 must lie in [0, 1]")


def fit_decay(lambdas: Sequence[float], window: tuple[int, int],
              n_samples: Optional[int] = None, seed: Optional[int] = None) -> DecayFit:
    """Ordinary least squares of ln lambda_i on ln i over the 1-based window."""
    lams = np.asarray(lambdas, dtype=float)
    lo, hi = window
    if lo < 1:
        raise ValueError("window must start at index 1 or later")
    if hi > len(lams):
        raise ValueError("window exceeds reliable spectrum")
    chunk = lams[lo - 1:hi]
    if (chunk <= 0).any():
        raise ValueError("window exceeds reliable spectrum")
    x = np.log(np.arange(lo, hi + 1, dtype=float))
    y = np.log(chunk)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return DecayFit(rate=float(-slope), intercept=float(intercept), window=(lo, hi),
                    r2=min(max(r2, 0.0), 1.0), n_samples=n_samples, seed=seed)


def theory_rate(d: int) -> float:
    """Predicted decay exponent (d+1)/d of the tangent kernel's spectrum."""
    return (d + 1) / d


@dataclass(frozen=True)
class EdrCell:
    """One grid cell of the decay-rate experiment."""

    dist_kind: str
    d: int
    L: int


@dataclass
class EdrCellResult:
    cell: EdrCell
    rates: list
    spectra: dict      # seed -> eigenvalue array
    window: tuple[int, int]
    n: int
    seeds: list

    @property
    def r_mean(self) -> float:
        return float(np.mean(self.rates))

    @property
    def r_std(self) -> float:
        return float(np.std(self.rates))


def _dist_for_cell(kind: str, d: int, seed: int) -> SampleDistribution:
    if kind == "u01":
        return SampleDistribution(kind="uniform_cube", d=d, seed=seed, a=0.0, b=1.0)
    if kind == "ucube":
        return SampleDistribution(kind="uniform_cube", d=d, seed=seed, a=-1.0, b=1.0)
    if kind == "triangular":
        return SampleDistribution(kind="triangular", d=d, seed=seed)
    if kind == "clipped_normal":
        return SampleDistribution(kind="clipped_normal", d=d, seed=seed)
    raise ValueError(f"unknown distribution name {kind!r}")


def run_edr_cell(cell: EdrCell, n: int, window: tuple[int, int], n_seeds: int,
                 root_seed: int) -> EdrCellResult:
    """Fit the decay rate for one (distribution, d, L) cell, averaged over seeds."""
    desc = NtkDescriptor(L=cell.L, variant="full")
    rates, spectra, seeds = [], {}, []
    for j in range(n_seeds):
        tag = f"edr/{cell.dist_kind}/d{cell.d}/L{cell.L}/rep{j}"
        seed = rng_for(root_seed, tag).integers(0, 2 ** 63 - 1)
        dist = _dist_for_cell(cell.dist_kind, cell.d, int(seed))
        X = sample(dist, n)
        lams = empirical_eigenvalues(desc, X)
        fit = fit_decay(lams, window, n_samples=n, seed=int(seed))
        rates.append(fit.rate)
        spectra[int(seed)] = lams
        seeds.append(int(seed))
    return EdrCellResult(cell=cell, rates=rates, spectra=spectra, window=window, n=n, seeds=seeds)


def edr_experiment(dist_kinds: Sequence[str], ds: Sequence[int], Ls: Sequence[int],
                   n: int = 1000, window: tuple[int, int] = (50, 200), n_seeds: int = 3,
                   root_seed: int = 0) -> list[EdrCellResult]:
    """Grid of decay-rate fits over distributions x dimensions x depths."""
    cells = [EdrCell(kind, d, L) for kind in dist_kinds for d in ds for L in Ls]
    return [run_edr_cell(cell, n, window, n_seeds, root_seed) for cell in cells]


def restricted_sphere_edr(desc: NtkDescriptor, d: int, cap_angle: float, n: int,
                          window: tuple[int, int], seed: int = 0) -> DecayFit:
    """Decay fit of the homogeneous kernel on a uniform spherical-cap sample.

    Points live on S^d (vectors of R^{d+1}); at cap_angle = pi the cap is the
    full sphere. Restriction invariance predicts the same rate for any angle.
    """
    if desc.variant != "homogeneous":
        raise ValueError("restricted_sphere_edr requires the homogeneous variant")
    if not 0.0 < cap_angle <= math.pi:
        raise ValueError("cap angle must lie in (0, pi]")
    dist = SampleDistribution(kind="sphere_cap", d=d, seed=seed, angle=cap_angle)
    Y = sample(dist, n)
    lams = empirical_eigenvalues(desc, Y)
    return fit_decay(lams, window, n_samples=n, seed=seed)
