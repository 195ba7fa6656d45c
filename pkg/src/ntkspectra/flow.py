"""Kernel gradient-flow regression with early stopping and cross-validated stopping.

The flow starts from the zero function and follows
    d/dt f_t(x) = -(1/n) K(x, X) (f_t(X) - y),
whose unique solution is the spectral filter
    f_t(x) = K(x, X) U diag((1 - exp(-lam_i t / n)) / lam_i) U^T y
for the eigendecomposition U diag(lam) U^T of K(X, X). The 1/n time scaling
is the single convention used everywhere (training residuals then decay
within the envelope exp(-lam_min t / n)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .kernels import KernelMatrix, NtkDescriptor, gram, ntk_cross
from .spectral import SampleDistribution, sample


@dataclass
class RegressionTask:
    """Supervised task y = f*(x) + noise; f_star is kept for synthetic risk."""

    X: np.ndarray
    y: np.ndarray
    f_star: Optional[Callable[[np.ndarray], np.ndarray]] = None
    noise_sigma: float = 0.0
    M: Optional[float] = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if len(self.X) != len(self.y) or len(self.y) < 1:
            raise ValueError("X and y must have matching positive length")
        if self.noise_sigma < 0:
            raise ValueError("noise level must be nonnegative")
        if self.M is not None and not self.M > 0:
            raise ValueError("truncation bound M must be positive")


@dataclass
class FlowPredictor:
    """Closed-form kernel gradient-flow regressor at time t.

    Holds the eigendecomposition of the training Gram matrix plus the cross
    kernel against new points; predictors at other times share both via
    at_time (cheap copies).
    """

    cross: Callable[[np.ndarray, np.ndarray], np.ndarray]
    X: np.ndarray
    y: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    t: float = 0.0
    _proj_y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.t < 0:
            raise ValueError("time must be nonnegative")
        self.eigvals = np.asarray(self.eigvals, dtype=float)
        # strict positive definiteness holds for the kernels used here, so
        # eigenvalues within roundoff of zero are eigensolver noise: clamp them
        # to the noise floor; genuine negativity beyond it is a contract error
        floor = 1e-12 * float(np.sum(np.abs(self.eigvals)))
        if (self.eigvals < -floor).any() or floor == 0.0:
            raise ValueError("Gram not PD: flow requires strictly positive eigenvalues")
        self.eigvals = np.maximum(self.eigvals, floor)
        self._proj_y = self.eigvecs.T @ self.y

    @property
    def n(self) -> int:
        return len(self.y)

    @classmethod
    def from_gram(cls, K: KernelMatrix, cross, X, y, t: float = 0.0) -> "FlowPredictor":
        vals, vecs = K.eigendecompose()
        return cls(cross=cross, X=X, y=y, eigvals=vals, eigvecs=vecs, t=t)

    @classmethod
    def from_descriptor(cls, desc: NtkDescriptor, task: RegressionTask, t: float = 0.0) -> "FlowPredictor":
        K = gram(desc, task.X)
        cross = lambda Z, X: ntk_cross(desc, Z, X)
        return cls.from_gram(K, cross, task.X, task.y, t=t)

    def at_time(self, t: float) -> "FlowPredictor":
        return replace(self, t=float(t))

    def _filter(self, t: Optional[float] = None) -> np.ndarray:
        t = self.t if t is None else t
        return (1.0 - np.exp(-self.eigvals * t / self.n)) / self.eigvals

    def coefficients(self, t: Optional[float] = None) -> np.ndarray:
        """Representer coefficients c with f_t(x) = K(x, X) c."""
        return self.eigvecs @ (self._filter(t) * self._proj_y)

    def predict(self, points, t: Optional[float] = None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.cross(points, self.X) @ self.coefficients(t)

    def train_values(self, t: Optional[float] = None) -> np.ndarray:
        """f_t on the training inputs, via the eigenbasis (no cross kernel)."""
        t = self.t if t is None else t
        lam = self.eigvals
        filt = 1.0 - np.exp(-lam * t / self.n)
        return self.eigvecs @ (filt * self._proj_y)

    def train_residual_norm(self, t: Optional[float] = None) -> float:
        """||f_t(X) - y|| = ||exp(-K t / n) y||, exactly in the eigenbasis."""
        t = self.t if t is None else t
        damp = np.exp(-self.eigvals * t / self.n)
        return float(np.linalg.norm(damp * self._proj_y))


def flow_predict(pred: FlowPredictor, x) -> float:
    """Pointwise evaluation of the flow predictor at its stored time."""
    return float(pred.predict(np.atleast_2d(x))[0])


def optimal_stopping_time(n: int, d: int, s: float, c: float = 1.0) -> float:
    """Early-stopping time c * n^{(d+1)/(s(d+1)+d)} balancing bias and variance."""
    if n < 1:
        raise ValueError("n must be positive")
    if c <= 0:
        raise ValueError("scale must be positive")
    if not s > 1.0 / (d + 1):
        raise ValueError("smoothness below threshold: requires s > 1/(d+1)")
    return c * n ** ((d + 1) / (s * (d + 1) + d))


def risk_exponent(d: int, s: float) -> float:
    """Predicted decay exponent of the squared risk: s(d+1)/(s(d+1)+d)."""
    return s * (d + 1) / (s * (d + 1) + d)


def truncate(a: float, M: float):
    """Clamp to [-M, M] preserving sign: min(|a|, M) * sgn(a)."""
    if not M > 0:
        raise ValueError("truncation bound M must be positive")
    return np.clip(a, -M, M) if isinstance(a, np.ndarray) else float(np.clip(a, -M, M))


@dataclass
class TruncatedPredictor:
    """Flow predictor composed with the truncation clamp at level M."""

    base: FlowPredictor
    M: float

    def predict(self, points) -> np.ndarray:
        return truncate(self.base.predict(points), self.M)

    def __call__(self, points) -> np.ndarray:
        return self.predict(points)


def stopping_time_grid(n: int, Q: float = 2.0) -> list[float]:
    """Geometric candidate grid {1, Q, ..., Q^floor(log_Q n)}."""
    if not Q > 1:
        raise ValueError("Q must exceed 1")
    kmax = int(math.floor(math.log(n) / math.log(Q)))
    return [Q ** k for k in range(kmax + 1)]


def cv_select_stopping(pred: FlowPredictor, candidates: Sequence[float],
                       holdout: tuple[np.ndarray, np.ndarray], M: float
                       ) -> tuple[float, TruncatedPredictor]:
    """Pick the stopping time minimizing truncated squared error on the holdout.

    Ties resolve to the smallest candidate time (strongest regularization);
    the returned predictor applies the truncation clamp.
    """
    Xh, yh = holdout
    Xh = np.atleast_2d(np.asarray(Xh, dtype=float))
    yh = np.asarray(yh, dtype=float).ravel()
    if len(yh) == 0:
        raise ValueError("holdout must be nonempty")
    cands = sorted(float(t) for t in candidates)
    if not cands:
        raise ValueError("candidate set must be nonempty")
    Kh = pred.cross(Xh, pred.X)
    losses = []
    for t in cands:
        vals = truncate(Kh @ pred.coefficients(t), M)
        losses.append(float(np.sum((vals - yh) ** 2)))
    best = int(np.argmin(losses))
    t_cv = cands[best]
    return t_cv, TruncatedPredictor(base=pred.at_time(t_cv), M=M)


def cv_slack_term(M: float, n_candidates: int, n_holdout: int, delta: float = 0.1) -> float:
    """Additive slack sqrt(160 M^2 ln(2 |T|/delta) / n_holdout) of the CV guarantee."""
    return math.sqrt(160.0 * M * M * math.log(2 * n_candidates / delta) / n_holdout)


def l2_risk(predictor, f_star, dist: SampleDistribution, n_mc: int, seed: int) -> float:
    """Monte Carlo mean squared error over fresh draws; deterministic given seed."""
    pts = sample(dist.with_seed(seed), n_mc)
    pred = predictor.predict(pts) if hasattr(predictor, "predict") else predictor(pts)
    return float(np.mean((np.asarray(pred).ravel() - np.asarray(f_star(pts)).ravel()) ** 2))


def sup_risk(predictor, f_star, grid) -> float:
    """Squared sup gap max_i |f_hat(g_i) - f*(g_i)|^2 over a supplied grid."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    pred = predictor.predict(grid) if hasattr(predictor, "predict") else predictor(grid)
    gap = np.abs(np.asarray(pred).ravel() - np.asarray(f_star(grid)).ravel())
    return float(gap.max() ** 2)
