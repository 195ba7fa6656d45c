"""Mirrored fully-connected ReLU network: init, training, tangent-kernel diagnostics.

Two parity copies of the same architecture share identical weights at
initialization and are subtracted at the output, so the network function is
exactly zero at time zero. Training is full-batch gradient descent on the
halved mean squared error; the wall-clock coordinate of step k is t = k * eta,
matching the 1/n time convention of the kernel flow.

Tangent-kernel entries are assembled from the per-layer rank-1 gradient
factors (backward vectors times forward activations), which keeps memory at
O(width) per probe point instead of materializing flattened gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError
from .flow import FlowPredictor
from .kernels import NtkDescriptor, ntk_cross

# ReLU subgradient at 0 is taken as 0 (pattern 1{z > 0}); the choice is
# measure-zero and irrelevant in expectation.

MAX_PROBES = 625


@dataclass
class NetworkState:
    """All weights of the two-parity network plus the initialization snapshot.

    W[p][l] has shape (m_{l+1}, m_l) with m_0 = d+1 (the appended-one input
    coordinate absorbs the first-layer bias) and m_{L+1} = 1. The snapshot is
    shared between parities because they are identical at time zero.
    """

    d: int
    L: int
    widths: tuple
    seed: int
    W: list
    b: list
    init_W: list
    init_b: float

    @property
    def m_min(self) -> int:
        return min(self.widths)

    def layer_dims(self) -> list[int]:
        return [self.d + 1] + list(self.widths) + [1]


def init_network(d: int, L: int, widths, seed: int) -> NetworkState:
    """Draw parity-1 weights i.i.d. standard normal and mirror into parity 2."""
    if L < 1:
        raise ValueError("at least one hidden layer is required")
    widths = tuple([widths] * L) if isinstance(widths, int) else tuple(widths)
    if len(widths) != L or any(m < 1 for m in widths):
        raise ValueError("one positive width per hidden layer is required")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dims = [d + 1] + list(widths) + [1]
    W1 = [rng.standard_normal((dims[l + 1], dims[l])) for l in range(L + 1)]
    b = float(rng.standard_normal())
    state = NetworkState(
        d=d, L=L, widths=widths, seed=seed,
        W=[W1, [w.copy() for w in W1]],
        b=[b, b],
        init_W=[w.copy() for w in W1],
        init_b=b,
    )
    probes = rng.standard_normal((5, d))
    if np.abs(forward(state, probes)).max() > 1e-10:
        raise AssertionError("mirror initialization failed to cancel the output")
    return state


def _forward_parity(state: NetworkState, p: int, Xt: np.ndarray):
    """Activations and patterns for one parity; Xt is (d+1, n)."""
    alphas = [Xt]
    patterns = [None]
    A = Xt
    for l in range(1, state.L + 1):
        m_l = state.widths[l - 1]
        pre = math.sqrt(2.0 / m_l) * (state.W[p][l - 1] @ A)
        D = pre > 0
        A = np.where(D, pre, 0.0)
        alphas.append(A)
        patterns.append(D)
    g = (state.W[p][state.L] @ A).ravel() + state.b[p]
    return g, alphas, patterns


def _input_lift(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))]).T


def forward(state: NetworkState, X, internals: bool = False):
    """Network output on a batch; optionally the per-parity activations."""
    Xt = _input_lift(X)
    g = [None, None]
    ints = [None, None]
    for p in (0, 1):
        g[p], alphas, patterns = _forward_parity(state, p, Xt)
        ints[p] = (alphas, patterns)
    f = (math.sqrt(2.0) / 2.0) * (g[0] - g[1])
    if internals:
        return f, g, ints
    return f


def tangent_features(state: NetworkState, X):
    """Per parity: (gammas, alphas) rank-1 gradient factors for every layer.

    gamma_L = 1 and gamma_l = sqrt(2/m_{l+1}) D_{l+1} W_{l+1}^T gamma_{l+1};
    the gradient of the parity output with respect to W_l is gamma_l alpha_l^T.
    """
    Xt = _input_lift(X)
    feats = []
    for p in (0, 1):
        _, alphas, patterns = _forward_parity(state, p, Xt)
        n = Xt.shape[1]
        gammas = [None] * (state.L + 1)
        gammas[state.L] = np.ones((1, n))
        for l in range(state.L - 1, -1, -1):
            back = state.W[p][l + 1].T @ gammas[l + 1]
            gammas[l] = math.sqrt(2.0 / state.widths[l]) * np.where(patterns[l + 1], back, 0.0)
        feats.append((gammas, alphas))
    return feats


def tangent_kernel_matrix(state: NetworkState, X, Z=None) -> np.ndarray:
    """Tangent kernel on batches: average of the two parity kernels.

    Each parity kernel is sum_l <gamma_l(x), gamma_l(z)> <alpha_l(x), alpha_l(z)>
    plus the constant 1 from the output-bias gradient.
    """
    featX = tangent_features(state, X)
    featZ = featX if Z is None else tangent_features(state, Z)
    nx = featX[0][1][0].shape[1]
    nz = featZ[0][1][0].shape[1]
    K = np.zeros((nx, nz))
    for p in (0, 1):
        gX, aX = featX[p]
        gZ, aZ = featZ[p]
        Kp = np.ones((nx, nz))
        for l in range(state.L + 1):
            Kp += (gX[l].T @ gZ[l]) * (aX[l].T @ aZ[l])
        K += 0.5 * Kp
    return K


def tangent_kernel(state: NetworkState, x, xp) -> float:
    """Tangent-kernel entry at a pair of points."""
    return float(tangent_kernel_matrix(state, np.atleast_2d(x), np.atleast_2d(xp))[0, 0])


def gradient_step(state: NetworkState, X, y, eta: float) -> float:
    """One full-batch descent step on (1/2n) sum (f - y)^2; returns ||f - y||."""
    Xt = _input_lift(X)
    y = np.asarray(y, dtype=float).ravel()
    n = len(y)
    fs = []
    cache = []
    for p in (0, 1):
        g, alphas, patterns = _forward_parity(state, p, Xt)
        fs.append(g)
        cache.append((alphas, patterns))
    u = (math.sqrt(2.0) / 2.0) * (fs[0] - fs[1]) - y
    for p in (0, 1):
        alphas, patterns = cache[p]
        sign = 1.0 if p == 0 else -1.0
        c = sign * (math.sqrt(2.0) / 2.0) * u / n
        gammas = [None] * (state.L + 1)
        gammas[state.L] = np.ones((1, n))
        for l in range(state.L - 1, -1, -1):
            back = state.W[p][l + 1].T @ gammas[l + 1]
            gammas[l] = math.sqrt(2.0 / state.widths[l]) * np.where(patterns[l + 1], back, 0.0)
        for l in range(state.L + 1):
            state.W[p][l] -= eta * ((gammas[l] * c) @ alphas[l].T)
        state.b[p] -= eta * float(c.sum())
    return float(np.linalg.norm(u))


def weight_drift(state: NetworkState) -> np.ndarray:
    """Frobenius drift from initialization, per layer (max over parities)."""
    out = np.empty(state.L + 1)
    for l in range(state.L + 1):
        out[l] = max(np.linalg.norm(state.W[p][l] - state.init_W[l]) for p in (0, 1))
    return out


def probe_grid(d: int, points_per_axis: int = 5, seed: int = 0) -> np.ndarray:
    """Tensor grid on [-1, 1]^d; above the probe cap a seeded uniform sample."""
    if points_per_axis ** d <= MAX_PROBES:
        axes = [np.linspace(-1.0, 1.0, points_per_axis)] * d
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, d)
    rng = np.random.default_rng(np.random.SeedSequence([seed, d]))
    return rng.uniform(-1.0, 1.0, size=(MAX_PROBES, d))


@dataclass
class ProbeConfig:
    """What to log during training and how often."""

    log_every: int = 10
    probe_points: Optional[np.ndarray] = None
    ntk_desc: Optional[NtkDescriptor] = None       # enables kernel-gap logging
    flow: Optional[FlowPredictor] = None           # enables predictor-gap logging
    kernel_gaps: bool = False


@dataclass
class TrainTrace:
    """Quantities logged along training at strictly increasing times."""

    times: list = field(default_factory=list)
    train_residuals: list = field(default_factory=list)
    weight_drifts: list = field(default_factory=list)        # rows: per-layer drift
    kernel_gaps: Optional[list] = None
    predictor_gaps: Optional[list] = None
    probe_points: Optional[np.ndarray] = None
    probe_predictions: Optional[list] = None                  # rows: f^NN on probes

    def drift_matrix(self) -> np.ndarray:
        return np.asarray(self.weight_drifts)


def train(state: NetworkState, X, y, eta: float, n_steps: int,
          probe_config: Optional[ProbeConfig] = None) -> TrainTrace:
    """Full-batch gradient descent with trace logging.

    Aborts with diagnostics if the training residual grows tenfold over a
    100-step stretch (step size too large for the local curvature).
    """
    if eta <= 0:
        raise ValueError("step size must be positive")
    cfg = probe_config or ProbeConfig()
    trace = TrainTrace()
    if cfg.probe_points is not None:
        trace.probe_points = np.atleast_2d(np.asarray(cfg.probe_points, dtype=float))
        trace.probe_predictions = []
        if cfg.flow is not None:
            trace.predictor_gaps = []
        if cfg.kernel_gaps and cfg.ntk_desc is not None:
            trace.kernel_gaps = []
            knt_probe = ntk_cross(cfg.ntk_desc, trace.probe_points, trace.probe_points)
    history = []
    for k in range(1, n_steps + 1):
        # blowups surface as non-finite residuals and abort below; silence the
        # transient overflow warnings they generate
        with np.errstate(over="ignore", invalid="ignore"):
            res = gradient_step(state, X, y, eta)
        history.append(res)
        blown_up = not math.isfinite(res)
        if blown_up or (len(history) > 100 and res > 10.0 * history[-101]):
            reference = history[-101] if len(history) > 100 else history[0]
            raise DivergenceError(
                f"training diverged at step {k}: residual {res:.3e} "
                f"(reference {reference:.3e})",
                diagnostics={
                    "step": k, "eta": eta, "residual": res,
                    "reference_residual": reference,
                    "drift": weight_drift(state).tolist(),
                })
        if k % cfg.log_every == 0 or k == n_steps:
            t = k * eta
            trace.times.append(t)
            trace.train_residuals.append(res)
            trace.weight_drifts.append(weight_drift(state))
            if trace.probe_points is not None:
                fnn = forward(state, trace.probe_points)
                trace.probe_predictions.append(fnn)
                if trace.predictor_gaps is not None:
                    fk = cfg.flow.predict(trace.probe_points, t=t)
                    trace.predictor_gaps.append(float(np.abs(fnn - fk).max()))
                if trace.kernel_gaps is not None:
                    kt = tangent_kernel_matrix(state, trace.probe_points)
                    trace.kernel_gaps.append(float(np.abs(kt - knt_probe).max()))
    return trace


def uniform_gap(trace: TrainTrace, ntk_flow: FlowPredictor, probe_points,
                times: Optional[Sequence[float]] = None) -> float:
    """Max over probe grid and logged times of |f^NN_t - f^NTK_t|."""
    if trace.probe_predictions is None or trace.probe_points is None:
        raise ValueError("trace carries no probe predictions")
    probe_points = np.atleast_2d(np.asarray(probe_points, dtype=float))
    if probe_points.shape != trace.probe_points.shape or \
            not np.allclose(probe_points, trace.probe_points):
        raise ValueError("probe grid does not match the logged trace")
    logged = np.asarray(trace.times)
    wanted = logged if times is None else np.asarray(list(times), dtype=float)
    gap = 0.0
    for t in wanted:
        matches = np.nonzero(np.isclose(logged, t, rtol=1e-12, atol=1e-12))[0]
        if len(matches) == 0:
            raise ValueError(f"time misalignment: t={t} was not logged")
        fnn = trace.probe_predictions[matches[0]]
        fk = ntk_flow.predict(probe_points, t=float(t))
        gap = max(gap, float(np.abs(fnn - fk).max()))
    return gap


def save_checkpoint(state: NetworkState, path) -> None:
    """Persist header (d, L, widths, seed) and row-major weight blocks."""
    arrays = {}
    for p in (0, 1):
        for l in range(state.L + 1):
            arrays[f"W{p}_{l}"] = state.W[p][l]
    for l in range(state.L + 1):
        arrays[f"init_W_{l}"] = state.init_W[l]
    np.savez(
        path,
        d=state.d, L=state.L, widths=np.asarray(state.widths), seed=state.seed,
        b=np.asarray(state.b), init_b=state.init_b, **arrays,
    )


def load_checkpoint(path) -> NetworkState:
    with np.load(path) as data:
        d, L = int(data["d"]), int(data["L"])
        widths = tuple(int(v) for v in data["widths"])
        state = NetworkState(
            d=d, L=L, widths=widths, seed=int(data["seed"]),
            W=[[data[f"W{p}_{l}"].copy() for l in range(L + 1)] for p in (0, 1)],
            b=[float(v) for v in data["b"]],
            init_W=[data[f"init_W_{l}"].copy() for l in range(L + 1)],
            init_b=float(data["init_b"]),
        )
    return state
