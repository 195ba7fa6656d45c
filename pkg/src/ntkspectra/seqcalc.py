"""Sequence calculus: forward differences, tail sums, Cesaro means, left extrapolation.

All operators act on finite prefixes of infinite sequences and are exact on
integer inputs (no floating-point arithmetic is introduced unless the input
already carries floats). This exactness is what the identity checks in the
test suite rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

Number = Union[int, float]

# Relative slack when testing p-monotonicity of float-valued sequences; integer
# sequences are checked exactly.
_MONOTONE_RTOL = 1e-12


def binom_a(k: int, p: int) -> Number:
    """Cesaro binomial weight A_k^p = C(k+p, k).

    Exact integer for k + p <= 60; multiplicative recurrence in floating
    point above that (overflow-safe).
    """
    if k < 0 or p < 0:
        raise ValueError("binom_a requires k >= 0 and p >= 0")
    if k + p <= 60:
        return math.comb(k + p, k)
    out = 1.0
    for j in range(1, p + 1):
        out *= (k + j) / j
    return out


@dataclass(frozen=True)
class TailModel:
    """Declared analytic tail of a sequence, used only by the condition checker.

    kinds: 'power' mu_n ~ c0 * n^-beta; 'exponential' mu_n ~ c0 * exp(-c1 * n^beta);
    'log_power' mu_n ~ c0 * n^-beta * (ln n)^p.
    """

    kind: str
    c0: float = 1.0
    beta: float = 0.0
    c1: float = 1.0
    p: float = 0.0

    def validate(self, d: int) -> None:
        """Check the admissibility ranges against the ambient dimension d."""
        if self.c0 <= 0:
            raise ValueError("tail model requires c0 > 0")
        if self.kind == "power":
            if not self.beta > d:
                raise ValueError(f"power-law tail requires beta > d (got beta={self.beta}, d={d})")
        elif self.kind == "exponential":
            if not (self.c1 > 0 and self.beta > 0):
                raise ValueError("exponential tail requires c1 > 0 and beta > 0")
        elif self.kind == "log_power":
            if not (self.beta > d or (self.beta == d and self.p > 1)):
                raise ValueError("log-corrected tail requires beta > d, or beta = d with p > 1")
        else:
            raise ValueError(f"unknown tail model kind: {self.kind!r}")


@dataclass(frozen=True)
class Seq:
    """Finite prefix of an infinite sequence, indexed from 0.

    support, when given, declares that values[k] = 0 for all k >= support
    (within and beyond the stored prefix); it is required by tail sums.
    A declared tail_model is validated against the supplied dimension d.
    """

    values: tuple
    tail_model: Optional[TailModel] = None
    support: Optional[int] = None
    d: Optional[int] = None

    def __init__(self, values: Sequence[Number], tail_model: Optional[TailModel] = None,
                 support: Optional[int] = None, d: Optional[int] = None):
        vals = tuple(values)
        if len(vals) < 1:
            raise ValueError("Seq requires at least one value")
        if tail_model is not None:
            if d is None:
                raise ValueError("a tail model must be validated against a dimension d")
            tail_model.validate(d)
        if support is not None:
            if support < 0:
                raise ValueError("support must be nonnegative")
            if any(v != 0 for v in vals[support:]):
                raise ValueError("values beyond the declared support must be zero")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail_model", tail_model)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "d", d)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]


def _as_values(a: Union[Seq, Sequence[Number]]) -> tuple:
    return a.values if isinstance(a, Seq) else tuple(a)


def forward_difference(a: Union[Seq, Sequence[Number]], p: int) -> Seq:
    """p-th forward difference, by p-fold application of (Da)_k = a_k - a_{k+1}.

    The result is p entries shorter than the input.
    """
    if p < 0:
        raise ValueError("difference order must be nonnegative")
    vals = list(_as_values(a))
    if len(vals) <= p:
        raise ValueError("insufficient sequence length")
    for _ in range(p):
        vals = [vals[k] - vals[k + 1] for k in range(len(vals) - 1)]
    return Seq(vals)


def tail_sum(a: Union[Seq, Sequence[Number]], p: int, support: Optional[int] = None) -> Seq:
    """p-fold tail sum S^p a, requiring a finitely supported input.

    The support comes from the Seq itself or the explicit argument. Entries
    from the support index on are zero, which keeps all tail sums finite:
    (Sa)_k = sum_{r >= k} a_r.
    """
    if p < 0:
        raise ValueError("tail-sum order must be nonnegative")
    if isinstance(a, Seq) and support is None:
        support = a.support
    if support is None:
        raise ValueError("tail sum requires finite support")
    vals = list(_as_values(a))
    if support > len(vals):
        raise ValueError("declared support exceeds stored prefix")
    if any(v != 0 for v in vals[support:]):
        raise ValueError("values beyond the declared support must be zero")
    for _ in range(p):
        acc = 0
        out = [0] * len(vals)
        for k in range(support - 1, -1, -1):
            acc = acc + vals[k]
            out[k] = acc
        vals = out
    return Seq(vals, support=support)


def cesaro_weighted_sum(a: Union[Seq, Sequence[Number]], p: int, n: int) -> Number:
    """Unnormalized Cesaro sum  sum_{k<=n} A_{n-k}^p a_k  (exact on integers)."""
    vals = _as_values(a)
    if not 0 <= n < len(vals):
        raise ValueError("index out of range")
    return sum(binom_a(n - k, p) * vals[k] for k in range(n + 1))


def cesaro_mean(a: Union[Seq, Sequence[Number]], p: int, n: int) -> float:
    """Cesaro mean s_n^p = (1/A_n^p) sum_{k<=n} A_{n-k}^p a_k.

    With A^0 = 1 everywhere, s_n^0 is the plain partial sum of the prefix.
    """
    return cesaro_weighted_sum(a, p, n) / binom_a(n, p)


def _check_p_monotone(vals: Sequence[Number], p: int, what: str) -> None:
    diffs = forward_difference(vals, p).values
    exact = all(isinstance(v, int) for v in vals)
    scale = max((abs(v) for v in vals), default=0)
    tol = 0 if exact else _MONOTONE_RTOL * scale
    for k, dv in enumerate(diffs):
        if dv < -tol:
            raise ValueError(f"{what}: input not p-monotone (Delta^{p} negative at index {k})")


@dataclass(frozen=True)
class ExtrapolationResult:
    """Left extrapolation of a p-monotone sequence below a pivot index.

    tilde_mu agrees with the input from the pivot on and is dominated by it
    below; residual = input - tilde_mu vanishes from the pivot on. Both parts
    keep nonnegative p-th differences. leading is tilde_mu[0].
    """

    tilde_mu: Seq
    residual: Seq
    leading: Number
    order_p: int
    pivot_N: int


def left_extrapolate(mu: Union[Seq, Sequence[Number]], p: int, N: int) -> ExtrapolationResult:
    """Replace mu below index N by the extension with vanishing p-th differences.

    Reconstruction anchors the difference table at the pivot: Delta^p of the
    extrapolant is zeroed for k < N and kept for k >= N, then lower-order
    differences are summed right to left. The closed form of the leading term
    is sum_{l<p} A_{N-1}^l Delta^l mu_N (equals mu_0 when N = 0).
    """
    if p < 1:
        raise ValueError("extrapolation order must be positive")
    vals = _as_values(mu)
    if N < 0:
        raise ValueError("pivot must be nonnegative")
    if N + p >= len(vals):
        raise ValueError("insufficient sequence length for pivot and order")
    _check_p_monotone(vals, p, "left_extrapolate")

    # rows[j] holds Delta^j tilde_mu on indices 0..len-1-j; row p is given,
    # rows below are rebuilt from the anchor values Delta^j mu at k >= N.
    rows = [None] * (p + 1)
    dp = forward_difference(vals, p).values
    rows[p] = [0 if k < N else dp[k] for k in range(len(dp))]
    for j in range(p - 1, -1, -1):
        dj = forward_difference(vals, j).values
        row = [0] * len(dj)
        for k in range(len(dj) - 1, -1, -1):
            if k >= N:
                row[k] = dj[k]
            else:
                row[k] = row[k + 1] + rows[j + 1][k]
        rows[j] = row

    tilde = rows[0]
    resid = [v - tv for v, tv in zip(vals, tilde)]
    return ExtrapolationResult(
        tilde_mu=Seq(tilde),
        residual=Seq(resid),
        leading=tilde[0],
        order_p=p,
        pivot_N=N,
    )


def extrapolation_leading(mu: Union[Seq, Sequence[Number]], p: int, N: int) -> Number:
    """Closed form of the extrapolated leading term: sum_{l<p} A_{N-1}^l Delta^l mu_N."""
    vals = _as_values(mu)
    if N + p >= len(vals):
        raise ValueError("insufficient sequence length for pivot and order")
    if N == 0:
        return vals[0]
    total = 0
    for l in range(p):
        total = total + binom_a(N - 1, l) * forward_difference(vals, l)[N]
    return total


@dataclass
class EdrConditionReport:
    """Outcome of the decay-rate condition checks on a stored prefix.

    monotone_ok / bound_ok are conditions on the (d+1)-differences and on the
    weighted difference sum against D * mu_n; ratio_stats is a heuristic probe
    of the level-count regularity N(c*eps) = Theta(N(eps)), which a finite
    prefix cannot certify.
    """

    d: int
    q: int
    D: float
    n_checked: int
    monotone_ok: bool
    monotone_first_violation: Optional[int]
    bound_ok: bool
    bound_first_violation: Optional[int]
    ratio_stats: dict = field(default_factory=dict)
    tail_model_admissible: Optional[bool] = None

    @property
    def all_ok(self) -> bool:
        return self.monotone_ok and self.bound_ok


def check_edr_condition(mu: Union[Seq, Sequence[Number]], d: int, q: int, D: float) -> EdrConditionReport:
    """Check the decay conditions on the stored prefix of mu.

    (b) Delta^{d+1} mu_n >= 0 wherever computable;
    (c) sum_{l<=d} A_{qn}^l Delta^l mu_{qn} <= D mu_n for n up to the largest
        index the prefix supports;
    (a) reported only as a heuristic: ratios N(eps)/N(2 eps) on a grid of
        levels taken from the stored values.
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    vals = _as_values(mu)
    if len(vals) < d + 2:
        raise ValueError("insufficient sequence length")

    dlast = forward_difference(vals, d + 1).values
    monotone_first = next((k for k, v in enumerate(dlast) if v < 0), None)

    diffs = [forward_difference(vals, l).values for l in range(d + 1)]
    n_max = (len(vals) - 1 - d) // q
    bound_first = None
    for n in range(n_max + 1):
        nt = q * n
        lhs = sum(binom_a(nt, l) * diffs[l][nt] for l in range(d + 1))
        if lhs > D * vals[n]:
            bound_first = n
            break

    # Heuristic level-count ratios on a geometric grid of eps values.
    positive = [v for v in vals if v > 0]
    ratio_stats: dict = {}
    if len(positive) >= 4:
        ratios = []
        for eps in positive[len(positive) // 2:-1]:
            n_eps = max((i for i, v in enumerate(vals) if v > eps), default=0)
            n_2eps = max((i for i, v in enumerate(vals) if v > 2 * eps), default=0)
            if n_2eps > 0:
                ratios.append(n_eps / n_2eps)
        if ratios:
            ratio_stats = {
                "ratio_min": min(ratios),
                "ratio_max": max(ratios),
                "levels": len(ratios),
                "note": "heuristic prefix probe; the limit statement is not decidable from a prefix",
            }

    tail_ok = None
    if isinstance(mu, Seq) and mu.tail_model is not None:
        try:
            mu.tail_model.validate(d)
            tail_ok = True
        except ValueError:
            tail_ok = False

    return EdrConditionReport(
        d=d, q=q, D=D,
        n_checked=n_max,
        monotone_ok=monotone_first is None,
        monotone_first_violation=monotone_first,
        bound_ok=bound_first is None,
        bound_first_violation=bound_first,
        ratio_stats=ratio_stats,
        tail_model_admissible=tail_ok,
    )
