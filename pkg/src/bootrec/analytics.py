"""Threshold functions for the recovery rule.

The crossing recurrence ``A_m = (1-u^4) A_{m-1} + u^4 (1-u^4) A_{m-2}
+ u^8 (1-u^3) A_{m-3}`` has characteristic cubic

    F(u, x) = (x - 1)(x^2 + u^4 x + u^8) + u^11,

whose unique positive root ``beta(u)`` governs the probability of crossing a
strip of height ``h`` when ``u = (1 - p^2)^h``.  Integrating
``g(x) = -log beta(exp(-x))`` over the positive axis gives the constant
``lambda`` in ``p_c ~ sqrt(lambda / log n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import spence

# Below this u, 1 - u**11 rounds to 1 and beta is returned as exactly 1.
U_FLOOR = 1e-16


def poly_F(u, x):
    """``F(u, x)`` in factored form (better conditioned near ``x = 1``)."""
    u4 = u ** 4
    return (x - 1.0) * (x * x + u4 * x + u4 * u4) + u ** 11


def poly_F_expanded(u, x):
    u4 = u ** 4
    return x ** 3 - (1 - u4) * x ** 2 - u4 * (1 - u4) * x - u4 * u4 * (1 - u ** 3)


def _deficit(u: np.ndarray, u11: np.ndarray) -> np.ndarray:
    """``1 - beta(u)`` by bisection on ``d`` in ``[0, u^11]``.

    With ``x = 1 - d`` the cubic reads ``u^11 - d((1-d)^2 + u^4(1-d) + u^8)``,
    positive at ``d = 0`` and negative at ``d = u^11``.  Working in ``d``
    keeps full relative precision when ``beta`` is close to 1.
    """
    u4 = u ** 4
    lo = np.zeros_like(u)
    hi = np.minimum(u11, 1.0)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        x = 1.0 - mid
        val = u11 - mid * (x * x + u4 * x + u4 * u4)
        pos = val > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


def _beta_deficit(u, u11=None):
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
        raise ValueError("u must lie in [0, 1]")
    if u11 is None:
        u11 = u ** 11
    u11 = np.asarray(u11, dtype=float)
    d = np.zeros_like(u)
    live = u >= U_FLOOR
    if np.any(live):
        d[live] = _deficit(u[live], u11[live])
    d[u == 1.0] = 1.0
    return d


def beta_deficit(u):
    """``1 - beta(u)`` without the rounding of ``beta`` to 1 for small ``u``."""
    d = _beta_deficit(u)
    return float(d) if d.ndim == 0 else d


def beta(u):
    """Largest real root of ``F(u, .)``; accepts scalars or arrays."""
    d = _beta_deficit(u)
    out = 1.0 - d
    return float(out) if out.ndim == 0 else out


def g(x):
    """``-log beta(exp(-x))`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("g is defined for x > 0 only")
    d = _beta_deficit(np.exp(-x), np.exp(-11.0 * x))
    out = -np.log1p(-d)
    return float(out) if out.ndim == 0 else out


def envelope_integral(a: float, b: float = math.inf) -> float:
    """``int_a^b -log(1 - exp(-11 x)) dx``, an upper bound for ``int_a^b g``.

    Equals ``(Li2(exp(-11 a)) - Li2(exp(-11 b))) / 11``.
    """

    def li2(y: float) -> float:
        return float(spence(1.0 - y))

    top = li2(math.exp(-11.0 * a)) if a > 0 else math.pi ** 2 / 6
    bottom = 0.0 if math.isinf(b) else li2(math.exp(-11.0 * b))
    return (top - bottom) / 11.0


@dataclass(frozen=True)
class Quadrature:
    value: float
    error: float
    nodes: int


def _certified_integral(a: float, b: float, tol: float, max_nodes: int) -> Quadrature:
    """Integrate the convex function ``g`` over ``[a, b]`` with a proven bound.

    On each cell the midpoint rule underestimates and the trapezoid rule
    overestimates a convex integrand, so the Simpson combination ``(2M+T)/3``
    is within ``2(T-M)/3`` of the exact cell integral.  Cells are split in
    ``log x`` until the summed bound meets ``tol``.
    """
    if b <= a:
        return Quadrature(0.0, 0.0, 0)
    edges = np.exp(np.linspace(math.log(a), math.log(b), 65))
    edges[0], edges[-1] = a, b
    gv = g(edges)
    lefts, rights = edges[:-1], edges[1:]
    gl, gr = gv[:-1], gv[1:]
    nodes = len(edges)
    done_val = 0.0
    done_err = 0.0
    while True:
        mids = 0.5 * (lefts + rights)
        gm = g(mids)
        nodes += len(mids)
        w = rights - lefts
        trap = 0.5 * (gl + gr) * w
        midp = gm * w
        err = np.maximum(2.0 * (trap - midp) / 3.0, 0.0)
        val = (2.0 * midp + trap) / 3.0
        total_err = done_err + err.sum()
        if total_err <= tol:
            return Quadrature(float(done_val + val.sum()), float(total_err), nodes)
        if nodes > max_nodes:
            raise RuntimeError(
                f"quadrature budget of {max_nodes} nodes exhausted "
                f"(error bound {total_err:.3g} > {tol:.3g})")
        # accept the small cells, split the rest at their midpoints
        order = np.argsort(err)
        share = np.cumsum(err[order])
        keep = np.zeros(len(err), dtype=bool)
        keep[order[share <= 0.25 * (tol - done_err)]] = True
        done_val += val[keep].sum()
        done_err += err[keep].sum()
        split = ~keep
        lefts, rights, gl, gr, gm = lefts[split], rights[split], gl[split], gr[split], gm[split]
        mids = 0.5 * (lefts + rights)
        lefts, rights = np.concatenate([lefts, mids]), np.concatenate([mids, rights])
        gl, gr = np.concatenate([gl, gm]), np.concatenate([gm, gr])


def _head_cut(budget: float, start: float = 1e-6) -> float:
    a = start
    while envelope_integral(0.0, a) > budget:
        a /= 4.0
    return a


def lambda_with_error(abs_tol: float = 1e-8, max_nodes: int = 2_000_000) -> Quadrature:
    """``int_0^inf g`` with a certified absolute error bound.

    The head ``[0, a]`` and tail ``[K, inf)`` are bracketed between 0 and the
    envelope integral and counted at the midpoint of that bracket.
    """
    if not abs_tol > 0:
        raise ValueError("abs_tol must be positive")
    a = _head_cut(abs_tol / 4.0)
    K = 8.0
    head = envelope_integral(0.0, a)
    tail = envelope_integral(K)
    body = _certified_integral(a, K, abs_tol / 2.0, max_nodes)
    return Quadrature(body.value + 0.5 * (head + tail), body.error + 0.5 * (head + tail),
                      body.nodes)


def lambda_(abs_tol: float = 1e-8) -> float:
    return lambda_with_error(abs_tol).value


def lambda_interval(B: float, abs_tol: float = 1e-10) -> float:
    """``int_{1/B}^{B} g``."""
    if B < 1:
        raise ValueError("B must be at least 1")
    if B == 1:
        return 0.0
    upper = min(B, 8.0)
    body = _certified_integral(1.0 / B, upper, abs_tol, 2_000_000).value
    if B > upper:
        body += 0.5 * envelope_integral(upper, B)
    return body


@dataclass(frozen=True)
class CrossingSequence:
    """``A_0 .. A_m`` and the normalised ``a_m = A_m / beta^m``.

    ``A_m`` underflows for large ``m`` when ``beta`` is small; ``a_m`` obeys
    a recurrence with coefficients summing to one and stays in
    ``[1 - u^8, 1 / beta]``.
    """

    u: float
    values: np.ndarray = field(repr=False)
    normalised: np.ndarray = field(repr=False)

    @cached_property
    def beta(self) -> float:
        return beta(self.u)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, m: int) -> float:
        return float(self.values[m])


def crossing_sequence(u: float, m_max: int) -> CrossingSequence:
    if not 0 < u < 1:
        raise ValueError("u must lie strictly between 0 and 1")
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    u4 = u ** 4
    c1, c2, c3 = 1 - u4, u4 * (1 - u4), u4 * u4 * (1 - u ** 3)
    b = beta(u)
    n1, n2, n3 = c1 / b, c2 / b ** 2, c3 / b ** 3
    A = np.empty(max(m_max + 1, 3))
    a = np.empty_like(A)
    A[:3] = 1.0, 1.0, 1 - u4 * u4
    a[:3] = A[0], A[1] / b, A[2] / b ** 2
    for m in range(3, len(A)):
        A[m] = c1 * A[m - 1] + c2 * A[m - 2] + c3 * A[m - 3]
        a[m] = n1 * a[m - 1] + n2 * a[m - 2] + n3 * a[m - 3]
    return CrossingSequence(u, A[:m_max + 1], a[:m_max + 1])


_LAMBDA: float | None = None


def lambda_value() -> float:
    """Cached high-precision ``lambda``."""
    global _LAMBDA
    if _LAMBDA is None:
        _LAMBDA = lambda_(1e-9)
    return _LAMBDA


def threshold_p(n: float, epsilon: float = 0.0, lam: float | None = None) -> float:
    """``sqrt((lambda + epsilon) / log n)`` clamped to ``[0, 1]``."""
    if not n > 1:
        raise ValueError("n must exceed 1")
    lam = lambda_value() if lam is None else lam
    val = (lam + epsilon) / math.log(n)
    return min(1.0, math.sqrt(max(val, 0.0)))


def q_of_p(p: float) -> float:
    return math.sqrt(-math.log1p(-p * p))


@dataclass(frozen=True)
class AnalyticContext:
    p: float
    h: int = 1

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie strictly between 0 and 1")
        if self.h < 1:
            raise ValueError("h must be at least 1")

    @property
    def q(self) -> float:
        return q_of_p(self.p)

    @property
    def u(self) -> float:
        return (1 - self.p ** 2) ** self.h

    @property
    def beta(self) -> float:
        return beta(self.u)

    @property
    def g(self) -> float:
        """``g(h q^2)``, so that ``beta = exp(-g)``."""
        return g(self.h * self.q ** 2)

    def crossing(self, m_max: int) -> CrossingSequence:
        return crossing_sequence(self.u, m_max)


__all__ = [
    "poly_F", "poly_F_expanded", "beta", "beta_deficit", "g", "envelope_integral", "lambda_", "lambda_with_error",
    "lambda_interval", "lambda_value", "crossing_sequence", "CrossingSequence", "threshold_p",
    "q_of_p", "AnalyticContext", "Quadrature",
]
