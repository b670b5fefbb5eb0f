"""Backward-difference coefficient generation and the implicit one-step flow.

Coefficients come in two flavours: fixed uniform grids (exact rational
weights) and fully variable, possibly complex node sets (divided-difference
products). The implicit step solves the resulting nonlinear equation by
fixed-point iteration with a damped-Newton fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DuplicateEps,
    DuplicateNode,
    NoConvergence,
    OrderOutOfRange,
    SingularJacobian,
    SingularMatrix,
)
from .polyroot import solve_dense

MAX_ORDER = 8

RhsFunction = Callable[[complex, np.ndarray], np.ndarray]


def _as_state(y) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(y, dtype=complex)).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HistoryWindow:
    """p time nodes with their p state vectors, oldest first."""

    times: tuple
    states: tuple

    def __post_init__(self):
        times = tuple(complex(t) for t in self.times)
        states = tuple(_as_state(y) for y in self.states)
        if len(times) != len(states):
            raise ValueError("times and states must have equal length")
        if not 1 <= len(times) <= MAX_ORDER:
            raise ValueError(f"window length must be in [1, {MAX_ORDER}], got {len(times)}")
        for a, b in zip(times, times[1:]):
            if not b.real > a.real:
                raise ValueError("times must be strictly increasing in real part")
        dims = {s.shape for s in states}
        if len(dims) > 1:
            raise ValueError("states must share one shape")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def p(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def advanced(self, t_new: complex, y_new) -> "HistoryWindow":
        """Drop the oldest node and append (t_new, y_new).

        Skips re-validation: shifting a valid window by a forward node
        preserves every invariant.
        """
        win = object.__new__(HistoryWindow)
        object.__setattr__(win, "times", self.times[1:] + (complex(t_new),))
        object.__setattr__(win, "states", self.states[1:] + (_as_state(y_new),))
        return win


@dataclass(frozen=True)
class CoefficientSet:
    """Weights g_0..g_p for one implicit step, with their generating data.

    ``weights[0]`` multiplies the unknown at ``target = nodes[-1] + step``;
    ``weights[j]`` multiplies the j-th newest history value.
    """

    weights: tuple
    step: complex
    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(complex(w) for w in self.weights))
        object.__setattr__(self, "step", complex(self.step))
        object.__setattr__(self, "nodes", tuple(complex(t) for t in self.nodes))
        if len(self.weights) != len(self.nodes) + 1:
            raise ValueError("need exactly one weight per node plus the target weight")
        if self.weights[0] == 0:
            raise ValueError("leading weight must be nonzero")

    @property
    def p(self) -> int:
        return len(self.nodes)

    @property
    def target(self) -> complex:
        return self.nodes[-1] + self.step


@dataclass(frozen=True)
class ImplicitSolveConfig:
    """Stopping rule and strategy for the implicit solve."""

    tol: float = 1e-12
    max_iterations: int = 100
    mode: str = "fixed-point-with-newton-fallback"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.mode not in ("fixed-point-with-newton-fallback", "newton-only"):
            raise ValueError(f"unknown mode {self.mode!r}")


def coeff_fixed(p: int) -> CoefficientSet:
    """Uniform-grid weights of order p, exact rationals evaluated in floats."""
    if not 1 <= p <= MAX_ORDER:
        raise OrderOutOfRange(f"order must be in [1, {MAX_ORDER}], got {p}")
    weights = []
    for i in range(p + 1):
        acc = Fraction(0)
        for j in range(max(1, i), p + 1):
            acc += Fraction(math.comb(j, i), j)
        weights.append(complex((-1) ** i * acc))
    nodes = tuple(complex(-j) for j in range(p, 0, -1))
    return CoefficientSet(tuple(weights), 1.0 + 0j, nodes)


def _check_distinct(points: Sequence[complex]):
    scale = max(1.0, max(abs(t) for t in points))
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if abs(points[i] - points[j]) <= 1e-14 * scale:
                raise DuplicateNode(
                    f"nodes {points[i]} and {points[j]} coincide within 1e-14 relative"
                )


def coeff_variable(times: Sequence[complex], t_new: complex) -> CoefficientSet:
    """Variable-node weights via divided-difference products.

    ``times`` are the p history nodes oldest first; the step is
    ``t_new - times[-1]``. The weights satisfy the order-p moment system
    in the scaled offsets (t_new - t_j)/(t_new - times[-1]).
    """
    times = tuple(complex(t) for t in times)
    t_new = complex(t_new)
    p = len(times)
    if not 1 <= p <= MAX_ORDER:
        raise OrderOutOfRange(f"window length must be in [1, {MAX_ORDER}], got {p}")
    _check_distinct(times + (t_new,))
    # T[k] is the k-th newest point, T[0] the target
    T = (t_new,) + tuple(reversed(times))
    tau = t_new - times[-1]
    weights = []
    for j in range(p + 1):
        acc = 0j
        for m in range(max(1, j), p + 1):
            b = tau
            for l in range(1, m):
                b *= T[0] - T[l]
            c = 1.0 + 0j
            for l in range(0, m + 1):
                if l != j:
                    c /= T[j] - T[l]
            acc += b * c
        weights.append(acc)
    return CoefficientSet(tuple(weights), tau, times)


def g_closed_form(eps: Sequence[complex]) -> tuple:
    """Closed-form weights from the scaled node offsets eps_1..eps_p.

    g_0 is the sum of reciprocals; each g_i is a signed product of offset
    ratios. Matches the dense solve of the moment system for distinct,
    nonzero offsets.
    """
    eps = tuple(complex(e) for e in eps)
    p = len(eps)
    scale = max(abs(e) for e in eps)
    if any(abs(e) <= 1e-14 * max(1.0, scale) for e in eps):
        raise DuplicateEps("offsets must be nonzero")
    for i in range(p):
        for j in range(i + 1, p):
            if abs(eps[i] - eps[j]) <= 1e-14 * max(1.0, scale):
                raise DuplicateEps(f"offsets {eps[i]} and {eps[j]} coincide")
    weights = [sum(1.0 / e for e in eps)]
    sign = (-1) ** p
    for i in range(p):
        prod = 1.0 + 0j
        for j in range(p):
            if j != i:
                prod *= eps[j] / (eps[i] - eps[j])
        weights.append(sign / eps[i] * prod)
    return tuple(weights)


def scaled_offsets(coeffs: CoefficientSet) -> tuple:
    """Offsets eps_j = (target - t_{n-j})/step for j = 1..p, newest first."""
    t_star = coeffs.target
    return tuple((t_star - t) / coeffs.step for t in reversed(coeffs.nodes))


def check_order_conditions(coeffs: CoefficientSet, p: int) -> bool:
    """True iff the weights satisfy the order-p moment sums within 1e-9."""
    if len(coeffs.weights) != p + 1:
        return False
    g = coeffs.weights
    eps = scaled_offsets(coeffs)
    sums = [sum(g)]
    sums.append(sum(e * gj for e, gj in zip(eps, g[1:])) + 1.0)
    for m in range(2, p + 1):
        sums.append(sum(e**m * gj for e, gj in zip(eps, g[1:])))
    for m, s in enumerate(sums):
        magn = sum(abs(e) ** max(m, 1) * abs(gj) for e, gj in zip(eps, g[1:])) + abs(g[0])
        if abs(s) > 1e-9 * max(1.0, magn):
            return False
    return True


def _residual(g, states, tau, rhs, t_new, y):
    hist = sum(gi * s for gi, s in zip(g[1:], reversed(states)))
    return g[0] * y + hist - tau * np.asarray(rhs(t_new, y), dtype=complex)


def _newton(g, states, tau, rhs, t_new, y0, cfg: ImplicitSolveConfig, budget: int):
    y = np.array(y0, dtype=complex)
    d = y.shape[0]
    res = _residual(g, states, tau, rhs, t_new, y)
    for _ in range(budget):
        jac = np.empty((d, d), dtype=complex)
        for i in range(d):
            h = 1e-7 * (1.0 + abs(y[i]))
            yp = y.copy()
            yp[i] += h
            jac[:, i] = (_residual(g, states, tau, rhs, t_new, yp) - res) / h
        try:
            delta = solve_dense(jac, -res)
        except SingularMatrix as exc:
            raise SingularJacobian(str(exc)) from exc
        # halve the step until the residual actually drops
        lam = 1.0
        norm0 = np.max(np.abs(res))
        for _ in range(30):
            y_try = y + lam * delta
            res_try = _residual(g, states, tau, rhs, t_new, y_try)
            if np.max(np.abs(res_try)) < norm0 or lam < 1e-8:
                break
            lam *= 0.5
        y = y + lam * delta
        res = _residual(g, states, tau, rhs, t_new, y)
        if lam * np.max(np.abs(delta)) < cfg.tol:
            return y
    raise NoConvergence(f"newton exhausted {budget} iterations at t={t_new}")


def bdf_step(
    rhs: RhsFunction,
    window: HistoryWindow,
    tau: complex,
    cfg: ImplicitSolveConfig = ImplicitSolveConfig(),
) -> tuple:
    """Advance the window by one implicit step of size ``tau``.

    Returns ``(new_window, y_new)`` where ``new_window`` is the input shifted
    by one node. The fixed-point sweep starts from the newest state and falls
    back to damped Newton on stagnation or divergence.
    """
    tau = complex(tau)
    t_new = window.times[-1] + tau
    if not t_new.real > window.times[-1].real:
        raise ValueError("step must advance the real part of time")
    coeffs = coeff_variable(window.times, t_new)
    g = coeffs.weights
    states = [np.asarray(s, dtype=complex) for s in window.states]
    hist = sum(gi * s for gi, s in zip(g[1:], reversed(states)))

    y = np.array(states[-1], dtype=complex)
    newton_budget = max(1, cfg.max_iterations // 2)
    if cfg.mode == "fixed-point-with-newton-fallback":
        prev_step = None
        g0 = g[0]
        with np.errstate(all="ignore"):
            for _ in range(max(1, cfg.max_iterations - newton_budget)):
                y_new = (tau * np.asarray(rhs(t_new, y), dtype=complex) - hist) / g0
                step = float(np.abs(y_new - y).max())
                if not math.isfinite(step):
                    break
                if step < cfg.tol:
                    return window.advanced(t_new, y_new), y_new
                if prev_step is not None and step > 4.0 * prev_step:
                    break
                prev_step = step
                y = y_new
        y = np.array(states[-1], dtype=complex)
    y = _newton(g, states, tau, rhs, t_new, y, cfg, newton_budget)
    return window.advanced(t_new, y), y
