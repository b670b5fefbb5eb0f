"""The two-jump composed flow: one base step of complex fraction alpha1,
then one of 1 - alpha1, whose real output gains one order of accuracy and
whose imaginary part estimates the local error.

The sub-step fraction is the positive-real-part root of an algebraic
equation in the step ratios; the second-stage weights and the error
constant follow from it in closed form.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bdf_core import (
    HistoryWindow,
    ImplicitSolveConfig,
    RhsFunction,
    bdf_step,
    g_closed_form,
)
from .errors import (
    DegenerateDenominator,
    DegenerateImaginaryPart,
    NoAdmissibleRoot,
    NoConvergence,
    PoleEvaluation,
)
from .polyroot import ComplexPolynomial, find_roots

_SETUP_CACHE: "OrderedDict[tuple, CompositionSetup]" = OrderedDict()
_SETUP_CACHE_MAX = 65536


@dataclass(frozen=True)
class CompositionSetup:
    """Everything one composed step needs, derived from the step ratios."""

    p: int
    ratios: tuple
    alpha1: complex
    alpha2: complex
    eps: tuple
    eps_bar: tuple
    G: tuple
    error_constant: float

    def __post_init__(self):
        if self.alpha1 + self.alpha2 != 1.0:
            raise ValueError("alpha1 + alpha2 must equal 1 as the stored pair")
        if not self.alpha1.real > 0:
            raise ValueError("alpha1 must have positive real part")
        g0 = sum(1.0 / e for e in self.eps)
        cond = self.eps[-1] * self.alpha1**2 + g0 * self.alpha2**2
        if abs(cond) > 1e-9:
            raise ValueError(f"root condition violated: |residual| = {abs(cond):.3e}")
        if abs(sum(self.G)) > 1e-10 or abs(self.G[-1]) > 1e-9:
            raise ValueError("second-stage weights violate their sum/vanishing constraints")


@dataclass(frozen=True)
class ComposedStepOutput:
    """Result of one composed step."""

    y_hat: np.ndarray
    y_real: np.ndarray
    error_estimate_raw: np.ndarray
    error_estimate: float
    intermediate: np.ndarray
    setup: CompositionSetup


def ratios_from_window(window: HistoryWindow, tau: float) -> tuple:
    """Backward node distances scaled by the upcoming step: r_j = (t_{n-1} - t_{n-j}) / tau."""
    t_last = window.times[-1]
    return tuple((t_last - window.times[window.p - j]) / tau for j in range(1, window.p + 1))


def _poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)


def _poly_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(len(a), len(b))
    return np.pad(a, (0, n - len(a))) + np.pad(b, (0, n - len(b)))


def alpha1_polynomial(ratios: Sequence[complex]) -> ComplexPolynomial:
    """Cleared-denominator form of the sub-step fraction equation.

    Multiplying (1-a)^2 * sum_j a/(a+r_j) + a^2 (1 + r_p/a) = 0 by
    prod_j (a+r_j) and deflating the spurious root a = 0 (introduced by
    r_1 = 0) leaves a polynomial of degree p+1 with leading coefficient p+1.
    """
    r = [complex(v) for v in ratios]
    p = len(r)

    def prod_lin(idxs):
        poly = np.array([1.0 + 0j])
        for m in idxs:
            poly = _poly_mul(poly, np.array([r[m], 1.0 + 0j]))
        return poly

    rest = list(range(1, p))
    bracket = prod_lin(rest)
    partials = np.zeros(1, dtype=complex)
    for j in rest:
        partials = _poly_add(partials, prod_lin([m for m in rest if m != j]))
    bracket = _poly_add(bracket, np.concatenate(([0j], partials)))
    first = _poly_mul(np.array([1.0, -2.0, 1.0], dtype=complex), bracket)
    second = _poly_mul(np.array([0.0, r[p - 1], 1.0], dtype=complex), prod_lin(rest))
    return ComplexPolynomial(tuple(_poly_add(first, second)))


def G_coefficients(alpha1: complex, ratios: Sequence[complex]) -> tuple:
    """Second-stage weights G_0..G_{p+1} in closed form.

    Solves the (p+2)-square moment system (Vandermonde rows in the node
    offsets plus a rank-one correction carrying the first jump's leading
    error) by Lagrange inversion, so every weight is a product over node
    offsets. G_0 closes the set through the zero-sum row.
    """
    alpha1 = complex(alpha1)
    r = np.asarray(ratios, dtype=complex)
    p = len(r)
    eps = 1.0 + r / alpha1
    g0 = np.sum(1.0 / eps)
    w = np.concatenate(([1.0 - alpha1], 1.0 + r))  # node offsets; w[0] is the intermediate
    if abs(w[0] * g0 - alpha1) < 1e-12:
        raise DegenerateDenominator(f"|Ebar0*g0 - alpha1| = {abs(w[0]*g0 - alpha1):.3e}")
    kappa = (-alpha1) ** (p + 1) / g0 * np.prod(eps)
    sign = (-1) ** p
    raw = np.empty(p + 1, dtype=complex)
    denom = np.empty(p + 1, dtype=complex)
    for i in range(p + 1):
        num = 1.0 + 0j
        den = w[i]
        for l in range(p + 1):
            if l != i:
                num *= w[l]
                den *= w[i] - w[l]
        if den == 0:
            raise DegenerateDenominator("coincident node offsets")
        raw[i] = -w[0] * sign * num / den
        denom[i] = den
    d0 = 1.0 + kappa / denom[0]
    if abs(d0) < 1e-12:
        raise DegenerateDenominator("corrected leading denominator vanished")
    x = np.empty(p + 1, dtype=complex)
    x[0] = raw[0] / d0
    for i in range(1, p + 1):
        x[i] = raw[i] - kappa * x[0] / denom[i]
    return (complex(-np.sum(x)),) + tuple(complex(v) for v in x)


def solve_alpha1(ratios: Sequence[complex], prev: Optional[complex] = None) -> complex:
    """The admissible sub-step fraction for these ratios.

    Among roots with positive real part, prefers positive imaginary part;
    ties break toward ``prev`` (branch continuity) and then maximal real
    part. Raises NoAdmissibleRoot when every root has Re <= 0.
    """
    roots = find_roots(alpha1_polynomial(ratios))
    admissible = [z for z in roots if z.real > 0.0]
    if not admissible:
        raise NoAdmissibleRoot(f"no positive-real-part root for ratios {tuple(ratios)}")
    upper = [z for z in admissible if z.imag > 0.0]
    pool = upper if upper else admissible
    if prev is not None and len(pool) > 1:
        root = min(pool, key=lambda z: abs(z - prev))
    else:
        root = max(pool, key=lambda z: z.real)
    residual = abs(G_coefficients(root, ratios)[-1])
    if residual > 1e-9:
        raise NoConvergence(f"refined root leaves |G_(p+1)| = {residual:.3e}")
    return root


_GBAR_FORMS = {
    1: (
        lambda a: (a - 1) * (2 * a**2 - 2 * a + 1),
        lambda a: a * (2 * a - 1),
    ),
    2: (
        lambda a: -(a - 1) * (3 * a**3 - a**2 + a + 1),
        lambda a: 2 * (a + 1) * (3 * a**2 - 1),
    ),
    3: (
        lambda a: (a - 1) * (4 * a**4 + 5 * a**3 + a**2 + 6 * a + 2),
        lambda a: 6 * (2 * a + 1) * (a + 2) * (a**2 + a - 1),
    ),
    4: (
        lambda a: -(a - 1) * (5 * a**5 + 19 * a**4 + 19 * a**3 + 19 * a**2 + 28 * a + 6),
        lambda a: 4 * (a + 3) * (5 * a**4 + 20 * a**3 + 15 * a**2 - 10 * a - 6),
    ),
}


def gbar_fixed(p: int, alpha: complex) -> complex:
    """Uniform-grid closed form of the trailing second-stage weight, p = 1..4."""
    if p not in _GBAR_FORMS:
        raise ValueError(f"closed uniform-grid forms exist for p in 1..4, got {p}")
    num, den = _GBAR_FORMS[p]
    alpha = complex(alpha)
    n, d = num(alpha), den(alpha)
    if abs(d) < 1e-12 * max(1.0, abs(n)):
        raise PoleEvaluation(f"denominator {abs(d):.3e} too close to a pole")
    return n / d


def ebar_zero(alpha1: complex) -> complex:
    return 1.0 - alpha1


def error_constant(setup_or_alpha1, ratios: Optional[Sequence[complex]] = None) -> float:
    """Real factor mapping the imaginary part to the local error of the real part.

    Accepts either a CompositionSetup or an explicit (alpha1, ratios) pair.
    """
    if isinstance(setup_or_alpha1, CompositionSetup):
        alpha1 = setup_or_alpha1.alpha1
        ratios = setup_or_alpha1.ratios
    else:
        alpha1 = complex(setup_or_alpha1)
        if ratios is None:
            raise ValueError("ratios required when passing alpha1 directly")
    r = tuple(complex(v) for v in ratios)
    p = len(r)
    eps = tuple(1.0 + rv / alpha1 for rv in r)
    g = g_closed_form(eps)
    g0 = g[0]
    G = G_coefficients(alpha1, r)
    ebar = (ebar_zero(alpha1),) + tuple(1.0 + rv for rv in r)
    acc = sum((G[i + 1] - G[1] / g0 * g[i]) * ebar[i] ** (p + 2) for i in range(p + 1))
    acc += (p + 2) * alpha1 * ebar[0] ** (p + 1)
    curly = (-1) ** (p + 2) / math.factorial(p + 2) * acc
    ratio = curly / G[0]
    if abs(ratio.imag) < 1e-14 * abs(ratio):
        raise DegenerateImaginaryPart(f"imaginary part of {ratio} is numerically zero")
    return ratio.real / ratio.imag


def _cache_key(ratios: tuple) -> tuple:
    return tuple((round(v.real, 12), round(v.imag, 12)) for v in ratios)


def build_setup(ratios: Sequence[complex], prev_alpha1: Optional[complex] = None) -> CompositionSetup:
    """Solve the fraction equation and assemble all per-step constants.

    Results are memoized on the (rounded) ratio tuple, so fixed-grid runs
    pay for the root solve once.
    """
    r = tuple(complex(v) for v in ratios)
    key = _cache_key(r)
    hit = _SETUP_CACHE.get(key)
    if hit is not None:
        _SETUP_CACHE.move_to_end(key)
        return hit
    alpha1 = solve_alpha1(r, prev=prev_alpha1)
    eps = tuple(1.0 + rv / alpha1 for rv in r)
    G = G_coefficients(alpha1, r)
    setup = CompositionSetup(
        p=len(r),
        ratios=r,
        alpha1=alpha1,
        alpha2=1.0 - alpha1,
        eps=eps,
        eps_bar=(ebar_zero(alpha1),) + tuple(1.0 + rv for rv in r),
        G=G,
        error_constant=error_constant(alpha1, r),
    )
    while len(_SETUP_CACHE) >= _SETUP_CACHE_MAX:
        _SETUP_CACHE.popitem(last=False)
    _SETUP_CACHE[key] = setup
    return setup


def composed_step(
    rhs: RhsFunction,
    window: HistoryWindow,
    tau: float,
    cfg: ImplicitSolveConfig = ImplicitSolveConfig(),
    prev_alpha1: Optional[complex] = None,
) -> tuple:
    """One composed step: two base sub-steps with complex fractions.

    Returns ``(new_window, output)``. The forwarded window carries the real
    part of the composed result at the real node t_{n-1} + tau; the full
    complex result, the intermediate state, and the per-step constants ride
    along in the output record.
    """
    tau = float(tau)
    setup = build_setup(ratios_from_window(window, tau), prev_alpha1)
    t_last = window.times[-1]
    mid_window, y_half = bdf_step(rhs, window, setup.alpha1 * tau, cfg)
    _, y_hat = bdf_step(rhs, mid_window, (t_last + tau) - mid_window.times[-1], cfg)
    y_real = y_hat.real.copy()
    raw = y_hat.imag.copy()
    out_window = window.advanced(t_last + tau, y_real.astype(complex))
    output = ComposedStepOutput(
        y_hat=y_hat,
        y_real=y_real,
        error_estimate_raw=raw,
        error_estimate=abs(setup.error_constant) * float(np.max(np.abs(raw))),
        intermediate=y_half,
        setup=setup,
    )
    return out_window, output
