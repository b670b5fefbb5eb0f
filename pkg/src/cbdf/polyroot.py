"""Dense complex linear solves and simultaneous-iteration polynomial roots.

Everything downstream (coefficient generation, sub-step fraction solving,
stability scans) funnels its linear algebra through these two entry points,
so the error contracts live here and nowhere else.
"""
from __future__ import annotations

import warnings

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegreeZero, NoConvergence, SingularMatrix

_PIVOT_RTOL = 1e-14
_MAX_SWEEPS = 500


@dataclass(frozen=True)
class ComplexPolynomial:
    """A polynomial with complex coefficients in ascending degree order.

    Trailing (highest-degree) zero coefficients are stripped on construction,
    so ``degree == len(coefficients) - 1`` and the leading coefficient is
    nonzero for any polynomial that is not identically zero.
    """

    coefficients: tuple = field()

    def __post_init__(self):
        coeffs = [complex(c) for c in self.coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            coeffs = [0j]
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: complex) -> complex:
        acc = 0j
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> "ComplexPolynomial":
        if self.degree == 0:
            return ComplexPolynomial((0j,))
        return ComplexPolynomial(
            tuple(k * c for k, c in enumerate(self.coefficients) if k > 0)
        )


def solve_dense(matrix, rhs) -> np.ndarray:
    """Solve A x = b by LU with partial pivoting.

    Raises SingularMatrix when a pivot magnitude falls below
    1e-14 times the largest matrix entry.
    """
    a = np.asarray(matrix, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"matrix must be square and nonempty, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError("rhs length does not match matrix size")
    scale = np.max(np.abs(a))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or np.min(pivots) < _PIVOT_RTOL * scale:
        raise SingularMatrix(
            f"pivot {np.min(pivots):.3e} below {_PIVOT_RTOL:.0e} * {scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def _initial_circle(monic_rows: np.ndarray) -> np.ndarray:
    """Perturbed-circle starting guesses, one circle per batch row."""
    n = monic_rows.shape[1] - 1
    radius = 1.0 + np.max(np.abs(monic_rows[:, :-1]), axis=1)
    k = np.arange(n)
    # phase offset and mild radius jitter break conjugate/rotation symmetry
    angles = 2.0 * np.pi * k / n + 0.4
    jitter = 1.0 + 1e-3 * (k + 1.0) / n
    return radius[:, None] * (jitter * np.exp(1j * angles))[None, :]


def _horner_batch(coeffs_asc: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(z)
    for j in range(coeffs_asc.shape[1] - 1, -1, -1):
        acc = acc * z + coeffs_asc[:, j, None]
    return acc


def find_roots_batch(coeff_rows, max_sweeps: int = _MAX_SWEEPS) -> np.ndarray:
    """Durand-Kerner sweep over a batch of same-degree polynomials.

    ``coeff_rows`` is [batch, degree+1] in ascending degree order with
    nonzero leading column. Returns roots as a [batch, degree] array
    (unsorted). Raises NoConvergence if any row exhausts the budget.
    """
    c = np.asarray(coeff_rows, dtype=complex)
    n = c.shape[1] - 1
    if n < 1:
        raise DegreeZero("constant polynomial has no roots")
    monic = c / c[:, -1:]
    z = _initial_circle(monic)
    active = np.ones(c.shape[0], dtype=bool)
    for _ in range(max_sweeps):
        za = z[active]
        pv = _horner_batch(monic[active], za)
        diff = za[:, :, None] - za[:, None, :]
        idx = np.arange(n)
        diff[:, idx, idx] = 1.0
        w = pv / np.prod(diff, axis=2)
        z[active] = za - w
        step = np.max(np.abs(w), axis=1)
        tol = 1e-13 * (1.0 + np.max(np.abs(z[active]), axis=1))
        still = step > tol
        sub = np.where(active)[0]
        active[sub[~still]] = False
        if not active.any():
            break
    else:
        raise NoConvergence(f"{int(active.sum())} root sets unconverged after {max_sweeps} sweeps")
    # two Newton polish passes on the original coefficients
    dcoef = c[:, 1:] * np.arange(1, n + 1)
    for _ in range(2):
        pv = _horner_batch(c, z)
        dv = _horner_batch(dcoef, z)
        safe = np.abs(dv) > 0
        z = np.where(safe, z - np.where(safe, pv, 0) / np.where(safe, dv, 1), z)
    return z


def find_roots(poly: ComplexPolynomial, max_sweeps: int = _MAX_SWEEPS) -> list:
    """All complex roots (with multiplicity) of ``poly``, sorted by (Re, Im).

    Raises DegreeZero for constant input and NoConvergence when the
    simultaneous iteration exhausts its sweep budget.
    """
    if poly.degree < 1:
        raise DegreeZero("cannot take roots of a constant polynomial")
    roots = find_roots_batch(np.array([poly.coefficients]), max_sweeps=max_sweeps)[0]
    return sorted((complex(r) for r in roots), key=lambda r: (r.real, r.imag))
