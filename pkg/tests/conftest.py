"""Shared oracle builders: dense moment systems and randomized draws.

The dense systems here are the independent reference route for the
closed-form coefficient formulas, so they are assembled from scratch
rather than through the library's own product expressions.
"""
from __future__ import annotations

import numpy as np
import pytest


def stage1_system(eps):
    """Moment system for the first-stage weights in the scaled offsets."""
    p = len(eps)
    a = np.zeros((p + 1, p + 1), dtype=complex)
    a[0, :] = 1.0
    for m in range(1, p + 1):
        for j in range(1, p + 1):
            a[m, j] = eps[j - 1] ** m
    rhs = np.zeros(p + 1, dtype=complex)
    rhs[1] = -1.0
    return a, rhs


def stage2_system(alpha1, ratios):
    """Second-stage moment system with the first-jump error correction row."""
    r = np.asarray(ratios, dtype=complex)
    p = len(r)
    eps = 1.0 + r / alpha1
    g0 = np.sum(1.0 / eps)
    ebar = np.concatenate(([1.0 - alpha1], 1.0 + r))
    n = p + 2
    a = np.zeros((n, n), dtype=complex)
    a[0, :] = 1.0
    for m in range(1, p + 2):
        for i in range(p + 1):
            a[m, 1 + i] = ebar[i] ** m
    a[p + 1, 1] += (-alpha1) ** (p + 1) / g0 * np.prod(eps)
    rhs = np.zeros(n, dtype=complex)
    rhs[1] = -ebar[0]
    return a, rhs


def draw_ratios(rng, p):
    """Step-ladder ratios: r_1 = 0, then cumulative gaps over a random step."""
    gaps = rng.uniform(0.5, 2.0, size=p - 1)
    tau = rng.uniform(0.6, 1.6)
    r = [0.0]
    acc = 0.0
    for gap in gaps:
        acc += gap
        r.append(acc / tau)
    return tuple(r)


def draw_alpha(rng):
    return complex(rng.uniform(0.15, 0.9), rng.uniform(0.4, 1.3))


def draw_eps(rng, p):
    """Well-separated complex offsets in a moderate annulus."""
    while True:
        eps = rng.uniform(0.5, 2.0, p) * np.exp(1j * rng.uniform(-2.5, 2.5, p))
        ok = all(
            abs(eps[i] - eps[j]) > 0.1 for i in range(p) for j in range(i + 1, p)
        )
        if ok and np.min(np.abs(eps)) > 0.2:
            return tuple(complex(e) for e in eps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
