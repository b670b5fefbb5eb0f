"""Linear stability of the composed flow: characteristic polynomial over the
scaled eigenvalue z, rasterized stability regions, and sector angles.

Points are classified through the roots of the one-step recurrence
polynomial; a point is stable when no root magnitude exceeds 1 + 1e-9.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .bdf_core import coeff_fixed, g_closed_form
from .composition import G_coefficients, build_setup
from .errors import EmptySector, OrderOutOfRange
from .polyroot import find_roots_batch

_ABS_TOL = 1e-9  # non-strict root-magnitude inequality
_RAY_RADII = np.logspace(-3.0, 3.0, 200)
_THETA_TOL = 0.05


@dataclass(frozen=True)
class StabilityRegion:
    """Boolean raster of a scheme's stability over a z-plane rectangle."""

    p: int  # scheme order as labeled in outputs (composed order, or BDF order)
    scheme: str
    bounds: tuple  # (xmin, xmax, ymin, ymax)
    nx: int
    ny: int
    mask: np.ndarray  # [nx, ny], True = stable
    angle_deg: Optional[float] = None

    def __post_init__(self):
        if self.mask.shape != (self.nx, self.ny):
            raise ValueError("mask shape must be (nx, ny)")
        if self.angle_deg is not None and not 0.0 <= self.angle_deg <= 90.0:
            raise ValueError("angle_deg must lie in [0, 90]")


@lru_cache(maxsize=None)
def _uniform_stage_weights(p: int):
    """First- and second-stage weights on the uniform grid for base order p."""
    ratios = tuple(float(j - 1) for j in range(1, p + 1))
    setup = build_setup(ratios)
    g = g_closed_form(setup.eps)
    Gk = G_coefficients(setup.alpha1, ratios)[: p + 1]
    return setup.alpha1, g, Gk


def theta_coefficients(p: int, z: complex) -> tuple:
    """Recurrence weights of the composed flow on y' = lambda*y at z = tau*lambda.

    Uniform-grid setup (ratios j-1) with the fixed admissible sub-step
    fraction for base order p.
    """
    if not 1 <= p <= 8:
        raise OrderOutOfRange(f"base order must be in 1..8, got {p}")
    a1, g, Gk = _uniform_stage_weights(p)
    z = complex(z)
    lead = a1 * z - g[0]
    theta = [lead * (Gk[0] - (1.0 - a1) * z)]
    for i in range(1, p):
        theta.append(Gk[1] * g[i] + lead * Gk[i + 1])
    theta.append(Gk[1] * g[p])
    return tuple(theta)


def _char_rows(order: int, z: np.ndarray, scheme: str) -> np.ndarray:
    """Descending-power coefficient rows of the characteristic polynomial."""
    z = np.asarray(z, dtype=complex).ravel()
    if scheme == "composed":
        if not 2 <= order <= 9:
            raise OrderOutOfRange(f"composed order must be in 2..9, got {order}")
        p = order - 1
        a1, g, Gk = _uniform_stage_weights(p)
        rows = np.empty((z.size, p + 1), dtype=complex)
        lead = a1 * z - g[0]
        rows[:, 0] = lead * (Gk[0] - (1.0 - a1) * z)
        for i in range(1, p):
            rows[:, i] = Gk[1] * g[i] + lead * Gk[i + 1]
        rows[:, p] = Gk[1] * g[p]
        return rows
    if scheme == "bdf":
        if not 1 <= order <= 6:
            raise OrderOutOfRange(f"bdf order must be in 1..6, got {order}")
        g = coeff_fixed(order).weights
        rows = np.empty((z.size, order + 1), dtype=complex)
        rows[:, 0] = g[0] - z
        for i in range(1, order + 1):
            rows[:, i] = g[i]
        return rows
    raise ValueError(f"unknown scheme {scheme!r}")


def _stable_mask(rows: np.ndarray) -> np.ndarray:
    """Stability classification for a batch of descending coefficient rows."""
    out = np.zeros(rows.shape[0], dtype=bool)
    scale = np.max(np.abs(rows), axis=1)
    # a vanishing leading coefficient means an escaping root: unstable
    regular = np.abs(rows[:, 0]) > 1e-13 * np.maximum(scale, 1e-300)
    idx = np.where(regular)[0]
    for lo in range(0, idx.size, 8192):
        chunk = idx[lo : lo + 8192]
        roots = find_roots_batch(rows[chunk, ::-1])  # batch solver wants ascending
        out[chunk] = np.max(np.abs(roots), axis=1) <= 1.0 + _ABS_TOL
    return out


def is_stable_point(order: int, z: complex, scheme: str = "composed") -> bool:
    """True iff every recurrence root at this z has magnitude <= 1 + 1e-9."""
    rows = _char_rows(order, np.array([z]), scheme)
    return bool(_stable_mask(rows)[0])


def region_raster(
    order: int,
    bounds: tuple,
    nx: int,
    ny: int,
    scheme: str = "composed",
    angle_deg: Optional[float] = None,
) -> StabilityRegion:
    """Rasterize the stability set over a rectangle, cell-center sampling."""
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must be at least 2")
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    dx = (xmax - xmin) / nx
    dy = (ymax - ymin) / ny
    xs = xmin + (np.arange(nx) + 0.5) * dx
    ys = ymin + (np.arange(ny) + 0.5) * dy
    zz = xs[:, None] + 1j * ys[None, :]
    rows = _char_rows(order, zz.ravel(), scheme)
    mask = _stable_mask(rows).reshape(nx, ny)
    return StabilityRegion(order, scheme, (xmin, xmax, ymin, ymax), nx, ny, mask, angle_deg)


def _rays_stable(order: int, scheme: str, theta_deg: float, radii: np.ndarray) -> bool:
    th = math.radians(theta_deg)
    for sign in (1.0, -1.0):
        z = radii * np.exp(1j * (math.pi + sign * th))
        rows = _char_rows(order, z, scheme)
        if not _stable_mask(rows).all():
            return False
    return True


def stability_angle(order: int, scheme: str = "composed") -> float:
    """Largest sector half-angle (degrees) whose boundary rays stay stable.

    Bisection on the angle to 0.05 degrees, sampling 200 log-spaced radii
    in [1e-3, 1e3] on both boundary rays. Raises EmptySector when even a
    vanishing half-angle fails.
    """
    radii = _RAY_RADII
    if not _rays_stable(order, scheme, 1e-4, radii):
        raise EmptySector(f"{scheme} order {order} is unstable on the negative real axis")
    if _rays_stable(order, scheme, 90.0, radii):
        return 90.0
    lo, hi = 0.0, 90.0
    while hi - lo > _THETA_TOL:
        mid = 0.5 * (lo + hi)
        if _rays_stable(order, scheme, mid, radii):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def region_to_csv(region: StabilityRegion, path) -> None:
    """Rows `re_z,im_z,stable(0|1)`, top raster row (max Im) first."""
    xmin, xmax, ymin, ymax = region.bounds
    dx = (xmax - xmin) / region.nx
    dy = (ymax - ymin) / region.ny
    with open(path, "w", newline="") as fh:
        fh.write("re_z,im_z,stable\n")
        for iy in range(region.ny - 1, -1, -1):
            im = ymin + (iy + 0.5) * dy
            for ix in range(region.nx):
                re = xmin + (ix + 0.5) * dx
                fh.write(f"{re:.16e},{im:.16e},{int(region.mask[ix, iy])}\n")


def region_to_pbm(region: StabilityRegion, path) -> None:
    """Plain-text P1 bitmap, one raster row per line, top row = max Im, 1 = stable."""
    with open(path, "w", newline="") as fh:
        fh.write("P1\n")
        fh.write(f"{region.nx} {region.ny}\n")
        for iy in range(region.ny - 1, -1, -1):
            fh.write(" ".join(str(int(region.mask[ix, iy])) for ix in range(region.nx)) + "\n")
