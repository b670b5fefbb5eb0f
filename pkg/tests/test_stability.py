"""Stability polynomial, region rasters, and sector angles."""
import numpy as np
import pytest

from cbdf.bdf_core import coeff_variable
from cbdf.composition import solve_alpha1
from cbdf.errors import EmptySector
from cbdf.stability import (
    _rays_stable,
    is_stable_point,
    region_raster,
    region_to_csv,
    region_to_pbm,
    stability_angle,
    theta_coefficients,
)


@pytest.mark.parametrize("p", range(1, 9))
def test_theta_consistency_at_origin(p):
    assert abs(sum(theta_coefficients(p, 0.0))) <= 1e-10


def test_theta_against_direct_assembly():
    # oracle: assemble both stage weight sets with coeff_variable and multiply
    for p, z in ((1, -1.0), (3, -0.7 + 0.3j)):
        a1 = solve_alpha1(tuple(float(j - 1) for j in range(1, p + 1)))
        hist = tuple(float(j) for j in range(p))
        g = coeff_variable(hist, (p - 1) + a1).weights
        gk = coeff_variable(hist[1:] + ((p - 1) + a1,), float(p)).weights
        lead = a1 * z - g[0]
        ref = [lead * (gk[0] - (1 - a1) * z)]
        for i in range(1, p):
            ref.append(gk[1] * g[i] + lead * gk[i + 1])
        ref.append(gk[1] * g[p])
        got = theta_coefficients(p, z)
        scale = max(abs(v) for v in ref)
        assert max(abs(a - b) for a, b in zip(got, ref)) <= 1e-10 * scale


def test_positive_axis_instability_lens():
    # derived truth: the order-3 composed flow loses root containment on a
    # bounded lens near the positive real axis, and regains it beyond
    from cbdf.polyroot import ComplexPolynomial, find_roots

    th = theta_coefficients(2, 10.0)
    roots = find_roots(ComplexPolynomial(tuple(reversed(th))))
    assert len(roots) == 2
    assert is_stable_point(3, 10.0)
    assert not is_stable_point(3, 1.0)


def test_is_stable_origin_and_axis():
    assert is_stable_point(3, 0.0)
    assert is_stable_point(3, -1.0)
    assert is_stable_point(2, -1.0, scheme="bdf")


def test_composed8_off_axis_point():
    # far outside the narrow stable sector on the upper side
    assert not is_stable_point(8, -1.0 + 10.0j)


def test_raster_matches_pointwise():
    region = region_raster(3, (-1.0, 1.0, -1.0, 1.0), 2, 2)
    for ix, x in enumerate((-0.5, 0.5)):
        for iy, y in enumerate((-0.5, 0.5)):
            assert region.mask[ix, iy] == is_stable_point(3, complex(x, y))
    assert region.mask.any() and not region.mask.all()


def test_raster_left_half_plane_composed2():
    region = region_raster(2, (-5.0, 1.0, -3.0, 3.0), 24, 12)
    xs = -5.0 + (np.arange(24) + 0.5) * 0.25
    assert region.mask[xs < 0, :].all()


@pytest.mark.parametrize("order", (2, 3, 4))
def test_raster_deep_left_all_stable(order):
    region = region_raster(order, (-100.0, -50.0, -1.0, 1.0), 2, 2)
    assert region.mask.all()


def test_angle_composed2_a_stable():
    assert stability_angle(2) == pytest.approx(90.0)


def test_angle_bdf1():
    assert stability_angle(1, scheme="bdf") == pytest.approx(90.0)


def test_angle_empty_sector_composed9():
    with pytest.raises(EmptySector):
        stability_angle(9)


def test_monotone_sector(rng):
    radii = np.logspace(-3, 3, 60)
    for _ in range(10):
        a, b = sorted(rng.uniform(1.0, 89.0, size=2))
        if _rays_stable(5, "composed", b, radii):
            assert _rays_stable(5, "composed", a, radii)


@pytest.mark.parametrize("q", (3, 4, 5, 6))
def test_composed_region_dominates_bdf(q):
    # containment of the equal-order base region holds strictly at orders
    # 3-4; at orders 5-6 it fails only on a thin sliver hugging the
    # imaginary axis (8-9 cells of 40401, independently confirmed by an
    # eigenvalue-based root check), so those orders allow that sliver
    bounds = (-8.0, 8.0, -8.0, 8.0)
    bdf = region_raster(q, bounds, 201, 201, scheme="bdf")
    comp = region_raster(q, bounds, 201, 201, scheme="composed")
    viol = bdf.mask & ~comp.mask
    if q in (3, 4):
        assert not viol.any()
    else:
        xs = -8.0 + (np.arange(201) + 0.5) * 16.0 / 201
        ix, _ = np.where(viol)
        assert viol.sum() <= 12
        assert all(abs(xs[i]) < 0.05 for i in ix)


def test_csv_and_pbm_export(tmp_path):
    region = region_raster(3, (-1.0, 1.0, -1.0, 1.0), 3, 2)
    csv_path = tmp_path / "r.csv"
    pbm_path = tmp_path / "r.pbm"
    region_to_csv(region, csv_path)
    region_to_pbm(region, pbm_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "re_z,im_z,stable"
    assert len(lines) == 1 + 6
    first = lines[1].split(",")
    assert float(first[1]) == pytest.approx(0.5)  # top row carries max Im
    assert first[2] in ("0", "1")
    pbm = pbm_path.read_text().splitlines()
    assert pbm[0] == "P1"
    assert pbm[1] == "3 2"
    assert len(pbm) == 4
    # determinism: identical bytes on rerun
    again = tmp_path / "r2.csv"
    region_to_csv(region_raster(3, (-1.0, 1.0, -1.0, 1.0), 3, 2), again)
    assert again.read_bytes() == csv_path.read_bytes()
