import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flywheel.model import AnnulusGeometry, InvalidGeometry, LoadCase, RadiusOutOfDomain, ValidationError, make_material
from flywheel.stress import (
    annulus_stress,
    contour_grid,
    max_rotational_radial_stress,
    max_von_mises,
    scan_refine_max,
    solid_disk_stress,
    stress_components,
    stress_profile,
    von_mises,
)

OMEGA_5623_RPM = 5623 * 2 * math.pi / 60


def test_von_mises_values():
    assert von_mises(0.0, 0.0) == 0.0
    assert von_mises(3.0, 3.0) == pytest.approx(3.0)
    assert von_mises(100e6, -50e6) == pytest.approx(132.29e6, rel=1e-4)


@given(st.floats(-1e9, 1e9), st.floats(-1e9, 1e9))
def test_von_mises_nonnegative(a, b):
    assert von_mises(a, b) >= 0


def test_solid_disk_unloaded_and_rim(steel):
    s = solid_disk_stress(steel, 1.0, LoadCase(), 0.4)
    assert (s.radial, s.hoop) == (0.0, 0.0)
    s = solid_disk_stress(steel, 1.0, LoadCase(300.0), 1.0)
    assert s.radial == pytest.approx(0.0, abs=1e-6)


def test_solid_disk_centre(steel):
    s = solid_disk_stress(steel, 1.0, LoadCase(OMEGA_5623_RPM), 0.0)
    expected = 3.3 / 8 * 7700 * OMEGA_5623_RPM**2
    assert s.radial == pytest.approx(expected, rel=1e-12)
    assert s.hoop == pytest.approx(expected, rel=1e-12)
    assert s.von_mises == pytest.approx(1.101e9, rel=1e-3)


def test_solid_disk_rejects_bad_input(steel):
    with pytest.raises(RadiusOutOfDomain):
        solid_disk_stress(steel, 1.0, LoadCase(1.0), 1.5)
    with pytest.raises(ValidationError):
        solid_disk_stress(steel, 1.0, LoadCase(1.0, inner_pressure=1.0), 0.5)


def test_annulus_boundary_conditions(steel, annulus):
    load = LoadCase(350.0, 40e6, 15e6)
    assert annulus_stress(steel, annulus, load, 0.2).radial == pytest.approx(-40e6, rel=1e-12)
    assert annulus_stress(steel, annulus, load, 1.0).radial == pytest.approx(-15e6, rel=1e-12)


def test_annulus_spin_hoop_at_bore(steel, annulus):
    s = annulus_stress(steel, annulus, LoadCase(400.0), 0.2)
    t = 0.2
    expected = 3.3 / 4 * 7700 * 400.0**2 * (1 + t * t * 0.7 / 3.3)
    assert s.hoop == pytest.approx(expected, rel=1e-12)
    assert s.hoop == pytest.approx(1.025e9, rel=1e-3)


def test_annulus_inner_pressure_hoop(steel, annulus):
    s = annulus_stress(steel, annulus, LoadCase(0.0, 50e6), 0.2)
    assert s.hoop == pytest.approx(50e6 * 1.04 / 0.96, rel=1e-12)
    assert s.hoop == pytest.approx(54.17e6, rel=1e-4)


def test_annulus_rejects_solid_and_out_of_domain(steel, annulus):
    with pytest.raises(InvalidGeometry):
        annulus_stress(steel, AnnulusGeometry(0.0, 1.0), LoadCase(1.0), 0.5)
    with pytest.raises(RadiusOutOfDomain):
        annulus_stress(steel, annulus, LoadCase(1.0), 0.1)


@settings(max_examples=60)
@given(
    st.floats(0.05, 0.9), st.floats(0.0, 800.0), st.floats(0.0, 3e8), st.floats(0.0, 3e8),
    st.floats(0.2, 0.45), st.floats(0, 1),
)
def test_superposition_and_boundaries(t, w, pa, pb, nu, xi):
    m = make_material(name="x", density=7700, poisson_ratio=nu, elastic_modulus=2e11, yield_strength=1e9)
    g = AnnulusGeometry(t, 1.0)
    r = t + xi * (1 - t)
    full = annulus_stress(m, g, LoadCase(w, pa, pb), r)
    parts = [annulus_stress(m, g, ld, r) for ld in (LoadCase(w), LoadCase(0, pa), LoadCase(0, 0, pb))]
    scale = max(abs(full.radial), abs(full.hoop), 7700 * w * w, pa, pb, 1.0)
    assert abs(full.radial - sum(p.radial for p in parts)) <= 1e-12 * scale
    assert abs(full.hoop - sum(p.hoop for p in parts)) <= 1e-12 * scale
    inner = annulus_stress(m, g, LoadCase(w, pa, pb), t).radial
    outer = annulus_stress(m, g, LoadCase(w, pa, pb), 1.0).radial
    assert abs(inner + pa) <= 1e-12 * scale
    assert abs(outer + pb) <= 1e-12 * scale


@settings(max_examples=40)
@given(st.floats(0.05, 0.9), st.floats(0.0, 3e8))
def test_inner_pressure_signs(t, pa):
    m = make_material(name="x", density=7700, poisson_ratio=0.3, elastic_modulus=2e11, yield_strength=1e9)
    g = AnnulusGeometry(t, 1.0)
    sr, st_, _ = stress_components(m, g, LoadCase(0, pa), np.linspace(t, 1.0, 50))
    assert np.all(sr <= 1e-6 * max(pa, 1)) and np.all(st_ >= 0)


@pytest.mark.parametrize("geometry", [AnnulusGeometry(0.0, 1.0), AnnulusGeometry(0.3, 1.0)])
def test_equilibrium_residual_positive_sign(steel, geometry):
    w = 500.0
    r = np.linspace(max(geometry.inner_radius, 1e-3), 1.0, 4001)
    sr, st_, _ = stress_components(steel, geometry, LoadCase(w, 0.0 if geometry.is_solid else 10e6, 5e6), r)
    residual = np.gradient(r * sr, r, edge_order=2) - st_ + steel.density * w * w * r * r
    assert np.max(np.abs(residual)) < 1e-6 * steel.density * w * w
    flipped = residual - 2 * steel.density * w * w * r * r
    assert np.max(np.abs(flipped)) > 0.1 * steel.density * w * w


def test_scaling_with_rho_omega_b(steel):
    base = annulus_stress(steel, AnnulusGeometry(0.3, 1.0), LoadCase(200.0), 0.5)
    scaled = annulus_stress(steel, AnnulusGeometry(0.6, 2.0), LoadCase(600.0), 1.0)
    assert scaled.hoop == pytest.approx(base.hoop * 36, rel=1e-12)
    assert scaled.radial == pytest.approx(base.radial * 36, rel=1e-12)


def test_profile_endpoints_match_pointwise(steel, annulus):
    load = LoadCase(300.0)
    p = stress_profile(steel, annulus, load, 11)
    assert p.radius[0] == 0.2 and p.radius[-1] == 1.0
    for i in (0, -1):
        s = annulus_stress(steel, annulus, load, p.radius[i])
        assert p.radial[i] == s.radial and p.hoop[i] == s.hoop


def test_profile_zero_load_and_displacement(steel, annulus):
    p = stress_profile(steel, annulus, LoadCase(), 5)
    assert not np.any(p.radial) and not np.any(p.hoop) and not np.any(p.displacement)
    p = stress_profile(steel, annulus, LoadCase(300.0, 20e6), 7)
    expected = p.radius * (p.hoop - 0.3 * p.radial) / steel.elastic_modulus
    np.testing.assert_allclose(p.displacement, expected, rtol=1e-12)
    with pytest.raises(ValidationError):
        stress_profile(steel, annulus, LoadCase(), 1)


def test_solid_profile_peak_at_axis(steel):
    p = stress_profile(steel, AnnulusGeometry(0.0, 1.0), LoadCase(300.0), 51)
    assert np.argmax(p.radial) == 0 and np.argmax(p.hoop) == 0
    assert p.radial[0] == pytest.approx(p.hoop[0], rel=1e-14)
    assert p.displacement[0] == 0.0


def test_max_von_mises_solid(steel):
    w = 500.0
    value, where = max_von_mises(steel, AnnulusGeometry(0.0, 1.0), LoadCase(w))
    assert where == 0.0
    assert value == pytest.approx(3.3 / 8 * 7700 * w * w, rel=1e-9)


def test_max_von_mises_annulus_at_bore(steel):
    g = AnnulusGeometry(0.04, 1.0)
    value, where = max_von_mises(steel, g, LoadCase(500.0))
    expected = annulus_stress(steel, g, LoadCase(500.0), 0.04).hoop
    assert where == pytest.approx(0.04, abs=1e-9)
    assert value == pytest.approx(expected, rel=1e-6)


def test_scan_refine_finds_interior_peak():
    f = lambda r: -((r - 0.3712) ** 2)  # noqa: E731
    value, where = scan_refine_max(f, np.array([0.0]), np.array([1.0]))
    assert where[0] == pytest.approx(0.3712, abs=1e-8)


def test_rotational_radial_peak(steel):
    g = AnnulusGeometry(0.25, 1.0)
    value, where = max_rotational_radial_stress(steel, g, 500.0)
    assert where == 0.5
    assert value == pytest.approx(446.7e6, rel=1e-3)
    r = np.linspace(0.25, 1.0, 200001)
    sr, _, _ = stress_components(steel, g, LoadCase(500.0), r)
    assert r[np.argmax(sr)] == pytest.approx(0.5, abs=1e-4)
    assert sr.max() == pytest.approx(value, rel=1e-9)
    assert max_rotational_radial_stress(steel, AnnulusGeometry(0.999999, 1.0), 500.0)[0] < 1e-3
    with pytest.raises(InvalidGeometry):
        max_rotational_radial_stress(steel, AnnulusGeometry(0.0, 1.0), 1.0)


def test_contour_values():
    g = contour_grid("inner-pressure-hoop", 0.3, [0.5], [0.0])
    assert g.values[0, 0] == pytest.approx(1.25 / 0.75, rel=1e-12)
    g = contour_grid("rotational-hoop", 0.3, [1e-6], [0.0])
    assert g.values[0, 0] == pytest.approx(0.825, rel=1e-6)
    g = contour_grid("inner-pressure-radial", 0.3, [0.1, 0.5, 0.9], [0.0])
    np.testing.assert_allclose(g.values[:, 0], -1.0, rtol=1e-12)


def test_contour_defaults_and_csv():
    g = contour_grid("rotational-radial", 0.3)
    assert g.values.shape == (101, 101)
    lines = g.to_csv().splitlines()
    assert lines[0].startswith("t\\xi,0.0")
    assert len(lines) == 102


def test_contour_rejects_bad_axes():
    for kwargs in (dict(t_axis=[]), dict(r_axis=[]), dict(t_axis=[1.0]), dict(r_axis=[1.5])):
        with pytest.raises(ValidationError):
            contour_grid("rotational-radial", 0.3, **kwargs)
    with pytest.raises(ValidationError):
        contour_grid("bogus", 0.3)


def test_contour_monotone_claims():
    t = np.linspace(0.02, 0.98, 49)
    hoop_p = contour_grid("inner-pressure-hoop", 0.3, t).values.max(axis=1)
    rad_w = contour_grid("rotational-radial", 0.3, t).values.max(axis=1)
    hoop_w = contour_grid("rotational-hoop", 0.3, t).values.max(axis=1)
    assert np.all(np.diff(hoop_p) >= 0)
    assert np.all(np.diff(rad_w) <= 0)
    assert np.all(np.diff(hoop_w) >= 0)
