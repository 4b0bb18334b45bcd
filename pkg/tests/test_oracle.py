import numpy as np
import pytest

from flywheel.model import AnnulusGeometry, LoadCase, RadialProfile, ValidationError
from flywheel.oracle import (
    OracleConfig,
    assembly_pressures,
    compare_profiles,
    equilibrium_residual,
    refinement_levels,
    solve_radial_ode,
)
from flywheel.pressfit import RingSpec, interference_pressure
from flywheel.stress import stress_profile

OMEGA_5623_RPM = 588.8391830378469


def test_config_validation():
    with pytest.raises(ValidationError):
        OracleConfig(node_count=8)
    with pytest.raises(ValidationError):
        OracleConfig(epsilon_ratio=1e-3)


def test_unloaded_disk_is_stress_free(steel, annulus):
    p = solve_radial_ode(steel, annulus, LoadCase())
    assert not np.any(p.displacement) and not np.any(p.radial) and not np.any(p.hoop)


def test_solid_disk_centre_stress(steel):
    p = solve_radial_ode(steel, AnnulusGeometry(0.0, 1.0), LoadCase(OMEGA_5623_RPM))
    assert p.von_mises[0] == pytest.approx(1.101e9, rel=5e-3)
    assert abs(p.displacement[0]) < 1e-6 * np.max(np.abs(p.displacement))


def test_inner_pressure_hoop_at_bore(steel, annulus):
    p = solve_radial_ode(steel, annulus, LoadCase(0.0, 50e6))
    assert p.hoop[0] == pytest.approx(54.17e6, rel=5e-3)


def test_boundary_tractions(steel, annulus):
    p = solve_radial_ode(steel, annulus, LoadCase(300.0, 40e6, 15e6))
    assert p.radial[0] == pytest.approx(-40e6, rel=1e-6)
    assert p.radial[-1] == pytest.approx(-15e6, rel=1e-6)


def test_solid_disk_rejects_inner_pressure(steel):
    with pytest.raises(ValidationError):
        solve_radial_ode(steel, AnnulusGeometry(0.0, 1.0), LoadCase(1.0, 1.0))


@pytest.mark.parametrize("geometry", [AnnulusGeometry(0.0, 1.0), AnnulusGeometry(0.3, 1.2)])
def test_matches_closed_form(steel, geometry):
    load = LoadCase(450.0, 0.0 if geometry.is_solid else 80e6, 20e6)
    numeric = solve_radial_ode(steel, geometry, load)
    analytic = stress_profile(steel, geometry, load, radii=numeric.radius)
    assert compare_profiles(analytic, numeric).max_rel_error <= 5e-3


def test_equilibrium_sign_decided_by_oracle(steel, annulus):
    w = 400.0
    p = solve_radial_ode(steel, annulus, LoadCase(w))
    scale = steel.density * w * w
    plus = equilibrium_residual(p, steel.density, w, sign=1.0)
    minus = equilibrium_residual(p, steel.density, w, sign=-1.0)
    assert np.max(np.abs(plus[2:-2])) < 1e-4 * scale
    assert np.max(np.abs(minus)) > 1e-2 * scale


def test_equilibrium_residual_is_second_order(steel, annulus):
    w = 400.0
    res = []
    for n in refinement_levels(200, 3):
        p = solve_radial_ode(steel, annulus, LoadCase(w, 30e6), OracleConfig(n))
        # end points use one-sided stress recovery, so judge the interior
        res.append(np.max(np.abs(equilibrium_residual(p, steel.density, w)[2:-2])))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.25)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.25)


def test_convergence_order_near_two(steel):
    g = AnnulusGeometry(0.25, 1.0)
    load = LoadCase(500.0, 60e6, 10e6)
    levels = [solve_radial_ode(steel, g, load, OracleConfig(n)) for n in refinement_levels(250, 3)]
    ref = stress_profile(steel, g, load, radii=levels[-1].radius)
    cmp = compare_profiles(ref, *levels)
    assert cmp.convergence_order == pytest.approx(2.0, abs=0.2)
    assert cmp.level_errors[0] / cmp.level_errors[1] == pytest.approx(4.0, rel=0.25)


def test_compare_identical_and_mismatched(steel, annulus):
    p = stress_profile(steel, annulus, LoadCase(300.0), 50)
    assert compare_profiles(p, p).max_rel_error == 0.0
    other = stress_profile(steel, AnnulusGeometry(0.3, 1.0), LoadCase(300.0), 50)
    with pytest.raises(ValidationError):
        compare_profiles(p, other)
    with pytest.raises(ValidationError):
        compare_profiles(p)


def test_refinement_levels_halve_spacing():
    assert refinement_levels(100, 3) == [100, 199, 397]


def test_two_body_pressure_matches_closed_form(steel):
    shaft = RingSpec(steel, 0.0, 0.2)
    disk = RingSpec(steel, 0.2, 1.0, 1e-4)
    numeric = assembly_pressures([(steel, shaft.geometry), (steel, disk.geometry)], [1e-4])[0]
    assert numeric == pytest.approx(interference_pressure(shaft, disk), rel=5e-3)
    assert numeric == pytest.approx(48e6, rel=5e-3)


def test_csv_export(steel, annulus):
    text = solve_radial_ode(steel, annulus, LoadCase(10.0), OracleConfig(16)).to_csv()
    assert text.splitlines()[0] == "r,sigma_r,sigma_theta,sigma_v,u"
    assert len(text.splitlines()) == 17
