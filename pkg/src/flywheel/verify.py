"""Verification suites: closed forms against the finite-difference oracle,
and the randomized check that the combined stress never exceeds the sum of
the separate spin and bore-pressure maxima."""

from __future__ import annotations

import math

import numpy as np

from flywheel.model import AnnulusGeometry, LoadCase, RadialProfile, ValidationError, make_material
from flywheel.oracle import OracleConfig, compare_profiles, refinement_levels, solve_radial_ode
from flywheel.pressfit import lemma_bound_many
from flywheel.stress import stress_profile

ORACLE_TOL = 5e-3
ORDER_TARGET = 2.0
ORDER_TOL = 0.2
LEMMA_REL_TOL = 1e-9
TIGHTNESS_TOL = 1e-9


def random_cases(n: int, seed: int = 0):
    """Seeded material / geometry / load triples spanning solid disks and annuli."""
    rng = np.random.default_rng(seed)
    cases = []
    for k in range(n):
        material = make_material(
            name=f"case-{k}",
            density=float(rng.uniform(1500, 8000)),
            poisson_ratio=float(rng.uniform(0.2, 0.35)),
            elastic_modulus=float(rng.uniform(50e9, 220e9)),
            yield_strength=1e9,
        )
        b = float(rng.uniform(0.2, 1.5))
        solid = k % 4 == 0
        t = 0.0 if solid else float(rng.uniform(0.05, 0.9))
        omega = float(rng.uniform(0.0, 600.0 / b))
        p_a = 0.0 if solid else float(rng.uniform(0.0, 200e6))
        p_b = float(rng.uniform(0.0, 100e6))
        if omega == 0 and p_a == 0 and p_b == 0:
            omega = 100.0
        cases.append((material, AnnulusGeometry(t * b, b), LoadCase(omega, p_a, p_b)))
    return cases


def _flipped_rotation_profile(material, geometry, load, radii) -> RadialProfile:
    """Closed form with the sign of the spin term reversed (mutation canary)."""
    press = stress_profile(material, geometry, LoadCase(0.0, load.inner_pressure, load.outer_pressure), radii=radii)
    spin = stress_profile(material, geometry, LoadCase(load.angular_speed), radii=radii)
    sr = press.radial - spin.radial
    st = press.hoop - spin.hoop
    return RadialProfile(
        radius=radii,
        radial=sr,
        hoop=st,
        von_mises=np.sqrt(np.maximum(sr * sr + st * st - sr * st, 0.0)),
        displacement=press.displacement - spin.displacement,
        meta={"source": "canary"},
    )


def _describe(material, geometry, load):
    return {
        "density": material.density,
        "poisson_ratio": material.poisson_ratio,
        "elastic_modulus": material.elastic_modulus,
        "inner_radius": geometry.inner_radius,
        "outer_radius": geometry.outer_radius,
        "angular_speed": load.angular_speed,
        "inner_pressure": load.inner_pressure,
        "outer_pressure": load.outer_pressure,
    }


def oracle_suite(cases: int = 20, seed: int = 0, node_count: int = 2000, order_nodes: int = 500,
                 order_cases: int = 3, canary: bool = False) -> dict:
    """Closed form vs finite differences on random cases, plus an observed-order check."""
    config = OracleConfig(node_count=node_count)
    failures, errors = [], []
    sample = random_cases(cases, seed)
    for k, (material, geometry, load) in enumerate(sample):
        numeric = solve_radial_ode(material, geometry, load, config)
        if canary:
            analytic = _flipped_rotation_profile(material, geometry, load, numeric.radius)
        else:
            analytic = stress_profile(material, geometry, load, radii=numeric.radius)
        cmp = compare_profiles(analytic, numeric)
        errors.append(cmp.max_rel_error)
        if not cmp.max_rel_error <= ORACLE_TOL:
            failures.append({
                "case": k,
                "inputs": _describe(material, geometry, load),
                "max_rel_error": cmp.max_rel_error,
                "field_errors": cmp.field_errors,
                "tolerance": ORACLE_TOL,
            })

    orders = []
    for k, (material, geometry, load) in enumerate(sample[:order_cases]):
        levels = [
            solve_radial_ode(material, geometry, load, OracleConfig(node_count=n))
            for n in refinement_levels(order_nodes, 3)
        ]
        fine = levels[-1].radius
        reference = stress_profile(material, geometry, load, radii=fine)
        order = compare_profiles(reference, *levels).convergence_order
        orders.append(order)
        if order is None or abs(order - ORDER_TARGET) > ORDER_TOL:
            failures.append({"case": k, "inputs": _describe(material, geometry, load),
                             "convergence_order": order, "expected": [ORDER_TARGET, ORDER_TOL]})
    return {
        "cases": cases,
        "node_count": node_count,
        "max_rel_error": max(errors) if errors else 0.0,
        "convergence_orders": orders,
        "passed": not failures,
        "failures": failures,
    }


def lemma_suite(cases: int = 10_000, seed: int = 0) -> dict:
    """Random annuli under spin plus bore pressure; the combined maximum must not
    exceed the sum of the separate maxima, and the bound is exact when one
    load vanishes."""
    rng = np.random.default_rng(seed)
    nu = rng.uniform(0.05, 0.45, cases)
    rho = rng.uniform(1000, 9000, cases)
    b = rng.uniform(0.1, 2.0, cases)
    a = rng.uniform(0.01, 0.95, cases) * b
    omega = rng.uniform(0.0, 1.0, cases) * 800.0 / b
    p_a = rng.uniform(0.0, 500e6, cases)
    out = lemma_bound_many(nu, rho, omega, a, b, p_a, rel_tol=LEMMA_REL_TOL)
    bad = np.flatnonzero(~out["holds"])
    failures = [
        {
            "case": int(i),
            "poisson_ratio": float(nu[i]), "density": float(rho[i]),
            "inner_radius": float(a[i]), "outer_radius": float(b[i]),
            "angular_speed": float(omega[i]), "inner_pressure": float(p_a[i]),
            "combined": float(out["combined"][i]), "bound": float(out["bound"][i]),
        }
        for i in bad[:20]
    ]
    ratio = out["combined"] / np.where(out["bound"] > 0, out["bound"], 1.0)

    # tightness with one load switched off
    spin_only = lemma_bound_many(nu, rho, omega, a, b, 0.0)
    press_only = lemma_bound_many(nu, rho, 0.0, a, b, p_a)
    tight = []
    for name, res in (("spin_only", spin_only), ("pressure_only", press_only)):
        pos = res["bound"] > 0
        dev = np.abs(res["combined"][pos] / res["bound"][pos] - 1.0)
        worst = float(dev.max()) if dev.size else 0.0
        tight.append(worst)
        if worst > TIGHTNESS_TOL:
            failures.append({"check": f"tightness_{name}", "max_deviation": worst, "tolerance": TIGHTNESS_TOL})
    return {
        "cases": cases,
        "violations": int(bad.size),
        "max_ratio": float(ratio.max()) if ratio.size else math.nan,
        "min_ratio": float(ratio.min()) if ratio.size else math.nan,
        "tightness_max_deviation": max(tight),
        "passed": not failures,
        "failures": failures,
    }


def run_verification(cases: int | None = None, seed: int = 0, canary: bool = False) -> dict:
    """Both suites. ``cases`` selects the reduced quick mode: that many bound
    cases and at most 20 oracle cases."""
    if cases is not None and cases < 1:
        raise ValidationError("cases must be >= 1")
    oracle_cases = 20 if cases is None else min(cases, 20)
    lemma_cases = 10_000 if cases is None else cases
    oracle = oracle_suite(oracle_cases, seed, canary=canary)
    lemma = lemma_suite(lemma_cases, seed)
    return {
        "passed": oracle["passed"] and lemma["passed"],
        "seed": seed,
        "oracle": oracle,
        "lemma": lemma,
    }
