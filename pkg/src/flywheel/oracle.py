"""Finite-difference ground truth for the rotating-disk equilibrium problem.

Solves the displacement form

    u'' + u'/r - u/r^2 = -(1 - nu^2) rho w^2 r / E

on a uniform grid with central differences and second-order one-sided
traction rows, then recovers plane-stress stresses from u. This module must
not import the closed-form solutions it is used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from flywheel.model import (
    AnnulusGeometry,
    FlywheelError,
    LoadCase,
    Material,
    RadialProfile,
    ValidationError,
)


class SingularSystem(FlywheelError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    node_count: int = 2000
    epsilon_ratio: float = 1e-8  # inner node of a solid disk sits at epsilon_ratio * b

    def __post_init__(self):
        if self.node_count < 16:
            raise ValidationError(f"node_count must be >= 16, got {self.node_count}")
        if not 0 < self.epsilon_ratio <= 1e-6:
            raise ValidationError(
                f"epsilon_ratio must lie in (0, 1e-6], got {self.epsilon_ratio}"
            )


def _grid(geometry: AnnulusGeometry, config: OracleConfig) -> np.ndarray:
    b = geometry.outer_radius
    lo = config.epsilon_ratio * b if geometry.is_solid else geometry.inner_radius
    return np.linspace(lo, b, config.node_count)


def solve_radial_ode(
    material: Material,
    geometry: AnnulusGeometry,
    load: LoadCase,
    config: OracleConfig | None = None,
) -> RadialProfile:
    """Second-order finite-difference solution of the spinning-disk problem."""
    config = config or OracleConfig()
    if geometry.is_solid and load.inner_pressure != 0:
        raise ValidationError("a solid disk has no inner surface; inner_pressure must be 0")
    nu, E, rho = material.poisson_ratio, material.elastic_modulus, material.density
    w2 = load.angular_speed**2
    r = _grid(geometry, config)
    n = r.size
    h = r[1] - r[0]

    # banded storage for solve_banded((2, 2), ...): ab[2 + i - j, j] = A[i, j]
    ab = np.zeros((5, n))
    rhs = np.zeros(n)

    def put(i, j, value):
        ab[2 + i - j, j] = value

    ri = r[1:-1]
    idx = np.arange(1, n - 1)
    ab[2 + 1, idx - 1] = 1.0 - h / (2.0 * ri)  # sub-diagonal A[i, i-1]
    ab[2, idx] = -2.0 - (h / ri) ** 2
    ab[2 - 1, idx + 1] = 1.0 + h / (2.0 * ri)  # super-diagonal A[i, i+1]
    rhs[1:-1] = -(1.0 - nu**2) * rho * w2 * ri * h * h / E

    # traction rows are divided by E/(1-nu^2): u' + nu u / r = -p (1-nu^2)/E
    scale = (1.0 - nu**2) / E
    put(n - 1, n - 3, 1.0 / (2 * h))
    put(n - 1, n - 2, -4.0 / (2 * h))
    put(n - 1, n - 1, 3.0 / (2 * h) + nu / r[-1])
    rhs[-1] = -load.outer_pressure * scale
    if geometry.is_solid:
        # regularity: u(eps) = eps * u'(eps)
        eps = r[0]
        put(0, 0, 1.0 + eps * 3.0 / (2 * h))
        put(0, 1, -eps * 4.0 / (2 * h))
        put(0, 2, eps * 1.0 / (2 * h))
        rhs[0] = 0.0
    else:
        put(0, 0, -3.0 / (2 * h) + nu / r[0])
        put(0, 1, 4.0 / (2 * h))
        put(0, 2, -1.0 / (2 * h))
        rhs[0] = -load.inner_pressure * scale

    try:
        u = solve_banded((2, 2), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(u)):
        raise SingularSystem("finite-difference system produced non-finite displacements")

    du = np.gradient(u, r, edge_order=2)
    c = E / (1.0 - nu**2)
    sr = c * (du + nu * u / r)
    st = c * (u / r + nu * du)
    vm = np.sqrt(np.maximum(sr * sr + st * st - sr * st, 0.0))
    return RadialProfile(
        radius=r,
        radial=sr,
        hoop=st,
        von_mises=vm,
        displacement=u,
        meta={"source": "finite-difference", "nodes": n},
    )


def equilibrium_residual(profile: RadialProfile, density: float, angular_speed: float, sign=1.0):
    """d(r sr)/dr - st + sign * rho w^2 r^2 evaluated by finite differences."""
    r = profile.radius
    flux = np.gradient(r * profile.radial, r, edge_order=2)
    return flux - profile.hoop + sign * density * angular_speed**2 * r * r


def _field_error(ref: np.ndarray, test: np.ndarray) -> float:
    scale = float(np.max(np.abs(ref)))
    diff = float(np.max(np.abs(test - ref)))
    if scale == 0.0:
        return diff
    return diff / scale


def _on_grid(profile: RadialProfile, radii: np.ndarray, name: str) -> np.ndarray:
    values = getattr(profile, name)
    if profile.radius.shape == radii.shape and np.array_equal(profile.radius, radii):
        return values
    return np.interp(radii, profile.radius, values)


FIELDS = ("radial", "hoop", "displacement")


@dataclass(frozen=True)
class ProfileComparison:
    max_rel_error: float
    field_errors: dict
    level_errors: tuple
    convergence_order: float | None


def _check_domains(analytic: RadialProfile, numeric: RadialProfile):
    span = analytic.radius[-1] - analytic.radius[0]
    tol = 1e-6 * max(abs(analytic.radius[-1]), span)
    if (
        abs(analytic.radius[0] - numeric.radius[0]) > tol
        or abs(analytic.radius[-1] - numeric.radius[-1]) > tol
    ):
        raise ValidationError(
            "profiles cover different domains: "
            f"[{analytic.radius[0]}, {analytic.radius[-1]}] vs "
            f"[{numeric.radius[0]}, {numeric.radius[-1]}]"
        )


def _level_error(analytic: RadialProfile, numeric: RadialProfile):
    _check_domains(analytic, numeric)
    # compare on the coarser grid
    coarse = numeric if len(numeric) <= len(analytic) else analytic
    radii = coarse.radius
    errors = {
        name: _field_error(_on_grid(analytic, radii, name), _on_grid(numeric, radii, name))
        for name in FIELDS
    }
    return max(errors.values()), errors


def compare_profiles(analytic: RadialProfile, *numeric: RadialProfile) -> ProfileComparison:
    """Relative error of numeric profiles against a reference.

    Each field is normalised by the reference's peak magnitude. With three
    numeric profiles on successively halved grids (coarse to fine) the
    observed convergence order is estimated too. The reported error is that
    of the finest level.
    """
    if not numeric:
        raise ValidationError("compare_profiles needs at least one numeric profile")
    results = [_level_error(analytic, p) for p in numeric]
    order = None
    if len(numeric) >= 3:
        spacings = [p.radius[1] - p.radius[0] for p in numeric]
        rates = []
        for (e0, _), (e1, _), h0, h1 in zip(results, results[1:], spacings, spacings[1:]):
            if e0 > 0 and e1 > 0:
                rates.append(math.log(e0 / e1) / math.log(h0 / h1))
        order = float(np.mean(rates)) if rates else None
    worst, fields = results[-1]
    return ProfileComparison(
        max_rel_error=worst,
        field_errors=fields,
        level_errors=tuple(e for e, _ in results),
        convergence_order=order,
    )


def refinement_levels(node_count: int, levels: int = 3):
    """Node counts whose grid spacing halves at each level."""
    counts = [node_count]
    for _ in range(levels - 1):
        counts.append(2 * counts[-1] - 1)
    return counts


def interface_compliance(material, geometry, radius, angular_speed=0.0, config=None):
    """Numeric radial displacement at ``radius`` per unit inner pressure, per unit
    outer pressure and under spin alone.

    Used to assemble press-fit compatibility equations independently of the
    closed forms.
    """
    config = config or OracleConfig()
    out = []
    for load in (
        LoadCase(0.0, 0.0 if geometry.is_solid else 1.0, 0.0),
        LoadCase(0.0, 0.0, 1.0),
        LoadCase(angular_speed, 0.0, 0.0),
    ):
        if load == LoadCase():
            out.append(0.0)
            continue
        prof = solve_radial_ode(material, geometry, load, config)
        out.append(float(np.interp(radius, prof.radius, prof.displacement)))
    return tuple(out)


def assembly_pressures(bodies, interferences, angular_speed=0.0, config=None):
    """Interface pressures of concentric bodies from finite-difference compliances.

    ``bodies`` is a sequence of ``(material, geometry)`` from the axis outward;
    ``interferences[i]`` is the radial interference between body ``i`` and
    body ``i + 1``. Contact separation is not modelled here.
    """
    config = config or OracleConfig()
    n = len(bodies) - 1
    if n < 1:
        return np.zeros(0)
    if len(interferences) != n:
        raise ValidationError("need one interference per interface")
    comp = []
    for k, (mat, geom) in enumerate(bodies):
        inner = interface_compliance(mat, geom, geom.inner_radius, angular_speed, config)
        outer = interface_compliance(mat, geom, geom.outer_radius, angular_speed, config)
        comp.append((inner, outer))
    A = np.zeros((n, n))
    rhs = np.zeros(n)
    for i in range(n):
        # u_{i+1}(R_i) - u_i(R_i) = delta_i
        ci_out, co_out, cw_out = comp[i + 1][0]  # outer body at its inner radius
        ci_in, co_in, cw_in = comp[i][1]  # inner body at its outer radius
        A[i, i] += ci_out - co_in
        if i + 1 < n:
            A[i, i + 1] += co_out
        if i - 1 >= 0:
            A[i, i - 1] -= ci_in
        rhs[i] = interferences[i] - (cw_out - cw_in)
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
