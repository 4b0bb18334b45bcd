"""Closed-form plane-stress solutions for rotating solid and annular disks.

The private ``_fields`` kernel is fully broadcasting so that batches of
cases (randomised property suites, contour grids, speed searches) run as
single numpy expressions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from flywheel.model import (
    AnnulusGeometry,
    InvalidGeometry,
    InvalidLoad,
    LoadCase,
    Material,
    RadialProfile,
    RadiusOutOfDomain,
    StressState,
    ValidationError,
)

SCAN_POINTS = 1024
REFINE_TOL = 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def von_mises(radial, hoop):
    """Plane-stress von Mises stress sqrt(sr^2 + st^2 - sr*st)."""
    radial = np.asarray(radial, dtype=float)
    hoop = np.asarray(hoop, dtype=float)
    # the quadratic form is positive semi-definite; clip rounding noise at zero
    sq = np.maximum(radial * radial + hoop * hoop - radial * hoop, 0.0)
    out = np.sqrt(sq)
    return float(out) if out.ndim == 0 else out


def _solid_fields(r, b, nu, rho, omega_sq, p_b):
    k = (3.0 + nu) / 8.0 * rho * omega_sq * b * b
    rb = (r / b) ** 2
    sr = -p_b + k * (1.0 - rb)
    st = -p_b + k * (1.0 - (1.0 + 3.0 * nu) / (3.0 + nu) * rb)
    return sr, st


def _annulus_fields(r, a, b, nu, rho, omega_sq, p_a, p_b):
    t2 = (a / b) ** 2
    a2r = (a / r) ** 2
    b2r = (b / r) ** 2
    rb = (r / b) ** 2
    k = (3.0 + nu) / 8.0 * rho * omega_sq * b * b
    inner = p_a * t2 / (1.0 - t2)
    outer = p_b / (1.0 - t2)
    sr = inner * (1.0 - b2r) - outer * (1.0 - a2r) + k * (t2 + 1.0 - rb - a2r)
    st = (
        inner * (1.0 + b2r)
        - outer * (1.0 + a2r)
        + k * (t2 + 1.0 - (1.0 + 3.0 * nu) / (3.0 + nu) * rb + a2r)
    )
    return sr, st


def _fields(r, a, b, nu, rho, omega_sq, p_a, p_b):
    """Radial and hoop stress at ``r``; ``a == 0`` selects the solid disk."""
    if np.ndim(a) == 0:
        if a == 0:
            return _solid_fields(r, b, nu, rho, omega_sq, p_b)
        return _annulus_fields(r, a, b, nu, rho, omega_sq, p_a, p_b)
    a = np.asarray(a, dtype=float)
    solid = a == 0
    safe_a = np.where(solid, 1.0, a)
    safe_b = np.where(solid, 2.0, b)
    safe_r = np.where(solid, 1.5, r)
    sr_s, st_s = _solid_fields(r, b, nu, rho, omega_sq, p_b)
    sr_a, st_a = _annulus_fields(safe_r, safe_a, safe_b, nu, rho, omega_sq, p_a, p_b)
    return np.where(solid, sr_s, sr_a), np.where(solid, st_s, st_a)


def _displacement(r, radial, hoop, nu, modulus):
    """Plane-stress radial displacement u = r (st - nu sr) / E."""
    return r * (hoop - nu * radial) / modulus


def _check_radius(r, lo, hi):
    r_arr = np.asarray(r, dtype=float)
    slack = 1e-12 * hi
    if np.any(r_arr < lo - slack) or np.any(r_arr > hi + slack) or np.any(~np.isfinite(r_arr)):
        raise RadiusOutOfDomain(f"radius must lie in [{lo}, {hi}], got {r}")
    return np.clip(r_arr, lo, hi)


def _material_args(material: Material):
    return material.poisson_ratio, material.density


def solid_disk_stress(
    material: Material, outer_radius: float, load: LoadCase, r: float
) -> StressState:
    """Stress in a spinning solid disk with pressure on its rim."""
    if load.inner_pressure != 0:
        raise InvalidLoad("a solid disk has no inner surface; inner_pressure must be 0")
    if not outer_radius > 0:
        raise InvalidGeometry(f"outer_radius must be > 0, got {outer_radius}")
    r = float(_check_radius(r, 0.0, outer_radius))
    nu, rho = _material_args(material)
    sr, st = _solid_fields(r, outer_radius, nu, rho, load.angular_speed**2, load.outer_pressure)
    return StressState(r, float(sr), float(st), von_mises(sr, st))


def annulus_stress(
    material: Material, geometry: AnnulusGeometry, load: LoadCase, r: float
) -> StressState:
    """Stress in a spinning annulus with pressures on both surfaces."""
    if geometry.is_solid:
        raise InvalidGeometry("inner_radius is 0; use solid_disk_stress for a solid disk")
    a, b = geometry.inner_radius, geometry.outer_radius
    r = float(_check_radius(r, a, b))
    nu, rho = _material_args(material)
    sr, st = _annulus_fields(
        r, a, b, nu, rho, load.angular_speed**2, load.inner_pressure, load.outer_pressure
    )
    return StressState(r, float(sr), float(st), von_mises(sr, st))


def disk_stress(material, geometry, load, r) -> StressState:
    if geometry.is_solid:
        return solid_disk_stress(material, geometry.outer_radius, load, r)
    return annulus_stress(material, geometry, load, r)


def stress_components(material: Material, geometry: AnnulusGeometry, load: LoadCase, r):
    """Vectorised (radial, hoop, displacement) at the radii ``r``."""
    if geometry.is_solid and load.inner_pressure != 0:
        raise InvalidLoad("a solid disk has no inner surface; inner_pressure must be 0")
    r = _check_radius(r, geometry.inner_radius, geometry.outer_radius)
    nu, rho = _material_args(material)
    sr, st = _fields(
        r,
        geometry.inner_radius,
        geometry.outer_radius,
        nu,
        rho,
        load.angular_speed**2,
        load.inner_pressure,
        load.outer_pressure,
    )
    return sr, st, _displacement(r, sr, st, nu, material.elastic_modulus)


def stress_profile(
    material: Material,
    geometry: AnnulusGeometry,
    load: LoadCase,
    n_samples: int = 201,
    radii=None,
) -> RadialProfile:
    """Sample the closed-form solution on ``n_samples`` uniform radii (or on ``radii``)."""
    if radii is None:
        if n_samples < 2:
            raise ValidationError(f"n_samples must be >= 2, got {n_samples}")
        radii = np.linspace(geometry.inner_radius, geometry.outer_radius, n_samples)
    radii = np.asarray(radii, dtype=float)
    sr, st, u = stress_components(material, geometry, load, radii)
    return RadialProfile(
        radius=radii,
        radial=sr,
        hoop=st,
        von_mises=von_mises(sr, st),
        displacement=u,
        meta={"source": "analytic"},
    )


def scan_refine_max(func, lo, hi, n_scan: int = SCAN_POINTS, tol: float = REFINE_TOL):
    """Global maximum of ``func`` on ``[lo, hi]`` for a batch of intervals.

    ``func`` maps an ``(m, k)`` array of abscissae to values of the same shape,
    row ``i`` belonging to interval ``i``. A uniform scan brackets the best
    sample, then golden-section search refines inside the bracket down to
    ``tol * max(|hi|, hi - lo)``. Returns ``(values, locations)`` of shape ``(m,)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    m = lo.size
    rows = np.arange(m)
    frac = np.linspace(0.0, 1.0, n_scan)
    grid = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    grid[:, -1] = hi
    vals = func(grid)
    idx = np.argmax(vals, axis=1)
    best_v = vals[rows, idx]
    best_x = grid[rows, idx]

    left = grid[rows, np.maximum(idx - 1, 0)]
    right = grid[rows, np.minimum(idx + 1, n_scan - 1)]
    width = float(np.max(right - left)) if m else 0.0
    tol_abs = tol * np.maximum(np.abs(hi), hi - lo)
    tiny = float(np.min(tol_abs)) if m else 1.0
    if width <= 0 or tiny <= 0:
        return best_v, best_x
    n_iter = max(1, int(math.ceil(math.log(width / tiny) / math.log(1.0 / _GOLDEN))))

    def f(x):
        return func(x[:, None])[:, 0]

    x1 = right - _GOLDEN * (right - left)
    x2 = left + _GOLDEN * (right - left)
    f1, f2 = f(x1), f(x2)
    for _ in range(n_iter):
        keep_left = f1 >= f2
        left = np.where(keep_left, left, x1)
        right = np.where(keep_left, x2, right)
        old_x1, old_x2, old_f1, old_f2 = x1, x2, f1, f2
        x1 = np.where(keep_left, right - _GOLDEN * (right - left), old_x2)
        x2 = np.where(keep_left, old_x1, left + _GOLDEN * (right - left))
        fn = f(np.where(keep_left, x1, x2))
        f1 = np.where(keep_left, fn, old_f2)
        f2 = np.where(keep_left, old_f1, fn)
    xm = np.where(f1 >= f2, x1, x2)
    fm = np.maximum(f1, f2)
    # ties within rounding keep the scanned sample, so exact endpoint maxima stay put
    better = fm > best_v + 8 * np.finfo(float).eps * np.abs(best_v)
    return np.where(better, fm, best_v), np.where(better, xm, best_x)


def max_von_mises_many(nu, rho, omega, a, b, p_a=0.0, p_b=0.0):
    """Batched global von Mises maximum; every argument broadcasts to shape ``(m,)``."""
    nu, rho, omega, a, b, p_a, p_b = (
        np.atleast_1d(np.asarray(x, dtype=float))
        for x in np.broadcast_arrays(nu, rho, omega, a, b, p_a, p_b)
    )
    col = lambda x: x[:, None]  # noqa: E731

    def vm(r):
        sr, st = _fields(r, col(a), col(b), col(nu), col(rho), col(omega**2), col(p_a), col(p_b))
        return von_mises(sr, st)

    return scan_refine_max(vm, a, b)


def max_von_mises(material: Material, geometry: AnnulusGeometry, load: LoadCase):
    """Global maximum of the von Mises stress and the radius where it occurs.

    The location is searched for, never assumed.
    """
    if geometry.is_solid and load.inner_pressure != 0:
        raise InvalidLoad("a solid disk has no inner surface; inner_pressure must be 0")
    value, where = max_von_mises_many(
        material.poisson_ratio,
        material.density,
        load.angular_speed,
        geometry.inner_radius,
        geometry.outer_radius,
        load.inner_pressure,
        load.outer_pressure,
    )
    return float(value[0]), float(where[0])


def max_rotational_radial_stress(
    material: Material, geometry: AnnulusGeometry, angular_speed: float
):
    """Peak spin-induced radial stress of an annulus: at sqrt(ab), (3+nu)/8 rho w^2 (b-a)^2."""
    if geometry.is_solid:
        raise InvalidGeometry("the sqrt(ab) location only exists for an annulus")
    a, b = geometry.inner_radius, geometry.outer_radius
    nu, rho = _material_args(material)
    value = (3.0 + nu) / 8.0 * rho * angular_speed**2 * (b - a) ** 2
    return value, math.sqrt(a * b)


CONTOUR_KINDS = {
    "rotational-radial": ("rotation", 0),
    "rotational-hoop": ("rotation", 1),
    "inner-pressure-radial": ("inner", 0),
    "inner-pressure-hoop": ("inner", 1),
    "outer-pressure-radial": ("outer", 0),
    "outer-pressure-hoop": ("outer", 1),
}


@dataclass(frozen=True, eq=False)
class ContourGrid:
    """Dimensionless stress factor over (t, xi), xi = (r - a) / (b - a).

    Rotational factors multiply rho w^2 b^2; pressure factors multiply the
    applied pressure.
    """

    kind: str
    poisson_ratio: float
    t_axis: np.ndarray
    r_axis: np.ndarray
    values: np.ndarray

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t\\xi"] + [repr(float(x)) for x in self.r_axis])
        for t, row in zip(self.t_axis, self.values):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text


def default_t_axis(n: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 2)[1:-1]


def default_r_axis(n: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def contour_grid(kind: str, poisson_ratio: float, t_axis=None, r_axis=None) -> ContourGrid:
    if kind not in CONTOUR_KINDS:
        raise ValidationError(f"unknown contour kind {kind!r}; expected one of {sorted(CONTOUR_KINDS)}")
    if not 0 < poisson_ratio < 0.5:
        raise ValidationError(f"poisson_ratio must lie in (0, 0.5), got {poisson_ratio}")
    t_axis = default_t_axis() if t_axis is None else np.asarray(t_axis, dtype=float)
    r_axis = default_r_axis() if r_axis is None else np.asarray(r_axis, dtype=float)
    if t_axis.ndim != 1 or r_axis.ndim != 1 or t_axis.size == 0 or r_axis.size == 0:
        raise ValidationError("contour axes must be non-empty 1-D sequences")
    if np.any((t_axis <= 0) | (t_axis >= 1)):
        raise ValidationError("t axis values must lie in (0, 1)")
    if np.any((r_axis < 0) | (r_axis > 1)):
        raise ValidationError("normalised radius values must lie in [0, 1]")

    load, component = CONTOUR_KINDS[kind]
    t = t_axis[:, None]
    r = t + r_axis[None, :] * (1.0 - t)  # b = 1
    omega_sq = 1.0 if load == "rotation" else 0.0
    p_a = 1.0 if load == "inner" else 0.0
    p_b = 1.0 if load == "outer" else 0.0
    fields = _annulus_fields(r, t, 1.0, poisson_ratio, 1.0, omega_sq, p_a, p_b)
    values = np.array(fields[component])
    return ContourGrid(kind, poisson_ratio, t_axis.copy(), r_axis.copy(), values)
