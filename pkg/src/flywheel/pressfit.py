"""Shrink-fit mechanics for concentric rotating bodies.

Bodies are listed from the axis outward. Interface ``i`` sits at the outer
radius of body ``i`` and carries the contact pressure ``p_i``; the radial
interference of that fit is stored on the outer body (``rings[i + 1]``).

Two pressure models are offered:

``superposition``
    contact pressures are solved at rest and held fixed while spinning, so
    rotational and fit stresses simply add.
``full_compatibility``
    displacement compatibility includes the spin-induced expansion of each
    body, so contact pressures relax with speed; an interface whose pressure
    would turn tensile is released (separated).

In both models every stress component is affine in w^2 between separation
events, which :func:`admissible_speed` exploits to find the speed limit
without bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from flywheel.model import (
    AnnulusGeometry,
    FlywheelError,
    LoadCase,
    Material,
    RadialProfile,
    ValidationError,
    allowable_stress,
)
from flywheel.stress import (
    _displacement,
    _fields,
    max_von_mises,
    max_von_mises_many,
    scan_refine_max,
    stress_profile,
    von_mises,
)

MODES = ("superposition", "full_compatibility")
CRITERIA = ("exact_combined", "lemma_bound")


class SingularCompatibility(FlywheelError):
    pass


class DegenerateGrid(FlywheelError, ValueError):
    pass


@dataclass(frozen=True)
class RingSpec:
    material: Material
    inner_radius: float
    outer_radius: float
    interference: float = 0.0  # radial, against the next body inward
    height: float = 1.0

    def __post_init__(self):
        if not self.interference >= 0:
            raise ValidationError(f"interference must be >= 0, got {self.interference}")
        # geometry validation
        self.geometry

    @property
    def geometry(self) -> AnnulusGeometry:
        return AnnulusGeometry(self.inner_radius, self.outer_radius, self.height)


def validate_assembly(rings) -> tuple:
    rings = tuple(rings)
    if not rings:
        raise ValidationError("an assembly needs at least one body")
    if rings[0].interference != 0:
        raise ValidationError("the innermost body has no inner neighbour; its interference must be 0")
    for k, ring in enumerate(rings[1:], start=1):
        if ring.inner_radius == 0:
            raise ValidationError(f"body {k} is solid but is not the innermost body")
        prev = rings[k - 1].outer_radius
        if not math.isclose(ring.inner_radius, prev, rel_tol=1e-9, abs_tol=0.0):
            raise ValidationError(
                f"body {k} starts at r={ring.inner_radius} but body {k - 1} ends at r={prev}; "
                "bodies must be nested and in contact"
            )
    return rings


def _unit_displacements(ring: RingSpec, r: float):
    """Displacement at ``r`` per unit inner pressure, unit outer pressure, unit w^2."""
    m = ring.material
    a, b = ring.inner_radius, ring.outer_radius
    nu, rho, E = m.poisson_ratio, m.density, m.elastic_modulus
    out = []
    for omega_sq, p_a, p_b in ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)):
        if a == 0 and p_a:
            out.append(0.0)
            continue
        sr, st = _fields(r, a, b, nu, rho, omega_sq, p_a, p_b)
        out.append(float(_displacement(r, sr, st, nu, E)))
    return tuple(out)


class _Compat:
    """Compatibility equations jump_i(p, s) = delta_i, linear in p and s = w^2."""

    def __init__(self, rings):
        self.rings = rings
        n = len(rings) - 1
        self.n = n
        self.delta = np.array([rings[i + 1].interference for i in range(n)])
        self.A = np.zeros((n, n))
        self.w = np.zeros(n)  # jump per unit s at zero pressure
        for i in range(n):
            R = rings[i].outer_radius
            ci_o, co_o, cw_o = _unit_displacements(rings[i + 1], R)
            ci_i, co_i, cw_i = _unit_displacements(rings[i], R)
            self.A[i, i] = ci_o - co_i
            if i + 1 < n:
                self.A[i, i + 1] = co_o
            if i > 0:
                self.A[i, i - 1] = -ci_i
            self.w[i] = cw_o - cw_i

    def jumps(self, p, s):
        return self.A @ p + s * self.w

    def affine(self, released, rotating: bool):
        """Pressures P0 + s P1 with the ``released`` interfaces held at zero."""
        n = self.n
        active = [i for i in range(n) if i not in released]
        P0, P1 = np.zeros(n), np.zeros(n)
        if active:
            sub = self.A[np.ix_(active, active)]
            try:
                P0[active] = np.linalg.solve(sub, self.delta[active])
                if rotating:
                    P1[active] = np.linalg.solve(sub, -self.w[active])
            except np.linalg.LinAlgError as exc:
                raise SingularCompatibility(str(exc)) from None
            if not (np.all(np.isfinite(P0)) and np.all(np.isfinite(P1))):
                raise SingularCompatibility("compatibility system is singular")
        return P0, P1

    def active_set(self, s, rotating: bool, released=frozenset()):
        """Contact state at s: no tensile contact and no overlap at released interfaces."""
        released = set(released)
        s_eff = s if rotating else 0.0
        for _ in range(2 * self.n + 2):
            P0, P1 = self.affine(released, rotating)
            p = P0 + s_eff * P1
            scale = max(float(np.max(np.abs(p))) if p.size else 0.0, 1.0)
            tensile = {i for i in range(self.n) if i not in released and p[i] < -1e-12 * scale}
            gap = self.jumps(p, s_eff) - self.delta
            gscale = max(float(np.max(np.abs(self.delta))) if self.n else 0.0, 1e-30)
            overlap = {i for i in released if gap[i] < -1e-12 * max(gscale, abs(gap[i]))}
            if not tensile and not overlap:
                return frozenset(released), P0, P1
            released = (released | tensile) - overlap
        raise SingularCompatibility("contact state did not settle")


@dataclass(frozen=True, eq=False)
class AssemblySolution:
    mode: str
    angular_speed: float
    interface_pressures: tuple
    separated: tuple
    profiles: tuple
    body_maxima: tuple  # (von Mises, radius) per body
    max_von_mises: float
    max_location: tuple  # (body index, radius)
    compatibility_residuals: tuple = field(default=())

    @property
    def any_separated(self) -> bool:
        return any(self.separated)


def _body_loads(n_bodies, pressures):
    loads = []
    for k in range(n_bodies):
        p_in = pressures[k - 1] if k > 0 else 0.0
        p_out = pressures[k] if k < n_bodies - 1 else 0.0
        loads.append((float(p_in), float(p_out)))
    return loads


def assembly_solve(
    rings, angular_speed: float = 0.0, mode: str = "superposition", n_samples: int = 201
) -> AssemblySolution:
    """Contact pressures and per-body stress profiles of a spinning press-fit stack."""
    rings = validate_assembly(rings)
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if not angular_speed >= 0:
        raise ValidationError(f"angular_speed must be >= 0, got {angular_speed}")
    compat = _Compat(rings)
    s = angular_speed**2
    rotating = mode == "full_compatibility"
    released, P0, P1 = compat.active_set(s, rotating)
    p = np.maximum(P0 + (s if rotating else 0.0) * P1, 0.0)
    s_compat = s if rotating else 0.0
    residuals = compat.jumps(p, s_compat) - compat.delta

    profiles, maxima = [], []
    for ring, (p_in, p_out) in zip(rings, _body_loads(len(rings), p)):
        load = LoadCase(angular_speed, p_in, p_out)
        profiles.append(stress_profile(ring.material, ring.geometry, load, n_samples))
        maxima.append(max_von_mises(ring.material, ring.geometry, load))
    k = int(np.argmax([m[0] for m in maxima]))
    return AssemblySolution(
        mode=mode,
        angular_speed=angular_speed,
        interface_pressures=tuple(float(x) for x in p),
        separated=tuple(i in released for i in range(compat.n)),
        profiles=tuple(profiles),
        body_maxima=tuple(maxima),
        max_von_mises=maxima[k][0],
        max_location=(k, maxima[k][1]),
        compatibility_residuals=tuple(float(x) for x in residuals),
    )


def interference_pressure(inner_body: RingSpec, outer_ring: RingSpec, delta: float | None = None) -> float:
    """Static contact pressure of a single fit from thick-cylinder compliances.

    For a solid shaft of radius a in a same-material disk of radius b this is
    E delta (b^2 - a^2) / (2 a b^2).
    """
    delta = outer_ring.interference if delta is None else delta
    if not delta >= 0:
        raise ValidationError(f"interference must be >= 0, got {delta}")
    R = inner_body.outer_radius
    if not math.isclose(outer_ring.inner_radius, R, rel_tol=1e-9):
        raise ValidationError("bodies are not nested: outer ring bore must equal the inner body's outer radius")
    mi, mo = inner_body.material, outer_ring.material
    ti2 = (inner_body.inner_radius / R) ** 2
    to2 = (R / outer_ring.outer_radius) ** 2
    q_in = (1 + ti2) / (1 - ti2)
    q_out = (1 + to2) / (1 - to2)
    compliance = R * ((q_out + mo.poisson_ratio) / mo.elastic_modulus + (q_in - mi.poisson_ratio) / mi.elastic_modulus)
    return delta / compliance


def separation_speed(rings, search_bound: float | None = None, rel_tol: float = 1e-6):
    """Lowest speed at which each interface pressure relaxes to zero (full compatibility).

    The root is bracketed by doubling from a speed scale of the assembly and
    refined by bisection. Interfaces that stay closed up to ``search_bound``
    report ``inf``.
    """
    rings = validate_assembly(rings)
    compat = _Compat(rings)
    if compat.n == 0:
        return []
    # speed at which spin stress in the outermost body is of order its strength
    outer = rings[-1]
    omega_ref = math.sqrt(outer.material.yield_strength / (outer.material.density * outer.outer_radius**2))
    bound = search_bound if search_bound is not None else 1e3 * omega_ref

    def pressure(i, omega):
        _, P0, P1 = compat.active_set(omega**2, True)
        return max(P0[i] + omega**2 * P1[i], 0.0)

    speeds = []
    for i in range(compat.n):
        if pressure(i, 0.0) <= 0.0:
            speeds.append(0.0)
            continue
        lo, hi = 0.0, omega_ref / 64
        while pressure(i, hi) > 0.0:
            lo, hi = hi, 2 * hi
            if lo >= bound:
                hi = math.inf
                break
        if math.isinf(hi):
            speeds.append(math.inf)
            continue
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if pressure(i, mid) > 0.0:
                lo = mid
            else:
                hi = mid
        speeds.append(hi)
    return speeds


# ---------------------------------------------------------------------------
# Simplified upper bound on the combined maximum


@dataclass(frozen=True)
class LemmaBound:
    combined: float
    rotation: float
    pressure: float
    holds: bool
    combined_at: float
    rotation_at: float
    pressure_at: float

    @property
    def bound(self) -> float:
        return self.rotation + self.pressure

    @property
    def ratio(self) -> float:
        return self.combined / self.bound if self.bound > 0 else 1.0


def lemma_bound_many(nu, rho, omega, a, b, p_a, rel_tol: float = 1e-9):
    """Batched bound check. Returns a dict of arrays."""
    combined, at_c = max_von_mises_many(nu, rho, omega, a, b, p_a)
    rotation, at_w = max_von_mises_many(nu, rho, omega, a, b, 0.0)
    pressure, at_p = max_von_mises_many(nu, rho, 0.0, a, b, p_a)
    bound = rotation + pressure
    return {
        "combined": combined,
        "rotation": rotation,
        "pressure": pressure,
        "bound": bound,
        "holds": combined <= bound * (1.0 + rel_tol),
        "combined_at": at_c,
        "rotation_at": at_w,
        "pressure_at": at_p,
    }


def lemma_bound(material: Material, geometry: AnnulusGeometry, angular_speed: float, inner_pressure: float) -> LemmaBound:
    """Combined maximum under spin plus bore pressure against the sum of the
    separate maxima. All three maxima are global searches."""
    if geometry.is_solid:
        raise ValidationError("the bound applies to an annulus with bore pressure")
    out = lemma_bound_many(
        material.poisson_ratio,
        material.density,
        angular_speed,
        geometry.inner_radius,
        geometry.outer_radius,
        inner_pressure,
    )
    return LemmaBound(
        combined=float(out["combined"][0]),
        rotation=float(out["rotation"][0]),
        pressure=float(out["pressure"][0]),
        holds=bool(out["holds"][0]),
        combined_at=float(out["combined_at"][0]),
        rotation_at=float(out["rotation_at"][0]),
        pressure_at=float(out["pressure_at"][0]),
    )


@dataclass(frozen=True, eq=False)
class LinearFit:
    c1: float  # Pa per (rad/s)^2
    c2: float  # Pa per unit shrink-fit ratio
    r_squared: float
    criterion: str
    omega: np.ndarray
    shrink: np.ndarray
    stress: np.ndarray  # shape (len(omega), len(shrink))


def shaft_fit_pressure(material, geometry, shrink, shaft_material=None):
    """Static bore pressure of an annulus fitted on a solid shaft with u' = delta / a."""
    shaft = RingSpec(shaft_material or material, 0.0, geometry.inner_radius)
    disk = RingSpec(material, geometry.inner_radius, geometry.outer_radius)
    return interference_pressure(shaft, disk, 1.0) * geometry.inner_radius * np.asarray(shrink, dtype=float)


def rotation_limit(material: Material, geometry: AnnulusGeometry, safety_factor: float = 1.0) -> float:
    """Speed at which the spin-only von Mises maximum reaches the allowable stress."""
    unit, _ = max_von_mises(material, geometry, LoadCase(1.0))
    return math.sqrt(allowable_stress(material, safety_factor) / unit)


def fit_linear_coefficients(
    material: Material,
    geometry: AnnulusGeometry,
    omega_values=None,
    shrink_values=None,
    criterion: str = "exact",
    shaft_material: Material | None = None,
) -> LinearFit:
    """Least-squares fit sigma_m ~ C1 w^2 + C2 u' over a grid (fit pressures held static).

    ``criterion="exact"`` fits the true combined maximum; ``"bound"`` fits the
    sum of the separate spin and fit maxima, which is exactly of that form.
    Defaults: 10 speeds from rest to the spin-only limit and 10 shrink ratios
    from 0 to 0.1 %.
    """
    if geometry.is_solid:
        raise ValidationError("the linear criterion applies to an annulus fitted on a shaft")
    if criterion not in ("exact", "bound"):
        raise ValidationError(f"criterion must be 'exact' or 'bound', got {criterion!r}")
    if omega_values is None:
        omega_values = np.linspace(0.0, rotation_limit(material, geometry), 10)
    if shrink_values is None:
        shrink_values = np.linspace(0.0, 1e-3, 10)
    omega = np.asarray(omega_values, dtype=float)
    shrink = np.asarray(shrink_values, dtype=float)
    if omega.size == 0 or shrink.size == 0:
        raise DegenerateGrid("empty grid")
    if not np.any(shrink != 0):
        raise DegenerateGrid("all shrink-fit ratios are zero; C2 is indeterminate")
    if not np.any(omega != 0):
        raise DegenerateGrid("all speeds are zero; C1 is indeterminate")

    W, U = np.meshgrid(omega, shrink, indexing="ij")
    P = shaft_fit_pressure(material, geometry, U, shaft_material)
    args = (material.poisson_ratio, material.density)
    a, b = geometry.inner_radius, geometry.outer_radius
    if criterion == "exact":
        sigma, _ = max_von_mises_many(*args, W.ravel(), a, b, P.ravel())
    else:
        rot, _ = max_von_mises_many(*args, W.ravel(), a, b, 0.0)
        prs, _ = max_von_mises_many(*args, 0.0, a, b, P.ravel())
        sigma = rot + prs
    X = np.column_stack([W.ravel() ** 2, U.ravel()])
    coef, *_ = np.linalg.lstsq(X, sigma, rcond=None)
    resid = sigma - X @ coef
    total = sigma - sigma.mean()
    r2 = 1.0 - float(resid @ resid) / float(total @ total)
    return LinearFit(
        c1=float(coef[0]),
        c2=float(coef[1]),
        r_squared=r2,
        criterion=criterion,
        omega=omega,
        shrink=shrink,
        stress=sigma.reshape(W.shape),
    )


# ---------------------------------------------------------------------------
# Speed limits of an assembly


@dataclass(frozen=True)
class SpeedLimit:
    speed: float  # rad/s; 0 when the assembly already fails at rest
    body: int
    radius: float
    utilization_at_rest: float


def _pressure_fields(ring, p_in, p_out, r):
    m = ring.material
    return _fields(r, ring.inner_radius, ring.outer_radius, m.poisson_ratio, m.density, 0.0, p_in, p_out)


def _rotation_fields(ring, r):
    m = ring.material
    return _fields(r, ring.inner_radius, ring.outer_radius, m.poisson_ratio, m.density, 1.0, 0.0, 0.0)


def _max_over_body(ring, func):
    """Global maximum over the body's radial span of ``func(r) -> values``."""
    values, where = scan_refine_max(func, ring.inner_radius, ring.outer_radius)
    return float(values[0]), float(where[0])


def _pressure_max(ring, p_in, p_out):
    if p_in == 0 and p_out == 0:
        return 0.0, ring.inner_radius
    return _max_over_body(ring, lambda r: von_mises(*_pressure_fields(ring, p_in, p_out, r)))


def _rotation_max(ring):
    return _max_over_body(ring, lambda r: von_mises(*_rotation_fields(ring, r)))


def body_utilization(rings, angular_speed, mode="superposition", criterion="exact_combined", safety_factor=1.0):
    """Worst stress-to-allowable ratio over the assembly at a given speed.

    Returns ``(utilization, body, radius, stress)``.
    """
    rings = validate_assembly(rings)
    if criterion not in CRITERIA:
        raise ValidationError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    compat = _Compat(rings)
    s = angular_speed**2
    rotating = mode == "full_compatibility"
    _, P0, P1 = compat.active_set(s, rotating)
    p = np.maximum(P0 + (s if rotating else 0.0) * P1, 0.0)
    worst = (-1.0, 0, 0.0, 0.0)
    for k, (ring, (p_in, p_out)) in enumerate(zip(rings, _body_loads(len(rings), p))):
        allow = allowable_stress(ring.material, safety_factor)
        if criterion == "exact_combined":
            stress, where = max_von_mises(ring.material, ring.geometry, LoadCase(angular_speed, p_in, p_out))
        else:
            rot, where = _rotation_max(ring)
            prs, _ = _pressure_max(ring, p_in, p_out)
            stress = rot * s + prs
        u = stress / allow
        if u > worst[0]:
            worst = (u, k, where, stress)
    return worst


def _quadratic_exceedance(A, B, allow):
    """Largest s >= 0 with vm(A + s B) <= allow, given vm(A) <= allow (elementwise)."""
    (ax, ay), (bx, by) = A, B
    alpha = bx * bx + by * by - bx * by
    beta = 2 * ax * bx + 2 * ay * by - ax * by - ay * bx
    gamma = ax * ax + ay * ay - ax * ay - allow * allow
    gamma = np.minimum(gamma, 0.0)
    disc = np.sqrt(np.maximum(beta * beta - 4 * alpha * gamma, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        root_pos = np.where(beta + disc > 0, -2 * gamma / (beta + disc), np.inf)
        root_neg = np.where(alpha > 0, (-beta + disc) / (2 * alpha), np.inf)
    return np.where(beta >= 0, root_pos, root_neg)


def admissible_speed(rings, mode="superposition", criterion="exact_combined", safety_factor=1.0) -> SpeedLimit:
    """Highest speed the assembly reaches from rest with every body within its allowable stress.

    Between contact-state changes every stress component is A(r) + s B(r)
    with s = w^2, so the first exceedance per radius is the larger root of a
    convex quadratic (exact criterion) and the body limit is its minimum over
    r. Under the bound criterion the spin part is linear in s and the fit part
    convex, so a bracketed root is used instead.
    """
    rings = validate_assembly(rings)
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if criterion not in CRITERIA:
        raise ValidationError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    u0, body0, r0, _ = body_utilization(rings, 0.0, mode, criterion, safety_factor)
    if u0 > 1.0 + 1e-12:
        return SpeedLimit(0.0, body0, r0, u0)
    compat = _Compat(rings)
    rotating = mode == "full_compatibility"
    allow = [allowable_stress(ring.material, safety_factor) for ring in rings]
    rot_max = [_rotation_max(ring) for ring in rings] if criterion == "lemma_bound" else None

    released, P0, P1 = compat.active_set(0.0, rotating)
    s_start = 0.0
    for _ in range(4 * len(rings) + 4):
        # end of this contact state
        s_end = math.inf
        trigger = None
        if rotating and compat.n:
            for i in range(compat.n):
                if i not in released and P1[i] < 0 and P0[i] + s_start * P1[i] >= 0:
                    # a contact that is already at zero pressure opens immediately
                    s_hit = max(-P0[i] / P1[i], s_start)
                    if s_hit < s_end:
                        s_end, trigger = s_hit, ("open", i)
            gap0 = compat.jumps(P0, 0.0) - compat.delta
            dgap = compat.jumps(P1, 1.0) - 0.0
            for i in released:
                if dgap[i] < 0:
                    s_hit = -gap0[i] / dgap[i]
                    if s_start < s_hit < s_end:
                        s_end, trigger = s_hit, ("close", i)
        loads0 = _body_loads(len(rings), P0)
        loads1 = _body_loads(len(rings), P1 if rotating else np.zeros_like(P1))

        best = (math.inf, 0, rings[0].inner_radius)
        for k, ring in enumerate(rings):
            (pi0, po0), (pi1, po1) = loads0[k], loads1[k]
            if criterion == "exact_combined":
                def neg_root(r, ring=ring, pi0=pi0, po0=po0, pi1=pi1, po1=po1, k=k):
                    # expand about s_start, where the body is known to be within limits
                    Ap = _pressure_fields(ring, pi0 + s_start * pi1, po0 + s_start * po1, r)
                    Bp = _pressure_fields(ring, pi1, po1, r)
                    Bw = _rotation_fields(ring, r)
                    A = (Ap[0] + s_start * Bw[0], Ap[1] + s_start * Bw[1])
                    B = (Bp[0] + Bw[0], Bp[1] + Bw[1])
                    return -_quadratic_exceedance(A, B, allow[k])

                value, where = _max_over_body(ring, neg_root)
                s_k = s_start - value
            else:
                m_rot = rot_max[k][0]

                def excess(s, ring=ring, k=k, pi0=pi0, po0=po0, pi1=pi1, po1=po1):
                    prs, _ = _pressure_max(ring, pi0 + s * pi1, po0 + s * po1)
                    return m_rot * s + prs - allow[k]

                where = rot_max[k][1]
                if excess(s_start) > 0:
                    s_k = s_start
                else:
                    hi = max(s_start, allow[k] / m_rot)
                    while excess(hi) <= 0:
                        hi *= 2
                    s_k = brentq(excess, s_start, hi, xtol=1e-14 * hi, rtol=1e-14)
            if s_k < best[0]:
                best = (s_k, k, where)
        s_lim, k_lim, r_lim = best
        if s_lim <= s_end:
            return SpeedLimit(math.sqrt(max(s_lim, 0.0)), k_lim, r_lim, u0)
        kind, i = trigger
        released = (set(released) | {i}) if kind == "open" else (set(released) - {i})
        released = frozenset(released)
        P0, P1 = compat.affine(released, rotating)
        s_start = s_end
    raise SingularCompatibility("contact state changed too many times")
