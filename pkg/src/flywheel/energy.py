"""Stored energy, speed limits, specific energy and topology lift ratios.

Topologies:

* ``shaftless`` - solid disk, no bore.
* ``type1`` - annulus shrink-fitted on a shaft; the fit adds a stress
  ``shrink_stress`` at the bore.
* ``type2`` - shell: annulus with no shaft (``type1`` with no fit stress).

Specific energies here follow the annulus-only mass and inertia, which is
how the closed forms are written.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from flywheel.model import (
    AnnulusGeometry,
    FlywheelError,
    Material,
    ValidationError,
    allowable_stress,
    rad_s_to_rpm,
)

J_PER_WH = 3600.0
J_PER_KWH = 3.6e6
TOPOLOGIES = ("shaftless", "type1", "type2")
DEFAULT_OPERATING_FRACTION = 126.0 / 148.0


class InfeasibleShrink(FlywheelError, ValueError):
    """The fit stress alone uses up the allowable stress."""


def kinetic_energy(inertia: float, angular_speed: float) -> float:
    """E = I w^2 / 2 in joules."""
    if inertia < 0 or angular_speed < 0:
        raise ValidationError("inertia and angular_speed must be >= 0")
    return 0.5 * inertia * angular_speed**2


def moment_of_inertia(geometry: AnnulusGeometry, density: float):
    """(mass, polar inertia) of a uniform annulus: m = rho pi (b^2 - a^2) h, I = m (a^2 + b^2) / 2."""
    if not density > 0:
        raise ValidationError(f"density must be > 0, got {density}")
    a, b = geometry.inner_radius, geometry.outer_radius
    mass = density * math.pi * (b * b - a * a) * geometry.height
    return mass, 0.5 * mass * (a * a + b * b)


def _check_topology(topology, t, shrink_stress, limit):
    if topology not in TOPOLOGIES:
        raise ValidationError(f"topology must be one of {TOPOLOGIES}, got {topology!r}")
    if not 0 <= t < 1:
        raise ValidationError(f"radius ratio t must lie in [0, 1), got {t}")
    if shrink_stress < 0:
        raise ValidationError("shrink_stress must be >= 0")
    if topology == "shaftless" and (t != 0 or shrink_stress != 0):
        raise ValidationError("a shaftless flywheel has no bore and no fit stress")
    if topology == "type2" and shrink_stress != 0:
        raise ValidationError("a shell flywheel has no shaft, so no fit stress")
    if shrink_stress >= limit:
        raise InfeasibleShrink(
            f"fit stress {shrink_stress:.4g} Pa leaves no margin below the allowable {limit:.4g} Pa"
        )


def bore_factor(t: float, nu: float) -> float:
    """kappa = (2 - 2 nu) t^2 / (3 + nu) + 2: bore hoop stress over (3+nu)/8 rho w^2 b^2."""
    return (2.0 - 2.0 * nu) * t * t / (3.0 + nu) + 2.0


def max_speed(
    material: Material,
    geometry: AnnulusGeometry,
    topology: str = "shaftless",
    shrink_stress: float = 0.0,
    safety_factor: float = 1.0,
) -> float:
    """Speed (rad/s) at which the peak stress reaches the allowable stress."""
    limit = allowable_stress(material, safety_factor)
    t = geometry.ratio
    _check_topology(topology, t, shrink_stress, limit)
    nu, rho, b = material.poisson_ratio, material.density, geometry.outer_radius
    omega_sq = 8.0 * (limit - shrink_stress) / ((3.0 + nu) * rho * b * b)
    if topology != "shaftless":
        omega_sq /= bore_factor(t, nu)
    return math.sqrt(omega_sq)


def specific_energy(
    material: Material,
    topology: str = "shaftless",
    t: float = 0.0,
    shrink_stress: float = 0.0,
    safety_factor: float = 1.0,
) -> float:
    """Specific energy in Wh/kg at the stress-limited speed."""
    limit = allowable_stress(material, safety_factor)
    _check_topology(topology, t, shrink_stress, limit)
    nu, rho = material.poisson_ratio, material.density
    if topology == "shaftless":
        joules = 2.0 * limit / (rho * (3.0 + nu))
    else:
        joules = (t * t + 1.0) * (limit - shrink_stress) / (rho * (3.0 + nu + (1.0 - nu) * t * t))
    return joules / J_PER_WH


def lift_ratio_type1(t: float, nu: float, delta_sigma: float) -> float:
    """Shaftless over shaft-fitted specific energy; ``delta_sigma`` = fit stress / strength."""
    if not 0 <= t < 1:
        raise ValidationError(f"t must lie in [0, 1), got {t}")
    if not 0 <= delta_sigma < 1:
        raise InfeasibleShrink(f"delta_sigma must lie in [0, 1), got {delta_sigma}")
    t2 = t * t
    return 2.0 / (1.0 - delta_sigma) * (1.0 - 2.0 * (1.0 + nu) * t2 / ((3.0 + nu) * (t2 + 1.0)))


def lift_ratio_type2(t: float, nu: float) -> float:
    """Shaftless over shell specific energy; 2 at t = 0, 4 / (3 + nu) at t = 1."""
    if not 0 <= t <= 1:
        raise ValidationError(f"t must lie in [0, 1], got {t}")
    t2 = t * t
    return 2.0 * ((1.0 - nu) * t2 / (3.0 + nu) + 1.0) / (1.0 + t2)


def lift_ratio_curves(t_values, nu: float, delta_sigmas=(0.0, 0.1, 0.2)):
    """Rows of (t, lambda_II, lambda_I for each delta_sigma) for plotting."""
    rows = []
    for t in t_values:
        row = {"t": float(t), "lambda_II": lift_ratio_type2(t, nu)}
        for ds in delta_sigmas:
            row[f"lambda_I[{ds:g}]"] = lift_ratio_type1(t, nu, ds) if t < 1 else float("nan")
        rows.append(row)
    return rows


def shape_factor_for(material: Material, specific_energy_wh_per_kg: float) -> float:
    """Shape factor K that turns tensile strength over density into the given Wh/kg."""
    return specific_energy_wh_per_kg * J_PER_WH * material.density / material.tensile_strength


def material_economics(material: Material, shape_factor: float):
    """(max specific energy in Wh/kg, energy per dollar in Wh/$) from E/m = K sigma / rho."""
    if not shape_factor > 0:
        raise ValidationError(f"shape factor must be > 0, got {shape_factor}")
    if material.cost_per_kg is None:
        raise ValidationError(f"material {material.name!r} has no cost_per_kg")
    wh_per_kg = shape_factor * material.tensile_strength / material.density / J_PER_WH
    return wh_per_kg, wh_per_kg / material.cost_per_kg


@dataclass(frozen=True)
class EnergyMetrics:
    kinetic_energy: float  # J at max_speed
    operational_energy: float  # J
    mass: float  # kg
    moment_of_inertia: float  # kg m^2
    max_speed: float  # rad/s
    tip_speed: float  # m/s
    specific_energy: float  # Wh/kg at max_speed
    operational_specific_energy: float  # Wh/kg
    energy_density: float  # kWh/m^3
    volume: float  # m^3
    volume_basis: str  # "material" or "envelope"
    energy_per_dollar: float | None  # Wh/$
    operating_fraction: float

    def as_dict(self) -> dict:
        return asdict(self)

    def table(self) -> dict:
        """Human-readable units, mirroring the usual specification table."""
        return {
            "mass [kg]": self.mass,
            "moment of inertia [kg m^2]": self.moment_of_inertia,
            "max rotational speed [rpm]": rad_s_to_rpm(self.max_speed),
            "tip speed [m/s]": self.tip_speed,
            "max energy [kWh]": self.kinetic_energy / J_PER_KWH,
            "operational energy [kWh]": self.operational_energy / J_PER_KWH,
            "specific energy [Wh/kg]": self.specific_energy,
            "operational specific energy [Wh/kg]": self.operational_specific_energy,
            f"energy density ({self.volume_basis} volume) [kWh/m^3]": self.energy_density,
        }


def energy_metrics(
    mass: float,
    inertia: float,
    angular_speed: float,
    outer_radius: float,
    *,
    density: float | None = None,
    envelope_volume: float | None = None,
    operating_fraction: float = DEFAULT_OPERATING_FRACTION,
    cost_per_kg: float | None = None,
) -> EnergyMetrics:
    """Energy figures of a rotor with known mass, inertia and top speed.

    Energy density uses the material volume (mass / density) unless an
    envelope volume is given.
    """
    if not mass > 0:
        raise ValidationError(f"mass must be > 0, got {mass}")
    if not 0 <= operating_fraction <= 1:
        raise ValidationError(f"operating_fraction must lie in [0, 1], got {operating_fraction}")
    if envelope_volume is not None:
        if not envelope_volume > 0:
            raise ValidationError("envelope_volume must be > 0")
        volume, basis = envelope_volume, "envelope"
    elif density is not None:
        volume, basis = mass / density, "material"
    else:
        raise ValidationError("need a density or an envelope volume for the energy density")
    energy = kinetic_energy(inertia, angular_speed)
    operational = energy * operating_fraction
    se = energy / mass / J_PER_WH
    return EnergyMetrics(
        kinetic_energy=energy,
        operational_energy=operational,
        mass=mass,
        moment_of_inertia=inertia,
        max_speed=angular_speed,
        tip_speed=angular_speed * outer_radius,
        specific_energy=se,
        operational_specific_energy=operational / mass / J_PER_WH,
        energy_density=energy / J_PER_KWH / volume,
        volume=volume,
        volume_basis=basis,
        energy_per_dollar=None if cost_per_kg is None else se / cost_per_kg,
        operating_fraction=operating_fraction,
    )


def design_report(
    topology: str,
    material: Material,
    geometry: AnnulusGeometry,
    shrink_stress: float = 0.0,
    operating_fraction: float = DEFAULT_OPERATING_FRACTION,
    *,
    envelope_volume: float | None = None,
    safety_factor: float = 1.0,
) -> EnergyMetrics:
    """Full metrics of a uniform disk design run at its stress-limited speed."""
    if topology == "shaftless" and not geometry.is_solid:
        raise ValidationError("a shaftless design must be a solid disk (inner_radius = 0)")
    if topology != "shaftless" and geometry.is_solid:
        raise ValidationError(f"a {topology} design needs a bore (inner_radius > 0)")
    speed = max_speed(material, geometry, topology, shrink_stress, safety_factor)
    mass, inertia = moment_of_inertia(geometry, material.density)
    return energy_metrics(
        mass,
        inertia,
        speed,
        geometry.outer_radius,
        density=material.density,
        envelope_volume=envelope_volume,
        operating_fraction=operating_fraction,
        cost_per_kg=material.cost_per_kg,
    )
