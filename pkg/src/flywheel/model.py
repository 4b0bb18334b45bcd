"""Domain types: materials, disk geometry, load cases and stress profiles.

Everything is SI (Pa, m, kg, rad/s). Wh/kg, kWh and rpm only appear at the
presentation layer.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class FlywheelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(FlywheelError, ValueError):
    """An input value violates a domain invariant."""


class NonPositiveDensity(ValidationError):
    pass


class NonPositiveModulus(ValidationError):
    pass


class NonPositiveStrength(ValidationError):
    pass


class NonPositiveCost(ValidationError):
    pass


class PoissonOutOfRange(ValidationError):
    pass


class InvalidGeometry(ValidationError):
    pass


class InvalidLoad(ValidationError):
    pass


class RadiusOutOfDomain(ValidationError):
    pass


@dataclass(frozen=True)
class Material:
    """Isotropic, linear-elastic rotor material."""

    name: str
    density: float
    poisson_ratio: float
    elastic_modulus: float
    yield_strength: float
    tensile_strength: float | None = None
    cost_per_kg: float | None = None

    def __post_init__(self):
        if not self.density > 0:
            raise NonPositiveDensity(f"density must be > 0, got {self.density}")
        if not 0 < self.poisson_ratio < 0.5:
            raise PoissonOutOfRange(
                f"poisson_ratio must lie in (0, 0.5), got {self.poisson_ratio}"
            )
        if not self.elastic_modulus > 0:
            raise NonPositiveModulus(
                f"elastic_modulus must be > 0, got {self.elastic_modulus}"
            )
        if not self.yield_strength > 0:
            raise NonPositiveStrength(
                f"yield_strength must be > 0, got {self.yield_strength}"
            )
        if self.tensile_strength is None:
            object.__setattr__(self, "tensile_strength", self.yield_strength)
        elif not self.tensile_strength >= self.yield_strength:
            raise NonPositiveStrength(
                "tensile_strength must be >= yield_strength, got "
                f"{self.tensile_strength} < {self.yield_strength}"
            )
        if self.cost_per_kg is not None and not self.cost_per_kg > 0:
            raise NonPositiveCost(f"cost_per_kg must be > 0, got {self.cost_per_kg}")

    @property
    def plane_stress_modulus(self) -> float:
        """E / (1 - nu^2)."""
        return self.elastic_modulus / (1.0 - self.poisson_ratio**2)


def make_material(**fields) -> Material:
    """Build a validated :class:`Material` from keyword fields.

    Unknown field names raise :class:`ValidationError` rather than
    ``TypeError`` so callers only have to handle one error family.
    """
    known = set(Material.__dataclass_fields__)
    unknown = set(fields) - known
    if unknown:
        raise ValidationError(f"unknown material fields: {sorted(unknown)}")
    missing = {"name", "density", "poisson_ratio", "elastic_modulus", "yield_strength"}
    missing -= set(fields)
    if missing:
        raise ValidationError(f"missing material fields: {sorted(missing)}")
    try:
        values = {
            k: (v if k == "name" or v is None else float(v)) for k, v in fields.items()
        }
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"non-numeric material field: {exc}") from None
    return Material(**values)


def steel_4340(
    poisson_ratio: float = 0.3, elastic_modulus: float = 200e9, **overrides
) -> Material:
    """High-strength 4340 steel.

    Density, strength and cost come from the usual rotor-material comparison
    (7700 kg/m^3, 1520 MPa, 1 $/kg). Poisson ratio and modulus are handbook
    values and can be overridden.
    """
    fields = dict(
        name="steel-4340",
        density=7700.0,
        poisson_ratio=poisson_ratio,
        elastic_modulus=elastic_modulus,
        yield_strength=1520e6,
        tensile_strength=1520e6,
        cost_per_kg=1.0,
    )
    fields.update(overrides)
    return make_material(**fields)


def allowable_stress(material: Material, safety_factor: float = 1.0) -> float:
    """Limit stress used by every speed and feasibility check."""
    if not safety_factor > 0:
        raise ValidationError(f"safety_factor must be > 0, got {safety_factor}")
    return material.yield_strength / safety_factor


@dataclass(frozen=True)
class AnnulusGeometry:
    """Disk of inner radius ``a``, outer radius ``b`` and axial height ``h``.

    ``inner_radius == 0`` is the solid (shaftless) disk.
    """

    inner_radius: float
    outer_radius: float
    height: float = 1.0

    def __post_init__(self):
        a, b, h = self.inner_radius, self.outer_radius, self.height
        if not (0 <= a < b) or not math.isfinite(b):
            raise InvalidGeometry(f"need 0 <= inner_radius < outer_radius, got {a}, {b}")
        if not h > 0:
            raise InvalidGeometry(f"height must be > 0, got {h}")

    @classmethod
    def solid(cls, outer_radius: float, height: float = 1.0) -> "AnnulusGeometry":
        return cls(0.0, outer_radius, height)

    @classmethod
    def from_ratio(cls, t: float, outer_radius: float, height: float = 1.0):
        return cls(t * outer_radius, outer_radius, height)

    @property
    def ratio(self) -> float:
        """Inner-to-outer radius ratio t = a/b."""
        return self.inner_radius / self.outer_radius

    @property
    def is_solid(self) -> bool:
        return self.inner_radius == 0.0

    @property
    def volume(self) -> float:
        return math.pi * (self.outer_radius**2 - self.inner_radius**2) * self.height


@dataclass(frozen=True)
class LoadCase:
    """Spin speed and surface pressures; positive pressure compresses the surface."""

    angular_speed: float = 0.0
    inner_pressure: float = 0.0
    outer_pressure: float = 0.0

    def __post_init__(self):
        for name in ("angular_speed", "inner_pressure", "outer_pressure"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidLoad(f"{name} must be finite and >= 0, got {value}")

    @classmethod
    def from_rpm(cls, rpm: float, inner_pressure: float = 0.0, outer_pressure: float = 0.0):
        return cls(rpm_to_rad_s(rpm), inner_pressure, outer_pressure)


def rpm_to_rad_s(speed):
    """Convert rev/min to rad/s."""
    if np.any(np.asarray(speed) < 0):
        raise InvalidLoad(f"speed must be >= 0, got {speed}")
    return speed * (2.0 * math.pi / 60.0)


def rad_s_to_rpm(speed):
    if np.any(np.asarray(speed) < 0):
        raise InvalidLoad(f"speed must be >= 0, got {speed}")
    return speed * (60.0 / (2.0 * math.pi))


@dataclass(frozen=True)
class StressState:
    radius: float
    radial: float
    hoop: float
    von_mises: float


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Stresses and radial displacement sampled along the radius."""

    radius: np.ndarray
    radial: np.ndarray
    hoop: np.ndarray
    von_mises: np.ndarray
    displacement: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("radius", "radial", "hoop", "von_mises", "displacement"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.radius.shape
        if len(n) != 1 or n[0] < 2:
            raise ValidationError("a profile needs at least two samples")
        for name in ("radial", "hoop", "von_mises", "displacement"):
            if getattr(self, name).shape != n:
                raise ValidationError(f"{name} has shape {getattr(self, name).shape}, expected {n}")
        if np.any(np.diff(self.radius) <= 0):
            raise ValidationError("profile radii must be strictly increasing")

    def __len__(self) -> int:
        return self.radius.size

    def state(self, i: int) -> StressState:
        return StressState(
            float(self.radius[i]),
            float(self.radial[i]),
            float(self.hoop[i]),
            float(self.von_mises[i]),
        )

    def boundary_residuals(self, inner_pressure: float, outer_pressure: float):
        """(sigma_r(first) + p_a, sigma_r(last) + p_b); solid disks skip the inner one."""
        inner = 0.0 if self.radius[0] <= 0 else float(self.radial[0] + inner_pressure)
        return inner, float(self.radial[-1] + outer_pressure)

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "sigma_r", "sigma_theta", "sigma_v", "u"])
        for row in zip(self.radius, self.radial, self.hoop, self.von_mises, self.displacement):
            writer.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if target is not None:
            Path(target).write_text(text)
        return text
