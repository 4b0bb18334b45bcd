"""Stress analysis and design optimisation for energy-storage flywheels.

Closed-form plane-stress solutions for rotating disks, press-fit assemblies,
energy metrics for the common flywheel topologies, a finite-difference
oracle that checks the closed forms, and a deterministic pattern-search
design optimiser.
"""

from flywheel.model import (
    AnnulusGeometry,
    FlywheelError,
    LoadCase,
    Material,
    RadialProfile,
    StressState,
    ValidationError,
    allowable_stress,
    make_material,
    rad_s_to_rpm,
    rpm_to_rad_s,
    steel_4340,
)
from flywheel.stress import (
    annulus_stress,
    contour_grid,
    max_rotational_radial_stress,
    max_von_mises,
    solid_disk_stress,
    stress_profile,
    von_mises,
)

__version__ = "0.1.0"

__all__ = [
    "AnnulusGeometry",
    "FlywheelError",
    "LoadCase",
    "Material",
    "RadialProfile",
    "StressState",
    "ValidationError",
    "allowable_stress",
    "annulus_stress",
    "contour_grid",
    "make_material",
    "max_rotational_radial_stress",
    "max_von_mises",
    "rad_s_to_rpm",
    "rpm_to_rad_s",
    "solid_disk_stress",
    "steel_4340",
    "stress_profile",
    "von_mises",
    "__version__",
]
