"""Constrained flywheel design search.

A deterministic multi-start compass (pattern) search over box-bounded design
variables. Candidates are ranked feasibility first: any feasible design beats
any infeasible one, feasible designs compare by objective and infeasible ones
by their constraint violation, so no penalty weights are involved.

Design variables (all SI):

``b``             outer radius [m]
``h``             axial height [m]
``t``             bore ratio a / b
``omega``         operating speed [rad/s]; when neither free nor fixed the
                  design runs at its stress-limited speed
``interference``  shrink-fit ratio u' = delta / r_interface
``split_radius``  radius where the preload ring meets the base body [m]

The ``type1`` topology models the shaft as a solid body that fills the bore
and spins with the disk, so its mass and inertia count towards the design.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.stats import qmc

from flywheel.energy import J_PER_WH, kinetic_energy
from flywheel.model import FlywheelError, Material, ValidationError, allowable_stress
from flywheel.pressfit import (
    CRITERIA,
    MODES,
    RingSpec,
    admissible_speed,
    assembly_solve,
    body_utilization,
    validate_assembly,
)

OBJECTIVES = ("specific_energy", "total_energy", "max_speed")
TOPOLOGIES = ("shaftless", "type1", "type2", "ring_assembly")
VARIABLES = ("b", "h", "t", "omega", "interference", "split_radius")
DEFAULTS = {"b": 1.0, "h": 1.0, "t": 0.0, "interference": 0.0}
FEASIBILITY_TOL = 1e-9
MAX_GRID_POINTS = 1_000_000
PRELOAD_CAVEAT = (
    "Plane-stress estimate of preload from a shrink-fitted ring. Gains from relieving "
    "3-D stress concentrations (fillets, slots) are outside this model, so these "
    "percentages are not comparable with finite-element improvement figures."
)


class NoFeasibleDesign(FlywheelError):
    pass


@dataclass(frozen=True)
class LinearEquality:
    """sum(coefficients[name] * value[name]) == rhs."""

    coefficients: Mapping[str, float]
    rhs: float


@dataclass(frozen=True, eq=False)
class OptimizationProblem:
    material: Material
    variables: Mapping[str, tuple]
    topology: str = "shaftless"
    objective: str = "specific_energy"
    fixed: Mapping[str, float] = field(default_factory=dict)
    equalities: tuple = ()
    criterion: str = "exact_combined"
    safety_factor: float = 1.0
    assembly_mode: str = "superposition"
    ring_material: Material | None = None
    seed: int = 0
    starts: int = 4
    max_evaluations: int = 4000
    step_tolerance: float = 1e-6
    snap: bool = False
    length_grid: float = 0.5e-3
    speed_grid_rpm: float = 1.0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValidationError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.criterion not in CRITERIA:
            raise ValidationError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.assembly_mode not in MODES:
            raise ValidationError(f"assembly_mode must be one of {MODES}, got {self.assembly_mode!r}")
        bounds = {}
        for name, bound in self.variables.items():
            if name not in VARIABLES:
                raise ValidationError(f"unknown design variable {name!r}; expected one of {VARIABLES}")
            lo, hi = (float(x) for x in bound)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValidationError(f"bounds of {name!r} must be finite with lo <= hi, got {bound}")
            bounds[name] = (lo, hi)
        fixed = {}
        for name, value in self.fixed.items():
            if name not in VARIABLES:
                raise ValidationError(f"unknown fixed parameter {name!r}")
            if name in bounds:
                raise ValidationError(f"{name!r} is both fixed and free")
            fixed[name] = float(value)
        equalities = tuple(
            e if isinstance(e, LinearEquality) else LinearEquality(dict(e["coefficients"]), float(e["rhs"]))
            for e in self.equalities
        )
        for eq in equalities:
            for name in eq.coefficients:
                if name not in bounds:
                    raise ValidationError(f"equality references {name!r}, which is not a free variable")
        object.__setattr__(self, "variables", dict(sorted(bounds.items())))
        object.__setattr__(self, "fixed", dict(sorted(fixed.items())))
        object.__setattr__(self, "equalities", equalities)
        object.__setattr__(self, "_dependents", self._eliminate())
        if not self.search_variables:
            raise ValidationError("the problem has no free variable left to search")
        if self.topology == "ring_assembly" and "split_radius" not in self.variables and "split_radius" not in self.fixed:
            raise ValidationError("ring_assembly needs a split_radius (free or fixed)")
        if self.starts < 1 or self.max_evaluations < 1 or not self.step_tolerance > 0:
            raise ValidationError("starts, max_evaluations and step_tolerance must be positive")

    def _eliminate(self):
        dependents = []
        taken = set()
        for eq in self.equalities:
            live = sorted(n for n, c in eq.coefficients.items() if c != 0 and n not in taken)
            if not live:
                raise ValidationError("equality constraints are redundant or inconsistent")
            dep = live[-1]
            taken.add(dep)
            dependents.append((dep, eq))
        return tuple(dependents)

    @property
    def dependent_variables(self) -> tuple:
        return tuple(dep for dep, _ in self._dependents)

    @property
    def search_variables(self) -> tuple:
        deps = set(self.dependent_variables)
        return tuple(n for n, (lo, hi) in self.variables.items() if n not in deps and hi > lo)

    def resolve(self, candidate: Mapping[str, float]):
        """Full parameter set for ``candidate`` plus the relative bound violation."""
        values = dict(DEFAULTS)
        values.update(self.fixed)
        deps = set(self.dependent_variables)
        for name, (lo, hi) in self.variables.items():
            if name in deps:
                continue
            if name in candidate:
                values[name] = float(candidate[name])
            elif hi == lo:
                values[name] = lo
            else:
                raise ValidationError(f"candidate is missing free variable {name!r}")
        for dep, eq in self._dependents:
            rest = sum(c * values[n] for n, c in eq.coefficients.items() if n != dep)
            values[dep] = (eq.rhs - rest) / eq.coefficients[dep]
        violation = 0.0
        for name, (lo, hi) in self.variables.items():
            span = max(hi - lo, abs(hi), 1e-12)
            violation += max(lo - values[name], 0.0, values[name] - hi) / span
        return values, violation


@dataclass(frozen=True)
class Evaluation:
    values: dict
    objective: float
    feasible: bool
    violation: float
    max_stress: float
    utilization: float
    speed: float
    critical_body: int
    critical_radius: float
    mass: float
    inertia: float

    @property
    def rank(self):
        return (1, self.objective) if self.feasible else (0, -self.violation)


def build_bodies(problem: OptimizationProblem, values: Mapping[str, float]):
    m = problem.material
    b, h, t = values["b"], values["h"], values.get("t", 0.0)
    a = t * b
    u = values.get("interference", 0.0)
    topo = problem.topology
    if topo == "shaftless":
        if t != 0:
            raise ValidationError("a shaftless design has t = 0")
        return (RingSpec(m, 0.0, b, 0.0, h),)
    if topo == "ring_assembly":
        if not 0 <= t < 1:
            raise ValidationError(f"ring_assembly needs 0 <= t < 1, got {t}")
        c = values["split_radius"]
        ring_mat = problem.ring_material or m
        return (RingSpec(m, a, c, 0.0, h), RingSpec(ring_mat, c, b, u * c, h))
    if not 0 < t < 1:
        raise ValidationError(f"{topo} needs 0 < t < 1, got {t}")
    if topo == "type2":
        return (RingSpec(m, a, b, 0.0, h),)
    if topo == "type1":
        return (RingSpec(m, 0.0, a, 0.0, h), RingSpec(m, a, b, u * a, h))


def _mass_inertia(bodies):
    mass = inertia = 0.0
    for body in bodies:
        a, b = body.inner_radius, body.outer_radius
        mk = body.material.density * math.pi * (b * b - a * a) * body.height
        mass += mk
        inertia += 0.5 * mk * (a * a + b * b)
    return mass, inertia


def _objective(problem, speed, mass, inertia):
    if problem.objective == "max_speed":
        return speed
    energy = kinetic_energy(inertia, speed)
    if problem.objective == "total_energy":
        return energy
    return energy / mass / J_PER_WH


def _geometry_violation(problem, values):
    b, t = values["b"], values.get("t", 0.0)
    v = max(-t, 0.0) + max(t - 0.999, 0.0) + max(-values["h"], 0.0) / max(abs(values["h"]), 1.0)
    if b <= 0:
        v += 1.0 - b
    if problem.topology == "ring_assembly":
        a, c = t * b, values["split_radius"]
        span = max(b - a, 1e-12)
        v += max(a - c, 0.0, c - b) / span + 1e-6
    if problem.topology in ("type1", "type2") and t <= 0:
        v += 1e-6
    return v + 1e-9


def evaluate_design(problem: OptimizationProblem, candidate: Mapping[str, float], verify: bool = True) -> Evaluation:
    """Objective, feasibility and peak stress of one candidate.

    Infeasible candidates come back with ``feasible=False`` and a positive
    ``violation``; only malformed candidates raise. With ``verify=False`` a
    design run at its own speed limit reports the allowable stress instead of
    re-evaluating it.
    """
    values, violation = problem.resolve(candidate)
    try:
        bodies = validate_assembly(build_bodies(problem, values))
    except ValidationError:
        return Evaluation(values, 0.0, False, violation + _geometry_violation(problem, values),
                          math.nan, math.inf, 0.0, 0, math.nan, math.nan, math.nan)
    mass, inertia = _mass_inertia(bodies)
    mode, crit, sf = problem.assembly_mode, problem.criterion, problem.safety_factor

    if "omega" in values:
        speed = values["omega"]
        util, body, radius, stress = body_utilization(bodies, speed, mode, crit, sf)
    else:
        limit = admissible_speed(bodies, mode, crit, sf)
        speed, body, radius = limit.speed, limit.body, limit.radius
        if speed == 0.0:
            util = limit.utilization_at_rest
            stress = util * allowable_stress(bodies[body].material, sf)
        elif verify:
            util, body, radius, stress = body_utilization(bodies, speed, mode, crit, sf)
        else:
            util, stress = 1.0, allowable_stress(bodies[body].material, sf)
    stress_excess = max(util - 1.0, 0.0)
    if speed == 0.0 and "omega" not in values:
        stress_excess = max(stress_excess, 1e-12)
    feasible = violation == 0.0 and util <= 1.0 + FEASIBILITY_TOL and stress_excess <= FEASIBILITY_TOL
    objective = _objective(problem, speed, mass, inertia)
    return Evaluation(
        values=values,
        objective=objective,
        feasible=feasible,
        violation=0.0 if feasible else violation + stress_excess,
        max_stress=stress,
        utilization=util,
        speed=speed,
        critical_body=body,
        critical_radius=radius,
        mass=mass,
        inertia=inertia,
    )


@dataclass(frozen=True)
class OptimizationResult:
    variables: dict
    objective: float
    evaluation: Evaluation
    binding_constraints: tuple
    evaluations: int
    trace: tuple  # (evaluation count, best feasible objective)
    snapped: dict | None = None
    snapped_evaluation: Evaluation | None = None

    def as_dict(self) -> dict:
        out = {
            "variables": self.variables,
            "objective": self.objective,
            "feasible": self.evaluation.feasible,
            "max_stress": self.evaluation.max_stress,
            "utilization": self.evaluation.utilization,
            "speed": self.evaluation.speed,
            "mass": self.evaluation.mass,
            "inertia": self.evaluation.inertia,
            "resolved": self.evaluation.values,
            "binding_constraints": list(self.binding_constraints),
            "evaluations": self.evaluations,
            "trace": [list(p) for p in self.trace],
        }
        if self.snapped is not None:
            out["snapped"] = {
                "variables": self.snapped,
                "objective": self.snapped_evaluation.objective,
                "feasible": self.snapped_evaluation.feasible,
                "max_stress": self.snapped_evaluation.max_stress,
            }
        return out

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["evaluation", "objective"])
        for count, value in self.trace:
            writer.writerow([count, repr(float(value))])
        return buf.getvalue()


class _Search:
    def __init__(self, problem: OptimizationProblem, workers: int = 1):
        self.problem = problem
        self.names = problem.search_variables
        self.lo = np.array([problem.variables[n][0] for n in self.names])
        self.hi = np.array([problem.variables[n][1] for n in self.names])
        self.cache = {}
        self.count = 0
        self.best = None
        self.trace = []
        self.workers = workers

    def candidate(self, x):
        return {n: float(v) for n, v in zip(self.names, self.lo + x * (self.hi - self.lo))}

    def _eval(self, key):
        return evaluate_design(self.problem, self.candidate(np.array(key)), verify=False)

    def evaluate(self, points):
        keys = [tuple(float(v) for v in p) for p in points]
        todo = [k for k in dict.fromkeys(keys) if k not in self.cache]
        room = self.problem.max_evaluations - self.count
        todo = todo[: max(room, 0)]
        if self.workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                results = list(pool.map(self._eval, todo))
        else:
            results = [self._eval(k) for k in todo]
        # bookkeeping in submission order so serial and parallel runs agree
        for k, ev in zip(todo, results):
            self.cache[k] = ev
            self.count += 1
            if ev.feasible and (self.best is None or ev.rank > self.best[1].rank):
                self.best = (k, ev)
                self.trace.append((self.count, ev.objective))
            elif self.best is None or (not self.best[1].feasible and ev.rank > self.best[1].rank):
                self.best = (k, ev)
        return [(k, self.cache[k]) for k in keys if k in self.cache]

    def exhausted(self):
        return self.count >= self.problem.max_evaluations

    def run(self):
        d = len(self.names)
        sampler = qmc.LatinHypercube(d=d, seed=np.random.default_rng(self.problem.seed))
        starts = sampler.random(self.problem.starts)
        tol = self.problem.step_tolerance
        for start in starts:
            if self.exhausted():
                break
            found = self.evaluate([start])
            if not found:
                break
            x, current = np.array(found[0][0]), found[0][1]
            step = 0.25
            while step >= tol and not self.exhausted():
                polls = []
                for i in range(d):
                    for sign in (1.0, -1.0):
                        y = x.copy()
                        y[i] = min(max(y[i] + sign * step, 0.0), 1.0)
                        if y[i] != x[i]:
                            polls.append(y)
                best_key, best_ev = None, None
                for key, ev in self.evaluate(polls):
                    if best_ev is None or ev.rank > best_ev.rank:
                        best_key, best_ev = key, ev
                if best_ev is not None and best_ev.rank > current.rank:
                    x, current = np.array(best_key), best_ev
                else:
                    step *= 0.5


def _binding(problem, ev: Evaluation):
    out = []
    if ev.feasible and ev.utilization >= 1.0 - 1e-6:
        out.append("stress")
    for name, (lo, hi) in problem.variables.items():
        span = hi - lo
        v = ev.values[name]
        if span > 0 and v - lo <= 1e-6 * span:
            out.append(f"{name}>=lower")
        elif span > 0 and hi - v <= 1e-6 * span:
            out.append(f"{name}<=upper")
    return tuple(out)


def _snap_options(problem, name, value, values):
    grid = problem.length_grid
    if name in ("b", "h", "split_radius"):
        return sorted({math.floor(value / grid) * grid, math.ceil(value / grid) * grid, round(value / grid) * grid})
    if name == "t":
        b = values["b"]
        a = value * b
        return sorted({math.floor(a / grid) * grid / b, math.ceil(a / grid) * grid / b, round(a / grid) * grid / b})
    if name == "omega":
        step = problem.speed_grid_rpm * 2 * math.pi / 60
        return sorted({math.floor(value / step) * step, round(value / step) * step})
    return [value]


def _snap(problem, result_values):
    names = problem.search_variables
    # t depends on the snapped b, so snap b first
    order = sorted(names, key=lambda n: (n != "b", n))
    options = []
    snapped_b = {}
    for n in order:
        vals = dict(result_values)
        vals.update(snapped_b)
        opts = _snap_options(problem, n, result_values[n], vals)
        if n == "b":
            snapped_b["b"] = round(result_values["b"] / problem.length_grid) * problem.length_grid
        options.append(opts)
    best = None
    for combo in itertools.product(*options):
        cand = dict(zip(order, combo))
        ev = evaluate_design(problem, cand)
        if best is None or ev.rank > best[1].rank:
            best = (cand, ev)
    return dict(sorted(best[0].items())), best[1]


def optimize(problem: OptimizationProblem, workers: int = 1) -> OptimizationResult:
    """Multi-start compass search from seeded Latin-hypercube starts.

    Each start polls +/- step along every normalised coordinate, moves to the
    best improving poll, and halves the step when nothing improves, until the
    step drops below ``step_tolerance`` of the box range. The winner is
    re-verified with a fresh evaluation.
    """
    search = _Search(problem, workers)
    search.run()
    if search.best is None or not search.best[1].feasible:
        raise NoFeasibleDesign(
            f"no feasible design found in {search.count} evaluations"
        )
    key, _ = search.best
    candidate = search.candidate(np.array(key))
    final = evaluate_design(problem, candidate, verify=True)
    if not final.feasible:
        raise NoFeasibleDesign("best design failed re-verification")
    snapped = snapped_ev = None
    if problem.snap:
        snapped, snapped_ev = _snap(problem, final.values)
    return OptimizationResult(
        variables=dict(sorted(candidate.items())),
        objective=final.objective,
        evaluation=final,
        binding_constraints=_binding(problem, final),
        evaluations=search.count,
        trace=tuple(search.trace),
        snapped=snapped,
        snapped_evaluation=snapped_ev,
    )


def sweep(target, grid: Mapping[str, object]):
    """Evaluate ``target`` on the Cartesian product of ``grid``.

    ``target`` is either an :class:`OptimizationProblem` (each point is a
    candidate; unswept free variables sit mid-range) or a callable taking the
    grid names as keyword arguments and returning a number or a dict.
    """
    names = list(grid)
    axes = [np.atleast_1d(np.asarray(grid[n], dtype=float)) for n in names]
    size = math.prod(len(a) for a in axes)
    if size > MAX_GRID_POINTS:
        raise ValidationError(f"grid has {size} points; the limit is {MAX_GRID_POINTS}")
    if size == 0:
        raise ValidationError("grid is empty")
    rows = []
    if isinstance(target, OptimizationProblem):
        mid = {n: 0.5 * (lo + hi) for n, (lo, hi) in target.variables.items() if n not in target.dependent_variables}
        for point in itertools.product(*axes):
            cand = dict(mid)
            cand.update({n: float(v) for n, v in zip(names, point)})
            ev = evaluate_design(target, cand)
            row = {n: float(v) for n, v in zip(names, point)}
            row.update(
                objective=ev.objective,
                feasible=ev.feasible,
                max_stress=ev.max_stress,
                speed=ev.speed,
            )
            rows.append(row)
        return rows
    for point in itertools.product(*axes):
        kwargs = {n: float(v) for n, v in zip(names, point)}
        out = target(**kwargs)
        row = dict(kwargs)
        if isinstance(out, Mapping):
            row.update(out)
        else:
            row["value"] = out
        rows.append(row)
    return rows


def rows_to_csv(rows, target=None) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text)
    return text


@dataclass(frozen=True)
class PreloadReport:
    baseline_speed: float
    best_speed: float
    speed_gain: float  # fraction
    energy_gain: float  # fraction
    quadratic_energy_gain: float  # (1 + speed_gain)^2 - 1
    split_radius: float
    interference: float
    interface_pressure_at_rest: float
    critical_body: int
    critical_radius: float
    evaluations: int
    mode: str
    caveat: str = PRELOAD_CAVEAT

    def as_dict(self) -> dict:
        out = asdict(self)
        out["speed_gain_percent"] = 100 * self.speed_gain
        out["energy_gain_percent"] = 100 * self.energy_gain
        return out


def preload_study(
    material: Material,
    outer_radius: float,
    height: float = 1.0,
    inner_radius: float = 0.0,
    *,
    ring_material: Material | None = None,
    split_bounds: tuple | None = None,
    interference_bounds: tuple = (0.0, 2e-3),
    mode: str = "full_compatibility",
    criterion: str = "exact_combined",
    safety_factor: float = 1.0,
    seed: int = 0,
    starts: int = 3,
    workers: int = 1,
) -> PreloadReport:
    """Search the split radius and interference of a shrink-fitted outer ring
    that maximise the burst-limited speed, against the one-piece disk of the
    same envelope."""
    b, a = outer_radius, inner_radius
    if split_bounds is None:
        span = b - a
        split_bounds = (a + 0.05 * span, b - 0.05 * span)
    base_body = RingSpec(material, a, b, 0.0, height)
    base_speed = admissible_speed((base_body,), "superposition", criterion, safety_factor).speed
    _, base_inertia = _mass_inertia((base_body,))
    problem = OptimizationProblem(
        material=material,
        ring_material=ring_material,
        variables={"split_radius": tuple(split_bounds), "interference": tuple(interference_bounds)},
        fixed={"b": b, "h": height, "t": a / b},
        topology="ring_assembly",
        objective="max_speed",
        criterion=criterion,
        assembly_mode=mode,
        safety_factor=safety_factor,
        seed=seed,
        starts=starts,
    )
    result = optimize(problem, workers=workers)
    best = result.evaluation
    e_base = kinetic_energy(base_inertia, base_speed)
    e_best = kinetic_energy(best.inertia, best.speed)
    bodies = build_bodies(problem, best.values)
    rest = assembly_solve(bodies, 0.0, mode, n_samples=2)
    g = best.speed / base_speed - 1.0
    return PreloadReport(
        baseline_speed=base_speed,
        best_speed=best.speed,
        speed_gain=g,
        energy_gain=e_best / e_base - 1.0,
        quadratic_energy_gain=(1.0 + g) ** 2 - 1.0,
        split_radius=best.values["split_radius"],
        interference=best.values["interference"],
        interface_pressure_at_rest=rest.interface_pressures[0],
        critical_body=best.critical_body,
        critical_radius=best.critical_radius,
        evaluations=result.evaluations,
        mode=mode,
    )
