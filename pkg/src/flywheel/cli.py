"""Command-line front end.

    flywheel analyze  --input fixture:solid_disk
    flywheel energy   --input fixture:reference_rotor
    flywheel compare  --input fixture:material_set --format csv
    flywheel optimize --input fixture:type1_optimize --seed 3
    flywheel verify   --cases 100

Exit codes: 0 ok, 2 config or validation error, 3 analysis error,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from flywheel import __version__
from flywheel.config import (
    ConfigError,
    apply_overrides,
    build_axis,
    build_geometry,
    build_load,
    build_material,
    parse_document,
    read_input,
    speed_from,
    validate,
)
from flywheel.energy import (
    DEFAULT_OPERATING_FRACTION,
    design_report,
    energy_metrics,
    lift_ratio_curves,
    material_economics,
    shape_factor_for,
)
from flywheel.model import FlywheelError, ValidationError, allowable_stress, make_material, rad_s_to_rpm
from flywheel.optimize import (
    LinearEquality,
    OptimizationProblem,
    optimize,
    preload_study,
    rows_to_csv,
    sweep,
)
from flywheel.pressfit import (
    RingSpec,
    admissible_speed,
    assembly_solve,
    fit_linear_coefficients,
    rotation_limit,
    separation_speed,
)
from flywheel.stress import contour_grid, max_von_mises, stress_profile
from flywheel.verify import run_verification

EXIT_OK, EXIT_CONFIG, EXIT_ANALYSIS, EXIT_VERIFY = 0, 2, 3, 4
COMMANDS = ("analyze", "contour", "energy", "compare", "assembly", "optimize", "verify", "report")
TOOL = "flywheel"


class VerificationFailed(Exception):
    def __init__(self, output):
        super().__init__("verification failed")
        self.output = output


# ---------------------------------------------------------------------------
# output helpers


def _clean(value):
    """JSON-safe copy: numpy scalars and arrays to Python, inf and nan to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def dump_json(doc) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".flywheel-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _key_value_csv(pairs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["quantity", "value"])
    for key, value in pairs.items():
        writer.writerow([key, repr(float(value)) if isinstance(value, float) else value])
    return buf.getvalue()


def _rows_csv(rows) -> str:
    return rows_to_csv([{k: v for k, v in row.items()} for row in rows])


# ---------------------------------------------------------------------------
# commands; each returns (json result, csv text or None)


def cmd_analyze(cfg, args):
    material = build_material(cfg["material"])
    geometry = build_geometry(cfg["geometry"])
    load = build_load(cfg["load"])
    sf = cfg.get("safety_factor", 1.0)
    profile = stress_profile(material, geometry, load, cfg.get("n_samples", 201))
    peak, where = max_von_mises(material, geometry, load)
    inner, outer = profile.boundary_residuals(load.inner_pressure, load.outer_pressure)
    result = {
        "max_von_mises": peak,
        "max_von_mises_location": where,
        "utilization": peak / allowable_stress(material, sf),
        "boundary_residuals": {"inner": inner, "outer": outer},
        "angular_speed": load.angular_speed,
        "t": geometry.ratio,
    }
    if "linear_fit" in cfg:
        spec = cfg["linear_fit"]
        omega = np.linspace(0.0, rotation_limit(material, geometry, sf), spec.get("omega_points", 10))
        shrink = np.linspace(0.0, spec.get("max_shrink", 1e-3), spec.get("shrink_points", 10))
        fit = fit_linear_coefficients(material, geometry, omega, shrink, spec.get("criterion", "exact"))
        result["linear_fit"] = {
            "c1": fit.c1,
            "c2": fit.c2,
            "r_squared": fit.r_squared,
            "criterion": fit.criterion,
            "grid": [len(omega), len(shrink)],
        }
    return result, profile.to_csv()


def cmd_contour(cfg, args):
    grid = contour_grid(
        cfg["kind"],
        cfg.get("poisson_ratio", 0.3),
        build_axis(cfg.get("t_axis")),
        build_axis(cfg.get("r_axis")),
    )
    result = {
        "kind": grid.kind,
        "poisson_ratio": grid.poisson_ratio,
        "t_axis": grid.t_axis,
        "r_axis": grid.r_axis,
        "values": grid.values,
    }
    return result, grid.to_csv()


def _energy(cfg):
    has_design, has_rotor = "design" in cfg, "rotor" in cfg
    if has_design == has_rotor:
        raise ConfigError("energy config needs exactly one of 'design' or 'rotor'")
    material = build_material(cfg["material"]) if "material" in cfg else None
    fraction = cfg.get("operating_fraction", DEFAULT_OPERATING_FRACTION)
    envelope = cfg.get("envelope_volume")
    if has_design:
        if material is None:
            raise ConfigError("a design needs a material")
        d = cfg["design"]
        geometry = build_geometry(d["geometry"])
        metrics = design_report(
            d["topology"],
            material,
            geometry,
            d.get("shrink_stress", 0.0),
            fraction,
            envelope_volume=envelope,
            safety_factor=cfg.get("safety_factor", 1.0),
        )
        provenance = {
            "mass": "uniform annulus m = rho pi (b^2 - a^2) h",
            "moment_of_inertia": "uniform annulus I = m (a^2 + b^2) / 2",
            "max_speed": f"{d['topology']} stress limit at allowable stress",
        }
    else:
        r = cfg["rotor"]
        speed = speed_from(r)
        metrics = energy_metrics(
            r["mass"],
            r["moment_of_inertia"],
            speed,
            r["outer_radius"],
            density=material.density if material else None,
            envelope_volume=envelope,
            operating_fraction=fraction,
            cost_per_kg=material.cost_per_kg if material else None,
        )
        provenance = {"mass": "input", "moment_of_inertia": "input", "max_speed": "input"}
    provenance.update(
        kinetic_energy="E = I w^2 / 2",
        operational_energy=f"kinetic energy x operating fraction {fraction:.6g}",
        specific_energy="kinetic energy / mass",
        energy_density=f"kinetic energy / {metrics.volume_basis} volume",
        tip_speed="w b",
    )
    return metrics, provenance


def cmd_energy(cfg, args):
    metrics, _ = _energy(cfg)
    out = metrics.as_dict()
    return {"metrics": out}, _key_value_csv(out)


def cmd_report(cfg, args):
    metrics, provenance = _energy(cfg)
    table = metrics.table()
    return {"metrics": metrics.as_dict(), "human_readable": table, "provenance": provenance}, _key_value_csv(table)


def cmd_compare(cfg, args):
    rows = []
    for entry in cfg["materials"]:
        fields = {k: v for k, v in entry.items() if k in (
            "name", "density", "poisson_ratio", "elastic_modulus", "yield_strength", "tensile_strength", "cost_per_kg")}
        material = make_material(**fields)
        if ("max_specific_energy" in entry) == ("shape_factor" in entry):
            raise ConfigError(f"{material.name}: give exactly one of max_specific_energy or shape_factor")
        if "shape_factor" in entry:
            k = entry["shape_factor"]
        else:
            k = shape_factor_for(material, entry["max_specific_energy"])
        wh_kg, wh_usd = material_economics(material, k)
        row = {
            "name": material.name,
            "density": material.density,
            "tensile_strength": material.tensile_strength,
            "cost_per_kg": material.cost_per_kg,
            "shape_factor": k,
            "max_specific_energy_wh_per_kg": wh_kg,
            "energy_per_dollar_wh_per_usd": wh_usd,
        }
        if "reference_energy_per_dollar" in entry:
            ref = entry["reference_energy_per_dollar"]
            row["reference_energy_per_dollar"] = ref
            row["relative_deviation"] = wh_usd / ref - 1.0
        rows.append(row)
    result = {"materials": rows}
    if "lift_ratios" in cfg:
        spec = cfg["lift_ratios"]
        result["lift_ratios"] = lift_ratio_curves(
            spec["t_values"], spec.get("poisson_ratio", 0.3), tuple(spec.get("delta_sigmas", (0.0, 0.1, 0.2)))
        )
    return result, _rows_csv(rows)


def cmd_assembly(cfg, args):
    rings = [
        RingSpec(
            build_material(r["material"]),
            r["inner_radius"],
            r["outer_radius"],
            r.get("interference", 0.0),
            r.get("height", 1.0),
        )
        for r in cfg["rings"]
    ]
    speed = speed_from(cfg)
    mode = cfg.get("mode", "superposition")
    criterion = cfg.get("criterion", "exact_combined")
    sf = cfg.get("safety_factor", 1.0)
    sol = assembly_solve(rings, speed, mode, cfg.get("n_samples", 201))
    limit = admissible_speed(rings, mode, criterion, sf)
    result = {
        "mode": mode,
        "angular_speed": speed,
        "interface_pressures": sol.interface_pressures,
        "separated": sol.separated,
        "compatibility_residuals": sol.compatibility_residuals,
        "body_maxima": [{"von_mises": s, "radius": r} for s, r in sol.body_maxima],
        "max_von_mises": sol.max_von_mises,
        "max_location": {"body": sol.max_location[0], "radius": sol.max_location[1]},
        "separation_speeds": separation_speed(rings),
        "admissible_speed": {
            "criterion": criterion,
            "speed": limit.speed,
            "rpm": rad_s_to_rpm(limit.speed),
            "body": limit.body,
            "radius": limit.radius,
            "utilization_at_rest": limit.utilization_at_rest,
        },
    }
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["body", "r", "sigma_r", "sigma_theta", "sigma_v", "u"])
    for k, prof in enumerate(sol.profiles):
        for row in zip(prof.radius, prof.radial, prof.hoop, prof.von_mises, prof.displacement):
            writer.writerow([k] + [repr(float(x)) for x in row])
    return result, buf.getvalue()


def _problem(cfg, seed):
    keys = ("topology", "objective", "criterion", "safety_factor", "assembly_mode", "starts",
            "max_evaluations", "step_tolerance", "snap", "length_grid", "speed_grid_rpm")
    kwargs = {k: cfg[k] for k in keys if k in cfg}
    return OptimizationProblem(
        material=build_material(cfg["material"]),
        ring_material=build_material(cfg["ring_material"]) if "ring_material" in cfg else None,
        variables={k: tuple(v) for k, v in cfg["variables"].items()},
        fixed=cfg.get("fixed", {}),
        equalities=tuple(LinearEquality(e["coefficients"], e["rhs"]) for e in cfg.get("equalities", ())),
        seed=seed,
        **kwargs,
    )


def cmd_optimize(cfg, args):
    study = cfg.get("study", "optimize")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if study == "preload":
        report = preload_study(
            build_material(cfg["material"]),
            cfg["outer_radius"],
            cfg.get("height", 1.0),
            cfg.get("inner_radius", 0.0),
            ring_material=build_material(cfg["ring_material"]) if "ring_material" in cfg else None,
            split_bounds=tuple(cfg["split_bounds"]) if "split_bounds" in cfg else None,
            interference_bounds=tuple(cfg.get("interference_bounds", (0.0, 2e-3))),
            mode=cfg.get("assembly_mode", "full_compatibility"),
            criterion=cfg.get("criterion", "exact_combined"),
            safety_factor=cfg.get("safety_factor", 1.0),
            seed=seed,
            starts=cfg.get("starts", 3),
            workers=cfg.get("workers", 1),
        )
        out = report.as_dict()
        return {"study": "preload", "preload": out}, _key_value_csv(out)
    problem = _problem(cfg, seed)
    if "sweep" in cfg:
        grid = {name: build_axis(axis) for name, axis in cfg["sweep"].items()}
        rows = sweep(problem, grid)
        return {"study": "sweep", "rows": rows}, _rows_csv(rows)
    result = optimize(problem, workers=cfg.get("workers", 1))
    out = result.as_dict()
    out["seed"] = seed
    return {"study": "optimize", "optimization": out}, result.trace_csv()


def cmd_verify(cfg, args):
    cases = args.cases if args.cases is not None else cfg.get("cases")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    report = run_verification(cases, seed, canary=args.canary)
    rows = [{"suite": "oracle", "failures": len(report["oracle"]["failures"]),
             "max_rel_error": report["oracle"]["max_rel_error"]},
            {"suite": "lemma", "failures": len(report["lemma"]["failures"]),
             "max_rel_error": report["lemma"]["max_ratio"] - 1.0}]
    csv_text = _rows_csv(rows)
    if not report["passed"]:
        raise VerificationFailed((report, csv_text))
    return report, csv_text


HANDLERS = {
    "analyze": cmd_analyze,
    "contour": cmd_contour,
    "energy": cmd_energy,
    "compare": cmd_compare,
    "assembly": cmd_assembly,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description="Flywheel stress analysis and design studies.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).strip().splitlines()[0])
        p.add_argument("--input", required=name != "verify", help="JSON config path or fixture:NAME")
        p.add_argument("--output", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value; dotted keys reach nested fields")
        p.add_argument("--seed", type=int, help="random seed override")
        p.add_argument("--cases", type=int, help="reduced verification suite size")
        p.add_argument("--canary", action="store_true", help=argparse.SUPPRESS)
    return parser


cmd_analyze.__doc__ = "Stress profile and peak von Mises stress of one disk."
cmd_contour.__doc__ = "Dimensionless stress-factor grid over (t, xi)."
cmd_energy.__doc__ = "Energy, speed and specific-energy metrics (SI)."
cmd_compare.__doc__ = "Material economics table and lift-ratio curves."
cmd_assembly.__doc__ = "Press-fit assembly pressures, stresses and speed limits."
cmd_optimize.__doc__ = "Design optimisation, sweep or preload study."
cmd_verify.__doc__ = "Closed-form vs oracle and bound suites (exit 4 on failure)."
cmd_report.__doc__ = "Human-readable specification table with provenance."


def _load_config(args):
    if args.input is None:
        raw, doc = b"", {"schema_version": 1}
    else:
        raw = read_input(args.input)
        doc = parse_document(raw)
    doc = apply_overrides(doc, args.overrides)
    kind = args.command
    if kind == "optimize" and doc.get("study") == "preload":
        kind = "preload"
    validate(doc, kind)
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return doc, hashlib.sha256(canonical).hexdigest()


def _emit(args, input_hash, result, csv_text):
    if args.format == "csv":
        text = csv_text
    else:
        text = dump_json({
            "tool": TOOL,
            "version": __version__,
            "command": args.command,
            "input_sha256": input_hash,
            "result": result,
        })
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, input_hash = _load_config(args)
        result, csv_text = HANDLERS[args.command](cfg, args)
    except VerificationFailed as exc:
        report, csv_text = exc.output
        _emit(args, input_hash, report, csv_text)
        print(f"{TOOL}: verification failed", file=sys.stderr)
        return EXIT_VERIFY
    except ValidationError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FlywheelError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"{TOOL}: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    _emit(args, input_hash, result, csv_text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
