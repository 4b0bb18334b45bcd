import math

import numpy as np
import pytest

from flywheel.energy import specific_energy
from flywheel.model import ValidationError, make_material
from flywheel.optimize import (
    LinearEquality,
    NoFeasibleDesign,
    OptimizationProblem,
    evaluate_design,
    optimize,
    preload_study,
    rows_to_csv,
    sweep,
)
from flywheel.pressfit import RingSpec, admissible_speed


def _type1(steel, **kw):
    base = dict(material=steel, variables={"t": (0.05, 0.9)}, fixed={"b": 1.0, "h": 0.225}, topology="type1")
    base.update(kw)
    return OptimizationProblem(**base)


def test_problem_validation(steel):
    with pytest.raises(ValidationError):
        OptimizationProblem(material=steel, variables={"q": (0, 1)})
    with pytest.raises(ValidationError):
        OptimizationProblem(material=steel, variables={"b": (1, 0)})
    with pytest.raises(ValidationError):
        OptimizationProblem(material=steel, variables={"b": (0.5, 1)}, fixed={"b": 1.0})
    with pytest.raises(ValidationError):
        OptimizationProblem(material=steel, variables={"b": (1, 1)})
    with pytest.raises(ValidationError):
        OptimizationProblem(material=steel, variables={"b": (0.5, 1)}, topology="ring_assembly")
    with pytest.raises(ValidationError):
        OptimizationProblem(material=steel, variables={"b": (0.5, 1)}, objective="cheapest")


def test_same_seed_bit_identical(steel):
    a = optimize(_type1(steel, seed=3)).as_dict()
    b = optimize(_type1(steel, seed=3)).as_dict()
    assert a == b


def test_type1_drives_bore_to_lower_bound(steel):
    res = optimize(_type1(steel))
    assert res.variables["t"] == 0.05
    assert "t>=lower" in res.binding_constraints
    assert res.objective == pytest.approx(16.6076, rel=1e-4)
    assert res.evaluation.feasible


def test_shaftless_beats_type1(steel):
    res = optimize(_type1(steel, variables={"t": (0.05, 0.9), "interference": (0.0, 1e-3)}))
    assert specific_energy(steel) >= res.objective


def test_shaftless_total_energy_grows_with_radius(steel):
    p = OptimizationProblem(material=steel, variables={"b": (0.5, 1.5)}, objective="total_energy")
    assert optimize(p).variables["b"] == 1.5


def test_trace_is_monotone(steel):
    res = optimize(_type1(steel, variables={"t": (0.05, 0.9), "interference": (0.0, 1e-3)}))
    counts = [c for c, _ in res.trace]
    values = [v for _, v in res.trace]
    assert counts == sorted(counts)
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert values[-1] == res.objective
    assert res.trace_csv().splitlines()[0] == "evaluation,objective"


def test_serial_equals_parallel(steel):
    p = _type1(steel, variables={"t": (0.05, 0.9), "interference": (0.0, 1e-3)})
    assert optimize(p, workers=1).as_dict() == optimize(p, workers=4).as_dict()


def test_relabelled_variables_give_same_design(steel):
    p1 = _type1(steel, variables={"t": (0.05, 0.9), "interference": (0.0, 1e-3)})
    p2 = _type1(steel, variables={"interference": (0.0, 1e-3), "t": (0.05, 0.9)})
    assert optimize(p1).as_dict() == optimize(p2).as_dict()


def test_bound_feasible_implies_exact_feasible(steel):
    var = {"t": (0.05, 0.9), "interference": (0.0, 1.5e-3), "omega": (0.0, 600.0)}
    lemma = _type1(steel, variables=var, criterion="lemma_bound")
    exact = _type1(steel, variables=var, criterion="exact_combined")
    rng = np.random.default_rng(11)
    for _ in range(200):
        cand = {k: rng.uniform(*v) for k, v in var.items()}
        if evaluate_design(lemma, cand).feasible:
            assert evaluate_design(exact, cand).feasible


def test_infeasible_candidate_reports_violation(steel):
    p = _type1(steel, variables={"t": (0.05, 0.9), "omega": (0.0, 2000.0)})
    ev = evaluate_design(p, {"t": 0.3, "omega": 2000.0})
    assert not ev.feasible and ev.violation > 0 and ev.utilization > 1
    assert ev.rank < evaluate_design(p, {"t": 0.3, "omega": 100.0}).rank


def test_no_feasible_design(steel):
    p = _type1(steel, variables={"t": (0.05, 0.9)}, fixed={"b": 1.0, "h": 0.225, "interference": 0.05})
    with pytest.raises(NoFeasibleDesign):
        optimize(p)


def test_equality_constraint_is_met(steel):
    p = OptimizationProblem(
        material=steel,
        variables={"b": (0.5, 1.5), "h": (0.1, 1.0)},
        equalities=(LinearEquality({"b": 1.0, "h": 1.0}, 1.6),),
        objective="total_energy",
    )
    assert p.dependent_variables == ("h",)
    res = optimize(p)
    vals = res.evaluation.values
    assert vals["b"] + vals["h"] == pytest.approx(1.6, abs=1e-12)
    assert res.evaluation.feasible


def test_snap_rounds_to_grid(steel):
    res = optimize(_type1(steel, variables={"t": (0.05, 0.9), "omega": (100.0, 500.0)}, snap=True))
    assert res.snapped is not None and res.snapped_evaluation.feasible
    rpm = res.snapped["omega"] * 60 / (2 * math.pi)
    assert rpm == pytest.approx(round(rpm), abs=1e-6)
    assert res.snapped_evaluation.objective <= res.objective + 1e-12


def test_sweep_problem_and_callable(steel):
    rows = sweep(_type1(steel), {"t": [0.1, 0.2, 0.3]})
    assert [r["t"] for r in rows] == [0.1, 0.2, 0.3]
    assert all(r["feasible"] for r in rows)
    assert rows[0]["objective"] > rows[1]["objective"] > rows[2]["objective"]
    calls = sweep(lambda x, y: x * y, {"x": [1.0, 2.0], "y": [3.0]})
    assert calls == [{"x": 1.0, "y": 3.0, "value": 3.0}, {"x": 2.0, "y": 3.0, "value": 6.0}]
    assert rows_to_csv(calls).splitlines() == ["x,y,value", "1.0,3.0,3.0", "2.0,3.0,6.0"]
    with pytest.raises(ValidationError):
        sweep(lambda x: x, {"x": []})
    with pytest.raises(ValidationError):
        sweep(lambda x, y: x, {"x": np.zeros(1001), "y": np.zeros(1001)})


def test_preload_same_material_gives_no_gain(steel):
    rep = preload_study(steel, 1.0, 0.225, 0.1, starts=2)
    assert rep.baseline_speed == pytest.approx(488.64, rel=1e-4)
    assert rep.speed_gain <= 1e-9
    assert rep.energy_gain == pytest.approx(rep.quadratic_energy_gain, rel=1e-9, abs=1e-12)
    assert "Plane-stress" in rep.caveat


def test_preload_stronger_ring_gains(steel):
    strong = make_material(name="strong", density=7700, poisson_ratio=0.3, elastic_modulus=200e9,
                           yield_strength=3e9)
    rep = preload_study(steel, 1.0, 0.225, 0.1, ring_material=strong, starts=2)
    assert rep.speed_gain > 0.3
    assert rep.interference > 0 and rep.interface_pressure_at_rest > 0
    assert rep.energy_gain == pytest.approx((1 + rep.speed_gain) ** 2 - 1, rel=1e-9)
    bodies = (RingSpec(steel, 0.1, rep.split_radius), RingSpec(strong, rep.split_radius, 1.0,
                                                                rep.interference * rep.split_radius))
    assert admissible_speed(bodies, rep.mode).speed == pytest.approx(rep.best_speed, rel=1e-9)
