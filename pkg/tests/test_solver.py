import time

import pytest

from dsr.formulation import build_dsr
from dsr.milp import Assignment, MilpModel, SolveStatus, VariableSpec, VarKind
from dsr.solver import (
    IntegralityError,
    SolverConfig,
    SolverError,
    SolverNotFoundError,
    extract_plan,
    solve,
)

from conftest import exact_solver

pytestmark = pytest.mark.solver


def tiny(binary=True):
    m = MilpModel("tiny")
    x = m.add_variable(VariableSpec("x", VarKind.binary if binary else VarKind.continuous))
    m.add_constraint("c0", [(1.0, x)], "<=", 1.0)
    m.set_objective([(1.0, x)])
    return m


@pytest.mark.parametrize("engine", ["cbc", "highs"])
def test_trivial_binary(engine):
    asg, stats = solve(tiny(), exact_solver(command=engine))
    assert asg.status is SolveStatus.optimal
    assert asg.value(0) == pytest.approx(1.0)
    assert stats.objective == pytest.approx(1.0)
    assert stats.binary_count == 1 and stats.continuous_count == 0


@pytest.mark.parametrize("engine", ["cbc", "highs"])
def test_infeasible(engine):
    m = tiny(binary=False)
    m.add_constraint("c1", [(1.0, 0)], ">=", 2.0)
    asg, stats = solve(m, exact_solver(command=engine))
    assert asg.status is SolveStatus.infeasible
    assert not asg.has_solution and stats.objective is None


def test_missing_executable():
    with pytest.raises(SolverNotFoundError):
        solve(tiny(), SolverConfig(command="/nonexistent/solver {lp} {sol}"))


def test_bad_template():
    with pytest.raises(ValueError):
        SolverConfig(command="cbc {lp}")


def test_env_var_selects_command(monkeypatch):
    monkeypatch.setenv("DSR_SOLVER_CMD", "mysolver {lp} {sol}")
    assert SolverConfig().command == "mysolver {lp} {sol}"


def test_keep_artifacts(tmp_path):
    solve(tiny(), exact_solver(workdir=str(tmp_path), keep_artifacts=True))
    assert (tmp_path / "tiny.lp").exists()
    assert (tmp_path / "tiny.sol").exists()
    assert (tmp_path / "solver.log").exists()


def test_tri_block_gfm_fast(tri):
    m, p = tri
    milp, idx, _ = build_dsr(m, p, "block_gfm")
    t0 = time.perf_counter()
    asg, stats = solve(milp, exact_solver())
    assert time.perf_counter() - t0 < 5.0
    assert asg.status is SolveStatus.optimal
    # one closure per step: only B can be picked up
    assert stats.objective == pytest.approx(10.0)
    plan = extract_plan(asg, idx, m, p, milp)
    assert plan.steps[0].switches == {"S1": 1, "S2": 0}
    assert plan.steps[0].gfm_active == {"G1": 1}
    assert plan.objective == pytest.approx(10.0)


def test_fractional_binary_is_reported(tri):
    m, p = tri
    milp, idx, _ = build_dsr(m, p, "block")
    vid = idx.get("z", "blk1", None, 0)
    asg = Assignment({vid: 0.4}, 4.0, SolveStatus.feasible)
    with pytest.raises(IntegralityError) as e:
        extract_plan(asg, idx, m, p, milp)
    assert e.value.variable == "z_blk1_t0"


def test_all_zero_assignment_is_all_shed(tri):
    m, p = tri
    milp, idx, _ = build_dsr(m, p, "block")
    plan = extract_plan(Assignment({}, 0.0, SolveStatus.optimal), idx, m, p, milp)
    assert all(st.served_kw(l) == 0 for st in plan.steps for l in ("LB", "LC"))
    assert not any(plan.steps[0].block_energized.values())


def test_no_solution_cannot_be_extracted(tri):
    m, p = tri
    milp, idx, _ = build_dsr(m, p, "block")
    with pytest.raises(SolverError):
        extract_plan(Assignment({}, None, SolveStatus.infeasible), idx, m, p, milp)


def test_violated_optimal_point_is_rejected(tmp_path):
    # a fake solver that claims optimality for an infeasible point
    script = tmp_path / "liar.py"
    script.write_text("import sys\nopen(sys.argv[2], 'w').write('Optimal - objective value 5\\nx 5\\n')\n")
    cfg = SolverConfig(command=f"python3 {script} {{lp}} {{sol}}")
    with pytest.raises(SolverError):
        solve(tiny(binary=False), cfg)


def test_early_stop_with_bad_point_becomes_timeout(tmp_path):
    script = tmp_path / "early.py"
    script.write_text("import sys\nopen(sys.argv[2], 'w').write('Stopped on time - objective value 5\\nx 5\\n')\n")
    cfg = SolverConfig(command=f"python3 {script} {{lp}} {{sol}}")
    asg, stats = solve(tiny(binary=False), cfg)
    assert asg.status is SolveStatus.timeout and stats.status is SolveStatus.timeout


@pytest.mark.parametrize("kind", ["traditional", "block", "block_gfm"])
def test_engines_agree_on_tri(tri, kind):
    m, p = tri
    milp, _, _ = build_dsr(m, p, kind)
    a, _ = solve(milp, exact_solver(command="cbc"))
    b, _ = solve(milp, exact_solver(command="highs"))
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)
