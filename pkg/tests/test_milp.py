import math

import pytest
from hypothesis import given, settings, strategies as st

from dsr.milp import (
    MilpError,
    MilpModel,
    SolutionParseError,
    SolveStatus,
    VariableSpec,
    VarKind,
    read_solution,
    write_lp,
)


def small():
    m = MilpModel("t")
    x = m.add_variable(VariableSpec("x"))
    y = m.add_variable(VariableSpec("y", VarKind.binary))
    m.add_constraint("c0", [(1.0, x)], "<=", 1.0)
    m.set_objective([(1.0, x)])
    return m, x, y


def test_add_variable_ids_and_counts():
    m, x, y = small()
    assert (x, y) == (0, 1)
    assert m.var_id("y") == 1
    assert m.binary_count == 1 and m.continuous_count == 1
    assert m.variables[y].upper == 1.0


def test_duplicate_names_rejected():
    m, x, _ = small()
    with pytest.raises(MilpError):
        m.add_variable(VariableSpec("x"))
    with pytest.raises(MilpError):
        m.add_constraint("c0", [(1.0, x)], ">=", 0.0)


def test_bad_bounds_and_names():
    m = MilpModel()
    with pytest.raises(MilpError):
        m.add_variable(VariableSpec("x", lower=2.0, upper=1.0))
    with pytest.raises(MilpError):
        m.add_variable(VariableSpec("has space"))
    with pytest.raises(MilpError):
        m.add_constraint("c", [(1.0, 7)], "<=", 0.0)


def test_terms_are_merged():
    m, x, y = small()
    con = m.add_constraint("c1", [(1.0, x), (2.0, x), (1.0, y), (-1.0, y)], "=", 0.0)
    assert con.terms == ((3.0, x),)


def test_lp_text_sections():
    m, _, _ = small()
    text = write_lp(m)
    lines = text.splitlines()
    assert lines[1] == "Maximize"
    assert " obj: 1 x" in lines
    assert " c0: 1 x <= 1" in lines
    assert lines.index("Binary") < lines.index(" y") < lines.index("End")
    assert " 0 <= x <= +inf" in lines


def test_lp_empty_objective_anchor():
    m = MilpModel()
    m.add_variable(VariableSpec("x", upper=1.0))
    assert " obj: 0 x" in write_lp(m)
    with pytest.raises(MilpError):
        write_lp(MilpModel())


def test_lp_bound_forms():
    m = MilpModel()
    m.add_variable(VariableSpec("f", lower=-math.inf))
    m.add_variable(VariableSpec("k", lower=2.0, upper=2.0))
    m.add_variable(VariableSpec("b", VarKind.binary, upper=0.0))
    lines = write_lp(m).splitlines()
    assert " f free" in lines
    assert " k = 2" in lines
    assert " 0 <= b <= 0" in lines


def test_lp_is_deterministic():
    a, b = small()[0], small()[0]
    assert write_lp(a) == write_lp(b)


def test_long_rows_are_wrapped():
    m = MilpModel()
    ids = [m.add_variable(VariableSpec(f"variable_with_long_name_{i}")) for i in range(60)]
    m.add_constraint("big", [(1.0, i) for i in ids], "<=", 1.0)
    assert max(len(ln) for ln in write_lp(m).splitlines()) < 255


def test_read_solution_forms():
    m, x, y = small()
    a = read_solution("x 1\n", m)
    assert a.status is SolveStatus.optimal and a.value(x) == 1.0 and a.value(y) == 0.0
    a = read_solution("Optimal - objective value 1.00000000\n      0 x  1  0\n   ** 1 y 1 0\n", m)
    assert a.objective_value == 1.0 and a.value(y) == 1.0
    a = read_solution("Infeasible - objective value 0\n", m)
    assert a.status is SolveStatus.infeasible and not a.has_solution
    a = read_solution("Stopped on time - objective value 0.5\n 0 x 0.5 0\n", m)
    assert a.status is SolveStatus.feasible


def test_read_solution_errors():
    m, _, _ = small()
    with pytest.raises(SolutionParseError):
        read_solution("", m)
    with pytest.raises(SolutionParseError):
        read_solution("Optimal\nzz 1\n", m)
    with pytest.raises(SolutionParseError):
        read_solution("Garbage header here\n", m)
    # constraint rows in the listing are skipped
    assert read_solution("Optimal\nc0 1\nx 1\n", m).value(0) == 1.0


def test_max_violation():
    m, x, y = small()
    assert m.max_violation([1.0, 0.0]) == (0.0, None)
    viol, where = m.max_violation([3.0, 0.0])
    assert where == "c0" and viol == pytest.approx(2.0 / 4.0)
    viol, where = m.max_violation([0.0, 2.0])
    assert where == "y" and viol == pytest.approx(1.0 / 3.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5, allow_nan=False), st.floats(0.1, 3)), min_size=1, max_size=8))
def test_written_values_round_trip(vals):
    m = MilpModel()
    for i, (_, hi) in enumerate(vals):
        m.add_variable(VariableSpec(f"v{i}", lower=-hi, upper=hi))
    m.set_objective([(c, i) for i, (c, _) in enumerate(vals)])
    sol = "Optimal\n" + "".join(f"v{i} {repr(hi)}\n" for i, (_, hi) in enumerate(vals))
    a = read_solution(sol, m)
    assert a.vector(m) == [hi for _, hi in vals]
    assert a.objective_value == pytest.approx(sum(c * hi for c, hi in vals))
    assert write_lp(m).count(" <= ") == 2 * len(vals)
