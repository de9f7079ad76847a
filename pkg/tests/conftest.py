import copy
import importlib.resources
import json

import pytest

from dsr.blocks import compute_load_blocks
from dsr.feeder import feeder_from_dict, load_feeder
from dsr.formulation import FormulationOptions, build_dsr
from dsr.solver import SolverConfig, bundled_cbc, extract_plan, solve

DATA = importlib.resources.files("dsr") / "data"


def fixture_path(name):
    return str(DATA / f"{name}.json")


def fixture_dict(name):
    return json.loads((DATA / f"{name}.json").read_text())


def tri_variant(**changes):
    """tri_block with edits applied to a copy of its JSON document."""
    doc = copy.deepcopy(fixture_dict("tri_block"))
    for key, fn in changes.items():
        fn(doc)
    return feeder_from_dict(doc)


def exact_solver(**kw):
    kw.setdefault("rel_gap", 0.0)
    kw.setdefault("time_limit_s", 120)
    return SolverConfig(**kw)


# every plan solved anywhere in the run, as (model, partition, options, plan)
SOLVED = []
# acceptance criterion number -> (title, outcome, detail)
CRITERIA = {}


def solve_plan(model, partition, kind, opts=None, solver=None):
    """Build, solve and extract; returns (plan, assignment, stats)."""
    opts = opts or FormulationOptions()
    milp, idx, _ = build_dsr(model, partition, kind, opts)
    asg, stats = solve(milp, solver or exact_solver())
    plan = extract_plan(asg, idx, model, partition, milp) if asg.has_solution else None
    if plan is not None:
        SOLVED.append((model, partition, opts, copy.deepcopy(plan)))
    return plan, asg, stats


@pytest.fixture(scope="session")
def tri():
    m = load_feeder(fixture_path("tri_block"))
    return m, compute_load_blocks(m)


@pytest.fixture(scope="session")
def ieee13():
    m = load_feeder(fixture_path("ieee13_analogue"))
    return m, compute_load_blocks(m)


def pytest_collection_modifyitems(config, items):
    # the acceptance module inspects plans solved by the rest of the suite
    items.sort(key=lambda it: it.module.__name__ == "test_acceptance")
    if bundled_cbc() is None:
        skip = pytest.mark.skip(reason="no CBC executable available")
        for item in items:
            if "solver" in item.keywords:
                item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = item.user_properties[-1][1] if item.user_properties else ""
        CRITERIA[n] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, verdict, detail = CRITERIA[n]
        terminalreporter.write_line(f"{verdict} criterion {n:2d}: {title}" + (f" | {detail}" if detail else ""))
