"""Subprocess bridge to an external MILP solver over LP files.

The solver is described by a command template with ``{lp}``, ``{sol}``,
``{time_limit}`` and ``{gap}`` placeholders. ``DSR_SOLVER_CMD`` overrides
the template; ``cbc`` and ``highs`` presets are built in.
"""

from __future__ import annotations

import importlib.util
import logging
import os
import re
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from .blocks import BlockPartition
from .feeder import FeederModel
from .formulation.core import VarIndex
from .milp import INTEGRALITY_TOL, Assignment, MilpModel, SolveStatus, read_solution, write_lp
from .plan import PlanStep, RestorationPlan

log = logging.getLogger(__name__)

ENV_VAR = "DSR_SOLVER_CMD"


class SolverError(RuntimeError):
    pass


class SolverNotFoundError(SolverError):
    pass


class IntegralityError(ValueError):
    def __init__(self, variable: str, value: float):
        self.variable = variable
        self.value = value
        super().__init__(f"binary variable {variable} has non-integral value {value}")


def bundled_cbc() -> str | None:
    """CBC executable on PATH, else the one shipped inside PuLP."""
    found = shutil.which("cbc")
    if found:
        return found
    spec = importlib.util.find_spec("pulp")
    if spec is None or spec.origin is None:
        return None
    arch = {"x86_64": "i64", "AMD64": "i64", "aarch64": "arm64", "arm64": "arm64"}.get(os.uname().machine, "i64")
    plat = "osx" if sys.platform == "darwin" else "linux"
    path = Path(spec.origin).parent / "solverdir" / "cbc" / plat / arch / "cbc"
    if path.is_file():
        if not os.access(path, os.X_OK):
            try:
                path.chmod(path.stat().st_mode | 0o755)
            except OSError:
                return None
        return str(path)
    return None


def preset(name: str) -> str:
    if name == "cbc":
        exe = bundled_cbc() or "cbc"
        return shlex.quote(exe) + " {lp} sec {time_limit} ratio {gap} solve solu {sol}"
    if name == "highs":
        return shlex.quote(sys.executable) + " -m dsr.highs_runner {lp} {sol} --time-limit {time_limit} --gap {gap}"
    raise ValueError(f"unknown solver preset {name!r}")


@dataclass
class SolverConfig:
    command: str | None = None
    time_limit_s: float = 3000.0
    rel_gap: float = 1e-4
    keep_artifacts: bool = False
    workdir: str | None = None
    # scaled primal violation above which a returned point is rejected
    feasibility_tol: float = 1e-6

    def __post_init__(self):
        if self.command is None:
            self.command = os.environ.get(ENV_VAR) or preset("cbc")
        elif self.command in ("cbc", "highs"):
            self.command = preset(self.command)
        if "{lp}" not in self.command or "{sol}" not in self.command:
            raise ValueError("solver command template must contain {lp} and {sol}")


@dataclass
class SolveStats:
    wall_time_s: float
    objective: float | None
    reported_gap: float | None
    status: SolveStatus
    binary_count: int
    continuous_count: int


_GAP_RE = re.compile(r"^\s*Gap:\s*([-+0-9.eE]+)", re.M)


def _parse_gap(stdout: str) -> float | None:
    found = _GAP_RE.findall(stdout)
    if not found:
        return None
    try:
        return max(0.0, float(found[-1]))
    except ValueError:
        return None


def solve(milp: MilpModel, cfg: SolverConfig | None = None) -> tuple[Assignment, SolveStats]:
    cfg = cfg or SolverConfig()
    tmp = Path(cfg.workdir or tempfile.mkdtemp(prefix="dsr_"))
    tmp.mkdir(parents=True, exist_ok=True)
    lp, sol = tmp / f"{milp.name}.lp", tmp / f"{milp.name}.sol"
    lp.write_text(write_lp(milp))
    if sol.exists():
        sol.unlink()
    cmd = shlex.split(
        cfg.command.format(lp=shlex.quote(str(lp)), sol=shlex.quote(str(sol)), time_limit=cfg.time_limit_s, gap=cfg.rel_gap)
    )
    if shutil.which(cmd[0]) is None and not os.access(cmd[0], os.X_OK):
        raise SolverNotFoundError(f"solver executable {cmd[0]!r} not found")

    start = time.perf_counter()
    stdout = ""
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=cfg.time_limit_s + 60, cwd=tmp)
        stdout = proc.stdout
        rc = proc.returncode
    except subprocess.TimeoutExpired as exc:
        stdout = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
        rc = None
    wall = time.perf_counter() - start
    try:
        if not sol.exists():
            if rc is None:
                asg = Assignment({}, None, SolveStatus.timeout)
            else:
                tail = (proc.stderr or proc.stdout)[-2000:]
                raise SolverError(f"solver exited with code {rc} and wrote no solution:\n{tail}")
        else:
            asg = read_solution(sol.read_text(), milp)
            if rc is None and asg.status is SolveStatus.optimal:
                asg.status = SolveStatus.feasible
    finally:
        (tmp / "solver.log").write_text(stdout)
        if not cfg.keep_artifacts and cfg.workdir is None:
            shutil.rmtree(tmp, ignore_errors=True)

    if asg.has_solution:
        viol, where = milp.max_violation(asg.vector(milp))
        if viol > cfg.feasibility_tol:
            if asg.status is SolveStatus.optimal:
                raise SolverError(f"solver reported optimal but {where} is violated by {viol:.3g}")
            # some solvers write an inconsistent point when stopped early
            log.warning("discarding incumbent of %s: %s violated by %.3g", milp.name, where, viol)
            asg = Assignment({}, None, SolveStatus.timeout)

    gap = _parse_gap(stdout)
    if gap is None and asg.status is SolveStatus.optimal:
        gap = 0.0
    asg.gap = gap
    stats = SolveStats(wall, asg.objective_value, gap, asg.status, milp.binary_count, milp.continuous_count)
    log.info("solved %s: %s obj=%s in %.2fs", milp.name, asg.status.value, asg.objective_value, wall)
    return asg, stats


# --------------------------------------------------------------------------
# Plan extraction

BINARY_SYMBOLS = ("gamma", "z", "omega", "x", "y")


def extract_plan(
    assignment: Assignment,
    var_index: VarIndex,
    model: FeederModel,
    partition: BlockPartition,
    milp: MilpModel | None = None,
) -> RestorationPlan:
    if not assignment.has_solution:
        raise SolverError(f"no solution to extract (status {assignment.status.value})")

    def val(sym, obj, ph=None, t=0) -> float:
        vid = var_index.get(sym, obj, ph, t)
        return 0.0 if vid is None else assignment.value(vid)

    for (sym, obj, ph, t), vid in var_index.items():
        if sym in BINARY_SYMBOLS:
            x = assignment.value(vid)
            if min(abs(x), abs(x - 1.0)) > INTEGRALITY_TOL:
                name = milp.variables[vid].name if milp is not None else f"{sym}[{obj},t{t}]"
                raise IntegralityError(name, x)

    base = model.base_kva
    block_kind = var_index.kind != "traditional"
    steps = []
    for t in range(model.horizon.n_steps):
        st = PlanStep()
        for sw in model.switches:
            st.switches[sw.id] = int(val("gamma", sw.id, None, t) >= 0.5)
        for ld in model.loads:
            if block_kind:
                on = val("z", f"blk{partition.block_of_load(model, ld.id)}", None, t) >= 0.5
            else:
                on = val("z", ld.id, None, t) >= 0.5
            st.load_served[ld.id] = {
                ph.value: (model.demand(ld.id, ph, t) if on else 0j) for ph in ld.phases
            }
        for d in model.dgs:
            st.dg_dispatch[d.id] = {
                ph.value: complex(val("pg", d.id, ph.value, t), val("qg", d.id, ph.value, t)) * base for ph in d.phases
            }
        for blk in partition.blocks:
            if block_kind:
                st.block_energized[blk.id] = val("z", f"blk{blk.id}", None, t) >= 0.5
            elif blk.loads:
                st.block_energized[blk.id] = any(st.served_kw(l) > 0 for l in blk.loads)
            else:
                st.block_energized[blk.id] = any(
                    abs(s) > 1e-9 for d in blk.dgs for s in st.dg_dispatch[d].values()
                )
        if var_index.kind == "block_gfm":
            for d in model.dgs:
                if d.grid_forming_capable:
                    x = int(val("x", d.id, None, t) >= 0.5)
                    st.gfm_mode[d.id] = x
                    st.gfm_active[d.id] = int(x and st.block_energized[partition.block_of_dg(model, d.id)])
        for bt in model.batteries:
            st.battery_energy[bt.dg_id] = val("psi", bt.dg_id, None, t) * base
            st.battery_rate[bt.dg_id] = val("prate", bt.dg_id, None, t) * base
        for ln in model.lines:
            st.line_flow[ln.id] = {
                ph.value: complex(val("p", ln.id, ph.value, t), val("q", ln.id, ph.value, t)) * base for ph in ln.phases
            }
        for bus in model.buses:
            st.voltage_sq[bus.id] = {ph.value: val("w", bus.id, ph.value, t) for ph in bus.phases}
        steps.append(st)
    return RestorationPlan(model.name, var_index.kind, model.horizon.dt, steps, assignment.objective_value)
