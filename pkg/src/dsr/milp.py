"""Generic mixed-integer linear model with CPLEX-LP serialization.

Only model assembly and file I/O live here; solving is delegated to an
external executable (see ``dsr.solver``).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

INTEGRALITY_TOL = 1e-6

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class MilpError(ValueError):
    pass


class SolutionParseError(MilpError):
    pass


class VarKind(str, enum.Enum):
    continuous = "continuous"
    binary = "binary"


class Sense(str, enum.Enum):
    le = "<="
    eq = "="
    ge = ">="


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: VarKind = VarKind.continuous
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "kind", VarKind(self.kind))
        if self.kind is VarKind.binary:
            object.__setattr__(self, "lower", max(0.0, float(self.lower)))
            object.__setattr__(self, "upper", min(1.0, float(self.upper)))


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    terms: tuple[tuple[float, int], ...]
    sense: Sense
    rhs: float


class MilpModel:
    """Variables, constraints and a maximization objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[VariableSpec] = []
        self.constraints: list[LinearConstraint] = []
        self.objective: list[tuple[float, int]] = []
        self.sense = "maximize"
        self._ids: dict[str, int] = {}
        self._cnames: set[str] = set()

    def __len__(self) -> int:
        return len(self.variables)

    def add_variable(self, spec: VariableSpec) -> int:
        if not _NAME_RE.match(spec.name):
            raise MilpError(f"variable name {spec.name!r} is not LP-safe")
        if spec.name in self._ids:
            raise MilpError(f"duplicate variable name {spec.name!r}")
        if not spec.lower <= spec.upper:
            raise MilpError(f"variable {spec.name!r}: lower bound {spec.lower} > upper bound {spec.upper}")
        vid = len(self.variables)
        self.variables.append(spec)
        self._ids[spec.name] = vid
        return vid

    def var_id(self, name: str) -> int:
        return self._ids[name]

    def add_constraint(
        self,
        name: str,
        terms: Iterable[tuple[float, int]],
        sense: str | Sense,
        rhs: float,
    ) -> LinearConstraint:
        if not _NAME_RE.match(name):
            raise MilpError(f"constraint name {name!r} is not LP-safe")
        if name in self._cnames:
            raise MilpError(f"duplicate constraint name {name!r}")
        merged = _merge(terms, len(self.variables))
        if not math.isfinite(rhs):
            raise MilpError(f"constraint {name!r}: non-finite rhs")
        con = LinearConstraint(name, merged, Sense(sense), float(rhs))
        self.constraints.append(con)
        self._cnames.add(name)
        return con

    def set_objective(self, terms: Iterable[tuple[float, int]]) -> None:
        self.objective = list(_merge(terms, len(self.variables)))

    @property
    def binary_count(self) -> int:
        return sum(v.kind is VarKind.binary for v in self.variables)

    @property
    def continuous_count(self) -> int:
        return len(self.variables) - self.binary_count

    def objective_value(self, values: Sequence[float]) -> float:
        return sum(c * values[v] for c, v in self.objective)

    def max_violation(self, values: Sequence[float]) -> tuple[float, str | None]:
        """Largest bound or row violation, each scaled by 1 + sum |a_j x_j|."""
        worst, where = 0.0, None
        for spec, x in zip(self.variables, values):
            d = max(spec.lower - x, x - spec.upper, 0.0) / (1.0 + abs(x))
            if d > worst:
                worst, where = d, spec.name
        for con in self.constraints:
            lhs = sum(a * values[v] for a, v in con.terms)
            scale = 1.0 + sum(abs(a * values[v]) for a, v in con.terms)
            if con.sense is Sense.le:
                d = lhs - con.rhs
            elif con.sense is Sense.ge:
                d = con.rhs - lhs
            else:
                d = abs(lhs - con.rhs)
            d = max(d, 0.0) / scale
            if d > worst:
                worst, where = d, con.name
        return worst, where


def _merge(terms: Iterable[tuple[float, int]], n_vars: int) -> tuple[tuple[float, int], ...]:
    acc: dict[int, float] = {}
    for coef, vid in terms:
        if not 0 <= vid < n_vars:
            raise MilpError(f"term references undeclared variable id {vid}")
        if not math.isfinite(coef):
            raise MilpError(f"non-finite coefficient on variable {vid}")
        acc[vid] = acc.get(vid, 0.0) + float(coef)
    return tuple((c, v) for v, c in acc.items() if c != 0.0)


# --------------------------------------------------------------------------
# LP text


def _num(x: float) -> str:
    return "%.17g" % (x + 0.0)  # no "-0"


def _linear(terms: Sequence[tuple[float, int]], names: Sequence[str]) -> str:
    parts = []
    for i, (c, v) in enumerate(terms):
        if i == 0:
            parts.append(f"{_num(c)} {names[v]}")
        elif c < 0:
            parts.append(f"- {_num(-c)} {names[v]}")
        else:
            parts.append(f"+ {_num(c)} {names[v]}")
    return " ".join(parts)


def _wrap(prefix: str, body: str, width: int = 200) -> list[str]:
    # keeps lines well under the 255/560-character limits of common LP readers
    out, line = [], prefix
    for tok in body.split(" "):
        if len(line) + len(tok) + 1 > width and line.strip():
            out.append(line)
            line = "   "
        line = f"{line} {tok}" if line else tok
    out.append(line)
    return out


def write_lp(model: MilpModel) -> str:
    if not model.variables:
        raise MilpError("cannot write an empty model")
    names = [v.name for v in model.variables]
    lines = [f"\\ {model.name}", "Maximize"]
    if model.objective:
        lines += _wrap(" obj:", _linear(model.objective, names))
    else:
        # zero-coefficient anchor keeps the section syntactically valid
        lines.append(f" obj: 0 {names[0]}")
    lines.append("Subject To")
    for con in model.constraints:
        body = _linear(con.terms, names) if con.terms else f"0 {names[0]}"
        lines += _wrap(f" {con.name}:", f"{body} {con.sense.value} {_num(con.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if v.kind is VarKind.binary:
            continue
        lo, hi = v.lower, v.upper
        if lo == hi:
            lines.append(f" {v.name} = {_num(lo)}")
        elif lo == -math.inf and hi == math.inf:
            lines.append(f" {v.name} free")
        else:
            lo_s = "-inf" if lo == -math.inf else _num(lo)
            hi_s = "+inf" if hi == math.inf else _num(hi)
            lines.append(f" {lo_s} <= {v.name} <= {hi_s}")
    binaries = [v for v in model.variables if v.kind is VarKind.binary]
    # fixed binaries are written as bounds too
    for v in binaries:
        if (v.lower, v.upper) != (0.0, 1.0):
            lines.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    if binaries:
        lines.append("Binary")
        lines += [f" {v.name}" for v in binaries]
    lines.append("End")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Solutions


class SolveStatus(str, enum.Enum):
    optimal = "optimal"
    feasible = "feasible"
    infeasible = "infeasible"
    timeout = "timeout"


@dataclass
class Assignment:
    values: dict[int, float] = field(default_factory=dict)
    objective_value: float | None = None
    status: SolveStatus = SolveStatus.optimal
    gap: float | None = None

    @property
    def has_solution(self) -> bool:
        return self.status in (SolveStatus.optimal, SolveStatus.feasible)

    def value(self, vid: int) -> float:
        return self.values.get(vid, 0.0)

    def vector(self, model: MilpModel) -> list[float]:
        return [self.values.get(i, 0.0) for i in range(len(model.variables))]

    def integrality_defects(self, model: MilpModel, tol: float = INTEGRALITY_TOL) -> list[str]:
        bad = []
        for i, v in enumerate(model.variables):
            if v.kind is VarKind.binary:
                x = self.values.get(i, 0.0)
                if min(abs(x), abs(x - 1.0)) > tol:
                    bad.append(v.name)
        return bad


_STATUS_PATTERNS = (
    (re.compile(r"^optimal", re.I), SolveStatus.optimal),
    (re.compile(r"^(integer )?infeasible", re.I), SolveStatus.infeasible),
    (re.compile(r"^stopped on (time|iterations|nodes|solutions|gap)", re.I), SolveStatus.feasible),
    (re.compile(r"^(timeout|time limit)", re.I), SolveStatus.timeout),
    (re.compile(r"^feasible", re.I), SolveStatus.feasible),
)


def read_solution(text: str, model: MilpModel) -> Assignment:
    """Parse a solution in the "status header + name value" line format.

    Value lines may be ``name value`` or the CBC form
    ``index name value reduced_cost`` (optionally prefixed with ``**``).
    Variables absent from the file are zero.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SolutionParseError("empty solution file")
    header = lines[0]
    status = None
    for pat, st in _STATUS_PATTERNS:
        if pat.search(header):
            status = st
            break
    body = lines[1:]
    if status is None:
        if len(header.split()) == 2 and header.split()[0] in model._ids:
            # bare value listing without a header
            status, body = SolveStatus.optimal, lines
        else:
            raise SolutionParseError(f"unrecognized status line {header!r}")
    obj = None
    m = re.search(r"objective value\s*[:=]?\s*(\S+)", header, re.I)
    if m:
        try:
            obj = float(m.group(1))
        except ValueError:
            obj = None
    if status is SolveStatus.feasible and "no integer solution" in header.lower():
        status = SolveStatus.timeout
    if status in (SolveStatus.infeasible, SolveStatus.timeout):
        return Assignment({}, None, status)

    values: dict[int, float] = {}
    ids = model._ids
    for ln in body:
        toks = ln.split()
        if toks[0] == "**":
            toks = toks[1:]
        if len(toks) >= 3 and toks[0].isdigit():
            name, raw = toks[1], toks[2]
        elif len(toks) == 2:
            name, raw = toks
        else:
            raise SolutionParseError(f"cannot parse solution line {ln!r}")
        if name not in ids:
            if name in model._cnames:
                continue
            raise SolutionParseError(f"unknown variable {name!r} in solution")
        try:
            values[ids[name]] = float(raw)
        except ValueError:
            raise SolutionParseError(f"bad value in line {ln!r}") from None
    if obj is None:
        obj = model.objective_value([values.get(i, 0.0) for i in range(len(model.variables))])
    return Assignment(values, obj, status)
