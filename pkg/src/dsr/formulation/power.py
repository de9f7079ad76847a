"""Network physics: bus balance, LinDistFlow voltage drop, limits, storage.

Powers are per-unit on ``base_kva``; squared voltage magnitudes are per-unit.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from ..feeder import LineParams
from .core import BuildError, DsrBuilder

ROTATION = cmath.exp(-2j * math.pi / 3)


def lindistflow_matrices(line: LineParams) -> tuple[np.ndarray, np.ndarray]:
    """Voltage-drop sensitivities (M_P, M_Q) of a line, indexed by its phases.

    M_P = 2 Re(G o conj(Z)), M_Q = -2 Im(G o conj(Z)), G[i, j] = a^(n(i) - n(j)).
    """
    n = len(line.phases)
    Z = np.array(line.impedance, dtype=complex).reshape(n, n)
    ords = np.array([p.ordinal for p in line.phases])
    G = ROTATION ** (ords[:, None] - ords[None, :])
    H = G * np.conj(Z)
    return 2.0 * H.real, -2.0 * H.imag


def voltage_big_m(b: DsrBuilder, line: LineParams) -> float:
    if b.opts.big_m_voltage is not None:
        return b.opts.big_m_voltage
    fb, tb = b.feeder.bus_by_id[line.from_bus], b.feeder.bus_by_id[line.to_bus]
    hi = max(max(fb.vmax), max(tb.vmax)) ** 2
    lo = min(min(fb.vmin), min(tb.vmin)) ** 2
    return hi - lo


def add_network_variables(b: DsrBuilder, t: int) -> None:
    f = b.feeder
    with b.group("voltage_drop"):
        for bus in f.buses:
            for ph, lo, hi in zip(bus.phases, bus.vmin, bus.vmax):
                if lo > hi:
                    raise BuildError(f"bus {bus.id!r}: vmin^2 > vmax^2 on phase {ph.value}")
                b.var("w", bus.id, ph, t, lower=lo * lo, upper=hi * hi)
    for ln in f.lines:
        for ph, s in zip(ln.phases, ln.thermal_limit):
            b.var("p", ln.id, ph, t, lower=-s, upper=s)
            b.var("q", ln.id, ph, t, lower=-s, upper=s)
    for d in f.dgs:
        for ph, lo, hi in zip(d.phases, d.smin, d.smax):
            plo, phi, qlo, qhi = lo.real / b.base, hi.real / b.base, lo.imag / b.base, hi.imag / b.base
            if b.kind.is_block:
                # box edges are re-imposed scaled by block energization
                plo, phi, qlo, qhi = min(plo, 0.0), max(phi, 0.0), min(qlo, 0.0), max(qhi, 0.0)
            b.var("pg", d.id, ph, t, lower=plo, upper=phi)
            b.var("qg", d.id, ph, t, lower=qlo, upper=qhi)


def add_power_balance(b: DsrBuilder, t: int) -> None:
    f = b.feeder
    with b.group("power_balance"):
        for bus in f.buses:
            for ph in bus.phases:
                for sym, dsym, part in (("p", "pg", "real"), ("q", "qg", "imag")):
                    terms = []
                    for d in f.dgs_at[bus.id]:
                        if ph in f.dg_by_id[d].phases:
                            terms.append((1.0, b.v(dsym, d, ph, t)))
                    for k in f.lines_out[bus.id]:
                        if ph in f.line_by_id[k].phases:
                            terms.append((-1.0, b.v(sym, k, ph, t)))
                    for k in f.lines_in[bus.id]:
                        if ph in f.line_by_id[k].phases:
                            terms.append((1.0, b.v(sym, k, ph, t)))
                    for lid in f.loads_at[bus.id]:
                        ld = f.load_by_id[lid]
                        if ph in ld.phases:
                            s = getattr(f.demand(lid, ph, t), part) / b.base
                            if s != 0.0:
                                terms.append((-s, b.z_of_load(lid, t)))
                    b.con(f"bal{sym}", terms, "=", 0.0, bus.id, ph.value, f"t{t}")


def add_lindistflow_constraints(b: DsrBuilder, line: LineParams, t: int) -> None:
    f = b.feeder
    for bus_id in (line.from_bus, line.to_bus):
        if not set(line.phases) <= set(f.bus_by_id[bus_id].phases):
            raise BuildError(f"line {line.id!r}: phases not present at bus {bus_id!r}")
    MP, MQ = lindistflow_matrices(line)
    if not (np.all(np.isfinite(MP)) and np.all(np.isfinite(MQ))):
        raise BuildError(f"line {line.id!r}: impedance entry is not finite")
    closed_only = not line.is_switch
    bigm = 0.0 if closed_only else voltage_big_m(b, line)
    with b.group("voltage_drop"):
        for i, ph in enumerate(line.phases):
            terms = [(1.0, b.v("w", line.to_bus, ph, t)), (-1.0, b.v("w", line.from_bus, ph, t))]
            for j, ps in enumerate(line.phases):
                terms.append((MP[i, j], b.v("p", line.id, ps, t)))
                terms.append((MQ[i, j], b.v("q", line.id, ps, t)))
            if closed_only:
                b.con("vdrop", terms, "=", 0.0, line.id, ph.value, f"t{t}")
            else:
                g = b.gamma(line.id, t)
                b.con("vdropub", terms + [(bigm, g)], "<=", bigm, line.id, ph.value, f"t{t}")
                b.con("vdroplb", terms + [(-bigm, g)], ">=", -bigm, line.id, ph.value, f"t{t}")
    if line.is_switch:
        with b.group("switching"):
            g = b.gamma(line.id, t)
            for ph, s in zip(line.phases, line.thermal_limit):
                for sym in ("p", "q"):
                    x = b.v(sym, line.id, ph, t)
                    b.con(f"sw{sym}ub", [(1.0, x), (-s, g)], "<=", 0.0, line.id, ph.value, f"t{t}")
                    b.con(f"sw{sym}lb", [(1.0, x), (s, g)], ">=", 0.0, line.id, ph.value, f"t{t}")


def polygon_directions(sides: int) -> list[tuple[float, float]]:
    out = []
    for m in range(sides):
        th = 2.0 * math.pi * m / sides
        c, s = math.cos(th), math.sin(th)
        out.append((0.0 if abs(c) < 1e-15 else c, 0.0 if abs(s) < 1e-15 else s))
    return out


def add_thermal_limits(b: DsrBuilder, t: int) -> None:
    dirs = polygon_directions(b.opts.thermal_polygon_sides)
    with b.group("limits"):
        for ln in b.feeder.lines:
            for ph, s in zip(ln.phases, ln.thermal_limit):
                p, q = b.v("p", ln.id, ph, t), b.v("q", ln.id, ph, t)
                for m, (c, sn) in enumerate(dirs):
                    terms = [(c, p), (sn, q)]
                    if all(coef == 0.0 for coef, _ in terms):
                        continue
                    b.con("therm", terms, "<=", s, ln.id, ph.value, f"m{m}", f"t{t}")


def battery_max_loss(lo: float, hi: float, segments) -> float:
    """Largest gap between rate and loss-envelope output over [lo, hi].

    The gap r - min_l(l*r + l') is convex in r, so its maximum is at an end.
    """
    def gap(r):
        return r - min(l * r + c for l, c in segments)

    return max(0.0, gap(lo), gap(hi))


def add_storage(b: DsrBuilder, t: int) -> None:
    f = b.feeder
    dt = f.horizon.dt
    with b.group("storage"):
        for bt in f.batteries:
            cap, e0 = bt.energy_cap / b.base, bt.initial_energy / b.base
            lo, hi = (r / b.base for r in bt.charge_rate_bounds)
            psi = b.var("psi", bt.dg_id, None, t, lower=0.0, upper=cap)
            rate = b.var("prate", bt.dg_id, None, t, lower=lo, upper=hi)
            if t == 0:
                b.con("soc", [(1.0, psi), (dt, rate)], "=", e0, bt.dg_id, f"t{t}")
            else:
                prev = b.v("psi", bt.dg_id, None, t - 1)
                b.con("soc", [(1.0, psi), (dt, rate), (-1.0, prev)], "=", 0.0, bt.dg_id, f"t{t}")
            dg = f.dg_by_id[bt.dg_id]
            out = [(1.0, b.v("pg", dg.id, ph, t)) for ph in dg.phases]
            segs = [(l, c / b.base) for l, c in bt.loss_segments]
            for m, (l, c) in enumerate(segs):
                b.con("bloss", out + [(-l, rate)], "<=", c, bt.dg_id, f"l{m}", f"t{t}")
            b.con("blossfloor", out + [(-1.0, rate)], ">=", -battery_max_loss(lo, hi, segs), bt.dg_id, f"t{t}")


def dg_upper_terms(d, ph) -> tuple[float, float, float, float]:
    i = d.phases.index(ph)
    return d.smin[i].real, d.smax[i].real, d.smin[i].imag, d.smax[i].imag


def gate_dg_output(
    b: DsrBuilder,
    dg_id: str,
    t: int,
    control: list[tuple[float, int]],
    label: str,
    *,
    exact: bool = True,
) -> None:
    """Scale the DG's (p, q) box by a linear expression of binaries.

    With ``exact`` the control is a single 0/1 indicator and both box edges
    are scaled. Otherwise the control may exceed 1, so only edges that bound
    magnitude away from zero (positive upper, negative lower) are emitted.
    """
    d = b.feeder.dg_by_id[dg_id]
    for ph in d.phases:
        plo, phi, qlo, qhi = (x / b.base for x in dg_upper_terms(d, ph))
        for sym, lo, hi in (("pg", plo, phi), ("qg", qlo, qhi)):
            x = b.v(sym, dg_id, ph, t)
            emit_hi = hi != 0.0 if exact else hi > 0.0
            emit_lo = lo != 0.0 if exact else lo < 0.0
            if emit_hi:
                b.con(f"{label}{sym}ub", [(1.0, x)] + [(-hi * c, v) for c, v in control], "<=", 0.0, dg_id, ph.value, f"t{t}")
            if emit_lo:
                b.con(f"{label}{sym}lb", [(1.0, x)] + [(-lo * c, v) for c, v in control], ">=", 0.0, dg_id, ph.value, f"t{t}")
