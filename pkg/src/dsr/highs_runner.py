"""Command-line HiGHS adapter writing CBC-style solution files.

    python -m dsr.highs_runner model.lp model.sol --time-limit 60 --gap 1e-4
"""

from __future__ import annotations

import argparse
import sys


def main(argv: list[str] | None = None) -> int:
    import highspy

    ap = argparse.ArgumentParser(prog="dsr.highs_runner")
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=3000.0)
    ap.add_argument("--gap", type=float, default=1e-4)
    args = ap.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", args.gap)
    if h.readModel(args.lp) == highspy.HighsStatus.kError:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 2
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    MS = highspy.HighsModelStatus
    has_sol = info.primal_solution_status == 2
    if status == MS.kOptimal:
        header = "Optimal"
    elif status in (MS.kInfeasible, MS.kUnboundedOrInfeasible):
        header = "Infeasible"
    elif status == MS.kTimeLimit:
        header = "Stopped on time" if has_sol else "Stopped on time (no integer solution)"
    elif status == MS.kUnbounded:
        print("model is unbounded", file=sys.stderr)
        return 3
    else:
        header = "Stopped on iterations" if has_sol else "Stopped on time (no integer solution)"

    obj = info.objective_function_value
    lines = [f"{header} - objective value {obj:.17g}"]
    if has_sol:
        names = h.getLp().col_names_
        for i, (name, v) in enumerate(zip(names, h.getSolution().col_value)):
            lines.append(f"{i} {name} {v:.17g} 0")
    with open(args.sol, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if info.mip_node_count >= 0 and has_sol:
        print(f"Gap: {max(0.0, info.mip_gap):.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
