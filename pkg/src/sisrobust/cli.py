"""Command-line entry point.

Exit status is 0 on success, 2 when a program or uncertainty set is
infeasible and 1 on any other error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .allocate import InfeasibleProblemError, evaluate_allocation, optimal_allocate, robust_allocate, worst_case_rho
from .epidemic import observe, save_observations_csv
from .experiments import RunConfig, compare_allocations, prepare, sweep_T, sweep_sensors
from .network import save_network_csv
from .uncertainty import EmptyUncertaintySetError, InconsistentDataError

log = logging.getLogger("sisrobust")

INFEASIBLE = (InfeasibleProblemError, EmptyUncertaintySetError, InconsistentDataError)


def _config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out_dir is not None:
        over["out_dir"] = args.out_dir
    if args.verbose:
        over["solver"] = {**cfg.solver, "trace_path": str(Path(args.out_dir or cfg.out_dir) / "solver_trace.csv")}
    if getattr(args, "timing", False):
        over["timing"] = True
    return cfg.replace(**over) if over else cfg


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    log.info("wrote %s", path)


def cmd_simulate(cfg, args, out: Path):
    scen = prepare(cfg)
    save_network_csv(scen.network, out / "network.csv")
    save_observations_csv(observe(scen.trajectory, scen.sensors()), out / "observations.csv")
    save_observations_csv(observe(scen.trajectory, range(cfg.n)), out / "trajectory.csv")


def cmd_constraints(cfg, args, out: Path):
    scen = prepare(cfg)
    model = scen.model(args.T or cfg.t_max, scen.sensors())
    model.to_json(out / "model.json")
    log.info("model with %d data rows", sum(r.num_data for r in model.rows))


def cmd_allocate(cfg, args, out: Path):
    scen = prepare(cfg)
    if args.mode == "robust":
        model = scen.model(args.T or cfg.t_max, scen.sensors())
        res = robust_allocate(model, scen.cost, cfg.effective_budget, cfg.control, cfg.solver_options)
    else:
        res = optimal_allocate(scen.B_true, scen.cost, cfg.effective_budget, cfg.control, cfg.solver_options)
    res.to_json(out / f"allocation_{args.mode}.json")
    log.info("lambda* = %.6f, rho(true) = %.6f", res.lambda_star, evaluate_allocation(scen.B_true, res.dc))


def cmd_worst_case(cfg, args, out: Path):
    scen = prepare(cfg)
    if args.allocation:
        dc = np.asarray(json.loads(Path(args.allocation).read_text())["dc"], dtype=float)
    else:
        dc = scen.cost.upper
    model = scen.model(args.T or cfg.t_max, scen.sensors())
    lam = worst_case_rho(model, dc, cfg.solver_options)
    _write_json(out / "worst_case.json", {"dc": [float(x) for x in dc], "rho_worst": lam})


def _sweep(fn, name):
    def run(cfg, args, out: Path):
        res = fn(cfg, jobs=args.jobs)
        path = out / f"{name}.csv"
        res.to_csv(path, timing=cfg.timing)
        log.info("wrote %s (%d rows)", path, len(res.rows))

    return run


COMMANDS = {
    "simulate": cmd_simulate,
    "constraints": cmd_constraints,
    "allocate": cmd_allocate,
    "worst-case": cmd_worst_case,
    "sweep-t": _sweep(sweep_T, "sweep_t"),
    "sweep-sensors": _sweep(sweep_sensors, "sweep_sensors"),
    "compare": _sweep(compare_allocations, "compare"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--verbose", action="store_true", help="log progress and write a solver trace")
    common.add_argument("--timing", action="store_true", help="record wall-clock seconds in sweep CSVs")

    parser = argparse.ArgumentParser(prog="sisrobust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sweep-t", "sweep-sensors", "compare"):
        sub.add_parser(name, parents=[common])
    p = sub.add_parser("constraints", parents=[common])
    p.add_argument("--T", type=int, help="observation horizon (default t_max)")
    p = sub.add_parser("allocate", parents=[common])
    p.add_argument("--mode", choices=("robust", "optimal"), default="robust")
    p.add_argument("--T", type=int)
    p = sub.add_parser("worst-case", parents=[common])
    p.add_argument("--allocation", help="allocation JSON whose dc is evaluated (default: no intervention)")
    p.add_argument("--T", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args, out)
    except INFEASIBLE as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to exit status 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
