"""Command-line entry points and machine-readable output.

Subcommands: ``trajectory`` (one run, rows per observation time),
``ensemble`` (aggregated sweep points), ``threshold`` (bisect the
critical injection rate for one field-update rate), ``phasediagram``
(threshold per field-update rate), ``selftest`` (small fixed-seed run
for regression diffs).  Flags override config-file keys, which
override defaults.  Exit codes: 0 success, 1 runtime/IO failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .dynamics import RatesConfig, make_trajectory, run_traced, run_until
from .harness import (
    ExperimentPlan,
    SweepPoint,
    locate_critical_gamma1,
    measurement_grid,
    phase_diagram,
    run_ensemble,
    steady_state_time,
)
from .lattice import build_geometry
from .observables import aggregate, measure

CSV_HEADER = "t,L,gamma1,gamma2,gamma3,n,n_var,d_norm,d_var,p_eps,p_eps_ci_lo,p_eps_ci_hi,N,seed"
CSV_FIELDS = CSV_HEADER.split(",")

SELFTEST_CONFIG = {
    "sizes": [4],
    "gamma1": [0.05],
    "gamma2": 1.0,
    "gamma3": [10.0],
    "trajectories": 8,
    "seed": 12345,
    "steady_const": 1.0,
    "grid_points": 8,
    "t_max": 200.0,
}


class UsageError(Exception):
    """Invalid flags or config; the message names the offending key."""


@dataclass
class RunConfig:
    command: str
    sizes: tuple[int, ...] = (8,)
    gamma1: tuple[float, ...] = (0.01,)
    gamma2: float = 1.0
    gamma3: tuple[float, ...] = (10.0,)
    trajectories: int = 100
    seed: int | None = None
    steady_const: float = 1.0
    field_update: str = "sync"
    init: str = "ground"
    criterion: str = "p_eps"
    output: str = "-"
    format: str = "csv"
    grid_points: int = 32
    t_max: float | None = None
    workers: int | None = None
    max_events: float | None = None
    all_times: bool = False
    event_trace: str | None = None
    dump_field: str | None = None
    result_json: str | None = None
    print_config: bool = False

    def validate(self) -> None:
        if self.command != "selftest" and self.seed is None:
            raise UsageError("seed: a master seed is required for reproducible runs")
        for L in self.sizes:
            if L < 3:
                raise UsageError(f"sizes: lattice size must be >= 3, got {L}")
        for name in ("gamma1", "gamma3"):
            for v in getattr(self, name):
                if not math.isfinite(v) or v < 0:
                    raise UsageError(f"{name}: rates must be nonnegative, got {v}")
        if not math.isfinite(self.gamma2) or self.gamma2 < 0:
            raise UsageError(f"gamma2: rates must be nonnegative, got {self.gamma2}")
        if self.trajectories < 1:
            raise UsageError(f"trajectories: must be positive, got {self.trajectories}")
        if self.steady_const <= 0:
            raise UsageError(f"steady_const: must be positive, got {self.steady_const}")
        if self.field_update not in ("sync", "async"):
            raise UsageError(f"field_update: expected sync or async, got {self.field_update!r}")
        if self.init not in ("ground", "mixed"):
            raise UsageError(f"init: expected ground or mixed, got {self.init!r}")
        if self.criterion not in ("p_eps", "depth_var"):
            raise UsageError(f"criterion: expected p_eps or depth_var, got {self.criterion!r}")
        if self.format not in ("csv", "jsonl"):
            raise UsageError(f"format: expected csv or jsonl, got {self.format!r}")
        if self.grid_points < 2:
            raise UsageError(f"grid_points: must be >= 2, got {self.grid_points}")
        if self.t_max is not None and self.t_max <= 0:
            raise UsageError(f"t_max: must be positive, got {self.t_max}")
        if self.command == "threshold" and len(self.sizes) != 2:
            raise UsageError("sizes: threshold needs exactly two sizes (small, large)")
        if self.command == "phasediagram" and len(self.sizes) != 2:
            raise UsageError("sizes: phasediagram needs exactly two sizes (small, large)")

    def effective_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["sizes"] = list(self.sizes)
        out["gamma1"] = list(self.gamma1)
        out["gamma3"] = list(self.gamma3)
        out.pop("print_config")
        return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torica",
        description="Continuous-time simulator of a dissipative toric code "
        "memory steered by a cellular-automaton feedback field.",
        argument_default=argparse.SUPPRESS,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("trajectory", "run one trajectory and emit a row per observation time"),
        ("ensemble", "run independent trajectories per point and emit aggregates"),
        ("threshold", "bisect the critical injection rate for one update rate"),
        ("phasediagram", "bisect the critical rate for each update rate"),
        ("selftest", "fixed-seed miniature run; byte-stable output"),
    ):
        p = sub.add_parser(name, help=doc, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with config keys")
        p.add_argument("-L", "--sizes", type=_int_list, help="lattice sizes, comma separated")
        p.add_argument("--gamma1", type=_float_list, help="pair-creation rate(s) per edge")
        p.add_argument("--gamma2", type=float, help="hop rate per anyon (the rate unit)")
        p.add_argument("--gamma3", type=_float_list, help="field update rate(s)")
        p.add_argument("-N", "--trajectories", type=int, help="independent runs per point")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("-c", "--steady-const", type=float, dest="steady_const",
                       help="steady-state horizon prefactor")
        p.add_argument("--field-update", dest="field_update", choices=["sync", "async"],
                       help="synchronous sweeps or per-plaquette updates")
        p.add_argument("--init", choices=["ground", "mixed"], help="initial state")
        p.add_argument("--criterion", choices=["p_eps", "depth_var"],
                       help="transition criterion used by threshold/phasediagram")
        p.add_argument("-o", "--output", help="output path, or - for stdout")
        p.add_argument("--format", choices=["csv", "jsonl"], help="output format")
        p.add_argument("--grid-points", dest="grid_points", type=int,
                       help="observation times per trajectory")
        p.add_argument("--t-max", dest="t_max", type=float,
                       help="horizon override (default: steady-state formula)")
        p.add_argument("--workers", type=int, help="worker threads (results identical)")
        p.add_argument("--max-events", dest="max_events", type=float,
                       help="skip points whose event estimate exceeds this budget")
        p.add_argument("--all-times", dest="all_times", action="store_true",
                       help="emit one row per observation time, not only the last")
        p.add_argument("--event-trace", dest="event_trace",
                       help="CSV path for a per-event debug trace (trajectory only)")
        p.add_argument("--dump-field", dest="dump_field",
                       help="path for a raw float64 dump of the final field (trajectory only)")
        p.add_argument("--result-json", dest="result_json",
                       help="path for the threshold/phasediagram result summary")
        p.add_argument("--print-config", dest="print_config", action="store_true",
                       help="echo the effective configuration as JSON and exit")
    return parser


def parse_config(argv) -> RunConfig:
    """Resolve defaults, config file, and flags (in rising precedence)."""
    parser = _build_parser()
    try:
        namespace = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            raise UsageError("invalid arguments") from None
        raise
    given = vars(namespace)
    command = given.pop("command")
    merged: dict = {}
    config_path = given.pop("config", None)
    if command == "selftest":
        merged.update(SELFTEST_CONFIG)
    if config_path:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise UsageError(f"config: cannot read {config_path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: malformed JSON in {config_path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config: top level must be an object")
        loaded.pop("command", None)
        for key in loaded:
            if key not in RunConfig.__dataclass_fields__:
                raise UsageError(f"{key}: unknown config key")
        merged.update(loaded)
    merged.update(given)

    # normalize scalars that may arrive as bare numbers from JSON
    for key in ("sizes",):
        if key in merged and isinstance(merged[key], (int, float)):
            merged[key] = [int(merged[key])]
    for key in ("gamma1", "gamma3"):
        if key in merged and isinstance(merged[key], (int, float)):
            merged[key] = [float(merged[key])]

    fields = RunConfig.__dataclass_fields__
    unknown = set(merged) - set(fields)
    if unknown:
        raise UsageError(f"{sorted(unknown)[0]}: unknown config key")
    cfg = RunConfig(command=command, **{
        k: tuple(v) if k in ("sizes", "gamma1", "gamma3") else v for k, v in merged.items()
    })
    cfg.validate()
    return cfg


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def emit(rows, fmt: str, path: str) -> None:
    """Write rows with the fixed schema to CSV or JSONL.

    Numbers carry 17 significant digits so repeated runs diff cleanly
    at the byte level.
    """
    lines = []
    if fmt == "csv":
        lines.append(CSV_HEADER)
        for row in rows:
            lines.append(",".join(_fmt(row[k]) for k in CSV_FIELDS))
    else:
        for row in rows:
            obj = {}
            for k in CSV_FIELDS:
                v = row[k]
                if v is None or (isinstance(v, float) and math.isnan(v)):
                    obj[k] = None
                elif isinstance(v, (int, np.integer)):
                    obj[k] = int(v)
                else:
                    obj[k] = float(f"{float(v):.17g}")
            lines.append(json.dumps(obj, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _point_rows(point: SweepPoint, all_times: bool):
    rows = []
    if point.stats is None:
        return rows
    source = point.stats.rows if all_times else (point.stats.final,)
    for g in source:
        rows.append(
            {
                "t": g.time,
                "L": point.L,
                "gamma1": point.gamma1,
                "gamma2": point.gamma2,
                "gamma3": point.gamma3,
                "n": g.density_mean,
                "n_var": g.density_var,
                "d_norm": g.depth_mean,
                "d_var": g.depth_var,
                "p_eps": g.p_failure,
                "p_eps_ci_lo": g.p_failure_ci[0],
                "p_eps_ci_hi": g.p_failure_ci[1],
                "N": point.trajectories,
                "seed": point.seed,
            }
        )
    return rows


def _plan_from_config(cfg: RunConfig) -> ExperimentPlan:
    return ExperimentPlan(
        sizes=cfg.sizes,
        gamma1_grid=cfg.gamma1,
        gamma3=cfg.gamma3[0],
        trajectories=cfg.trajectories,
        master_seed=cfg.seed if cfg.seed is not None else 0,
        gamma2=cfg.gamma2,
        steady_const=cfg.steady_const,
        grid_points=cfg.grid_points,
        init_mode=cfg.init,
        sync=cfg.field_update == "sync",
        criterion=cfg.criterion,
        workers=cfg.workers,
        max_events_per_point=cfg.max_events,
    )


def _run_trajectory(cfg: RunConfig):
    geo = build_geometry(cfg.sizes[0])
    rates = RatesConfig(cfg.gamma1[0], cfg.gamma2, cfg.gamma3[0])
    t_max = cfg.t_max or steady_state_time(geo.L, rates.gamma1, cfg.steady_const, cfg.gamma2)
    seed = cfg.seed if cfg.seed is not None else 0
    state = make_trajectory(
        geo, rates, master_seed=seed, trajectory=0, init_mode=cfg.init,
        sync=cfg.field_update == "sync", key_parts=(cfg.steady_const,),
    )
    rows = []
    if cfg.event_trace:
        with open(cfg.event_trace, "w") as fh:
            fh.write("t,event,location\n")
            run_traced(state, t_max, lambda t, kind, loc: fh.write(f"{t:.17g},{kind},{loc}\n"))
        samples = [measure(state, geo)]
    else:
        samples = []
        times = measurement_grid(t_max, cfg.grid_points)
        run_until(state, t_max, observers=(lambda t, s: samples.append(measure(s, geo)),), times=times)
    if not cfg.all_times and not cfg.event_trace:
        samples = samples[-1:]
    for m in samples:
        rows.append(
            {
                "t": m.time,
                "L": geo.L,
                "gamma1": rates.gamma1,
                "gamma2": rates.gamma2,
                "gamma3": rates.gamma3,
                "n": m.anyon_density,
                "n_var": math.nan,
                "d_norm": m.depth_normalized,
                "d_var": math.nan,
                "p_eps": 1.0 if m.failed else 0.0,
                "p_eps_ci_lo": math.nan,
                "p_eps_ci_hi": math.nan,
                "N": 1,
                "seed": seed,
            }
        )
    if cfg.dump_field:
        state.field.values.tofile(cfg.dump_field)
    return rows


def _threshold_summary(result) -> dict:
    return {
        "gamma3": result.gamma3,
        "gamma1_c": result.gamma1_c,
        "bracket_lo": result.bracket[0],
        "bracket_hi": result.bracket[1],
        "censored": result.censored,
        "criterion": result.criterion,
    }


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv if argv is not None else sys.argv[1:])
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return 0 if exc.code in (0, None) else 2

    if cfg.print_config:
        print(json.dumps(cfg.effective_dict(), indent=2, sort_keys=True))
        return 0

    try:
        if cfg.command == "trajectory":
            rows = _run_trajectory(cfg)
        elif cfg.command in ("ensemble", "selftest"):
            plan = _plan_from_config(cfg)
            rows = []
            for L in cfg.sizes:
                for g3 in cfg.gamma3:
                    for g1 in cfg.gamma1:
                        point = _run_point(plan, L, g1, g3, cfg)
                        rows.extend(_point_rows(point, cfg.all_times or cfg.command == "selftest"))
        elif cfg.command in ("threshold", "phasediagram"):
            plan = _plan_from_config(cfg)
            pair = (min(cfg.sizes), max(cfg.sizes))
            if cfg.command == "threshold":
                results = [locate_critical_gamma1(plan, cfg.gamma3[0], pair)]
            else:
                results = phase_diagram(plan, list(cfg.gamma3), pair)
            rows = []
            for res in results:
                for small, large in res.evaluations:
                    rows.extend(_point_rows(small, cfg.all_times))
                    rows.extend(_point_rows(large, cfg.all_times))
            summary = [_threshold_summary(r) for r in results]
            text = json.dumps(summary if len(summary) > 1 else summary[0], indent=2, sort_keys=True)
            if cfg.result_json:
                with open(cfg.result_json, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
        else:  # pragma: no cover - argparse enforces the choices
            raise UsageError(f"unknown command {cfg.command!r}")
        emit(rows, cfg.format, cfg.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if cfg.command == "selftest":
        print("selftest ok", file=sys.stderr)
    return 0


def _run_point(plan: ExperimentPlan, L: int, gamma1: float, gamma3: float, cfg: RunConfig):
    if cfg.t_max is not None:
        # fixed-horizon run: reuse the ensemble machinery with c chosen
        # so that the steady-state formula lands exactly on t_max
        c = cfg.t_max * (gamma1 if gamma1 > 0 else plan.gamma2) / L**4
        plan = dataclasses.replace(plan, steady_const=c)
    return run_ensemble(plan, L, gamma1, gamma3)


if __name__ == "__main__":
    sys.exit(main())
