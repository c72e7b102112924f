"""Command line entry point.

Exit codes: 0 success, 1 nothing found or a check failed, 2 bad arguments or
parameters, 3 input/output problems (missing, unreadable or malformed files,
references to unknown entities).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .explore import (SNAPSHOT_COLUMNS, STRATEGIES, ConfigError, ExplorationConfig, Termination,
                      explore)
from .generator import GenParams, ParamError, generate
from .metrics import EmptyFront, GridSpec, entropy, epsilon_indicator, grid_cells
from .model import SpecError, dump_spec, load_spec
from .objectives import ALL, ObjectiveSpec
from .pareto import LengthMismatch
from .verify import FrontError, dump_front, entry_to_solution, load_front, verify_solution

EXIT_OK, EXIT_EMPTY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from exc


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from exc


def _objectives(text: str | None) -> ObjectiveSpec:
    if text is None:
        return ALL
    try:
        return ObjectiveSpec.parse(text)
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from exc


def _load_instance(path: str):
    try:
        return load_spec(_read(path))
    except SpecError as exc:
        raise _Fail(EXIT_IO, f"{path}: {exc}") from exc


# -- generate -----------------------------------------------------------------

def _mesh(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise _Fail(EXIT_USAGE, f"mesh must look like WxH, got {text!r}") from None
    return w, h


def cmd_generate(args) -> int:
    doc = {}
    if args.params:
        try:
            doc = json.loads(_read(args.params))
        except json.JSONDecodeError as exc:
            raise _Fail(EXIT_IO, f"{args.params}: {exc}") from exc
        if not isinstance(doc, dict):
            raise _Fail(EXIT_IO, f"{args.params}: expected a JSON object")
    overrides = {"seed": args.seed, "nTasksPerApp": args.tasks, "nApps": args.apps,
                 "pParallel": args.p_parallel, "optionsPerTask": args.options,
                 "linkDelay": args.link_delay}
    if args.mesh:
        overrides["meshW"], overrides["meshH"] = _mesh(args.mesh)
    if args.periods:
        try:
            overrides["periodSet"] = [int(p) for p in args.periods.split(",")]
        except ValueError:
            raise _Fail(EXIT_USAGE, "periods must be a comma separated list of integers") from None
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        spec = generate(GenParams.from_dict(doc))
    except (ParamError, TypeError) as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from exc
    text = dump_spec(spec) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- explore ------------------------------------------------------------------

def _suffixed(path: str | None, strategy: str, many: bool) -> str | None:
    if path is None or not many:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{strategy}{p.suffix}"))


def _run_one(spec, cfg: ExplorationConfig, front_out, snapshot_log, stop) -> dict:
    log_file = writer = None
    if snapshot_log:
        try:
            log_file = open(snapshot_log, "w", newline="")
        except OSError as exc:
            raise _Fail(EXIT_IO, f"cannot write {snapshot_log}: {exc.strerror or exc}") from exc
        writer = csv.writer(log_file)
        writer.writerow(SNAPSHOT_COLUMNS)

    def on_snapshot(snap):
        if writer is not None:
            writer.writerow(snap.row())
            log_file.flush()

    try:
        run = explore(spec, cfg, stop=stop, on_snapshot=on_snapshot)
    finally:
        if log_file is not None:
            log_file.close()
    if front_out:
        _write(front_out, dump_front(spec, run.front) + "\n")
    return {"strategy": cfg.strategy, "termination": run.termination.value,
            "frontSize": len(run.front), "nodes": run.stats.nodes, "prunes": run.stats.prunes,
            "front": [list(s.objectives) for s in run.front]}


def cmd_explore(args) -> int:
    strategies = [s.strip() for s in args.strategy.split(",") if s.strip()]
    bad = [s for s in strategies if s not in STRATEGIES]
    if not strategies or bad:
        raise _Fail(EXIT_USAGE, f"unknown strategy {bad[0] if bad else args.strategy!r}")
    objectives = _objectives(args.objectives)
    configs = []
    for s in strategies:
        cfg = ExplorationConfig(strategy=s, objectives=objectives, archive=args.archive,
                                estimation=args.estimation == "on", timeout_ms=args.timeout_ms,
                                check_every=args.check_every,
                                snapshot_every_ms=args.snapshot_every_ms)
        try:
            cfg.validate()
        except ConfigError as exc:
            raise _Fail(EXIT_USAGE, str(exc)) from exc
        configs.append(cfg)
    spec = _load_instance(args.instance)
    many = len(configs) > 1
    stop = threading.Event()
    jobs = [(spec, cfg, _suffixed(args.front_out, cfg.strategy, many),
             _suffixed(args.snapshot_log, cfg.strategy, many), stop) for cfg in configs]
    try:
        if args.jobs > 1 and many:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(lambda j: _run_one(*j), jobs))
        else:
            results = [_run_one(*j) for j in jobs]
    except KeyboardInterrupt:
        stop.set()
        raise
    for r in results:
        print(json.dumps(r))
    empty = any(r["termination"] == Termination.COMPLETED.value and not r["frontSize"]
                for r in results)
    return EXIT_EMPTY if empty else EXIT_OK


# -- metrics ------------------------------------------------------------------

def _vectors(path: str) -> list[list[float]]:
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_IO, f"{path}: {exc}") from exc
    if not isinstance(doc, list):
        raise _Fail(EXIT_IO, f"{path}: expected a JSON array")
    out = []
    for item in doc:
        v = item.get("vector") if isinstance(item, dict) else item
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) for x in v):
            raise _Fail(EXIT_IO, f"{path}: entries must be vectors or objects with a vector")
        out.append(v)
    return out


def cmd_metrics(args) -> int:
    front = _vectors(args.front)
    reference = _vectors(args.reference)
    try:
        bounds = tuple(tuple(b) for b in json.loads(args.grid_bounds))
        grid = GridSpec(bounds, args.cells)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise _Fail(EXIT_USAGE, f"bad grid: {exc}") from exc
    try:
        eps = epsilon_indicator(front, reference, bounds if args.normalize else None)
        ent = entropy(front, grid)
    except (EmptyFront, LengthMismatch) as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from exc
    _, clamped = grid_cells(front, grid)
    print(json.dumps({"epsilon": eps, "entropy": ent, "clampedCount": clamped}))
    return EXIT_OK


# -- check --------------------------------------------------------------------

def cmd_check(args) -> int:
    spec = _load_instance(args.instance)
    objectives = _objectives(args.objectives)
    try:
        entries = load_front(_read(args.front))
        solutions = [entry_to_solution(spec, e) for e in entries]
    except FrontError as exc:
        raise _Fail(EXIT_IO, f"{args.front}: {exc}") from exc
    failed = 0
    for i, sol in enumerate(solutions):
        problems = verify_solution(spec, sol, objectives)
        if problems:
            failed += 1
            for p in problems:
                print(f"entry {i}: {p}")
    print(json.dumps({"checked": len(solutions), "failed": failed}))
    return EXIT_EMPTY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsexplore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--seed", type=int)
    g.add_argument("--tasks", type=int, help="tasks per application")
    g.add_argument("--apps", type=int)
    g.add_argument("--p-parallel", type=float)
    g.add_argument("--mesh", help="WxH")
    g.add_argument("--options", type=int, help="mapping options per task")
    g.add_argument("--periods", help="comma separated period set")
    g.add_argument("--link-delay", type=int)
    g.add_argument("--params", help="JSON file with generator parameters")
    g.add_argument("--out", help="output file (default: stdout)")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("explore", help="explore the design space of an instance")
    e.add_argument("--instance", required=True)
    e.add_argument("--strategy", default="s3", help="one strategy or a comma separated list")
    e.add_argument("--objectives", help="comma separated subset of area,energy,latency")
    e.add_argument("--archive", choices=("list", "quadtree"), default="quadtree")
    e.add_argument("--estimation", choices=("on", "off"), default="on")
    e.add_argument("--timeout-ms", type=int, default=0)
    e.add_argument("--snapshot-every-ms", type=int, default=1000)
    e.add_argument("--snapshot-log", help="CSV file for snapshot rows")
    e.add_argument("--front-out", help="JSON file for the final front")
    e.add_argument("--check-every", type=int, default=1)
    e.add_argument("--jobs", type=int, default=1, help="strategies run concurrently")
    e.set_defaults(func=cmd_explore)

    m = sub.add_parser("metrics", help="epsilon indicator and entropy of a front")
    m.add_argument("--front", required=True)
    m.add_argument("--reference", required=True)
    m.add_argument("--grid-bounds", required=True, help='JSON, e.g. "[[0,10],[0,5]]"')
    m.add_argument("--cells", type=int, default=10)
    m.add_argument("--normalize", action="store_true", help="scale epsilon by the grid bounds")
    m.set_defaults(func=cmd_metrics)

    c = sub.add_parser("check", help="verify every solution of a front file")
    c.add_argument("--instance", required=True)
    c.add_argument("--front", required=True)
    c.add_argument("--objectives", help="objectives the front vectors were computed for")
    c.set_defaults(func=cmd_check)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"dsexplore {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except KeyboardInterrupt:
        return 130


def main() -> None:
    sys.exit(run())
