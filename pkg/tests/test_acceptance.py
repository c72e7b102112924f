"""Acceptance criteria 1-10.

Each criterion is one test; its outcome is recorded as a PASS/FAIL line that
the terminal summary (see conftest.py) prints after the run.  Running this
file directly executes every criterion and prints the same lines.
"""
from __future__ import annotations

import contextlib
import functools
import io
import itertools
import math
import random
import sys
import tempfile
import threading
import time
from pathlib import Path

import numpy as np

from dsexplore.cli import run as cli_run
from dsexplore.dlsolver import DLSolver
from dsexplore.explore import ExplorationConfig, Termination, explore, select_diverse
from dsexplore.generator import GenParams, generate
from dsexplore.metrics import GridSpec, entropy, epsilon_indicator, pairwise_distance
from dsexplore.model import dump_spec
from dsexplore.objectives import OBJECTIVES, ObjectiveSpec
from dsexplore.pareto import ListArchive, Point, QuadTreeArchive, dominates, weakly_dominates
from dsexplore.search import Solution, periodic_ok
from dsexplore.verify import dump_front, verify_solution

from helpers import desk_cases, desk_spec
from oracle import bellman_ford_consistent, jobs_overlap, pareto_front, project
from test_dlsolver import check_conflict, random_system

RESULTS: dict[int, str] = {}

ALL3 = ObjectiveSpec(OBJECTIVES)
PAIR = ObjectiveSpec(("energy", "latency"))


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def test():
            t0 = time.perf_counter()
            try:
                detail = fn()
            except AssertionError as exc:
                RESULTS[number] = f"FAIL criterion {number:2d} {title}: {exc}"
                raise
            except Exception as exc:
                RESULTS[number] = f"FAIL criterion {number:2d} {title}: {type(exc).__name__}: {exc}"
                raise
            RESULTS[number] = (f"PASS criterion {number:2d} {title}: {detail} "
                               f"[{time.perf_counter() - t0:.1f} s]")
        return test
    return wrap


# -- shared runs ------------------------------------------------------------------

RUN_CONFIGS = [(strategy, ALL3) for strategy in ("s1", "s2", "s3")] + \
              [(strategy, PAIR) for strategy in ("s1", "s2", "s3", "s4")]


@functools.cache
def desk_runs() -> tuple[list[dict], dict, float]:
    """Criterion-3 runs: (case, strategy, objectives) -> ExplorationRun, plus wall time."""
    cases = desk_cases()
    runs = {}
    t0 = time.perf_counter()
    for case in cases:
        s = desk_spec(case)
        for strategy, obj in RUN_CONFIGS:
            runs[case["name"], strategy, obj.enabled] = explore(s, ExplorationConfig(strategy=strategy,
                                                                                    objectives=obj))
    return cases, runs, time.perf_counter() - t0


def forty_task_instance():
    return generate(GenParams(seed=11, nTasksPerApp=10, nApps=4, meshW=4, meshH=4, optionsPerTask=3,
                              periodSet=(100, 200)))


@functools.cache
def long_runs() -> dict:
    """Criterion-6 runs on a 40-task instance: a 60 s timeout run and an interrupted one."""
    s = forty_task_instance()
    timed = explore(s, ExplorationConfig(strategy="s3", timeout_ms=60_000, snapshot_every_ms=1000))
    stop = threading.Event()
    timer = threading.Timer(3.0, stop.set)
    timer.start()
    try:
        interrupted = explore(s, ExplorationConfig(strategy="s2", snapshot_every_ms=500), stop=stop)
    finally:
        timer.cancel()
    return {"timeout": timed, "interrupted": interrupted}


def scale_instance():
    return generate(GenParams(seed=0, nTasksPerApp=17, nApps=10, meshW=8, meshH=8, optionsPerTask=4,
                              periodSet=(400, 800)))


@functools.cache
def scale_run():
    s = scale_instance()
    stop = threading.Event()

    def on_snapshot(snap):
        if snap.vectors:
            stop.set()

    t0 = time.perf_counter()
    run = explore(s, ExplorationConfig(strategy="s3", timeout_ms=300_000, snapshot_every_ms=10_000),
                  stop=stop, on_snapshot=on_snapshot)
    return run, time.perf_counter() - t0


# -- criteria -----------------------------------------------------------------------

@criterion(1, "difference-logic store vs Bellman-Ford")
def test_criterion_01_dl_oracle():
    rng = random.Random(2024)
    systems = []
    for _ in range(1000):
        n, m = rng.randint(1, 50), rng.randint(1, 200)
        systems.append((n, random_system(rng, n, m)))
    t0 = time.perf_counter()
    traces = []
    for n, cons in systems:
        dl = DLSolver()
        for i in range(n):
            dl.add_var(i)
        traces.append([dl.assert_constraint(x, y, c) for x, y, c in cons])
    solver_time = time.perf_counter() - t0
    conflicts = 0
    for (n, cons), trace in zip(systems, traces):
        kept = []
        for con, conflict in zip(cons, trace):
            if conflict is None:
                kept.append(con)
            else:
                # an irreducible negative cycle over the store plus the new constraint
                # proves the rejection; the final store being consistent proves every acceptance
                check_conflict(conflict, kept)
                assert (conflict.constraints[0].x, conflict.constraints[0].y, conflict.constraints[0].c) == con
                conflicts += 1
        assert bellman_ford_consistent(n, kept)
    assert solver_time < 10, f"solver time {solver_time:.1f} s"
    return f"1000 systems, {conflicts} conflicts all irreducible, solver {solver_time:.2f} s"


@criterion(2, "gcd overlap rule vs hyperperiod expansion")
def test_criterion_02_periodic():
    rng = random.Random(7)
    t0 = time.perf_counter()
    disagree = 0
    for _ in range(10_000):
        p_a, p_b = rng.randint(1, 24), rng.randint(1, 24)
        w_a, w_b = rng.randint(1, p_a), rng.randint(1, p_b)
        s_a, s_b = rng.randint(0, 2 * p_a), rng.randint(0, 2 * p_b)
        if periodic_ok(s_a, w_a, p_a, s_b, w_b, p_b) == jobs_overlap(s_a, w_a, p_a, s_b, w_b, p_b):
            disagree += 1
    elapsed = time.perf_counter() - t0
    assert disagree == 0, f"{disagree} disagreements"
    assert elapsed < 5, f"runtime {elapsed:.1f} s"
    return f"10000 pairs agree in {elapsed:.2f} s"


@criterion(3, "exhaustive-front agreement on desk instances")
def test_criterion_03_desk_fronts():
    cases, runs, elapsed = desk_runs()
    assert len(cases) >= 20
    for case in cases:
        for strategy, obj in RUN_CONFIGS:
            run = runs[case["name"], strategy, obj.enabled]
            expected = pareto_front(project([tuple(v) for v in case["vectors"]], list(OBJECTIVES), obj.enabled))
            assert run.termination is Termination.COMPLETED, f"{case['name']} {strategy} {run.termination}"
            assert run.vectors == expected, f"{case['name']} {strategy} {obj.enabled}"
    assert elapsed < 60, f"runtime {elapsed:.1f} s"
    return f"{len(cases)} instances x {len(RUN_CONFIGS)} configurations exact, {elapsed:.1f} s"


@criterion(4, "estimation prunes without changing fronts")
def test_criterion_04_estimation():
    cases, runs, _ = desk_runs()
    paired = 0
    for case in cases:
        s = desk_spec(case)
        # s1 applies no under-estimate by definition, so only s2-s4 are paired
        for strategy, obj in RUN_CONFIGS:
            if strategy == "s1":
                continue
            on = runs[case["name"], strategy, obj.enabled]
            off = explore(s, ExplorationConfig(strategy=strategy, objectives=obj, estimation=False,
                                               snapshot_every_ms=0))
            assert on.vectors == off.vectors, f"{case['name']} {strategy}"
            if case["feasibleDesigns"] > 1:
                assert on.stats.prunes > off.stats.prunes, \
                    f"{case['name']} {strategy} {obj.enabled}: {on.stats.prunes} vs {off.stats.prunes}"
            paired += 1
    return f"{paired} paired runs identical, prunes higher with estimation"


def archive_stream(k: int, n: int, seed: int) -> np.ndarray:
    return np.random.Generator(np.random.PCG64(seed)).random((n, k))


@criterion(5, "quad-tree archive equivalence and comparison count")
def test_criterion_05_archive():
    t0 = time.perf_counter()
    ratios = {}
    for k in range(2, 6):
        lst, quad = ListArchive(k), QuadTreeArchive(k)
        for i, row in enumerate(archive_stream(k, 10_000, k)):
            v = tuple(float(x) for x in row)
            lst.insert(Point(v, i))
            quad.insert(Point(v, i))
        assert lst.vectors() == quad.vectors(), f"k={k}: sets differ"
        ratios[k] = quad.comparisons / lst.comparisons
    elapsed = time.perf_counter() - t0
    shown = ", ".join(f"k={k}: {r:.3f}" for k, r in ratios.items())
    assert ratios[4] <= 0.2, f"sets identical; quad/list comparisons {shown}; need <= 0.200 at k=4"
    assert elapsed < 10, f"runtime {elapsed:.1f} s"
    return f"sets identical; quad/list comparisons {shown}"


def check_monotone(snapshots) -> None:
    for snap in snapshots:
        assert all(not dominates(a, b) for a in snap.vectors for b in snap.vectors)
    for i, earlier in enumerate(snapshots):
        for later in snapshots[i + 1:]:
            for v in earlier.vectors:
                assert any(weakly_dominates(w, v) for w in later.vectors), \
                    f"{v} at {earlier.elapsed_ms} ms lost by {later.elapsed_ms} ms"


@criterion(6, "anytime monotonicity")
def test_criterion_06_anytime():
    _, runs, _ = desk_runs()
    logs = 0
    for run in runs.values():
        check_monotone(run.snapshots)
        logs += 1
    s = forty_task_instance()
    long = long_runs()
    timed, stopped = long["timeout"], long["interrupted"]
    assert timed.termination is Termination.TIMEOUT
    assert stopped.termination is Termination.INTERRUPTED
    for run in (timed, stopped):
        check_monotone(run.snapshots)
        assert run.front, "no solution before the limit"
        vs = [sol.objectives for sol in run.front]
        assert all(not dominates(a, b) for a in vs for b in vs)
        for sol in run.front:
            assert verify_solution(s, sol) == []
    return (f"{logs} desk logs plus 60 s run ({len(timed.snapshots)} snapshots, front {len(timed.front)}) "
            f"and interrupted run (front {len(stopped.front)})")


@criterion(7, "metric identities")
def test_criterion_07_metrics():
    rng = random.Random(3)
    for _ in range(100):
        k = rng.randint(2, 4)
        front = [tuple(rng.randint(0, 30) for _ in range(k)) for _ in range(rng.randint(1, 20))]
        assert epsilon_indicator(front, front) == 0
    unit = GridSpec(((0, 1), (0, 1)), 2)
    assert entropy([(0.4, 0.7)], unit) == 0
    uniform = [(0.1, 0.1), (0.9, 0.1), (0.1, 0.9), (0.9, 0.9)]
    assert abs(entropy(uniform, unit) - 1.0) <= 1e-9
    worked = entropy([(0.1, 0.1), (0.2, 0.2), (0.3, 0.1), (0.9, 0.9)], unit)
    assert abs(worked - 0.406) <= 1e-3, worked
    return f"epsilon(A,A)=0 on 100 fronts, entropy 0 / 1 / {worked:.4f}"


@criterion(8, "170 tasks on an 8x8 mesh")
def test_criterion_08_scale():
    s = scale_instance()
    assert len(s.tasks) == 170 and s.platform.width == s.platform.height == 8
    run, elapsed = scale_run()
    assert run.front, f"no solution, termination {run.termination.value}"
    assert elapsed < 300
    for sol in run.front:
        assert verify_solution(s, sol) == []
    return f"first solution after {elapsed:.1f} s, {run.stats.nodes} nodes"


def cli_check(spec, front, objectives: ObjectiveSpec, workdir: Path, name: str) -> int:
    inst, out = workdir / f"{name}.instance.json", workdir / f"{name}.front.json"
    inst.write_text(dump_spec(spec))
    out.write_text(dump_front(spec, front))
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
        return cli_run(["check", "--instance", str(inst), "--front", str(out),
                        "--objectives", ",".join(objectives.enabled)])


@criterion(9, "front files pass the checker")
def test_criterion_09_self_check():
    cases, runs, _ = desk_runs()
    specs = {case["name"]: desk_spec(case) for case in cases}
    checked = 0
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        for (name, strategy, enabled), run in runs.items():
            code = cli_check(specs[name], run.front, ObjectiveSpec(enabled), workdir, f"{name}-{strategy}")
            assert code == 0, f"{name} {strategy} {enabled}"
            checked += 1
        for label, run in long_runs().items():
            assert cli_check(forty_task_instance(), run.front, ALL3, workdir, label) == 0, label
            checked += 1
        run, _ = scale_run()
        assert cli_check(scale_instance(), run.front, ALL3, workdir, "scale") == 0
        checked += 1
    return f"{checked} fronts verified"


def random_front(rng: random.Random, size: int) -> list[Solution]:
    tiles = [f"t{x}_{y}" for x in range(3) for y in range(3)]
    dim = rng.choice((2, 3))
    front = []
    for i in range(size):
        start = rng.choice(tiles)
        path = [start]
        for _ in range(rng.randint(0, 3)):
            x, y = map(int, path[-1][1:].split("_"))
            steps = [(x + dx, y + dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
                     if 0 <= x + dx < 3 and 0 <= y + dy < 3 and f"t{x + dx}_{y + dy}" not in path]
            if not steps:
                break
            path.append("t%d_%d" % rng.choice(steps))
        front.append(Solution(id=i, bindings={t: rng.randrange(3) for t in "abcde"},
                              routes={"m": tuple(path)},
                              objectives=tuple(rng.randint(0, 50) for _ in range(dim))))
    return front


@criterion(10, "greedy diverse selection within half of optimum")
def test_criterion_10_diverse():
    rng = random.Random(10)
    worst = math.inf
    for trial in range(500):
        front = random_front(rng, rng.randint(2, 12))
        kind = "hamming" if trial % 2 else "euclidean"

        def dist(a, b):
            return pairwise_distance(a, b, kind)

        for n in (2, 3):
            if n > len(front):
                continue
            chosen = select_diverse(front, n, kind)
            assert len(chosen) == n
            got = min(dist(a, b) for a, b in itertools.combinations(chosen, 2))
            best = max(min(dist(a, b) for a, b in itertools.combinations(c, 2))
                       for c in itertools.combinations(front, n))
            assert got >= 0.5 * best, f"trial {trial} n={n}: {got} < 0.5 * {best}"
            if best > 0:
                worst = min(worst, got / best)
    return f"500 fronts, worst greedy/optimum ratio {worst:.3f}"


def main() -> int:
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    for test in tests:
        with contextlib.suppress(Exception):
            test()
    for number in sorted(RESULTS):
        print(RESULTS[number])
    return 0 if all(line.startswith("PASS") for line in RESULTS.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
