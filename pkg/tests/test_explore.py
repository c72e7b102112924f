from __future__ import annotations

import itertools
import random
import threading

import pytest

from dsexplore.explore import (ConfigError, ExplorationConfig, Termination, explore, select_diverse)
from dsexplore.generator import GenParams, generate
from dsexplore.objectives import OBJECTIVES, ObjectiveSpec
from dsexplore.pareto import dominates, weakly_dominates
from dsexplore.search import Solution
from dsexplore.verify import verify_solution

from helpers import app, desk_cases, desk_spec, spec
from oracle import pareto_front, project

CASES = desk_cases()
TWO = ObjectiveSpec(("energy", "latency"))


def config(strategy, objectives=None, **kw) -> ExplorationConfig:
    return ExplorationConfig(strategy=strategy, objectives=objectives or ObjectiveSpec(OBJECTIVES),
                             snapshot_every_ms=0, **kw)


def reference(case, objectives: ObjectiveSpec) -> set[tuple]:
    return pareto_front(project([tuple(v) for v in case["vectors"]], list(OBJECTIVES), objectives.enabled))


@pytest.mark.parametrize("strategy", ["s1", "s2", "s3", "s4"])
def test_single_task(strategy):
    s = spec(1, 1, [app("a", 8, ["t"])], [("t", "t0_0", 4, 3)], area=2, static_energy=5)
    objectives = TWO if strategy == "s4" else None
    run = explore(s, config(strategy, objectives))
    assert run.termination is Termination.COMPLETED
    assert run.vectors == ({(8, 4)} if strategy == "s4" else {(2, 8, 4)})


def test_config_errors():
    s = spec(1, 1, [app("a", 8, ["t"])], [("t", "t0_0", 4, 3)])
    with pytest.raises(ConfigError):
        explore(s, config("s4"))
    for bad in (dict(strategy="s9"), dict(archive="heap"), dict(check_every=0), dict(timeout_ms=-1)):
        with pytest.raises(ConfigError):
            ExplorationConfig(**bad).validate()


def check_snapshots(run):
    for snap in run.snapshots:
        assert all(not dominates(a, b) for a in snap.vectors for b in snap.vectors)
    for earlier, later in zip(run.snapshots, run.snapshots[1:]):
        assert later.elapsed_ms >= earlier.elapsed_ms
        for v in earlier.vectors:
            assert any(weakly_dominates(w, v) for w in later.vectors)
    assert run.snapshots[-1].reason == "final"
    assert sorted(run.snapshots[-1].vectors) == sorted(run.vectors)


def check_front(s, run, objectives):
    for sol in run.front:
        assert verify_solution(s, sol, objectives) == []
    vs = [sol.objectives for sol in run.front]
    assert len(set(vs)) == len(vs)
    assert all(not dominates(a, b) for a in vs for b in vs)


@pytest.mark.parametrize("case", CASES[:8], ids=lambda c: c["name"])
@pytest.mark.parametrize("strategy,archive,check_every", [
    ("s1", "list", 1), ("s2", "quadtree", 3), ("s3", "list", 2), ("s3", "quadtree", 1)])
def test_strategies_match_oracle(case, strategy, archive, check_every):
    s = desk_spec(case)
    objectives = ObjectiveSpec(OBJECTIVES)
    run = explore(s, config(strategy, archive=archive, check_every=check_every))
    assert run.termination is Termination.COMPLETED
    assert run.vectors == reference(case, objectives)
    check_front(s, run, objectives)
    check_snapshots(run)


@pytest.mark.parametrize("case", CASES[:8], ids=lambda c: c["name"])
@pytest.mark.parametrize("objectives", [("area", "latency"), ("energy", "latency"), ("area", "energy")])
def test_s4_matches_oracle(case, objectives):
    s = desk_spec(case)
    obj = ObjectiveSpec(objectives)
    run = explore(s, config("s4", obj))
    assert run.vectors == reference(case, obj)
    check_front(s, run, obj)
    check_snapshots(run)


def test_deterministic():
    s = desk_spec(CASES[4])
    a, b = explore(s, config("s3")), explore(s, config("s3"))
    assert [(x.id, x.objectives, x.schedule, x.routes) for x in a.front] == \
           [(x.id, x.objectives, x.schedule, x.routes) for x in b.front]


def test_estimation_prunes_without_loss():
    s = desk_spec(CASES[3])
    on, off = explore(s, config("s3")), explore(s, config("s3", estimation=False))
    assert on.vectors == off.vectors
    assert on.stats.prunes > off.stats.prunes == 0


def medium_instance():
    return generate(GenParams(seed=5, nTasksPerApp=10, nApps=2, meshW=3, meshH=3, optionsPerTask=3,
                              periodSet=(100, 200)))


def test_interrupt_at_snapshot_boundary():
    s = medium_instance()
    stop = threading.Event()

    def on_snapshot(snap):
        if snap.reason == "archive" and len(snap.vectors) >= 2:
            stop.set()

    run = explore(s, config("s3"), stop=stop, on_snapshot=on_snapshot)
    assert run.termination is Termination.INTERRUPTED
    assert run.front
    check_front(s, run, ObjectiveSpec(OBJECTIVES))
    check_snapshots(run)


@pytest.mark.parametrize("strategy", ["s1", "s2", "s3"])
def test_timeout_returns_valid_front(strategy):
    s = medium_instance()
    run = explore(s, ExplorationConfig(strategy=strategy, timeout_ms=400, snapshot_every_ms=100))
    assert run.termination is Termination.TIMEOUT
    check_front(s, run, ObjectiveSpec(OBJECTIVES))
    check_snapshots(run)
    assert any(snap.reason == "timer" for snap in run.snapshots)


def test_max_solutions_interrupts():
    run = explore(medium_instance(), config("s3", max_solutions=1))
    assert run.termination is Termination.INTERRUPTED and len(run.front) == 1


# -- diverse selection -----------------------------------------------------------

def line_front(values) -> list[Solution]:
    return [Solution(id=i, objectives=(v,)) for i, v in enumerate(values)]


def test_select_small_front_unchanged():
    front = line_front([3, 1, 2])
    assert select_diverse(front, 3) == front
    assert select_diverse(front, 5, "euclidean") == front


def test_select_collinear():
    chosen = select_diverse(line_front([0, 1, 10]), 2, "euclidean")
    assert sorted(s.objectives[0] for s in chosen) == [0, 10]


def min_gap(sols, dist) -> float:
    return min(dist(a, b) for a, b in itertools.combinations(sols, 2))


def euclid(a, b) -> float:
    return sum((x - y) ** 2 for x, y in zip(a.objectives, b.objectives)) ** 0.5


@pytest.mark.parametrize("seed", range(40))
def test_select_half_optimal_and_monotone(seed):
    rng = random.Random(seed)
    front = [Solution(id=i, objectives=(rng.randint(0, 20), rng.randint(0, 20)))
             for i in range(rng.randint(4, 10))]
    gaps = []
    for n in (2, 3, 4):
        chosen = select_diverse(front, n, euclid)
        assert len({s.id for s in chosen}) == n
        best = max(min_gap(c, euclid) for c in itertools.combinations(front, n))
        assert min_gap(chosen, euclid) >= 0.5 * best
        gaps.append(min_gap(chosen, euclid))
    assert gaps == sorted(gaps, reverse=True)


def test_select_rejects_bad_n():
    with pytest.raises(ValueError):
        select_diverse(line_front([1]), 0)
