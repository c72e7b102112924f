"""Small builders shared by the test modules."""
from __future__ import annotations

import json
from pathlib import Path

from dsexplore.model import (Application, MappingOption, Message, Specification, Task,
                             make_spec, mesh_platform, spec_from_dict)

DATA = Path(__file__).parent / "data"


def app(aid: str, period: int, tasks, messages=()) -> Application:
    """``tasks`` are ids; ``messages`` are (id, src, dst, size) tuples."""
    return Application(aid, period, tuple(Task(t, aid, period) for t in tasks),
                       tuple(Message(*m) for m in messages))


def spec(width: int, height: int, apps, mappings, *, link_delay: int = 1, area: int = 1,
         static_energy: int = 1) -> Specification:
    """``mappings`` are (task, tile, wcet, dyn) tuples."""
    plat = mesh_platform(width, height, area=area, static_energy=static_energy,
                         link_delay=link_delay)
    return make_spec(plat, apps, [MappingOption(*m) for m in mappings])


def chain_spec() -> Specification:
    """t1 -> m -> t2 across one link of delay 3, both tasks with wcet 2."""
    return spec(2, 1, [app("a", 20, ["t1", "t2"], [("m", "t1", "t2", 3)])],
                [("t1", "t0_0", 2, 1), ("t2", "t1_0", 2, 1)])


def desk_cases() -> list[dict]:
    return json.loads((DATA / "desk_cases.json").read_text())


def desk_spec(case: dict) -> Specification:
    return spec_from_dict(case["instance"])
