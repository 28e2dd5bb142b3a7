"""Named instance suites and their JSON files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from . import obp, tsp
from .base import Problem
from .obp import ObpInstance, ObpProblem
from .tsp import TspInstance, TspProblem

Instance = Union[TspInstance, ObpInstance]

PROBLEMS: dict[str, Problem] = {"tsp": TspProblem(), "obp": ObpProblem()}

DEFAULT_TEST_COUNT = 64


def _tsp_oracle7(seed: int, count: int) -> list[TspInstance]:
    return tsp.gen_tsp(count, 7, 7, seed, "tsp-oracle7")


def _obp_micro(seed: int, count: int) -> list[ObpInstance]:
    return [ObpInstance((50, 50, 50), 100, seed, "obp-micro-000")]


SETTINGS: dict[str, dict[str, object]] = {
    "tsp": {
        "train": lambda seed, count: tsp.gen_tsp_training(count or 128, seed),
        "desk": lambda seed, count: tsp.gen_tsp_desk(count or 8, seed),
        "oracle7": lambda seed, count: _tsp_oracle7(seed, count or 8),
        **{
            name: (lambda name: lambda seed, count: tsp.gen_tsp_test(name, count or DEFAULT_TEST_COUNT, seed))(name)
            for name in tsp.TEST_SETTINGS
        },
    },
    "obp": {
        "train": lambda seed, count: obp.gen_obp_training(count or 128, seed),
        "desk": lambda seed, count: obp.gen_obp_desk(count or 8, seed),
        "micro": _obp_micro,
        **{
            name: (lambda name: lambda seed, count: obp.gen_obp_test(name, seed, count or DEFAULT_TEST_COUNT))(name)
            for name in obp.TEST_SETTINGS
        },
    },
}


def make_suite(problem: str, setting: str, seed: int, count: int = 0) -> list[Instance]:
    try:
        factory = SETTINGS[problem][setting]
    except KeyError:
        known = ", ".join(sorted(SETTINGS.get(problem, {})))
        raise KeyError(f"unknown setting {setting!r} for problem {problem!r} (known: {known})") from None
    return factory(seed, count)  # type: ignore[operator]


def suite_to_json(problem: str, name: str, seed: int, instances: list[Instance]) -> str:
    doc = {
        "suite_name": name,
        "problem": problem,
        "seed": seed,
        "instances": [inst.to_dict() for inst in instances],
    }
    return json.dumps(doc, indent=1) + "\n"


def write_suite(path: Path, problem: str, name: str, seed: int, instances: list[Instance]) -> None:
    Path(path).write_text(suite_to_json(problem, name, seed, instances), encoding="utf-8")


def read_suite(path: Path) -> tuple[str, str, list[Instance]]:
    """Return ``(problem, suite_name, instances)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    problem = doc["problem"]
    cls = TspInstance if problem == "tsp" else ObpInstance
    return problem, doc.get("suite_name", Path(path).stem), [cls.from_dict(d) for d in doc["instances"]]


def resolve_suite(problem: str, source: str, seed: int) -> tuple[str, list[Instance]]:
    """``source`` is either a path to a suite file or a setting name."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        file_problem, name, instances = read_suite(path)
        if file_problem != problem:
            raise ValueError(f"suite {source} is for {file_problem}, not {problem}")
        return name, instances
    return source, make_suite(problem, source, seed)
