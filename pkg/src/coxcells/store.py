"""Group files, bundled fixtures, canonical JSON output and run manifests."""

from __future__ import annotations

import json
import platform
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .coxeter import CoxeterInputError, CoxeterSystem

FIXTURE_PACKAGE = "coxcells.fixtures"


def fixture_names() -> list[str]:
    root = resources.files(FIXTURE_PACKAGE)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def system_from_dict(data: dict) -> CoxeterSystem:
    """Build a system from {"name", "rank", "labels_from", "coxeter_matrix"}; 0 means infinity."""
    if not isinstance(data, dict):
        raise CoxeterInputError("group file must hold a JSON object")
    if "coxeter_matrix" not in data:
        raise CoxeterInputError("group file lacks 'coxeter_matrix'")
    matrix = data["coxeter_matrix"]
    if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
        raise CoxeterInputError("'coxeter_matrix' must be a list of rows")
    for row in matrix:
        for x in row:
            if not isinstance(x, int) or isinstance(x, bool):
                raise CoxeterInputError(f"matrix entry {x!r} is not an integer")
    rank = data.get("rank", len(matrix))
    if rank != len(matrix):
        raise CoxeterInputError(f"rank {rank} does not match a {len(matrix)}-row matrix")
    return CoxeterSystem(tuple(map(tuple, matrix)), str(data.get("name", "")), int(data.get("labels_from", 1)))


def system_to_dict(system: CoxeterSystem) -> dict:
    return {"name": system.name, "rank": system.rank, "labels_from": system.labels_from,
            "coxeter_matrix": [list(r) for r in system.matrix]}


def load_group(spec: str | Path) -> CoxeterSystem:
    """Load a group file, or a bundled fixture by name (e.g. ``affine_a2``)."""
    path = Path(spec)
    if path.is_file():
        text = path.read_text()
    elif str(spec) in fixture_names():
        text = resources.files(FIXTURE_PACKAGE).joinpath(f"{spec}.json").read_text()
    else:
        raise CoxeterInputError(f"no group file or fixture named {spec!r} "
                                f"(fixtures: {', '.join(fixture_names())})")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CoxeterInputError(f"{spec}: invalid JSON ({exc})") from None
    return system_from_dict(data)


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


@dataclass
class Manifest:
    command: str
    config: dict
    timings: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    python: str = field(default_factory=platform.python_version)

    def time(self, label: str, start: float) -> None:
        self.timings[label] = round(time.perf_counter() - start, 3)

    def write(self, output: str | Path) -> Path:
        out = Path(output)
        return write_text(out.with_name(out.name + ".manifest.json"), canonical_json(asdict(self)))
