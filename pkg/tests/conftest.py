from __future__ import annotations

import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coxcells.conjectures import Engine  # noqa: E402
from coxcells.coxeter import CoxeterGroup, CoxeterSystem  # noqa: E402
from coxcells.kl import KLTable  # noqa: E402
from coxcells.store import load_group  # noqa: E402


class Ctx:
    """Group, KL table and engine bundled for tests."""

    def __init__(self, system: CoxeterSystem):
        self.G = CoxeterGroup(system)
        self.T = KLTable(self.G)
        self.E = Engine(self.T)
        self.A = self.E.afunc

    def P(self, text: str) -> int:
        return self.G.parse(text)

    def W(self, text: str) -> list[int]:
        return list(self.G.system.parse_word(text))


@lru_cache(maxsize=None)
def ctx(name: str) -> Ctx:
    return Ctx(load_group(name))


@lru_cache(maxsize=None)
def ctx_matrix(matrix: tuple, name: str = "", labels_from: int = 1) -> Ctx:
    return Ctx(CoxeterSystem(matrix, name, labels_from))


@pytest.fixture(scope="session")
def get():
    return ctx


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
