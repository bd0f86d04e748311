import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from hmmlab.census import random_hmm, random_topology
from hmmlab.core import EdgeEmittingHmm, irreducible, validate
from hmmlab.structure import flag_symbols

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

MODELS = Path(__file__).resolve().parent.parent / "models"

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def load(name: str):
    return validate(json.loads((MODELS / f"{name}.json").read_text()))


@pytest.fixture(scope="session")
def ex1():
    return load("ex1")


@pytest.fixture(scope="session")
def cycle2():
    return load("cycle2")


@pytest.fixture(scope="session")
def high_q():
    return load("high_q")


@pytest.fixture(scope="session")
def block2():
    return load("block2")


@pytest.fixture(scope="session")
def uni():
    # unifilar: A emits a/b evenly, B emits a w.p. 1/4
    return EdgeEmittingHmm.from_dict(["A", "B"], {
        "a": [[0.5, 0], [0.25, 0]],
        "b": [[0, 0.5], [0, 0.75]],
    })


def random_flag_state_models(count: int, n: int = 3, m: int = 2, seed: int = 0):
    out, k = [], 0
    while len(out) < count:
        rng = np.random.default_rng(seed + k)
        k += 1
        top = random_topology(n, m, rng)
        if not irreducible(top) or not flag_symbols(top).flag_state:
            continue
        out.append(random_hmm(top, rng))
    return out


def random_irreducible_models(count: int, n: int, m: int, seed: int = 0):
    out, k = [], 0
    while len(out) < count:
        rng = np.random.default_rng(seed + k)
        k += 1
        top = random_topology(n, m, rng)
        if irreducible(top):
            out.append(random_hmm(top, rng))
    return out


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(name: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
