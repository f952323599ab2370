import os

import numpy as np
import pytest

from skysmooth.scene import Scene
from skysmooth.geometry import Bounds

_ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Record one acceptance-criterion outcome line for the terminal summary."""
    def _record(number, name, passed, detail=""):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}"
        if detail:
            line += f" :: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SKYSMOOTH_EXTENDED") == "1":
        return
    skip = pytest.mark.skip(reason="ablation experiment; set SKYSMOOTH_EXTENDED=1 to run")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def open_scene():
    """A 20 x 15 scene with no obstacles."""
    return Scene(name="open", bounds=Bounds(0, 0, 20, 15), start=(1.0, 7.5), goal=(19.0, 7.5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
