import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from microhd.data import Dataset  # noqa: E402

# criterion id -> list of (test name, passed)
_CRITERIA: dict[str, list[tuple[str, bool]]] = {}
_TITLES: dict[str, str] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    cid, title = marker.args
    _TITLES[cid] = title
    _CRITERIA.setdefault(cid, []).append((item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        results = _CRITERIA[cid]
        ok = all(passed for _, passed in results)
        failed = [name for name, passed in results if not passed]
        line = f"{cid} {'PASS' if ok else 'FAIL'}  {_TITLES[cid]}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)


def make_blobs(n_classes=3, n_features=8, per_class=40, spread=1.0, separation=5.0, seed=0):
    """Gaussian blobs with centres drawn at ``separation`` scale."""
    rng = np.random.default_rng(seed)
    centres = rng.normal(size=(n_classes, n_features)) * separation
    labels = np.repeat(np.arange(n_classes), per_class)
    samples = centres[labels] + rng.normal(size=(labels.size, n_features)) * spread
    order = rng.permutation(labels.size)
    return Dataset(samples[order], labels[order], n_classes, tuple(str(i) for i in range(n_classes)))


@pytest.fixture
def blobs():
    return make_blobs()
