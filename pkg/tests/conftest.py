import json
import time

import numpy as np
import pytest

from collapsesim.cli import main

ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def run_cli(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    assert code == 0
    return json.loads(out.read_text()) if name.endswith(".json") else out.read_text()


@pytest.fixture(scope="session")
def exact_bench(tmp_path_factory):
    """bench-exact over N = 8..14 with the default dense propagator, run once per session."""
    tmp = tmp_path_factory.mktemp("bench")
    t0 = time.perf_counter()
    doc = run_cli(tmp, "bench-exact", "--seed", "11")
    return doc, time.perf_counter() - t0


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2
