import numpy as np
import pytest

from fractal_decimation import graphs, models


@pytest.fixture(scope="session")
def interval_oracle():
    cache = {}

    def get(p, m, bc="dirichlet"):
        key = (p, m, bc)
        if key not in cache:
            g = graphs.build_interval_graph(models.IntervalParams(p), m)
            cache[key] = graphs.dense_spectrum(graphs.assemble_operator(g, bc))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def sg_oracle():
    cache = {}

    def get(r, m, bc="dirichlet"):
        key = (r, m, bc)
        if key not in cache:
            g = graphs.build_sg_graph(models.SGParams(r), m)
            cache[key] = graphs.dense_spectrum(graphs.assemble_operator(g, bc))
        return cache[key]

    return get


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.abs(b)))


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
