import time

import pytest

from curvflow import FlowConfig, PhiFunction, SpeedFunction, run, self_similarity_report
from curvflow.flow_sim import parse_shape

_RUNS = {}
VERDICTS = []


def timed_run(shape: str, f_id: str, phi_id: str, m: int, n: int = 2, **config):
    """Flow run cached per session; returns ``(result, seconds)`` of the first computation."""
    key = (shape, f_id, phi_id, m, n, tuple(sorted(config.items())))
    if key not in _RUNS:
        t0 = time.perf_counter()
        result = run(parse_shape(shape, m, n), SpeedFunction.from_id(f_id, n), PhiFunction.from_id(phi_id),
                     FlowConfig(**config))
        _RUNS[key] = (result, time.perf_counter() - t0)
    return _RUNS[key]


def timed_report(shape: str, f_id: str, phi_id: str, m: int, n: int = 2):
    result, seconds = timed_run(shape, f_id, phi_id, m, n)
    t0 = time.perf_counter()
    rep = self_similarity_report(result)
    return result, rep, seconds + time.perf_counter() - t0


@pytest.fixture(scope="session")
def sphere_zz3():
    return timed_run("sphere:1", "mean", "power-sum:1,1;1,3", 256)[0]


@pytest.fixture(scope="session")
def spheroid_mean_z2():
    return timed_run("spheroid:1,1.1", "mean", "power:2", 256)[0]


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
