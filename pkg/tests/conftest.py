import contextlib

import numpy as np
import pytest

from pqos_sim.config import RunConfig

ACCEPTANCE_VERDICTS: list[str] = []


@contextlib.contextmanager
def verdict(label: str):
    """Record one [acceptance] PASS/FAIL line; printed in the run summary."""

    def emit(status: str) -> None:
        line = f"[acceptance] {label}: {status}"
        ACCEPTANCE_VERDICTS.append(line)
        print(line, flush=True)

    try:
        yield
    except BaseException:
        emit("FAIL")
        raise
    emit("PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def tiny_config(policy: str = "constant:C-SC", seed: int = 1, **overrides) -> RunConfig:
    """A seconds-long run cheap enough for per-test use."""
    cfg = RunConfig(policy=policy, seed=seed)
    cfg.scenario.duration_s = overrides.pop("duration_s", 2.0)
    cfg.scenario.n_vehicles = overrides.pop("n_vehicles", 1)
    for key, value in overrides.items():
        obj = cfg
        *path, leaf = key.split(".")
        for part in path:
            obj = getattr(obj, part)
        setattr(obj, leaf, value)
    return cfg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
