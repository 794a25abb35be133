"""Shared fixtures: one NLS normal-form run and its frequency map, reused across modules."""

from dataclasses import dataclass

import pytest

from kamlab.kam import (
    CountertermMap,
    FrequencyMap,
    KamSchedule,
    NlsSeed,
    PipelineResult,
    nls_seed,
    run_kam,
    solve_frequency_map,
)
from kamlab.small_divisors import DiophParams, ResonanceBudget

EPS0 = 1e-4
N_STEPS = 4

CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[CRITERIA] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])


@pytest.fixture
def criterion(request, capsys):
    """``record(number, ok, detail)`` logs one pass/fail line and returns ``ok``."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[CRITERIA][number] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


@dataclass
class NlsRun:
    schedule: KamSchedule
    params: DiophParams
    budget: ResonanceBudget
    seed: NlsSeed
    result: PipelineResult


@dataclass
class FrequencyRun:
    fmap: FrequencyMap
    final: PipelineResult


@pytest.fixture(scope="session")
def nls_run() -> NlsRun:
    schedule, params, budget = KamSchedule(), DiophParams(), ResonanceBudget()
    seed = nls_seed(schedule, params, budget, eps0=EPS0)
    result = run_kam(seed.G0, seed.omega, schedule, params, n_steps=N_STEPS)
    return NlsRun(schedule, params, budget, seed, result)


@pytest.fixture(scope="session")
def frequency_run(nls_run) -> FrequencyRun:
    cmap = CountertermMap(nls_run.seed.G0, nls_run.schedule, nls_run.params, N_STEPS)
    cmap.seed(nls_run.result)
    ms = nls_run.budget.mode_set
    nu = {j: nls_run.seed.omega[j] for j in ms.tangential}
    fmap = solve_frequency_map(cmap, nu, nls_run.seed.W, ms)
    return FrequencyRun(fmap, cmap.run(fmap.omega))
