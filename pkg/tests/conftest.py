import functools

import numpy as np
import pytest

from prandtl_lab.blasius import build_profile
from prandtl_lab.decay import InitialDataSpec, make_initial_data
from prandtl_lab.vonmises import MarchConfig, PsiGrid, init_station, march, output_schedule


@functools.lru_cache(maxsize=None)
def cached_profile():
    return build_profile()


@functools.lru_cache(maxsize=None)
def cached_runs(n=2000, dx0=0.01, per_decade=20, x_end=1.2e4, eps=0.05, moment_free=False):
    """(perturbed history, Blasius reference history) on a shared grid and schedule."""
    prof = cached_profile()
    grid = PsiGrid.for_run(n, 1.0, x_end)
    cfg = MarchConfig(dx0=dx0)
    sched = output_schedule(1.0, x_end, per_decade)
    spec = InitialDataSpec(eps=eps, moment_free=moment_free)
    pert = march(init_station(prof, make_initial_data(spec, prof, 1.0), 1.0, grid), sched, cfg)
    ref = march(init_station(prof, None, 1.0, grid), sched, cfg)
    return pert, ref


@pytest.fixture(scope="session")
def profile():
    return cached_profile()


@pytest.fixture(scope="session")
def runs():
    return cached_runs()


@pytest.fixture(scope="session")
def short_runs():
    return cached_runs(n=600, dx0=0.02, per_decade=10, x_end=200.0)
