import numpy as np
import pytest

from thermoflow.discretization import build_bases
from thermoflow.solver import Model, RunConfig, prepare_initial_data, run


@pytest.fixture(scope="session")
def small_bases():
    return build_bases(6, 6)


@pytest.fixture(scope="session")
def small_model():
    return Model(RunConfig(scenario="steady", n=6, m=6))


@pytest.fixture(scope="session")
def blob_run():
    """Shared moderate-resolution buoyant-blob run (truncation inert)."""
    cfg = RunConfig.for_scenario(
        "buoyant-blob", n=8, m=8, t_end=0.5, n_samples=17, moll_radius=0.0, pressure=True
    )
    model = Model(cfg)
    traj, report = run(cfg, model=model)
    return cfg, model, traj, report


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
