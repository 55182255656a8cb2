"""Shared fixtures: one small generated run reused by several test modules."""

import pytest

from qburgers.dataset import load_dataset, run_experiment
from qburgers.params import ExperimentParams
from qburgers.qsim import NoiseModel

FIXED_STAMP = "2026-01-01T00:00:00Z"


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """One parameter combination (N=8, ZNE on) -> 14 records on disk."""
    out_dir = tmp_path_factory.mktemp("small_run")
    params = ExperimentParams(nu=0.1, dt=1e-3, n_grid=8, u_left=1.0)
    doc = run_experiment(
        params,
        NoiseModel(),
        shots=4096,
        base_seed=11,
        enable_zne=True,
        hardware_import=None,
        out_dir=str(out_dir),
        timestamp_override=FIXED_STAMP,
    )
    return {"dir": str(out_dir), "doc": doc, "params": params}


@pytest.fixture(scope="session")
def small_samples(small_run):
    samples = load_dataset(small_run["dir"])
    assert len(samples) == 14
    return samples
