"""Shared fixtures: a small certified 1D eigenpair and its flow products.

Session-scoped because generation and the flow run cost a few seconds; every
consumer treats them as read-only.
"""

import numpy as np
import pytest

import plapspec as pl


def cosine_field(n=32):
    return pl.Field(np.cos(np.pi * (np.arange(n) + 0.5) / n))


@pytest.fixture(scope="session")
def pair_1d():
    cfg = pl.EigenConfig(dt=2e-3, stages=5, target_residual=1e-5)
    return pl.generate_eigenfunction(cosine_field(), 1.5, cfg)


@pytest.fixture(scope="session")
def traj_1d(pair_1d):
    # extinction_tol sits above the dt=1e-3 oscillation floor (~1.1e-5).
    cfg = pl.FlowConfig(p=1.5, dt=1e-3, extinction_tol=1e-4, record_stride=5)
    return pl.run_p_flow(pair_1d.phi, cfg)


@pytest.fixture(scope="session")
def sfield_1d(traj_1d):
    return pl.p_transform(traj_1d)
