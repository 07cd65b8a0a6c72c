"""Shared fixtures: small synthetic systems that run in milliseconds."""

import numpy as np
import pytest

from ringsqueeze.ring import CouplingTensor


def synthetic_tensor(n_s: int = 3, n_p: int = 3, seed: int = 0,
                     scale: float = 0.05) -> CouplingTensor:
    """Random small coupling tensor with O(1) rates, for solver unit tests.

    Dimensionless units: velocities and decay rates near 1, detunings of a
    few, so default windows and steps stay tiny.
    """
    rng = np.random.default_rng(seed)
    s_grid = np.linspace(-2.0, 2.0, n_s)
    s_det = np.concatenate([s_grid, s_grid])
    p_det = np.linspace(-1.5, 1.5, n_p)
    f = rng.normal(size=2 * n_s) + 1j * rng.normal(size=2 * n_s)
    g = rng.normal(size=n_p) + 1j * rng.normal(size=n_p)
    c = scale * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    return CouplingTensor(
        c=complex(c), f=f, g=g, s_det=s_det, p_det=p_det, n_s=n_s,
        delta_k_s=s_grid[1] - s_grid[0], delta_k_p=p_det[1] - p_det[0],
        v_s=1.0, gamma_bar_s=1.0, gamma_bar_p=1.0, tau_pump=1.0,
        s_grid_det=s_grid.copy(),
    )


@pytest.fixture
def tiny_tensor() -> CouplingTensor:
    return synthetic_tensor()


@pytest.fixture
def tiny_beta() -> np.ndarray:
    rng = np.random.default_rng(7)
    return (rng.normal(size=3) + 1j * rng.normal(size=3)) * 2.0
