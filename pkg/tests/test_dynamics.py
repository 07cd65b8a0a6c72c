"""Integrator unit tests: stepper equivalence, invariants, guards, windows."""

import numpy as np
import pytest

from ringsqueeze import dynamics, fock
from ringsqueeze.dynamics import GaussianState

from conftest import synthetic_tensor


def test_zeta_matches_dense_contraction(tiny_tensor, tiny_beta):
    """compute_zeta is the separable shortcut for contracting Lambda with beta."""
    t = 0.37
    zeta = dynamics.compute_zeta(tiny_tensor, tiny_beta, t)
    dense = np.einsum("mnl,l->mn", tiny_tensor.dense(t), tiny_beta)
    np.testing.assert_allclose(zeta, dense, atol=1e-14)
    np.testing.assert_allclose(zeta, zeta.T, atol=1e-14)


def test_gamma_matches_dense_contraction(tiny_tensor, tiny_beta):
    rng = np.random.default_rng(3)
    dim = tiny_tensor.dim
    v = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    w = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    t = -0.8
    gamma = dynamics.compute_gamma(tiny_tensor, v, w, t)
    dense = np.einsum("mnl,mn->l", np.conj(tiny_tensor.dense(t)), v @ w.T)
    np.testing.assert_allclose(gamma, dense, atol=1e-12)


def test_fast_step_matches_reference(tiny_tensor, tiny_beta):
    """The rank-structured stepper and the dense one agree to roundoff."""
    dim = tiny_tensor.dim
    state = GaussianState(
        t=-0.4, v=np.eye(dim, dtype=complex),
        w=np.zeros((dim, dim), dtype=complex), beta=tiny_beta.astype(complex))
    h = 0.01
    for _ in range(25):
        state = dynamics.rk4_step_reference(tiny_tensor, state.t, h, state)

    v = np.eye(dim, dtype=complex)
    w = np.zeros((dim, dim), dtype=complex)
    beta = tiny_beta.astype(complex)
    theta = 0.0
    dv = np.empty((dim, dim), dtype=complex)
    dw = np.empty((dim, dim), dtype=complex)
    for i in range(25):
        theta = dynamics._rk4_step(
            tiny_tensor, -0.4 + i * h, h, v, w, beta, theta, dv, dw)

    np.testing.assert_allclose(v, state.v, atol=1e-13)
    np.testing.assert_allclose(w, state.w, atol=1e-13)
    np.testing.assert_allclose(beta, state.beta, atol=1e-13)
    assert theta == pytest.approx(state.theta_b, abs=1e-13)


def test_evolve_preserves_invariants(tiny_tensor, tiny_beta):
    result = dynamics.evolve(tiny_tensor, tiny_beta, -2.0, 2.0, step=2e-3,
                             sample_stride=50, max_extensions=0)
    assert result.max_sympl_res < 1e-9
    assert result.max_symm_res < 1e-9
    assert result.max_q_drift < 1e-9
    # Q actually moved from W=0: the state is not stuck at vacuum.
    assert result.state.photon_number > 1e-3


def test_evolve_q_counts_pairs(tiny_tensor, tiny_beta):
    """Each signal pair costs one pump photon: dN_P = -N_signal / 2."""
    result = dynamics.evolve(tiny_tensor, tiny_beta, -2.0, 2.0, step=2e-3,
                             max_extensions=0)
    lost = float(np.vdot(tiny_beta, tiny_beta).real) - result.state.pump_photons
    assert lost == pytest.approx(result.state.photon_number / 2.0, rel=1e-9)


def test_trajectory_rows_shape(tiny_tensor, tiny_beta):
    result = dynamics.evolve(tiny_tensor, tiny_beta, -1.0, 1.0, step=1e-2,
                             sample_stride=40, max_extensions=0)
    rows = result.trajectory_rows()
    assert rows.shape[1] == len(dynamics.TRAJECTORY_HEADER)
    assert rows[0, 0] == -1.0
    assert rows[-1, 0] == pytest.approx(1.0, abs=1e-12)
    # frobW column is sqrt(photon number), monotone start from vacuum
    assert rows[0, 1] == 0.0


def test_evolve_rejects_bad_window(tiny_tensor, tiny_beta):
    with pytest.raises(ValueError, match="exceed"):
        dynamics.evolve(tiny_tensor, tiny_beta, 1.0, 1.0)


def test_evolve_rejects_aliased_window(tiny_tensor, tiny_beta):
    span = tiny_tensor.pump_alias_period
    with pytest.raises(ValueError, match="recurrence"):
        dynamics.evolve(tiny_tensor, tiny_beta, 0.0, 1.01 * span)


def test_first_order_rejects_aliased_window(tiny_tensor, tiny_beta):
    span = tiny_tensor.pump_alias_period
    with pytest.raises(ValueError, match="recurrence"):
        dynamics.first_order(tiny_tensor, tiny_beta, 0.0, 1.01 * span)


def test_window_extension_triggers(tiny_beta):
    """A window cut off mid-drive grows; needs a fine pump grid for room."""
    tensor = synthetic_tensor(n_p=15)
    beta = np.concatenate([tiny_beta, np.zeros(12)])
    short = dynamics.evolve(tensor, beta, -1.0, 0.0, step=1e-2,
                            record_theta_a=False, max_extensions=0)
    assert short.zeta_tail_fraction > 1e-4
    grown = dynamics.evolve(tensor, beta, -1.0, 0.0, step=1e-2,
                            record_theta_a=False, max_extensions=3)
    assert grown.extended >= 1
    assert grown.window[1] > 0.0


def test_extension_respects_alias_limit(tiny_beta):
    """Growth stops short of the pump recurrence time instead of raising."""
    tensor = synthetic_tensor(n_p=3)
    alias = tensor.pump_alias_period
    start = -0.45 * alias
    result = dynamics.evolve(tensor, tiny_beta, start, 0.0, step=1e-2,
                             max_extensions=50)
    assert result.window[1] - result.window[0] < alias


def test_first_order_matches_quadrature(tiny_tensor, tiny_beta):
    """Closed-form window integral against a Simpson-rule evaluation."""
    w_closed = dynamics.first_order(tiny_tensor, tiny_beta, -1.3, 1.7)
    w_quad = dynamics.first_order_quadrature(tiny_tensor, tiny_beta, -1.3, 1.7)
    scale = np.linalg.norm(w_closed)
    assert np.linalg.norm(w_closed - w_quad) / scale < 1e-8


def test_first_order_linear_in_pump(tiny_tensor, tiny_beta):
    w1 = dynamics.first_order(tiny_tensor, tiny_beta, -1.0, 1.0)
    w2 = dynamics.first_order(tiny_tensor, 2.0 * tiny_beta, -1.0, 1.0)
    np.testing.assert_allclose(w2, 2.0 * w1, atol=1e-12)


def test_first_order_is_weak_pump_limit(tiny_beta):
    """Full dynamics approach the frozen-pump solution quadratically in c."""
    def deviation(scale):
        tensor = synthetic_tensor(scale=scale)
        full = dynamics.evolve(tensor, tiny_beta, -2.0, 2.0, step=2e-3,
                               record_theta_a=False, max_extensions=0)
        w_fo = dynamics.first_order(tensor, tiny_beta, -2.0, 2.0)
        return np.linalg.norm(full.state.w - w_fo) / np.linalg.norm(w_fo)

    d1 = deviation(1e-4)
    d2 = deviation(1e-5)
    assert d1 < 1e-4
    assert d1 / d2 == pytest.approx(100.0, rel=0.1)


def test_single_mode_constant_drive_closed_form():
    """One mode, constant zeta: V = cosh(2 zeta t), W = -i sinh(2 zeta t)."""
    zeta = 1.0
    tensor = fock.scalar_tensor(lam=1e-6, t_scale=1.0)
    beta = np.array([zeta / 1e-6], dtype=complex)
    result = dynamics.evolve(tensor, beta, 0.0, 1.2, step=1.2 / 2400,
                             record_theta_a=False, max_extensions=0)
    v = complex(result.state.v[0, 0])
    w = complex(result.state.w[0, 0])
    assert v == pytest.approx(np.cosh(2.0 * zeta * 1.2), abs=1e-8)
    assert w == pytest.approx(-1j * np.sinh(2.0 * zeta * 1.2), abs=1e-8)


def test_default_window_and_step(tiny_tensor):
    t0, t1 = dynamics.default_window(tiny_tensor)
    assert t0 == pytest.approx(-6.0 * tiny_tensor.tau_pump)
    assert t1 == pytest.approx(6.0 * tiny_tensor.tau_pump
                               + 8.0 / tiny_tensor.gamma_bar_s)
    step = dynamics.default_step(tiny_tensor, divisor=100.0)
    assert step == pytest.approx(0.01)


def test_theta_b_accumulates(tiny_tensor, tiny_beta):
    """The pump phase shift integrates Re(gamma . beta*), nonzero here."""
    result = dynamics.evolve(tiny_tensor, tiny_beta, -2.0, 2.0, step=2e-3,
                             max_extensions=0)
    assert abs(result.state.theta_b) > 1e-6
    assert np.isfinite(result.theta_a)
