"""Resonance, grid and coupling-tensor construction."""

import numpy as np
import pytest

from ringsqueeze import HBAR
from ringsqueeze.ring import (KGrid, PumpSpec, build_resonance, coupling_tensor,
                              cw_amplitude, default_grids, dispersion,
                              enhancement_in, enhancement_out, initial_pump)

OMEGA = 2.0 * np.pi * 193.0e12
V_GROUP = 1.5e8


def make_specs():
    s = build_resonance("S", OMEGA, V_GROUP, 2.0e6, 2.0e5)
    p = build_resonance("P", OMEGA, V_GROUP, 2.0e6, 4.0e4)
    c = build_resonance("C", OMEGA, V_GROUP, 2.0e6, 1.0e6)
    return s, p, c


def test_decay_rates_follow_quality_factors():
    s, p, c = make_specs()
    assert s.gamma_bar == pytest.approx(OMEGA / (2.0 * 2.0e5))
    assert p.gamma_bar == pytest.approx(OMEGA / (2.0 * 4.0e4))
    assert c.gamma_bar == pytest.approx(OMEGA / (2.0 * 1.0e6))
    # total = intrinsic + bus contribution
    assert s.rate_phantom + s.rate_actual == pytest.approx(s.gamma_bar)
    assert s.rate_phantom == pytest.approx(OMEGA / (2.0 * 2.0e6))


def test_escape_efficiency_is_loaded_over_intrinsic_complement():
    s, _, _ = make_specs()
    assert s.escape_efficiency == pytest.approx(0.9)


def test_overcoupled_validation():
    with pytest.raises(ValueError, match="q_load"):
        build_resonance("S", OMEGA, V_GROUP, 1.0e5, 2.0e5)
    with pytest.raises(ValueError, match="band label"):
        build_resonance("X", OMEGA, V_GROUP, 2.0e6, 2.0e5)
    with pytest.raises(ValueError, match="positive"):
        build_resonance("S", -OMEGA, V_GROUP, 2.0e6, 2.0e5)


def test_dispersion_is_linear_about_center():
    s, _, _ = make_specs()
    k = s.k_center + np.array([-1.0e3, 0.0, 2.0e3])
    np.testing.assert_allclose(dispersion(s, k),
                               s.omega + s.v * (k - s.k_center))


def test_enhancement_peak_and_width():
    """|F|^2 is Lorentzian in v(k-K): maximal on resonance, half at v dk = Gamma."""
    s, _, _ = make_specs()
    circ = 2.0 * np.pi * 64.0e-6
    on = abs(enhancement_in(s, s.k_center, circ)) ** 2
    off = abs(enhancement_in(s, s.k_center + s.gamma_bar / s.v, circ)) ** 2
    # rel 1e-9: forming k_center + shift costs ~5e-12 by cancellation
    assert off == pytest.approx(on / 2.0, rel=1e-9)
    gamma_act = np.sqrt(2.0 * s.rate_actual * s.v)
    assert on == pytest.approx(gamma_act ** 2 / (circ * s.gamma_bar ** 2))


def test_enhancement_out_conjugate_pole():
    """Output factors have the pole mirrored across the real axis."""
    s, _, _ = make_specs()
    circ = 2.0 * np.pi * 64.0e-6
    k = s.k_center + np.linspace(-2.0, 2.0, 5) * s.gamma_bar / s.v
    f_in = enhancement_in(s, k, circ)
    f_out = enhancement_out(s, "actual", k, circ)
    np.testing.assert_allclose(np.abs(f_out), np.abs(f_in), rtol=1e-12)
    assert not np.allclose(f_out, f_in)


def test_enhancement_out_channel_weights():
    """actual/phantom output magnitudes split as the escape efficiency."""
    s, _, _ = make_specs()
    circ = 2.0 * np.pi * 64.0e-6
    k = s.k_center
    act = abs(enhancement_out(s, "actual", k, circ)) ** 2
    pha = abs(enhancement_out(s, "phantom", k, circ)) ** 2
    assert act / (act + pha) == pytest.approx(s.escape_efficiency)


def test_kgrid_center_and_spacing():
    grid = KGrid.centered(1.0e7, 5.0e4, 11)
    assert grid.detunings[5] == 0.0
    assert grid.n == 11
    assert grid.delta_k == pytest.approx(1.0e4)
    np.testing.assert_allclose(np.diff(grid.detunings), 1.0e4)
    with pytest.raises(ValueError):
        KGrid.centered(1.0e7, 5.0e4, 10)
    with pytest.raises(ValueError):
        KGrid.centered(1.0e7, -1.0, 11)


def test_cw_amplitude_photon_flux():
    """|amplitude|^2 equals the photon flux density P / (hbar omega v)."""
    amp = cw_amplitude(0.03, OMEGA, V_GROUP)
    target = np.sqrt(2.0 * np.pi * 0.03 / (HBAR * OMEGA * V_GROUP))
    assert amp == pytest.approx(target)


def test_pump_photon_number():
    pump = PumpSpec(cw_power=0.03, pulse_energy=1.0e-10, duration=0.5e-9,
                    omega_p=OMEGA)
    assert pump.n_photons == pytest.approx(7.8196e8, rel=1e-4)


def test_initial_pump_norm_exact():
    s, p, _ = make_specs()
    pump = PumpSpec(0.03, 1.0e-10, 0.5e-9, p.omega)
    _, p_grid = default_grids(s, p, pump)
    beta = initial_pump(pump, p_grid, p.v)
    assert np.sum(np.abs(beta) ** 2) == pytest.approx(pump.n_photons, rel=1e-14)


def test_initial_pump_rejects_truncating_grid():
    s, p, _ = make_specs()
    pump = PumpSpec(0.03, 1.0e-10, 0.5e-9, p.omega)
    narrow = KGrid.centered(p.k_center, 0.5 / (p.v * pump.duration), 11)
    with pytest.raises(ValueError, match="pump grid"):
        initial_pump(pump, narrow, p.v)


def make_tensor(n_s=11, n_p=11):
    s, p, c = make_specs()
    pump = PumpSpec(0.03, 1.0e-10, 0.5e-9, p.omega)
    s_grid, p_grid = default_grids(s, p, pump, n_s=n_s, n_p=n_p)
    return coupling_tensor(s, p, c, s_grid, p_grid, pump, 1.0, 64.0e-6), pump


def test_tensor_layout_and_symmetry():
    tensor, _ = make_tensor()
    assert tensor.dim == 22
    assert tensor.actual == slice(0, 11)
    assert tensor.phantom == slice(11, 22)
    lam = tensor.dense(0.3e-9)
    # symmetric in the two signal slots at every pump index
    np.testing.assert_allclose(lam, np.swapaxes(lam, 0, 1), atol=0.0)


def test_tensor_elementwise_matches_dense():
    tensor, _ = make_tensor(n_s=5, n_p=5)
    lam = tensor.dense(0.1e-9)
    for mu, nu, el in ((0, 3, 2), (7, 1, 4), (9, 9, 0)):
        assert tensor.lam(mu, nu, el, 0.1e-9) == pytest.approx(
            complex(lam[mu, nu, el]), rel=1e-12)


def test_pump_alias_period_scales_with_grid():
    tensor_a, _ = make_tensor(n_p=11)
    tensor_b, _ = make_tensor(n_p=21)
    # doubling the point count at fixed span doubles the recurrence time
    assert tensor_b.pump_alias_period == pytest.approx(
        2.0 * tensor_a.pump_alias_period, rel=1e-12)
    spacing = tensor_a.p_det[1] - tensor_a.p_det[0]
    assert tensor_a.pump_alias_period == pytest.approx(2.0 * np.pi / spacing)


def test_default_grid_spans():
    s, p, _ = make_specs()
    pump = PumpSpec(0.03, 1.0e-10, 0.5e-9, p.omega)
    s_grid, p_grid = default_grids(s, p, pump)
    assert s_grid.detunings[-1] == pytest.approx(6.0 * s.gamma_bar / s.v)
    assert p_grid.detunings[-1] == pytest.approx(6.0 / (p.v * pump.duration))


def test_zero_nonlinearity_zeroes_coupling():
    s, p, c = make_specs()
    pump = PumpSpec(0.03, 1.0e-10, 0.5e-9, p.omega)
    s_grid, p_grid = default_grids(s, p, pump)
    tensor = coupling_tensor(s, p, c, s_grid, p_grid, pump, 0.0, 64.0e-6)
    assert tensor.c == 0.0
