"""End-to-end checks of the reference ring design, one verdict per property.

These run the production solver on the shipped default configuration (the
64 um ring with a 30 mW hold beam and 0.5 ns pulses) across the standard
pulse-energy ladder. Expect a few minutes of wall time; everything heavy is
computed once in module-scoped fixtures.

Two checks are currently red and kept that way on purpose. With the
loss-faithful vertex normalization (each band coupled at the rate its
loaded and intrinsic quality factors dictate), the 100 pJ photon number
lands at 4.68 rather than inside the targeted 14 to 24 band, and the full
correlation peak sits at 1.20 dwell times rather than 1.5. Rescaling the
vertex to force either check green pushes the first-order gap readings and
the weak-pump limits out of their own bands, so the faithful normalization
stays and the two failures document the discrepancy.
"""

import numpy as np
import pytest

from ringsqueeze import algebra, dynamics, fock, observables, runner
from ringsqueeze.config import parse_config

SWEEP_PJ = (1, 5, 10, 20, 40, 60, 80, 100)

CONFIG = parse_config("")


def run_energy(u_pj: float, record_theta_a: bool = False):
    """Solve one pulse energy both ways on the default grids."""
    parts = runner.make_system(CONFIG, u_pj * 1e-12)
    full = dynamics.evolve(parts.tensor, parts.beta_in,
                           record_theta_a=record_theta_a)
    w_first = dynamics.first_order(parts.tensor, parts.beta_in, *full.window)
    return parts, full, w_first


@pytest.fixture(scope="module")
def sweep():
    return {u: run_energy(u) for u in SWEEP_PJ}


@pytest.fixture(scope="module")
def peak_point(sweep):
    return sweep[100]


def test_01_symplectic_residuals_stay_small(sweep):
    """Both Bogoliubov identities hold to 1e-9 along every reference run."""
    for u, (_, full, _) in sweep.items():
        assert full.max_sympl_res < 1e-9, f"{u} pJ: {full.max_sympl_res:.3e}"
        assert full.max_symm_res < 1e-9, f"{u} pJ: {full.max_symm_res:.3e}"


def test_02_charge_drift_at_peak_energy(peak_point):
    """The conserved pair-count combination moves < 1e-6 at 100 pJ."""
    _, full, _ = peak_point
    assert full.max_q_drift < 1e-6, f"relative drift {full.max_q_drift:.3e}"


def test_03_constant_drive_closed_form():
    """One mode at constant gain: V = cosh(2 zeta t), W = -i sinh(2 zeta t).

    The pump carries 1e12 photons so its fractional depletion (1e-11 of the
    drive) sits far below the 1e-8 comparison floor across 2 zeta t in [0, 3].
    """
    zeta = 1.0
    tensor = fock.scalar_tensor(lam=1e-6, t_scale=1.0)
    beta = np.array([zeta / 1e-6], dtype=complex)
    result = dynamics.evolve(tensor, beta, 0.0, 1.5, step=1.5 / 3000,
                             sample_stride=50, record_theta_a=False,
                             max_extensions=0)
    times = result.trajectory["t_s"]
    frob_err = np.abs(result.trajectory["frobW"] - np.sinh(2.0 * zeta * times))
    assert frob_err.max() < 1e-8
    v = complex(result.state.v[0, 0])
    w = complex(result.state.w[0, 0])
    assert abs(v - np.cosh(3.0)) < 1e-8
    assert abs(w + 1j * np.sinh(3.0)) < 1e-8


def test_04_exact_oracle_certificate():
    """Gaussian and truncated-basis solutions agree on the same few-mode toy.

    Validity gate first (sub-photon signal, sub-percent depletion), then the
    photon-number comparison at 1% and the exact solver's own conserved
    charge at 1e-9.
    """
    config = fock.FockConfig(
        lam=np.full((1, 1, 1), runner._ORACLE_LAM),
        cutoffs_a=(runner._ORACLE_CUTOFFS[0],),
        cutoffs_b=(runner._ORACLE_CUTOFFS[1],),
        beta0=(runner._ORACLE_BETA,))
    report = fock.oracle_report(config, runner._ORACLE_HORIZON)
    assert report["n_a_exact"] <= 1.0
    assert report["depletion"] <= 0.01
    rel = abs(report["n_a_gaussian"] - report["n_a_exact"]) / report["n_a_exact"]
    assert rel < 0.01, f"photon-number mismatch {rel:.2%}"
    assert report["Q_drift"] < 1e-9


def test_05_photon_number_band_at_peak_energy(peak_point):
    """Total generated photons at 100 pJ against the 14 to 24 target band.

    Known red: the loss-faithful vertex gives 4.68 here, and no rescaling
    fixes this band without breaking the gap and weak-pump checks.
    """
    _, full, _ = peak_point
    n = observables.photon_number(full.state.w)
    assert 14.0 <= n <= 24.0, f"tr(W* W^T) at 100 pJ is {n:.4f}"


def test_06_first_order_squeezing_gap(sweep):
    """Gap and deficit of the frozen-pump solution across the energy ladder."""
    def gap(u):
        _, full, w_first = sweep[u]
        return observables.first_order_gap_db(
            observables.photon_number(full.state.w),
            observables.photon_number(w_first))

    gap80, gap100 = gap(80), gap(100)
    assert abs(gap80 - 1.6) <= 0.5, f"80 pJ gap {gap80:.3f} dB"
    assert abs(gap100 - 2.3) <= 0.5, f"100 pJ gap {gap100:.3f} dB"

    # the frozen pump undercounts: V = 1 removes the gain feedback, so the
    # deficit is measured against the full solution
    deficits = []
    for u in (20, 40, 60):
        _, full, w_first = sweep[u]
        n_full = observables.photon_number(full.state.w)
        n_first = observables.photon_number(w_first)
        deficits.append(100.0 * (n_full - n_first) / n_full)
    mean = np.mean(deficits)
    assert 15.0 <= mean <= 25.0, f"mean photon deficit {mean:.1f}%"


def test_07_first_order_overcounts_modes(sweep):
    """Frozen-pump mode counts bound the full ones at every energy."""
    for u, (_, full, w_first) in sweep.items():
        parts_polar = algebra.polar_decompose(full.state.v)
        r_full = np.arccosh(np.clip(parts_polar.s, 1.0, None))
        k_full = observables.schmidt_number_from_values(r_full)
        k_first = observables.schmidt_number_from_values(
            algebra.takagi(w_first)[0])
        assert k_first >= k_full, f"{u} pJ: {k_first:.4f} < {k_full:.4f}"


def test_08_weak_pump_collapse():
    """At 0.01 pJ the full solution collapses onto the frozen-pump one."""
    parts, full, w_first = run_energy(0.01, record_theta_a=True)
    decomp = algebra.extract_j(full.state.v, full.state.w)
    j_first = 0.5 * (w_first + w_first.T)
    rel = np.linalg.norm(decomp.j - j_first) / np.linalg.norm(j_first)
    assert rel < 1e-2, f"matrix deviation {rel:.3e}"
    assert abs(full.state.theta_b) < 1e-6, f"pump phase {full.state.theta_b:.3e}"
    assert abs(full.theta_a) < 1e-4, f"squeeze phase {full.theta_a:.3e}"


def correlation_grids(parts, full, w_first):
    """Normalized two-time correlation maps for both solutions."""
    tensor = parts.tensor
    times = observables.default_g2_times(tensor.gamma_bar_s)
    mm_full = observables.moment_matrices(full.state.v, full.state.w, tensor)
    grid_full = observables.g2(mm_full, times, tensor.tau_pump)
    # The frozen-pump ket with the same pair content: rebuilding from the
    # symmetrized matrix keeps the Bogoliubov identities exact, which the
    # literal (identity, W) pair violates at second order.
    j_first = 0.5 * (w_first + w_first.T)
    dec = algebra.squeeze_decomp_from_j(j_first)
    v1, w1 = algebra.rebuild_bogoliubov(dec, np.zeros_like(j_first))
    mm_first = observables.moment_matrices(v1, w1, tensor)
    grid_first = observables.g2(mm_first, times, tensor.tau_pump)
    return grid_full, grid_first


def test_09_correlation_peak_locations(sweep):
    """Peak positions of the correlation maps, in signal dwell units.

    Known red on the first reading: the full peak sits at 1.20 rather than
    inside 1.5 +- 0.2, the same gain shortfall seen in the photon-number
    band. The frozen-pump peak and the low-energy agreement hold.
    """
    failures = []

    parts, full, w_first = sweep[100]
    gbar = parts.tensor.gamma_bar_s
    grid_full, grid_first = correlation_grids(parts, full, w_first)
    t_full = grid_full.peak()[0] * gbar
    t_first = grid_first.peak()[0] * gbar
    if not abs(t_full - 1.5) <= 0.2:
        failures.append(f"full peak at 100 pJ: {t_full:.3f} dwells, want 1.5 +- 0.2")
    if not abs(t_first - 0.9) <= 0.2:
        failures.append(f"frozen-pump peak at 100 pJ: {t_first:.3f} dwells, "
                        "want 0.9 +- 0.2")

    parts, full, w_first = sweep[10]
    grid_full, grid_first = correlation_grids(parts, full, w_first)
    dev = np.max(np.abs(grid_full.values - grid_first.values)) \
        / grid_full.values.max()
    if not dev <= 0.05:
        failures.append(f"10 pJ pointwise deviation {dev:.2%}, want <= 5%")

    assert not failures, "; ".join(failures)


def test_10_discretization_convergence(peak_point):
    """Photon number is converged in both grid spacing and time step."""
    _, full, _ = peak_point
    n_ref = observables.photon_number(full.state.w)

    fine_cfg = parse_config("[grid]\nn_s = 201\nn_p = 201\n")
    parts = runner.make_system(fine_cfg, 100e-12)
    fine = dynamics.evolve(parts.tensor, parts.beta_in, record_theta_a=False)
    n_fine = observables.photon_number(fine.state.w)
    grid_shift = abs(n_fine - n_ref) / n_ref
    assert grid_shift < 1e-2, f"halved mode spacing moves n by {grid_shift:.3e}"

    parts = runner.make_system(CONFIG, 100e-12)
    halved = dynamics.evolve(parts.tensor, parts.beta_in, step_divisor=400.0,
                             record_theta_a=False)
    step_shift = abs(observables.photon_number(halved.state.w) - n_ref) / n_ref
    assert step_shift < 1e-4, f"halved step moves n by {step_shift:.3e}"


def test_11_squeeze_decomposition_round_trip(peak_point):
    """Factor the 100 pJ state, rebuild it, and vary the phase-log branch."""
    _, full, _ = peak_point
    v, w = full.state.v, full.state.w
    parts_polar = algebra.polar_decompose(v)
    decomp = algebra.extract_j(v, w, parts=parts_polar)
    phi = algebra.extract_phi(parts_polar.unitary)
    v2, w2 = algebra.rebuild_bogoliubov(decomp, phi)
    assert np.max(np.abs(v2 - v)) < 1e-8
    assert np.max(np.abs(w2 - w)) < 1e-8

    shifts = np.zeros(v.shape[0], dtype=int)
    shifts[0], shifts[3], shifts[7] = 1, -2, 3
    phi_shifted = algebra.extract_phi(parts_polar.unitary, branch_shifts=shifts)
    u_back = algebra.unitary_from_phi(phi_shifted)
    np.testing.assert_allclose(u_back, parts_polar.unitary, atol=1e-10)
    decomp_shifted = algebra.extract_j(v2, w2)
    assert np.max(np.abs(decomp_shifted.j - decomp.j)) < 1e-10
