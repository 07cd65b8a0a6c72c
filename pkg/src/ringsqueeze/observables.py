"""Physical quantities derived from the Bogoliubov solution.

Second moments of the output field follow from a(t) = V a + W a_dag on vacuum:
``<a_dag a> = W* W^T`` (Hermitian, positive) and ``<a a> = V W^T`` (symmetric).
Time-domain intensity correlations of the detected channel, squeezing-mode
(Schmidt) statistics and the energy-sweep summary table are built on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate

from . import algebra
from .ring import CouplingTensor

DB_PER_SQUEEZE = 20.0 / np.log(10.0)    # 10 log10(e^(2r)) = this times r


def photon_number(w: np.ndarray) -> float:
    """Total mean photon number tr(W* W^T) = ||W||_F^2."""
    return float(np.vdot(w, w).real)


def squeeze_db(n: float) -> float:
    """Single-mode-equivalent squeezing level, in dB, of n mean photons.

    Treats n as sinh^2(r) of one squeezed mode and reports 10 log10 e^(2r);
    19 photons map to about 19 dB, the scale used for the sweep gap.
    """
    return DB_PER_SQUEEZE * float(np.arcsinh(np.sqrt(n)))


@dataclass(frozen=True)
class MomentMatrices:
    """Second moments of one channel block, with its grid metadata."""

    number: np.ndarray       # <a_dag a>, Hermitian PSD
    pair: np.ndarray         # <a a>, symmetric
    detunings: np.ndarray    # v_S (k - K_S) of the block's modes [rad/s]
    delta_k: float
    v_s: float               # group velocity, converts mode density to flux

    @property
    def total(self) -> float:
        return float(np.trace(self.number).real)


def moment_matrices(v: np.ndarray, w: np.ndarray, tensor: CouplingTensor,
                    channel: str = "actual") -> MomentMatrices:
    """Channel-restricted second moments of the output state.

    Parameters
    ----------
    v, w : ndarray
        Bogoliubov matrices over both channel blocks.
    tensor : CouplingTensor
        Supplies the block layout and grid spacing.
    channel : str
        "actual" for the detected bus waveguide, "phantom" for the loss port.
    """
    block = tensor.actual if channel == "actual" else tensor.phantom
    number = np.conj(w) @ w.T
    pair = v @ w.T
    return MomentMatrices(
        number=number[block, block],
        pair=pair[block, block],
        detunings=tensor.s_det[block].copy(),
        delta_k=tensor.delta_k_s,
        v_s=tensor.v_s,
    )


def channel_photon_numbers(w: np.ndarray, tensor: CouplingTensor) -> tuple[float, float]:
    """(actual, phantom) mean photon numbers; they sum to tr(W* W^T)."""
    number = np.conj(w) @ w.T
    act = float(np.trace(number[tensor.actual, tensor.actual]).real)
    pha = float(np.trace(number[tensor.phantom, tensor.phantom]).real)
    return act, pha


@dataclass(frozen=True)
class G2Grid:
    """Normalized two-time intensity correlation on a square time grid."""

    times: np.ndarray        # (n_t,) seconds
    values: np.ndarray       # (n_t, n_t), symmetric, >= 0
    flux_norm: float         # Phi = detected photons / tau_pump [1/s]

    def peak(self) -> tuple[float, float, float]:
        """(t1, t2, value) of the grid maximum."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.times[i]), float(self.times[j]), float(self.values[i, j])


def g2(moments: MomentMatrices, times: np.ndarray, tau_pump: float) -> G2Grid:
    """Two-time intensity correlation G2(t1,t2) of the detected channel.

    Wick's theorem for the Gaussian output gives

        G2(t1,t2) = v_S^2 [N(t1,t1) N(t2,t2) + |N(t1,t2)|^2 + |M(t1,t2)|^2]

    with the two-time moments obtained by Fourier phases over the channel
    modes, N(t1,t2) = (delta_k/2pi) e(t1)_dag <a_dag a> e(t2) with
    e(t)_k = exp(-i v_S (k-K) t),
    and M analogous on <a a>; v_S N(t,t) is the detected flux. The result
    is divided by Phi^2 where Phi = (detected photons)/tau_P, matching the
    normalized plots.

    Negative entries below 1e-12 of the peak (roundoff) are clamped to zero.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty G2 time grid")
    # phases[i, k] = exp(-i det_k t_i); n2[i, j] = e(t_i)_dag N e(t_j)
    phases = np.exp(-1j * np.outer(times, moments.detunings))
    scale = moments.delta_k / (2.0 * np.pi)
    n2 = scale * (np.conj(phases) @ moments.number @ phases.T)
    m2 = scale * (phases @ moments.pair @ phases.T)
    diag = np.real(np.diagonal(n2))
    raw = moments.v_s ** 2 * (np.outer(diag, diag)
                              + np.abs(n2) ** 2 + np.abs(m2) ** 2)
    flux = moments.total / tau_pump
    values = raw / flux ** 2 if flux > 0.0 else raw
    floor = -1e-12 * max(float(values.max()), 1.0)
    values = np.where(values > floor, np.maximum(values, 0.0), values)
    values = 0.5 * (values + values.T)
    return G2Grid(times=times, values=values, flux_norm=flux)


def default_g2_times(gamma_bar_s: float, n: int = 161,
                     span_dwell: float = 4.0) -> np.ndarray:
    """Time grid [0, span_dwell / Gamma_bar_S] with n points."""
    return np.linspace(0.0, span_dwell / gamma_bar_s, n)


def detected_flux(moments: MomentMatrices, times: np.ndarray) -> np.ndarray:
    """Instantaneous detected photon flux v_S N(t,t) [1/s] along a time grid."""
    phases = np.exp(-1j * np.outer(times, moments.detunings))
    scale = moments.v_s * moments.delta_k / (2.0 * np.pi)
    out = np.empty(times.size)
    for i in range(times.size):
        vec = phases[i]
        out[i] = scale * np.real(np.conj(vec) @ moments.number @ vec)
    return out


@dataclass(frozen=True)
class SweepRow:
    """Summary of one pulse-energy point, full vs first-order."""

    pulse_energy: float      # J
    n_full: float
    n_first: float
    gap_db: float
    schmidt_full: float
    schmidt_first: float
    q_residual: float

    def as_record(self) -> dict:
        """JSON-ready record with the conventional field names."""
        return {
            "U_P_pJ": self.pulse_energy * 1e12,
            "n_full": self.n_full,
            "n_first": self.n_first,
            "gap_dB": self.gap_db,
            "K_full": self.schmidt_full,
            "K_first": self.schmidt_first,
            "Q_residual": self.q_residual,
        }


def first_order_gap_db(n_full: float, n_first: float) -> float:
    """Squeezing-level gap, in dB, between full and first-order solutions.

    Both photon numbers are mapped to the single-mode-equivalent squeezing
    level (see :func:`squeeze_db`) and differenced; it reduces to
    10 log10(n_full/n_first) in the high-gain limit.
    """
    return squeeze_db(n_full) - squeeze_db(n_first)


def schmidt_number_from_values(values: np.ndarray, weighting: str = "photon") -> float:
    """Effective mode count K = 1/sum(p_i^2) of a squeeze-value spectrum."""
    lam = np.asarray(values, dtype=float)
    if weighting == "photon":
        weights = np.sinh(lam) ** 2
    elif weighting == "amplitude":
        weights = lam ** 2
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    total = weights.sum()
    if total <= 0.0:
        return 1.0
    p = weights / total
    return float(1.0 / np.sum(p ** 2))


def sweep_row(pulse_energy: float, v_full: np.ndarray, w_full: np.ndarray,
              w_first: np.ndarray, q_residual: float,
              weighting: str = "photon") -> SweepRow:
    """Assemble one sweep-summary row from the two solutions."""
    n_full = photon_number(w_full)
    n_first = photon_number(w_first)
    parts = algebra.polar_decompose(v_full)
    r_full = np.arccosh(np.clip(parts.s, 1.0, None))
    lam_first = algebra.takagi(w_first)[0]
    return SweepRow(
        pulse_energy=pulse_energy,
        n_full=n_full,
        n_first=n_first,
        gap_db=first_order_gap_db(n_full, n_first),
        schmidt_full=schmidt_number_from_values(r_full, weighting),
        schmidt_first=schmidt_number_from_values(lam_first, weighting),
        q_residual=q_residual,
    )


def flux_sum_rule_residual(moments: MomentMatrices, t_start: float,
                           t_end: float, n: int = 2001) -> float:
    """Relative mismatch of the time-integrated flux vs the photon number.

    The time integral of the detected flux over a window holding the whole
    emission should recover the channel's mode-space photon number; the
    residual is a discretization diagnostic used by the tests.
    """
    times = np.linspace(t_start, t_end, n)
    total = scipy.integrate.trapezoid(detected_flux(moments, times), times)
    return abs(total - moments.total) / moments.total if moments.total > 0 else 0.0
