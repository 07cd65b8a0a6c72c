"""Ring and waveguide model.

Translates the physical description of a ring resonator point-coupled to a bus
waveguide (plus a phantom waveguide standing in for scattering loss) into the
quantities the dynamics needs: per-band resonance rates, field enhancement
factors, the discretized pump amplitude vector, and the time-separable
pair-generation coupling tensor.

Conventions
-----------
* Each frequency band J in {P, S, C} has a linear dispersion
  omega_J(k) = omega_J + v_J (k - K_J) around its center.
* The loaded half-linewidth is Gamma_bar_J = omega_J / (2 Q_load_J); the
  phantom (scattering) channel carries Gamma_phantom_J = omega_J / (2 Q_int_J)
  and the bus waveguide the remainder.
* Channel coupling constants are real, gamma_n = sqrt(2 Gamma_n v_n), the
  choice that makes |F(K)|^2 = 2 Gamma_n v_n / (L Gamma_bar^2) and returns
  Gamma_bar as the total field decay rate.
* The strong CW pump (band C) is treated classically and folded into the
  scalar prefactor of the coupling tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HBAR = 1.054571817e-34  # J s

_BANDS = ("P", "S", "C")


@dataclass(frozen=True)
class ResonanceSpec:
    """Physical parameters of one ring resonance band.

    Parameters
    ----------
    band : str
        Band label, one of ``P`` (pulsed pump), ``S`` (signal), ``C`` (CW pump).
    omega : float
        Center angular frequency [rad/s].
    v : float
        Group velocity of the ring and waveguide modes [m/s].
    q_int : float
        Intrinsic quality factor (scattering loss only).
    q_load : float
        Loaded quality factor (scattering plus bus coupling).
    k_center : float or None
        Center wavenumber K_J [1/m]. Only detunings k - K_J enter any result;
        defaults to omega / v.
    """

    band: str
    omega: float
    v: float
    q_int: float
    q_load: float
    k_center: float | None = None

    def __post_init__(self) -> None:
        if self.band not in _BANDS:
            raise ValueError(f"unknown band label {self.band!r}, expected one of {_BANDS}")
        for name in ("omega", "v", "q_int", "q_load"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{self.band} band: {name} must be positive")
        if self.q_load >= self.q_int:
            raise ValueError(
                f"{self.band} band: q_load = {self.q_load:g} must be strictly below "
                f"q_int = {self.q_int:g} (the bus-channel decay rate would not be positive)"
            )
        if self.k_center is None:
            object.__setattr__(self, "k_center", self.omega / self.v)

    @property
    def gamma_bar(self) -> float:
        """Total (loaded) field decay rate Gamma_bar = omega / (2 q_load) [1/s]."""
        return self.omega / (2.0 * self.q_load)

    @property
    def rate_phantom(self) -> float:
        """Field decay rate into the phantom (scattering) channel [1/s]."""
        return self.omega / (2.0 * self.q_int)

    @property
    def rate_actual(self) -> float:
        """Field decay rate into the bus waveguide [1/s]."""
        return self.gamma_bar - self.rate_phantom

    @property
    def escape_efficiency(self) -> float:
        """Fraction of ring decay that reaches the bus, rate_actual / gamma_bar."""
        return 1.0 - self.q_load / self.q_int

    @property
    def critically_coupled(self) -> bool:
        """True when the bus and phantom rates coincide (q_load = q_int / 2)."""
        return np.isclose(self.rate_actual, self.rate_phantom, rtol=1e-12)

    def coupling_constant(self, channel: str) -> float:
        """Real ring-waveguide coupling constant gamma_n = sqrt(2 Gamma_n v) [m^1/2 / s]."""
        rate = {"actual": self.rate_actual, "phantom": self.rate_phantom}[channel]
        return float(np.sqrt(2.0 * rate * self.v))


def build_resonance(band: str, omega: float, v: float, q_int: float, q_load: float,
                    k_center: float | None = None) -> ResonanceSpec:
    """Validated constructor for :class:`ResonanceSpec` (rejects q_load >= q_int)."""
    return ResonanceSpec(band, omega, v, q_int, q_load, k_center)


def dispersion(spec: ResonanceSpec, k):
    """Linear dispersion omega_J(k) = omega_J + v_J (k - K_J)."""
    return spec.omega + spec.v * (np.asarray(k) - spec.k_center)


def enhancement_in(spec: ResonanceSpec, k, circumference: float):
    """Field enhancement factor of the bus input channel.

    F_(J-)(k) = (1 / sqrt(L)) * gamma_a / (v_J (K_J - k) - i Gamma_bar_J)

    with L the ring circumference. |F|^2 is a Lorentzian in k peaking at K_J
    with value gamma_a^2 / (L Gamma_bar^2) and half width Gamma_bar / v in
    detuning.
    """
    gamma = spec.coupling_constant("actual")
    denom = spec.v * (spec.k_center - np.asarray(k)) - 1j * spec.gamma_bar
    return (gamma / np.sqrt(circumference)) / denom


def enhancement_out(spec: ResonanceSpec, channel: str, k, circumference: float):
    """Field enhancement factor of an output channel (pole in the upper half plane).

    F^(n)_(S+)(k) = (1 / sqrt(L)) * gamma_n / (v (K - k) + i Gamma_bar)
    """
    gamma = spec.coupling_constant(channel)
    denom = spec.v * (spec.k_center - np.asarray(k)) + 1j * spec.gamma_bar
    return (gamma / np.sqrt(circumference)) / denom


def cw_amplitude(power: float, omega: float, v: float) -> float:
    """Classical amplitude replacing the CW pump operators, sqrt(2 pi P / (hbar omega v))."""
    if power < 0:
        raise ValueError("CW power must be non-negative")
    return float(np.sqrt(2.0 * np.pi * power / (HBAR * omega * v)))


@dataclass(frozen=True)
class KGrid:
    """Symmetric wavenumber grid around a band center.

    Attributes
    ----------
    k_center : float
        Band center K_J [1/m].
    detunings : ndarray
        k_i - K_J, length ``n``, symmetric about zero, uniformly spaced.
    delta_k : float
        Grid spacing [1/m].
    """

    k_center: float
    detunings: np.ndarray
    delta_k: float

    @classmethod
    def centered(cls, k_center: float, halfwidth: float, n: int) -> "KGrid":
        if n < 3 or n % 2 == 0:
            raise ValueError(f"grid size must be odd and >= 3, got {n}")
        if halfwidth <= 0:
            raise ValueError("grid halfwidth must be positive")
        det = np.linspace(-halfwidth, halfwidth, n)
        det[n // 2] = 0.0  # exact center point on resonance
        return cls(k_center, det, 2.0 * halfwidth / (n - 1))

    @property
    def n(self) -> int:
        return self.detunings.size

    @property
    def k(self) -> np.ndarray:
        return self.k_center + self.detunings


@dataclass(frozen=True)
class PumpSpec:
    """Drive parameters: CW power plus the pulsed-pump energy and duration."""

    cw_power: float        # P_C [W]
    pulse_energy: float    # U_P [J]
    duration: float        # tau_P [s]
    omega_p: float         # pulsed-pump center frequency [rad/s]

    def __post_init__(self) -> None:
        if self.cw_power < 0:
            raise ValueError("cw_power must be non-negative")
        if self.pulse_energy < 0:
            raise ValueError("pulse_energy must be non-negative")
        if self.duration <= 0 or self.omega_p <= 0:
            raise ValueError("duration and omega_p must be positive")

    @property
    def n_photons(self) -> float:
        """Initial pulsed-pump photon number N_P = U_P / (hbar omega_P)."""
        return self.pulse_energy / (HBAR * self.omega_p)


def initial_pump(pump: PumpSpec, grid: KGrid, v: float) -> np.ndarray:
    """Discretized Gaussian pump envelope with sum |beta_l|^2 = N_P exactly.

    The continuum envelope is
    beta(k) = sqrt(N_P v tau / sqrt(pi)) exp(-(k - K_P)^2 v^2 tau^2 / 2);
    each grid sample is multiplied by sqrt(delta_k) so the discrete norm
    approximates N_P, then rescaled to hit it exactly.

    Raises
    ------
    ValueError
        If the grid truncates more than 1% of the pulse spectrum.
    """
    n_p = pump.n_photons
    x = grid.detunings * v * pump.duration
    envelope = np.sqrt(n_p * v * pump.duration / np.sqrt(np.pi)) * np.exp(-0.5 * x * x)
    beta = np.sqrt(grid.delta_k) * envelope.astype(complex)
    if n_p == 0.0:
        return beta
    norm = float(np.sum(np.abs(beta) ** 2))
    deficit = abs(norm - n_p) / n_p
    if deficit > 1e-2:
        raise ValueError(
            f"pump grid too narrow: discrete norm misses the photon number by "
            f"{deficit:.2e} (> 1e-2); widen the P grid or refine it"
        )
    beta *= np.sqrt(n_p / norm)
    return beta


@dataclass(frozen=True)
class CouplingTensor:
    """Time-separable pair-generation coupling Lambda_(mu nu l)(t).

    The tensor is never materialized. It factors as

        Lambda_(mu nu l)(t) = c * f_mu * f_nu * g_l * exp(-i Omega_(mu nu l) t),
        Omega_(mu nu l) = p_det_l - s_det_mu - s_det_nu,

    where ``f`` holds the conjugated output enhancement factors of the signal
    modes (actual channel block first, then phantom), ``g`` the input
    enhancement factors of the pulsed pump, and the detunings are angular
    frequencies v (k - K) of each mode.

    Attributes carry enough grid metadata for the integrator and the
    observables downstream.
    """

    c: complex                 # scalar prefactor, includes discretization factors [1/s]
    f: np.ndarray              # (2 n_s,) conj output enhancement, dimensionless * sqrt-less
    g: np.ndarray              # (n_p,) pump input enhancement
    s_det: np.ndarray          # (2 n_s,) v_S (k_mu - K_S) [rad/s]
    p_det: np.ndarray          # (n_p,) v_P (k_l - K_P) [rad/s]
    n_s: int                   # signal grid points per channel
    delta_k_s: float
    delta_k_p: float
    v_s: float
    gamma_bar_s: float
    gamma_bar_p: float
    tau_pump: float
    s_grid_det: np.ndarray = field(repr=False)   # (n_s,) k - K_S of one channel block

    @property
    def dim(self) -> int:
        """Total signal mode count (both channels)."""
        return self.f.size

    @property
    def pump_alias_period(self) -> float:
        """Recurrence time 2 pi / (v_P delta_k_P) of the discrete pump field.

        On a finite wavenumber grid the pump envelope is periodic in time with
        this period; integration windows that reach it would see the pulse
        arrive again and generate spurious pairs, so they are rejected.
        """
        return 2.0 * np.pi / (self.p_det[1] - self.p_det[0]) if self.p_det.size > 1 \
            else np.inf

    @property
    def signal_alias_period(self) -> float:
        """Recurrence time 2 pi / (v_S delta_k_S) of discrete signal envelopes."""
        step = self.s_det[1] - self.s_det[0]
        return 2.0 * np.pi / step if self.n_s > 1 else np.inf

    @property
    def actual(self) -> slice:
        """Index block of the bus-channel signal modes."""
        return slice(0, self.n_s)

    @property
    def phantom(self) -> slice:
        """Index block of the phantom-channel signal modes."""
        return slice(self.n_s, 2 * self.n_s)

    def lam(self, mu: int, nu: int, l: int, t: float) -> complex:
        """Single coupling element Lambda_(mu nu l)(t); for tests and toy sampling."""
        omega = self.p_det[l] - self.s_det[mu] - self.s_det[nu]
        return self.c * self.f[mu] * self.f[nu] * self.g[l] * np.exp(-1j * omega * t)

    def dense(self, t: float) -> np.ndarray:
        """Materialized (dim, dim, n_p) tensor at time t. Small grids only."""
        phase = np.exp(-1j * np.subtract.outer(
            self.p_det, np.add.outer(self.s_det, self.s_det)) * t)
        # phase[l, mu, nu] -> reorder to [mu, nu, l]
        core = np.einsum("m,n,l->mnl", self.f, self.f, self.g)
        return self.c * core * np.moveaxis(phase, 0, -1)


def coupling_tensor(s_spec: ResonanceSpec, p_spec: ResonanceSpec, c_spec: ResonanceSpec,
                    s_grid: KGrid, p_grid: KGrid, pump: PumpSpec,
                    gamma_nl: float, radius: float) -> CouplingTensor:
    """Assemble the separable coupling factors from the physical inputs.

    Parameters
    ----------
    s_spec, p_spec, c_spec : ResonanceSpec
        Signal, pulsed-pump and CW-pump bands.
    s_grid, p_grid : KGrid
        Signal and pulsed-pump wavenumber grids.
    pump : PumpSpec
        Drive powers and pulse shape.
    gamma_nl : float
        Effective nonlinear parameter [1/(W m)], non-negative.
    radius : float
        Ring radius [m], positive.
    """
    if radius <= 0:
        raise ValueError("ring radius must be positive")
    if gamma_nl < 0:
        raise ValueError("gamma_nl must be non-negative")
    circumference = 2.0 * np.pi * radius

    f_actual = np.conj(enhancement_out(s_spec, "actual", s_grid.k, circumference))
    f_phantom = np.conj(enhancement_out(s_spec, "phantom", s_grid.k, circumference))
    f = np.concatenate([f_actual, f_phantom])
    g = enhancement_in(p_spec, p_grid.k, circumference)

    amp_cw = cw_amplitude(pump.cw_power, c_spec.omega, c_spec.v)
    f_cw = complex(enhancement_in(c_spec, c_spec.k_center, circumference))
    prefactor = -(HBAR * p_spec.v * c_spec.v * gamma_nl * s_spec.omega * circumference
                  / (4.0 * np.pi ** 2))
    c = prefactor * amp_cw * f_cw * s_grid.delta_k * np.sqrt(p_grid.delta_k)

    s_det = s_spec.v * np.concatenate([s_grid.detunings, s_grid.detunings])
    p_det = p_spec.v * p_grid.detunings
    return CouplingTensor(
        c=complex(c), f=f, g=g, s_det=s_det, p_det=p_det, n_s=s_grid.n,
        delta_k_s=s_grid.delta_k, delta_k_p=p_grid.delta_k, v_s=s_spec.v,
        gamma_bar_s=s_spec.gamma_bar, gamma_bar_p=p_spec.gamma_bar,
        tau_pump=pump.duration, s_grid_det=s_grid.detunings.copy(),
    )


def default_grids(s_spec: ResonanceSpec, p_spec: ResonanceSpec, pump: PumpSpec,
                  n_s: int = 101, n_p: int = 101,
                  s_span_linewidths: float = 6.0,
                  p_span_pulse_factor: float = 6.0) -> tuple[KGrid, KGrid]:
    """Build the default signal and pump grids.

    The signal grid spans +-``s_span_linewidths`` loaded linewidths. The pump
    grid spans +-``p_span_pulse_factor`` pulse bandwidths 1 / (v tau), enough
    to hold the input envelope to machine precision. It is kept no wider:
    widening it at fixed point count coarsens delta_k_P and shortens the
    discrete pump's recurrence time (see
    :attr:`CouplingTensor.pump_alias_period`), which must stay well beyond
    the integration window.
    """
    s_half = s_span_linewidths * s_spec.gamma_bar / s_spec.v
    p_half = p_span_pulse_factor / (p_spec.v * pump.duration)
    return (KGrid.centered(s_spec.k_center, s_half, n_s),
            KGrid.centered(p_spec.k_center, p_half, n_p))
