"""Time evolution of the Gaussian parameters (V, W, beta, theta_b).

The equations of motion are

    dV/dt = -2i zeta(t) W*(t)
    dW/dt = -2i zeta(t) V*(t)
    i dbeta_l/dt = gamma_l(t)
    dtheta_b/dt = Re sum_l gamma_l beta_l^*

with zeta_(mu nu) = sum_l Lambda_(mu nu l) beta_l (pair generation) and
gamma_l = sum_(mu nu) Lambda^*_(mu nu l) [V W^T]_(mu nu) (pump depletion),
integrated from V = identity, W = 0, beta = beta_in with a fixed-step
classical Runge-Kutta scheme.

Because the coupling is separable, zeta is rank one at every instant,
zeta(t) = S(t) h(t) h(t)^T with h_mu = f_mu e^(i s_det_mu t) and
S(t) = c sum_l g_l beta_l e^(-i p_det_l t). The integrator exploits this: all
stage derivatives are rank-one outer products, so one step costs a handful of
matrix-vector products against the step's base matrices plus two rank-four
updates, never a dense matrix-matrix product. The arithmetic is exactly that
of the textbook RK4 step, only factored.

Symplectic residuals and the conserved excitation number are monitored at a
configurable sample stride and never corrected for: drift is an error signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ring import CouplingTensor
from . import algebra

TRAJECTORY_HEADER = ("t_s", "frobW", "pump_photons", "Q", "sympl_res", "symm_res")


@dataclass
class GaussianState:
    """Snapshot of the Gaussian solution at time t."""

    t: float
    v: np.ndarray          # (dim, dim)
    w: np.ndarray          # (dim, dim)
    beta: np.ndarray       # (n_p,)
    theta_b: float = 0.0

    @property
    def photon_number(self) -> float:
        return float(np.vdot(self.w, self.w).real)

    @property
    def pump_photons(self) -> float:
        return float(np.vdot(self.beta, self.beta).real)

    def conserved_q(self) -> float:
        """Weighted excitation number <Q> = tr(W^dagger W) / 2 + beta^dagger beta."""
        return 0.5 * self.photon_number + self.pump_photons

    def invariant_residuals(self) -> tuple[float, float]:
        """Max-norm residuals of V V^dagger - W W^dagger = 1 and V W^T = (V W^T)^T."""
        dim = self.v.shape[0]
        comm = self.v @ self.v.conj().T - self.w @ self.w.conj().T - np.eye(dim)
        sym = self.v @ self.w.T
        sym = sym - sym.T
        return float(np.max(np.abs(comm))), float(np.max(np.abs(sym)))


def pump_sum(tensor: CouplingTensor, beta: np.ndarray, t: float) -> complex:
    """Scalar pump factor S(t) = c sum_l g_l beta_l e^(-i p_det_l t)."""
    return complex(tensor.c * np.dot(tensor.g, beta * np.exp(-1j * tensor.p_det * t)))


def mode_vector(tensor: CouplingTensor, t: float) -> np.ndarray:
    """Signal-side factor h(t), with zeta(t) = S(t) h h^T."""
    return tensor.f * np.exp(1j * tensor.s_det * t)


def compute_zeta(tensor: CouplingTensor, beta: np.ndarray, t: float) -> np.ndarray:
    """Materialized pair-generation matrix zeta(t); O(dim^2), symmetric, rank one."""
    h = mode_vector(tensor, t)
    return pump_sum(tensor, beta, t) * np.outer(h, h)


def compute_gamma(tensor: CouplingTensor, v: np.ndarray, w: np.ndarray,
                  t: float) -> np.ndarray:
    """Pump depletion vector gamma_l = sum Lambda^*_(mu nu l) [V W^T]_(mu nu).

    Uses the separable form: the double contraction collapses to the product
    of two matrix-vector contractions with conj(h), O(dim^2) per call.
    """
    hbar = np.conj(mode_vector(tensor, t))
    trace = np.dot(hbar @ v, hbar @ w)
    return np.conj(tensor.c) * np.conj(tensor.g) * np.exp(1j * tensor.p_det * t) * trace


def derivative(state: GaussianState, tensor: CouplingTensor
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Right-hand side (dV/dt, dW/dt, dbeta/dt, dtheta_b/dt) at the state's time."""
    zeta = compute_zeta(tensor, state.beta, state.t)
    gamma = compute_gamma(tensor, state.v, state.w, state.t)
    dv = -2j * zeta @ np.conj(state.w)
    dw = -2j * zeta @ np.conj(state.v)
    dbeta = -1j * gamma
    dtheta = float(np.real(np.dot(gamma, np.conj(state.beta))))
    return dv, dw, dbeta, dtheta


@dataclass
class EvolveResult:
    """Final state plus trajectory diagnostics from one integration run."""

    state: GaussianState
    step: float
    n_steps: int
    trajectory: dict[str, np.ndarray]
    theta_a: float
    max_sympl_res: float
    max_symm_res: float
    max_q_drift: float          # relative to the initial <Q>
    zeta_tail_fraction: float   # integral of |S| over the trailing 5% / total
    window: tuple[float, float]
    extended: int = 0           # number of automatic window extensions

    def trajectory_rows(self) -> np.ndarray:
        """Trajectory as a (n_samples, 6) float array in the CSV column order."""
        return np.column_stack([self.trajectory[k] for k in TRAJECTORY_HEADER])


def default_window(tensor: CouplingTensor) -> tuple[float, float]:
    """Integration window [-6 tau_P, +6 tau_P + 8 / Gamma_bar_S]."""
    return (-6.0 * tensor.tau_pump,
            6.0 * tensor.tau_pump + 8.0 / tensor.gamma_bar_s)


def default_step(tensor: CouplingTensor, divisor: float = 200.0) -> float:
    """Fixed step h = min(tau_P, 1/Gamma_bar_S, 1/Gamma_bar_P) / divisor."""
    return min(tensor.tau_pump, 1.0 / tensor.gamma_bar_s,
               1.0 / tensor.gamma_bar_p) / divisor


def _rk4_step(tensor: CouplingTensor, t: float, h: float,
              v: np.ndarray, w: np.ndarray, beta: np.ndarray, theta: float,
              dv_buf: np.ndarray, dw_buf: np.ndarray) -> float:
    """One classical RK4 step, in place on (v, w, beta); returns updated theta.

    Stage derivatives of V and W are rank-one (outer(a_i, b_i)); stage states
    are the step's base matrices plus one rank-one correction, so every
    matrix-vector product against a stage state costs O(dim) on top of the
    base products. The final update is a single rank-four correction.
    """
    c = tensor.c
    g = tensor.g
    cg_conj = np.conj(c) * np.conj(g)
    t2 = t + 0.5 * h
    t4 = t + h

    h1 = tensor.f * np.exp(1j * tensor.s_det * t)
    h2 = tensor.f * np.exp(1j * tensor.s_det * t2)
    h4 = tensor.f * np.exp(1j * tensor.s_det * t4)
    p1 = np.exp(-1j * tensor.p_det * t)
    p2 = np.exp(-1j * tensor.p_det * t2)
    p4 = np.exp(-1j * tensor.p_det * t4)

    hc = np.vstack([np.conj(h1), np.conj(h2), np.conj(h4)])   # (3, dim)
    pv = hc @ v                                               # (3, dim)
    pw = hc @ w

    # stage 1 at t
    s1 = c * np.dot(g, beta * p1)
    a1 = (-2j * s1) * h1
    b1v = np.conj(pw[0])
    b1w = np.conj(pv[0])
    gam = cg_conj * np.conj(p1) * np.dot(pv[0], pw[0])
    k1b = -1j * gam
    k1t = float(np.real(np.dot(gam, np.conj(beta))))

    # stage 2 at t + h/2, state base + (h/2) * k1
    beta_s = beta + (0.5 * h) * k1b
    s2 = c * np.dot(g, beta_s * p2)
    corr = (0.5 * h) * np.dot(hc[1], a1)
    pv_s = pv[1] + corr * b1v
    pw_s = pw[1] + corr * b1w
    a2 = (-2j * s2) * h2
    b2v = np.conj(pw_s)
    b2w = np.conj(pv_s)
    gam = cg_conj * np.conj(p2) * np.dot(pv_s, pw_s)
    k2b = -1j * gam
    k2t = float(np.real(np.dot(gam, np.conj(beta_s))))

    # stage 3 at t + h/2, state base + (h/2) * k2
    beta_s = beta + (0.5 * h) * k2b
    s3 = c * np.dot(g, beta_s * p2)
    corr = (0.5 * h) * np.dot(hc[1], a2)
    pv_s = pv[1] + corr * b2v
    pw_s = pw[1] + corr * b2w
    a3 = (-2j * s3) * h2
    b3v = np.conj(pw_s)
    b3w = np.conj(pv_s)
    gam = cg_conj * np.conj(p2) * np.dot(pv_s, pw_s)
    k3b = -1j * gam
    k3t = float(np.real(np.dot(gam, np.conj(beta_s))))

    # stage 4 at t + h, state base + h * k3
    beta_s = beta + h * k3b
    s4 = c * np.dot(g, beta_s * p4)
    corr = h * np.dot(hc[2], a3)
    pv_s = pv[2] + corr * b3v
    pw_s = pw[2] + corr * b3w
    a4 = (-2j * s4) * h4
    b4v = np.conj(pw_s)
    b4w = np.conj(pv_s)
    gam = cg_conj * np.conj(p4) * np.dot(pv_s, pw_s)
    k4b = -1j * gam
    k4t = float(np.real(np.dot(gam, np.conj(beta_s))))

    # combine: V += sum_i coeff_i outer(a_i, b_iv) as one rank-4 product
    left = np.empty((v.shape[0], 4), dtype=complex)
    left[:, 0] = (h / 6.0) * a1
    left[:, 1] = (h / 3.0) * a2
    left[:, 2] = (h / 3.0) * a3
    left[:, 3] = (h / 6.0) * a4
    np.matmul(left, np.vstack([b1v, b2v, b3v, b4v]), out=dv_buf)
    np.matmul(left, np.vstack([b1w, b2w, b3w, b4w]), out=dw_buf)
    v += dv_buf
    w += dw_buf
    beta += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return theta + (h / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)


def rk4_step_reference(tensor: CouplingTensor, t: float, h: float,
                       state: GaussianState) -> GaussianState:
    """Plain dense RK4 step (materializes zeta); the oracle for the fast path."""
    def rhs(tt, v, w, beta):
        s = GaussianState(tt, v, w, beta)
        return derivative(s, tensor)

    v, w, b = state.v, state.w, state.beta
    k1 = rhs(t, v, w, b)
    k2 = rhs(t + h / 2, v + h / 2 * k1[0], w + h / 2 * k1[1], b + h / 2 * k1[2])
    k3 = rhs(t + h / 2, v + h / 2 * k2[0], w + h / 2 * k2[1], b + h / 2 * k2[2])
    k4 = rhs(t + h, v + h * k3[0], w + h * k3[1], b + h * k3[2])
    return GaussianState(
        t=t + h,
        v=v + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        w=w + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        beta=b + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        theta_b=state.theta_b + h / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
    )


def evolve(tensor: CouplingTensor, beta_in: np.ndarray,
           t_start: float | None = None, t_end: float | None = None,
           step: float | None = None, *, step_divisor: float = 200.0,
           sample_stride: int = 100, record_theta_a: bool = True,
           tail_tolerance: float = 1e-4, max_extensions: int = 4
           ) -> EvolveResult:
    """Integrate the Gaussian equations of motion across the pump pulse.

    Parameters
    ----------
    tensor : CouplingTensor
        Separable coupling factors and grid metadata.
    beta_in : ndarray
        Initial pump amplitudes; its norm squared is the pump photon number.
    t_start, t_end : float, optional
        Integration window; defaults to [-6 tau_P, 6 tau_P + 8 / Gamma_bar_S].
    step : float, optional
        Fixed RK4 step; defaults to min(tau_P, 1/Gamma_bar_S, 1/Gamma_bar_P)
        divided by ``step_divisor``.
    sample_stride : int
        Trajectory rows, invariant checks and the theta_a integrand are
        recorded every this many steps (and at the final step).
    record_theta_a : bool
        Compute the squeezing-phase integrand at sample points. Costs one
        eigendecomposition per sample; disable for quick scans.
    tail_tolerance : float
        Window adequacy: the integral of ||zeta||_F over the trailing 5% of
        the window must stay below this fraction of the total, otherwise the
        window is extended by 4 / Gamma_bar_S and the run continues, at most
        ``max_extensions`` times.

    Returns
    -------
    EvolveResult
        Final state, sampled trajectory, theta_a, residual maxima and window
        diagnostics.
    """
    if t_start is None or t_end is None:
        w0, w1 = default_window(tensor)
        t_start = w0 if t_start is None else t_start
        t_end = w1 if t_end is None else t_end
    if step is None:
        step = default_step(tensor, step_divisor)
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    alias = tensor.pump_alias_period
    if t_end - t_start >= alias:
        raise ValueError(
            f"window span {t_end - t_start:.3e} s reaches the discrete pump's "
            f"recurrence time {alias:.3e} s; the pulse would spuriously re-enter. "
            "Refine the pump grid (more points over the same span) or shorten "
            "the window.")

    dim = tensor.dim
    v = np.eye(dim, dtype=complex)
    w = np.zeros((dim, dim), dtype=complex)
    beta = np.asarray(beta_in, dtype=complex).copy()
    theta = 0.0
    dv_buf = np.empty((dim, dim), dtype=complex)
    dw_buf = np.empty((dim, dim), dtype=complex)

    q0 = 0.5 * float(np.vdot(w, w).real) + float(np.vdot(beta, beta).real)
    q_scale = q0 if q0 > 0.0 else 1.0

    rows: dict[str, list[float]] = {k: [] for k in TRAJECTORY_HEADER}
    th_times: list[float] = []
    th_vals: list[float] = []
    max_sympl = 0.0
    max_symm = 0.0
    max_qdrift = 0.0
    abs_s_total = 0.0          # running integral of |S(t)| dt (step-sampled)
    abs_s_history: list[float] = []

    def sample(t_now: float) -> None:
        nonlocal max_sympl, max_symm, max_qdrift
        state = GaussianState(t_now, v, w, beta, theta)
        sympl, symm = state.invariant_residuals()
        q = state.conserved_q()
        qd = abs(q - q0) / q_scale
        max_sympl = max(max_sympl, sympl)
        max_symm = max(max_symm, symm)
        max_qdrift = max(max_qdrift, qd)
        rows["t_s"].append(t_now)
        rows["frobW"].append(np.sqrt(state.photon_number))
        rows["pump_photons"].append(state.pump_photons)
        rows["Q"].append(q)
        rows["sympl_res"].append(sympl)
        rows["symm_res"].append(symm)
        if record_theta_a:
            s_now = pump_sum(tensor, beta, t_now)
            h_now = mode_vector(tensor, t_now)
            th_times.append(t_now)
            th_vals.append(algebra.phase_integrand(v, w, s_now, h_now))

    t = t_start
    n_total = int(np.ceil((t_end - t_start) / step))
    sample(t)
    extensions = 0
    i = 0
    while i < n_total:
        abs_s_total += abs(pump_sum(tensor, beta, t)) * step
        abs_s_history.append(abs_s_total)
        theta = _rk4_step(tensor, t, step, v, w, beta, theta, dv_buf, dw_buf)
        t = t_start + (i + 1) * step
        i += 1
        if i % sample_stride == 0 or i == n_total:
            sample(t)
        if i == n_total:
            # window adequacy: |S| integral over the trailing 5% of the window
            tail_start = int(np.floor(0.95 * len(abs_s_history)))
            tail = abs_s_total - abs_s_history[max(tail_start - 1, 0)]
            frac = tail / abs_s_total if abs_s_total > 0.0 else 0.0
            if frac >= tail_tolerance and extensions < max_extensions:
                grow = 4.0 / tensor.gamma_bar_s
                grown_end = t_start + (n_total + int(np.ceil(grow / step))) * step
                if grown_end - t_start < alias:
                    n_total += int(np.ceil(grow / step))
                    t_end = grown_end
                    extensions += 1

    tail_start = int(np.floor(0.95 * len(abs_s_history)))
    tail = abs_s_total - abs_s_history[max(tail_start - 1, 0)]
    tail_frac = tail / abs_s_total if abs_s_total > 0.0 else 0.0

    theta_a = algebra.theta_a_from_samples(np.asarray(th_times), np.asarray(th_vals)) \
        if record_theta_a else 0.0
    trajectory = {k: np.asarray(vals) for k, vals in rows.items()}
    return EvolveResult(
        state=GaussianState(t, v, w, beta, theta),
        step=step, n_steps=i, trajectory=trajectory, theta_a=theta_a,
        max_sympl_res=max_sympl, max_symm_res=max_symm, max_q_drift=max_qdrift,
        zeta_tail_fraction=tail_frac, window=(t_start, t_end),
        extended=extensions,
    )


def first_order(tensor: CouplingTensor, beta_in: np.ndarray,
                t_start: float | None = None, t_end: float | None = None,
                chunk: int = 8) -> np.ndarray:
    """First-order (single-commutator) solution W = -2i * integral of zeta dt.

    The pump is frozen at beta_in and V stays the identity, so the window
    integral factorizes per pump mode and is evaluated in closed form:

        W_(mu nu) = -2i c f_mu f_nu sum_l g_l beta_l E(Omega_(mu nu l)),
        E(Omega) = T e^(-i Omega t_mid) sinc(Omega T / 2),   T = t_end - t_start.

    Exact in time (no quadrature error), so the first-order branch is
    unaffected by integrator step choices. Returns W; the squeezing matrix of
    this approximation is W itself.
    """
    if t_start is None or t_end is None:
        w0, w1 = default_window(tensor)
        t_start = w0 if t_start is None else t_start
        t_end = w1 if t_end is None else t_end
    if t_end - t_start >= tensor.pump_alias_period:
        raise ValueError(
            "window span reaches the discrete pump's recurrence time; refine "
            "the pump grid or shorten the window")
    span = t_end - t_start
    mid = 0.5 * (t_start + t_end)
    pair_det = np.add.outer(tensor.s_det, tensor.s_det)   # (dim, dim)
    acc = np.zeros(pair_det.shape, dtype=complex)
    weights = tensor.g * np.asarray(beta_in, dtype=complex)
    for lo in range(0, tensor.p_det.size, chunk):
        hi = min(lo + chunk, tensor.p_det.size)
        omega = tensor.p_det[lo:hi, None, None] - pair_det[None, :, :]
        window = span * np.exp(-1j * omega * mid) * np.sinc(omega * span / (2.0 * np.pi))
        acc += np.tensordot(weights[lo:hi], window, axes=1)
    return -2j * tensor.c * np.outer(tensor.f, tensor.f) * acc


def first_order_quadrature(tensor: CouplingTensor, beta_in: np.ndarray,
                           t_start: float, t_end: float, n: int = 4001) -> np.ndarray:
    """Simpson-rule time quadrature of -2i zeta(t); cross-check for first_order."""
    if n % 2 == 0:
        n += 1
    times = np.linspace(t_start, t_end, n)
    h = times[1] - times[0]
    acc = np.zeros((tensor.dim, tensor.dim), dtype=complex)
    coeff = np.ones(n)
    coeff[1:-1:2] = 4.0
    coeff[2:-1:2] = 2.0
    for t, ci in zip(times, coeff):
        hv = mode_vector(tensor, t)
        acc += (ci * pump_sum(tensor, beta_in, t)) * np.outer(hv, hv)
    return -2j * (h / 3.0) * acc
