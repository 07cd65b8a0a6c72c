"""Exact few-mode validator for the Gaussian solver.

Evolves the trilinear pair-generation Hamiltonian with a fully quantum pump,

    H / hbar = sum_(mu nu l) Lambda_(mu nu l) a_mu^dag a_nu^dag b_l + h.c.,

in a truncated number basis, with no Gaussian ansatz. Small instances only
(one or two modes per side): the point is certification, not scale. The
weighted excitation number Q = (1/2) sum n_a + sum n_b commutes with H
exactly, so its drift measures pure integrator error, and the reduced signal
state can be compared against the best moment-matched Gaussian state to
quantify non-Gaussian corrections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

MAX_DIMENSION = 200_000
COHERENT_TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class FockConfig:
    """Few-mode instance: couplings, cutoffs and the initial pump amplitude.

    Couplings are time independent (band-center values); ``lam`` has shape
    (m_a, m_a, m_b) and must be symmetric in its first two indices. Cutoffs
    are the highest retained photon number per mode.
    """

    lam: np.ndarray
    cutoffs_a: tuple[int, ...]
    cutoffs_b: tuple[int, ...]
    beta0: tuple[complex, ...]

    def __post_init__(self):
        lam = np.atleast_3d(np.asarray(self.lam, dtype=complex))
        object.__setattr__(self, "lam", lam)
        m_a, m_a2, m_b = lam.shape
        if m_a != m_a2 or not np.allclose(lam, lam.transpose(1, 0, 2)):
            raise ValueError("lam must be symmetric in its signal indices")
        if m_a not in (1, 2) or m_b not in (1, 2):
            raise ValueError("the oracle handles one or two modes per side")
        if len(self.cutoffs_a) != m_a or len(self.cutoffs_b) != m_b:
            raise ValueError("one cutoff per mode required")
        if any(c < 1 for c in self.cutoffs_a + self.cutoffs_b):
            raise ValueError("cutoffs must be at least 1")
        if len(self.beta0) != m_b:
            raise ValueError("one initial amplitude per pump mode required")
        if self.dimension > MAX_DIMENSION:
            raise ValueError(
                f"basis dimension {self.dimension} exceeds {MAX_DIMENSION}")

    @property
    def m_a(self) -> int:
        return self.lam.shape[0]

    @property
    def m_b(self) -> int:
        return self.lam.shape[2]

    @property
    def mode_dims(self) -> tuple[int, ...]:
        """Per-mode basis sizes, signal modes first."""
        return tuple(c + 1 for c in self.cutoffs_a) + \
            tuple(c + 1 for c in self.cutoffs_b)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.mode_dims))


def _lowering(dim: int) -> scipy.sparse.csr_matrix:
    return scipy.sparse.diags(np.sqrt(np.arange(1.0, dim)), 1, format="csr")


def _embed(op: scipy.sparse.spmatrix, mode: int,
           dims: tuple[int, ...]) -> scipy.sparse.csr_matrix:
    """Lift a single-mode operator to the product basis."""
    mat = scipy.sparse.identity(1, format="csr")
    for i, d in enumerate(dims):
        factor = op if i == mode else scipy.sparse.identity(d, format="csr")
        mat = scipy.sparse.kron(mat, factor, format="csr")
    return mat


def mode_operators(config: FockConfig) -> tuple[list, list]:
    """Lowering operators (signal list, pump list) on the product basis."""
    dims = config.mode_dims
    a_ops = [_embed(_lowering(dims[i]), i, dims) for i in range(config.m_a)]
    b_ops = [_embed(_lowering(dims[config.m_a + j]), config.m_a + j, dims)
             for j in range(config.m_b)]
    return a_ops, b_ops


def build_hamiltonian(config: FockConfig) -> scipy.sparse.csr_matrix:
    """Sparse Hermitian generator H / hbar in frequency units."""
    a_ops, b_ops = mode_operators(config)
    dim = config.dimension
    h = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    for mu in range(config.m_a):
        for nu in range(config.m_a):
            for l in range(config.m_b):
                coeff = config.lam[mu, nu, l]
                if coeff == 0:
                    continue
                h = h + coeff * (a_ops[mu].conj().T @ a_ops[nu].conj().T @ b_ops[l])
    return h + h.conj().T


def q_operator(config: FockConfig) -> scipy.sparse.csr_matrix:
    """Conserved weighted excitation number (1/2) sum n_a + sum n_b."""
    a_ops, b_ops = mode_operators(config)
    dim = config.dimension
    q = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    for a in a_ops:
        q = q + 0.5 * (a.conj().T @ a)
    for b in b_ops:
        q = q + b.conj().T @ b
    return q


def coherent_vector(amplitude: complex, dim: int) -> np.ndarray:
    """Truncated coherent state; raises if the cutoff chops real weight."""
    n = np.arange(dim)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, dim))]))
    with np.errstate(divide="ignore"):
        log_mag = n * np.log(abs(amplitude)) if amplitude != 0 else \
            np.where(n == 0, 0.0, -np.inf)
    vec = np.exp(log_mag - 0.5 * log_fact - 0.5 * abs(amplitude) ** 2) * \
        np.exp(1j * n * np.angle(amplitude))
    deficit = abs(1.0 - float(np.vdot(vec, vec).real))
    if deficit > COHERENT_TRUNCATION_TOL:
        raise ValueError(
            f"coherent-state truncation error {deficit:.2e} exceeds "
            f"{COHERENT_TRUNCATION_TOL}; raise the pump cutoff")
    return vec


def initial_state(config: FockConfig) -> np.ndarray:
    """Vacuum signal modes, coherent pump modes, as one product vector."""
    dims = config.mode_dims
    vec = np.ones(1, dtype=complex)
    for i in range(config.m_a):
        ground = np.zeros(dims[i], dtype=complex)
        ground[0] = 1.0
        vec = np.kron(vec, ground)
    for j in range(config.m_b):
        vec = np.kron(vec, coherent_vector(config.beta0[j], dims[config.m_a + j]))
    return vec / np.linalg.norm(vec)


@dataclass
class FockResult:
    """Exact-evolution outcome and its diagnostic trajectory."""

    config: FockConfig
    psi: np.ndarray
    times: np.ndarray
    n_a: np.ndarray            # summed over signal modes
    n_b: np.ndarray            # summed over pump modes
    q_drift: float             # max relative drift of <Q>
    norm_drift: float
    step: float

    @property
    def depletion(self) -> float:
        """Fractional pump loss (n_b(0) - n_b(end)) / n_b(0)."""
        start = self.n_b[0]
        return float((start - self.n_b[-1]) / start) if start > 0 else 0.0


def default_fock_step(config: FockConfig, divisor: float = 200.0) -> float:
    """Step sized against the largest ladder matrix element of H.

    Mirrors the fastest-timescale/200 policy of the Gaussian integrator,
    using max|Lambda| (cutoff_a + 2) sqrt(cutoff_b + 1) as the rate bound.
    """
    rate = float(np.max(np.abs(config.lam))) * \
        (max(config.cutoffs_a) + 2.0) * np.sqrt(max(config.cutoffs_b) + 1.0)
    if rate <= 0.0:
        raise ValueError("zero coupling has no intrinsic timescale; pass step")
    return 1.0 / (divisor * rate)


def evolve_fock(config: FockConfig, t_end: float, step: float | None = None,
                sample_stride: int = 50) -> FockResult:
    """RK4 propagation of i d|psi>/dt = (H/hbar)|psi> from the product input.

    Norm is monitored (not renormalized); drift beyond 1e-6 aborts, and the
    observed maximum is reported. <Q> drift is pure integrator error since
    [Q, H] = 0 exactly.
    """
    if step is None:
        step = default_fock_step(config)
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    h_op = build_hamiltonian(config)
    q_op = q_operator(config)
    a_ops, b_ops = mode_operators(config)
    num_a = sum((a.conj().T @ a for a in a_ops),
                scipy.sparse.csr_matrix(h_op.shape, dtype=complex))
    num_b = sum((b.conj().T @ b for b in b_ops),
                scipy.sparse.csr_matrix(h_op.shape, dtype=complex))

    psi = initial_state(config)
    n_steps = int(np.ceil(t_end / step))

    def expect(op, state):
        return float(np.vdot(state, op @ state).real)

    q0 = expect(q_op, psi)
    q_scale = abs(q0) if q0 != 0 else 1.0
    times = [0.0]
    n_a = [expect(num_a, psi)]
    n_b = [expect(num_b, psi)]
    q_drift = 0.0
    norm_drift = 0.0

    for i in range(n_steps):
        k1 = -1j * (h_op @ psi)
        k2 = -1j * (h_op @ (psi + 0.5 * step * k1))
        k3 = -1j * (h_op @ (psi + 0.5 * step * k2))
        k4 = -1j * (h_op @ (psi + step * k3))
        psi = psi + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (i + 1) % sample_stride == 0 or i + 1 == n_steps:
            norm_drift = max(norm_drift, abs(1.0 - float(np.vdot(psi, psi).real)))
            if norm_drift > 1e-6:
                raise RuntimeError(
                    f"norm drift {norm_drift:.2e} exceeds 1e-6; reduce the step")
            q_drift = max(q_drift, abs(expect(q_op, psi) - q0) / q_scale)
            times.append((i + 1) * step)
            n_a.append(expect(num_a, psi))
            n_b.append(expect(num_b, psi))

    return FockResult(
        config=config, psi=psi, times=np.asarray(times),
        n_a=np.asarray(n_a), n_b=np.asarray(n_b),
        q_drift=q_drift, norm_drift=norm_drift, step=step,
    )


def reduced_signal_state(result: FockResult) -> np.ndarray:
    """Density matrix of the signal side, pump modes traced out."""
    dims = result.config.mode_dims
    da = int(np.prod(dims[:result.config.m_a]))
    db = int(np.prod(dims[result.config.m_a:]))
    mat = result.psi.reshape(da, db)
    return mat @ mat.conj().T


def squeezed_thermal_state(n: float, m: complex, dim: int) -> np.ndarray:
    """Gaussian (squeezed thermal) state with moments <a†a> = n, <aa> = m.

    Solves A = n + 1/2 = (n_th + 1/2) cosh 2r, B = |m| = (n_th + 1/2) sinh 2r
    for the thermal occupation and squeeze parameter, with the squeeze phase
    from the sign convention <aa> = -e^(i theta) sinh r cosh r (2 n_th + 1).
    """
    a_big = n + 0.5
    b_big = abs(m)
    if b_big >= a_big:
        # physical states satisfy A^2 - B^2 >= 1/4; tolerate roundoff at the edge
        b_big = min(b_big, a_big * (1.0 - 1e-12))
    n_th = np.sqrt(a_big ** 2 - b_big ** 2) - 0.5
    n_th = max(n_th, 0.0)
    r = 0.25 * np.log((a_big + b_big) / (a_big - b_big))
    xi = r * (-m / b_big) if b_big > 0 else 0.0

    lower = _lowering(dim).toarray()
    gen = 0.5 * (np.conj(xi) * (lower @ lower)
                 - xi * (lower.conj().T @ lower.conj().T))
    squeeze = scipy.linalg.expm(gen)
    ratio = n_th / (n_th + 1.0)
    if ratio > 0:
        weights = ratio ** np.arange(dim)
        weights = weights / weights.sum()   # truncated geometric, renormalized
    else:
        weights = np.zeros(dim)
        weights[0] = 1.0
    return squeeze @ np.diag(weights) @ squeeze.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped PSD."""
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    sqrt_rho = (vecs * np.sqrt(vals)) @ vecs.conj().T
    inner = sqrt_rho @ sigma @ sqrt_rho
    eig = np.linalg.eigvalsh(inner)
    return float(np.sum(np.sqrt(np.clip(eig, 0.0, None))) ** 2)


def gaussianity_gap(result: FockResult) -> dict:
    """Compare the exact reduced signal state to its best Gaussian fit.

    Only single-signal-mode instances are fit (the squeezed-thermal family
    is single mode); the exact evolution itself has no such restriction.
    Returns a plain report dict ready for JSON export.
    """
    if result.config.m_a != 1:
        raise ValueError("the Gaussian fit handles a single signal mode")
    rho = reduced_signal_state(result)
    dim = rho.shape[0]
    lower = _lowering(dim).toarray()
    n_exact = float(np.real(np.trace(rho @ lower.conj().T @ lower)))
    m_exact = complex(np.trace(rho @ lower @ lower))
    sigma = squeezed_thermal_state(n_exact, m_exact, dim)
    return {
        "dim": result.config.dimension,
        "depletion": result.depletion,
        "n_a_exact": n_exact,
        "fidelity": fidelity(rho, sigma),
        "Q_drift": result.q_drift,
    }


def scalar_tensor(lam: complex, t_scale: float):
    """Wrap one constant coupling so the Gaussian solver runs the same toy."""
    from .ring import CouplingTensor
    return CouplingTensor(
        c=complex(lam), f=np.ones(1, dtype=complex), g=np.ones(1, dtype=complex),
        s_det=np.zeros(1), p_det=np.zeros(1), n_s=1,
        delta_k_s=1.0, delta_k_p=1.0, v_s=1.0,
        gamma_bar_s=1.0 / t_scale, gamma_bar_p=1.0 / t_scale,
        tau_pump=t_scale, s_grid_det=np.zeros(1))


def oracle_report(config: FockConfig, t_end: float,
                  step: float | None = None) -> dict:
    """Exact-vs-Gaussian certification report for a 1+1 mode instance.

    Runs the truncated exact evolution and the Gaussian solver on identical
    scalar inputs over the same window and step, and merges the comparison
    into the standard report layout.
    """
    from .dynamics import evolve
    if config.m_a != 1 or config.m_b != 1:
        raise ValueError("the certification report compares 1+1 mode instances")
    exact = evolve_fock(config, t_end, step)
    report = gaussianity_gap(exact)
    tensor = scalar_tensor(complex(config.lam[0, 0, 0]), t_end)
    gauss = evolve(tensor, np.array([config.beta0[0]], dtype=complex),
                   t_start=0.0, t_end=t_end, step=exact.step,
                   record_theta_a=False, max_extensions=0)
    return {
        "dim": report["dim"],
        "depletion": report["depletion"],
        "n_a_exact": report["n_a_exact"],
        "n_a_gaussian": gauss.state.photon_number,
        "fidelity": report["fidelity"],
        "Q_drift": report["Q_drift"],
    }
