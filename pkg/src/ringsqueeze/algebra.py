"""Matrix-function layer for the Gaussian solution.

Everything here is pure linear algebra on the Bogoliubov pair (V, W):

* polar decomposition V = cosh(u) e^(i phi) with cosh(u) Hermitian positive
  definite and e^(i phi) unitary,
* extraction of the complex symmetric squeezing matrix J and the rotation
  generator phi,
* the accumulated squeezing phase integrand (the trace against tanh(u)),
* Takagi factorization J = U diag(lambda) U^T and the Schmidt spectrum.

The decomposition identities used throughout:

    V = cosh(u) e^(i phi),      W = sinh(u) e^(i alpha) e^(-i phi^T),
    J = u e^(i alpha) = K^(-1) W e^(i phi^T),   K = sinh(u) u^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

# Below this squeeze parameter a mode is treated as unsqueezed; sinh(r)/r and
# tanh(r)/r are replaced by their limit value 1.
ZERO_MODE_THRESHOLD = 1e-8


@dataclass(frozen=True)
class PolarParts:
    """Polar factors of V, with the eigensystem of the Hermitian part.

    Attributes
    ----------
    hermitian : ndarray
        H = cosh(u), Hermitian positive definite.
    unitary : ndarray
        P = e^(i phi) with V = H P.
    basis : ndarray
        Unitary eigenbasis F of H (columns).
    s : ndarray
        Eigenvalues of H, clamped to s_i >= 1.
    r : ndarray
        Non-negative squeeze parameters arccosh(s_i).
    """

    hermitian: np.ndarray
    unitary: np.ndarray
    basis: np.ndarray
    s: np.ndarray
    r: np.ndarray


def polar_decompose(v: np.ndarray) -> PolarParts:
    """Polar decomposition V = H P via the eigensystem of V V^dagger.

    Eigenvalues of V V^dagger are s_i^2 with s_i = cosh(r_i) >= 1 for any
    valid Bogoliubov V; values below 1 - 1e-6 indicate a corrupted state and
    raise, smaller dips are clamped to exactly 1 before arccosh.
    """
    v = np.asarray(v, dtype=complex)
    gram = v @ v.conj().T
    eigval, basis = np.linalg.eigh(gram)
    s = np.sqrt(np.maximum(eigval, 0.0))
    if np.any(s < 1.0 - 1e-6):
        raise ValueError(
            f"polar decomposition: smallest singular value {s.min():.3e} is below 1; "
            "upstream symplectic state is corrupted"
        )
    s = np.maximum(s, 1.0)
    hermitian = (basis * s) @ basis.conj().T
    inv = (basis * (1.0 / s)) @ basis.conj().T
    unitary = inv @ v
    return PolarParts(hermitian=hermitian, unitary=unitary, basis=basis,
                      s=s, r=np.arccosh(s))


@dataclass(frozen=True)
class SqueezeDecomp:
    """Squeezing matrix with its Takagi factorization and Schmidt spectrum.

    ``takagi_values`` are sorted descending; ``schmidt_weights`` follow the
    photon-number convention p_i = sinh^2(lambda_i) / sum_j sinh^2(lambda_j)
    unless built with ``weighting="amplitude"`` (p_i from lambda_i^2).
    """

    j: np.ndarray
    takagi_values: np.ndarray
    takagi_basis: np.ndarray
    schmidt_weights: np.ndarray
    schmidt_number: float
    weighting: str


def takagi(j: np.ndarray, rounding: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Takagi factorization J = U diag(lambda) U^T of a complex symmetric matrix.

    Based on the SVD, with a block phase correction that stays stable when
    singular values are degenerate: for each group of (nearly) equal singular
    values the unitary is fixed by the matrix square root of the corresponding
    block of V^T W, V and W being the SVD factors.

    Returns
    -------
    values : ndarray
        Non-negative Takagi values, sorted descending (the singular values).
    u : ndarray
        Unitary with J = u diag(values) u^T.
    """
    j = np.asarray(j, dtype=complex)
    sv_left, values, right_h = np.linalg.svd(j)
    right = right_h.conj().T

    # group indices by rounded singular value (degenerate blocks move together)
    groups: dict[float, list[int]] = {}
    for idx, value in enumerate(values):
        groups.setdefault(round(float(value), rounding), []).append(idx)

    blocks = []
    order = []
    for indices in groups.values():
        z = sv_left[:, indices].T @ right[:, indices]
        blocks.append(scipy.linalg.sqrtm(z))
        order.extend(indices)
    # SVD returns descending order and groups preserve first appearance, so
    # `order` is already 0..n-1; the block diagonal lines up with `values`.
    q = scipy.linalg.block_diag(*blocks)
    u = sv_left @ q.conj()
    return values, u


def squeeze_decomp_from_j(j: np.ndarray,
                          weighting: str = "photon") -> SqueezeDecomp:
    """Takagi-factorize a symmetric squeezing matrix and tally its spectrum.

    Use this when J is known directly (for instance the windowed coupling
    integral of the lowest-order solution); :func:`extract_j` covers the
    general case where J must first be recovered from a Bogoliubov pair.
    """
    values, basis = takagi(j)
    if weighting == "photon":
        raw = np.sinh(values) ** 2
    elif weighting == "amplitude":
        raw = values ** 2
    else:
        raise ValueError(f"unknown Schmidt weighting {weighting!r}")
    total = raw.sum()
    if total > 0.0:
        weights = raw / total
        schmidt = 1.0 / float(np.sum(weights ** 2))
    else:
        # vacuum: a single (empty) mode
        weights = np.zeros_like(raw)
        schmidt = 1.0
    return SqueezeDecomp(j=j, takagi_values=values, takagi_basis=basis,
                         schmidt_weights=weights, schmidt_number=schmidt,
                         weighting=weighting)


def extract_j(v: np.ndarray, w: np.ndarray, weighting: str = "photon",
              parts: PolarParts | None = None) -> SqueezeDecomp:
    """Extract the squeezing matrix J from the Bogoliubov pair (V, W).

    J = K^(-1) W e^(i phi^T) with K = F diag(sinh r_i / r_i) F^dagger built on
    the eigensystem of the polar Hermitian part; modes with r_i below
    ``ZERO_MODE_THRESHOLD`` use the limit value K_i = 1, which leaves them
    absent from J as they must be.

    Raises
    ------
    ValueError
        If the result is not symmetric to 1e-8 (relative to its magnitude),
        which signals an inconsistent (V, W) pair.
    """
    if parts is None:
        parts = polar_decompose(v)
    k_diag = np.where(parts.r < ZERO_MODE_THRESHOLD, 1.0, np.sinh(parts.r) / np.where(parts.r == 0.0, 1.0, parts.r))
    k_inv = (parts.basis * (1.0 / k_diag)) @ parts.basis.conj().T
    j = k_inv @ w @ parts.unitary.T
    scale = max(float(np.max(np.abs(j))), 1.0)
    asym = float(np.max(np.abs(j - j.T)))
    if asym > 1e-8 * scale:
        raise ValueError(
            f"extracted squeezing matrix is not symmetric (residual {asym:.3e}); "
            "V and W are inconsistent"
        )
    j = 0.5 * (j + j.T)
    return squeeze_decomp_from_j(j, weighting)


def extract_phi(p: np.ndarray, branch_shifts: np.ndarray | None = None) -> np.ndarray:
    """Hermitian logarithm generator phi of a unitary P = e^(i phi).

    Eigenphases are taken on the principal branch (-pi, pi]. ``branch_shifts``
    adds integer multiples of 2 pi to individual eigenphases; e^(i phi) and
    everything extracted from it are invariant under such shifts, which is
    exercised by the branch-robustness tests.
    """
    p = np.asarray(p, dtype=complex)
    tri, z = scipy.linalg.schur(p, output="complex")
    phases = np.angle(np.diagonal(tri))
    if branch_shifts is not None:
        phases = phases + 2.0 * np.pi * np.asarray(branch_shifts)
    phi = (z * phases) @ z.conj().T
    return 0.5 * (phi + phi.conj().T)


def rebuild_bogoliubov(decomp: SqueezeDecomp, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reassemble (V, W) from the extracted squeeze data and rotation generator.

    V = cosh(u) e^(i phi) and W = sinh(u) e^(i alpha) e^(-i phi^T), with
    u = U diag(lambda) U^dagger and e^(i alpha) = U U^T from the Takagi basis.
    Used by the round-trip validation of the whole extraction chain.
    """
    u_basis = decomp.takagi_basis
    lam = decomp.takagi_values
    cosh_u = (u_basis * np.cosh(lam)) @ u_basis.conj().T
    sinh_u_alpha = (u_basis * np.sinh(lam)) @ u_basis.T  # sinh(u) e^(i alpha)
    exp_iphi = unitary_from_phi(phi)
    v = cosh_u @ exp_iphi
    w = sinh_u_alpha @ exp_iphi.conj()  # e^(-i phi^T) = conj(e^(i phi))
    return v, w


def unitary_from_phi(phi: np.ndarray) -> np.ndarray:
    """e^(i phi) for Hermitian phi via its eigensystem."""
    eigval, basis = np.linalg.eigh(phi)
    return (basis * np.exp(1j * eigval)) @ basis.conj().T


def phase_integrand(v: np.ndarray, w: np.ndarray, zeta_scale: complex,
                    zeta_vector: np.ndarray) -> float:
    """Instantaneous integrand of the squeezing phase theta_a.

    For rank-one zeta = zeta_scale * outer(h, h) the integrand
    -Re tr(zeta^* tanh(u) e^(i alpha)) reduces to
    -Re[conj(zeta_scale) * (h^bar)^T X h^bar] with
    X = F diag(tanh r_i / r_i) F^dagger J, using the limit value 1 for modes
    with r_i below the zero threshold.
    """
    parts = polar_decompose(v)
    decomp = extract_j(v, w, parts=parts)
    t_diag = np.where(parts.r < ZERO_MODE_THRESHOLD, 1.0,
                      np.tanh(parts.r) / np.where(parts.r == 0.0, 1.0, parts.r))
    hbar = np.conj(zeta_vector)
    y = decomp.j @ hbar
    y = parts.basis @ (t_diag * (parts.basis.conj().T @ y))
    return float(-np.real(np.conj(zeta_scale) * np.dot(hbar, y)))


def theta_a_from_samples(times: np.ndarray, integrand: np.ndarray) -> float:
    """Trapezoid accumulation of the sampled theta_a integrand."""
    if len(times) < 2:
        return 0.0
    return float(scipy.integrate.trapezoid(integrand, times))
