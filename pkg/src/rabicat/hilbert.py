"""Truncated Fock-space operator algebra for a qubit-oscillator system.

Provides ladder and Pauli operators, coherent and Schrodinger-cat states,
density-matrix vectorization (column stacking), parity operators, and the
Uhlmann fidelity. All operators are dense complex numpy arrays; sparse
variants used by the superoperator builders live in :mod:`rabicat.liouvillian`.

Conventions fixed package-wide:

* tensor products are qubit-first, ``kron(qubit_op, osc_op)``;
* vectorization stacks columns, element ``(i, j)`` maps to index ``j*d + i``;
* internal frequency unit is the oscillator frequency (``omega0 = 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class TruncationError(ValueError):
    """Fock truncation too small for the requested state or model."""

    def __init__(self, required_dim: int, given_dim: int, what: str = "state"):
        self.required_dim = required_dim
        self.given_dim = given_dim
        super().__init__(
            f"Fock truncation {given_dim} insufficient for {what}; "
            f"need at least {required_dim} levels"
        )


PARITY_EVEN = "even"
PARITY_ODD = "odd"
PARITY_LABELS = (PARITY_EVEN, PARITY_ODD)


@dataclass(frozen=True)
class SystemParams:
    """Physical frequencies of the lossy qubit-oscillator model.

    ``omega0``: oscillator frequency, ``omega_q``: qubit splitting,
    ``lam``: qubit-oscillator coupling, ``kappa``: two-photon decay rate.
    The dimensionless controls are exposed as read-only properties:
    coupling ``g = 2*lam/sqrt(omega0*omega_q)``, frequency ratio
    ``eta = omega_q/omega0``, decay ratio ``zeta = omega0/kappa`` and
    renormalized decay rate ``h = eta/zeta``.
    """

    omega0: float
    omega_q: float
    lam: float
    kappa: float

    def __post_init__(self):
        for name in ("omega0", "omega_q", "lam", "kappa"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be strictly positive, got {v}")

    @property
    def g(self) -> float:
        return 2.0 * self.lam / math.sqrt(self.omega0 * self.omega_q)

    @property
    def eta(self) -> float:
        return self.omega_q / self.omega0

    @property
    def zeta(self) -> float:
        return self.omega0 / self.kappa

    @property
    def h(self) -> float:
        return self.eta / self.zeta

    @classmethod
    def from_dimensionless(cls, g: float, eta: float, zeta: float) -> "SystemParams":
        """Build physical parameters with omega0 = 1 from (g, eta, zeta)."""
        if g <= 0:
            raise ValueError(f"g must be strictly positive, got {g}")
        return cls(omega0=1.0, omega_q=eta, lam=g * math.sqrt(eta) / 2.0, kappa=1.0 / zeta)


def annihilation_op(dim: int) -> np.ndarray:
    """Ladder operator a with entries a[n-1, n] = sqrt(n) on `dim` Fock levels."""
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def number_op(dim: int) -> np.ndarray:
    """Photon number operator a^dag a."""
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    return np.diag(np.arange(dim)).astype(complex)


SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T.copy()


def tensor_qubit_oscillator(qubit_op: np.ndarray, osc_op: np.ndarray) -> np.ndarray:
    """Kronecker composite on the qubit (x) oscillator space, qubit index outermost."""
    qubit_op = np.asarray(qubit_op)
    osc_op = np.asarray(osc_op)
    if qubit_op.shape != (2, 2):
        raise ValueError(f"qubit operator must be 2x2, got {qubit_op.shape}")
    if osc_op.ndim != 2 or osc_op.shape[0] != osc_op.shape[1]:
        raise ValueError(f"oscillator operator must be square, got {osc_op.shape}")
    return np.kron(qubit_op, osc_op)


def rabi_hamiltonian(params: SystemParams, fock_dim: int) -> np.ndarray:
    """Qubit-oscillator Hamiltonian with dipole coupling -lam*(a + a^dag)*sigma_x."""
    a = annihilation_op(fock_dim)
    n = number_op(fock_dim)
    eye2 = np.eye(2, dtype=complex)
    eye_f = np.eye(fock_dim, dtype=complex)
    return (
        params.omega0 * tensor_qubit_oscillator(eye2, n)
        + 0.5 * params.omega_q * tensor_qubit_oscillator(SIGMA_Z, eye_f)
        - params.lam * tensor_qubit_oscillator(SIGMA_X, a + a.conj().T)
    )


def required_fock_dim(beta: complex) -> int:
    """Smallest truncation considered safe for amplitude `beta`.

    The Poisson photon distribution of a coherent state has mean |beta|^2 and
    standard deviation |beta|; six standard deviations plus a flat margin of
    ten levels leaves a negligible truncated tail.
    """
    b = abs(beta)
    return math.ceil(b * b + 6.0 * b + 10.0)


def coherent_state(beta: complex, dim: int) -> np.ndarray:
    """Coherent state |beta> on `dim` Fock levels, renormalized after truncation."""
    need = required_fock_dim(beta)
    if dim < need:
        raise TruncationError(need, dim, what=f"coherent state beta={beta}")
    amps = np.zeros(dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * beta / math.sqrt(n)
    amps *= np.exp(-abs(beta) ** 2 / 2.0)
    return amps / np.linalg.norm(amps)


def cat_state(beta: complex, parity: str, dim: int) -> np.ndarray:
    """Even or odd parity superposition of |beta> and |-beta>, unit-normalized.

    The even cat has support only on even Fock levels, the odd cat only on odd
    ones; the construction masks the coherent amplitudes so the complementary
    levels are exactly zero. The odd cat is undefined at beta = 0.
    """
    if parity not in PARITY_LABELS:
        raise ValueError(f"parity must be one of {PARITY_LABELS}, got {parity!r}")
    if parity == PARITY_ODD and beta == 0:
        raise ValueError("odd cat state has zero norm at beta=0")
    amps = coherent_state(beta, dim)
    keep = np.arange(dim) % 2 == (0 if parity == PARITY_EVEN else 1)
    amps = np.where(keep, amps, 0.0)
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise ValueError(f"{parity} cat state has zero norm at beta={beta}")
    return amps / norm


def parity_operator(fock_dim: int, joint: bool = False) -> np.ndarray:
    """Photon parity (-1)^n, or joint parity (-1)^(n+q) on the qubit (x) oscillator space.

    ``q`` counts the qubit excitation, so the joint operator is
    ``kron(diag(-1, 1), diag((-1)^n))`` in the qubit-first ordering where the
    first qubit basis state is the excited one (sigma_z = +1).
    """
    osc = np.diag((-1.0 + 0.0j) ** np.arange(fock_dim))
    if not joint:
        return osc
    return np.kron(np.diag([-1.0 + 0.0j, 1.0 + 0.0j]), osc)


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a d x d matrix: element (i, j) goes to index j*d + i."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1, order="F")


def devectorize(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`; the length must be a perfect square."""
    vec = np.asarray(vec)
    if vec.ndim != 1:
        raise ValueError(f"expected a vector, got shape {vec.shape}")
    d = math.isqrt(vec.shape[0])
    if d * d != vec.shape[0]:
        raise ValueError(f"vector length {vec.shape[0]} is not a perfect square")
    return vec.reshape(d, d, order="F")


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """Trace(op @ rho)."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {op.shape} vs {rho.shape}")
    return complex(np.trace(op @ rho))


def density_from_state(psi: np.ndarray) -> np.ndarray:
    """Pure-state density matrix |psi><psi| (psi renormalized first)."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-8,
    eig_floor: float = -1e-8,
) -> None:
    """Validate Hermiticity, unit trace and numerical positivity; raise ValueError."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"state is not Hermitian: max |rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} deviates from 1 beyond {trace_tol}")
    wmin = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)[0])
    if wmin < eig_floor:
        raise ValueError(f"state has negative eigenvalue {wmin:.3e}")


def fidelity(rho1: np.ndarray, rho2: np.ndarray, clip: float = 1e-12) -> float:
    """Uhlmann fidelity Tr[sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2.

    Both arguments must satisfy the density-matrix invariants. Eigenvalues
    below `clip` are zeroed before the square roots; steady-state solvers
    return slightly indefinite matrices and the noise floor would otherwise
    leak into the trace through its square root.
    """
    rho1 = np.asarray(rho1)
    rho2 = np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise ValueError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    check_density_matrix(rho1)
    check_density_matrix(rho2)
    w, u = np.linalg.eigh((rho1 + rho1.conj().T) / 2.0)
    w[w < clip] = 0.0
    sqrt1 = (u * np.sqrt(w)) @ u.conj().T
    lam = np.linalg.eigvalsh(sqrt1 @ rho2 @ sqrt1)
    lam[lam < clip] = 0.0
    return float(np.sum(np.sqrt(lam)) ** 2)
