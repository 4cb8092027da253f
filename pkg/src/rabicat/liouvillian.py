"""Lindblad superoperators for the two-photon-damped Rabi model.

Two generators are built in vectorized (column-stacking) form:

* the full qubit-oscillator model, used at small truncation as a
  qualitative cross-check, and
* the oscillator-only effective model obtained after eliminating the
  qubit, which carries all quantitative results.

Both commute with photon/joint parity applied from the left and from the
right, so the superoperator splits into four sectors {ee, oo, eo, oe}
indexed by the parities of the row and column of the density matrix.
The ee and oo sectors each hold one exact steady state; the decay rate of
the slowest remaining mode (the leading eo/oe pair in practice) is the
spectral gap, which collapses in the symmetry-broken phase while the eo/oe
modes turn into two extra steady states.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import (
    SystemParams,
    TruncationError,
    devectorize,
    parity_operator,
    rabi_hamiltonian,
    required_fock_dim,
    vectorize,
)

logger = logging.getLogger(__name__)

MODEL_FULL_RABI = "full-rabi"
MODEL_EFFECTIVE = "effective-oscillator"

SECTOR_LABELS = ("ee", "oo", "eo", "oe")

# default complex shift for the iterative eigensolver; keeping it off both the
# real axis and the spectrum avoids factorizing a singular matrix (zero is
# always an eigenvalue)
_DEFAULT_SIGMA = 1e-3 + 0.7e-3j

# sector null vectors are trusted as steady states only below this
_STEADY_RE_TOL = 1e-9

_DENSE_LIMIT = 4096  # full superoperator dimension d^2 up to which we solve densely


class SolverError(RuntimeError):
    """Spectral solve failed to converge or returned unphysical values."""


class SymmetryViolationError(RuntimeError):
    """Superoperator couples distinct parity sectors: model construction bug."""


@dataclass(frozen=True)
class EffectiveParams:
    """Oscillator-only model controls: coupling g, decay ratio zeta, truncation."""

    g: float
    zeta: float
    fock_dim: int

    def __post_init__(self):
        if self.g < 0 or not math.isfinite(self.g):
            raise ValueError(f"g must be >= 0, got {self.g}")
        if not (self.zeta > 0 and math.isfinite(self.zeta)):
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if self.fock_dim < 2:
            raise ValueError(f"fock_dim must be >= 2, got {self.fock_dim}")

    @property
    def kappa(self) -> float:
        return 1.0 / self.zeta

    @property
    def steady_amplitude_mag(self) -> float:
        """|beta| of the coherent steady states in the broken phase."""
        return math.sqrt(self.zeta * self.g * self.g) / 2.0


@dataclass
class Superoperator:
    """Vectorized Lindblad generator with optional parity-sector bookkeeping."""

    matrix: sp.csr_matrix
    model_tag: str
    params: SystemParams | EffectiveParams
    dim: int  # Hilbert-space dimension d; matrix is d^2 x d^2
    parity_diag: np.ndarray  # +/-1 per basis state
    block_info: dict[str, np.ndarray] | None = None

    def sector_matrix(self, label: str) -> sp.csr_matrix:
        if self.block_info is None:
            raise ValueError("call parity_blocks() first to classify sectors")
        idx = self.block_info[label]
        return self.matrix[np.ix_(idx, idx)].tocsr()


@dataclass
class SpectrumResult:
    """Sector-resolved spectral data near zero.

    ``eigenvalues`` pools every computed eigenvalue sorted by descending real
    part. ``gap`` is the smallest |Re| after removing exactly one steady-state
    eigenvalue from each of the ee and oo sectors (those are symmetry-
    guaranteed zeros; the eo/oe sectors own no guaranteed zero, so their
    leading eigenvalues always count as gap candidates, however small they
    become in the broken phase). ``degeneracy`` counts the computed
    eigenvalues with |Re| at or below ``degeneracy_threshold``.
    """

    eigenvalues: np.ndarray
    sector_eigenvalues: dict[str, np.ndarray]
    steady_states: list[tuple[str, np.ndarray]]
    gap: float
    degeneracy: int
    degeneracy_threshold: float


def _destroy_sparse(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csr", dtype=complex)


def _lindblad_matrix(H: sp.spmatrix, A: sp.spmatrix, kappa: float) -> sp.csr_matrix:
    """Column-stacked generator -i[H, .] + kappa*(2 A . A^dag - {A^dag A, .})."""
    d = H.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    AdA = (A.conj().T @ A).tocsr()
    L = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye)) + kappa * (
        2.0 * sp.kron(A.conj(), A) - sp.kron(eye, AdA) - sp.kron(AdA.T, eye)
    )
    return L.tocsr()


def build_full_rabi(params: SystemParams, fock_dim: int) -> Superoperator:
    """Generator of the qubit-oscillator model with two-photon oscillator loss.

    The Hamiltonian part carries the dipole coupling -lam*(a+a^dag)*sigma_x;
    the jump operator is a^2 acting on the oscillator factor. Intended for
    small truncations, where the cross-checks against the effective model run.
    """
    if fock_dim < 2:
        raise ValueError(f"fock_dim must be >= 2, got {fock_dim}")
    H = sp.csr_matrix(rabi_hamiltonian(params, fock_dim))
    a = _destroy_sparse(fock_dim)
    A = sp.kron(sp.identity(2, format="csr", dtype=complex), a @ a).tocsr()
    L = _lindblad_matrix(H, A, params.kappa)
    parity_diag = np.real(np.diag(parity_operator(fock_dim, joint=True)))
    return Superoperator(
        matrix=L,
        model_tag=MODEL_FULL_RABI,
        params=params,
        dim=2 * fock_dim,
        parity_diag=parity_diag,
    )


def build_effective(params: EffectiveParams) -> Superoperator:
    """Generator of the oscillator-only model left after qubit elimination.

    H = (1 - g^2/2) a^dag a - (g^2/4)(a^2 + a^dag^2) in oscillator-frequency
    units, with two-photon loss at rate kappa = 1/zeta. At g = sqrt(2) the
    number term vanishes and the span of two coherent states becomes
    decoherence-free. The truncation must accommodate those states, i.e.
    fock_dim >= required_fock_dim(sqrt(zeta*g^2)/2).
    """
    need = required_fock_dim(params.steady_amplitude_mag)
    if params.fock_dim < need:
        raise TruncationError(need, params.fock_dim, what=f"effective model at {params}")
    g = params.g
    a = _destroy_sparse(params.fock_dim)
    n_op = (a.conj().T @ a).tocsr()
    sq = (a @ a).tocsr()
    H = (1.0 - g * g / 2.0) * n_op - (g * g / 4.0) * (sq + sq.conj().T)
    L = _lindblad_matrix(H.tocsr(), sq, params.kappa)
    parity_diag = (-1.0) ** np.arange(params.fock_dim)
    return Superoperator(
        matrix=L,
        model_tag=MODEL_EFFECTIVE,
        params=params,
        dim=params.fock_dim,
        parity_diag=parity_diag,
    )


def trace_preservation_residual(superop: Superoperator) -> float:
    """max |vec(identity)^dag L|: zero for a trace-preserving generator."""
    d = superop.dim
    vec_id = vectorize(np.eye(d, dtype=complex))
    return float(np.max(np.abs(vec_id.conj() @ superop.matrix)))


def _sector_of_indices(superop: Superoperator) -> np.ndarray:
    """Sector id (index into SECTOR_LABELS) of every vectorized index."""
    d = superop.dim
    odd = superop.parity_diag < 0  # True for odd-parity basis states
    k = np.arange(d * d)
    row_odd = odd[k % d]
    col_odd = odd[k // d]
    # ee=0, oo=1, eo=2, oe=3
    sector = np.where(
        ~row_odd & ~col_odd, 0, np.where(row_odd & col_odd, 1, np.where(~row_odd, 2, 3))
    )
    return sector


def parity_blocks(superop: Superoperator, coupling_tol: float = 1e-12) -> Superoperator:
    """Classify vectorized indices into {ee, oo, eo, oe} and verify decoupling.

    Any matrix entry connecting distinct sectors above `coupling_tol` raises
    :class:`SymmetryViolationError`, since both models must commute with the
    left and right parity superoperators by construction.
    """
    sector = _sector_of_indices(superop)
    coo = superop.matrix.tocoo()
    cross = sector[coo.row] != sector[coo.col]
    if np.any(cross):
        worst = float(np.max(np.abs(coo.data[cross])))
        if worst > coupling_tol:
            raise SymmetryViolationError(
                f"cross-sector coupling {worst:.3e} exceeds {coupling_tol:.0e}; "
                "the generator does not respect the parity symmetry"
            )
    block_info = {
        label: np.flatnonzero(sector == i) for i, label in enumerate(SECTOR_LABELS)
    }
    return Superoperator(
        matrix=superop.matrix,
        model_tag=superop.model_tag,
        params=superop.params,
        dim=superop.dim,
        parity_diag=superop.parity_diag,
        block_info=block_info,
    )


def _steady_state_sector(superop: Superoperator, label: str) -> np.ndarray:
    """Unit-trace steady state of the ee or oo sector via a trace-constrained solve.

    The sector generator has a one-dimensional null space and its diagonal
    rows sum to zero (sector trace conservation), so replacing the first row
    (a diagonal component for ee/oo) with the trace functional yields a
    nonsingular system.
    """
    if label not in ("ee", "oo"):
        raise ValueError(f"direct steady solve applies to ee/oo, got {label!r}")
    if superop.block_info is None:
        superop = parity_blocks(superop)
    idx = superop.block_info[label]
    d = superop.dim
    rows = idx % d
    cols = idx // d
    mat = superop.matrix[np.ix_(idx, idx)].tolil()
    mat[0, :] = (rows == cols).astype(complex)
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[0] = 1.0
    v = spla.spsolve(mat.tocsc(), rhs)
    resid = float(np.linalg.norm(superop.matrix[np.ix_(idx, idx)] @ v))
    if not np.all(np.isfinite(v)) or resid > 1e-6:
        raise SolverError(f"{label} steady-state solve residual {resid:.3e}")
    rho = np.zeros((d, d), dtype=complex)
    rho[rows, cols] = v
    rho = (rho + rho.conj().T) / 2.0
    rho /= np.trace(rho).real
    return rho


def _sector_eigs(
    mat: sp.csr_matrix, n_eigenvalues: int, sigma: complex
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending real part) of one sector, with eigenvectors."""
    n = mat.shape[0]
    if n <= _DENSE_LIMIT // 4:
        w, v = scipy.linalg.eig(mat.toarray())
    else:
        k = min(n_eigenvalues, n - 2)
        v0 = np.ones(n, dtype=complex) / math.sqrt(n)  # fixed start: deterministic output
        try:
            w, v = spla.eigs(mat.tocsc(), k=k, sigma=sigma, which="LM", v0=v0)
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            raise SolverError(f"sector eigensolve failed: {exc}") from exc
    order = np.argsort(-w.real)
    return w[order], v[:, order]


def spectrum(
    superop: Superoperator,
    n_eigenvalues: int = 16,
    degeneracy_threshold: float = 1e-8,
    sigma: complex = _DEFAULT_SIGMA,
) -> SpectrumResult:
    """Sector-resolved slow spectrum, gap, steady states and degeneracy count.

    Sectors of dimension up to 1024 are solved densely (every eigenvalue);
    larger ones use shift-inverted Arnoldi around `sigma`, returning the
    ``n_eigenvalues`` eigenvalues nearest the shift, which covers all the
    slow modes this model has. Steady states for ee/oo come from a direct
    trace-constrained solve; an eo or oe coherence with |Re| at or below the
    threshold contributes a unit-Frobenius-norm steady coherence matrix.
    """
    if n_eigenvalues < 5:
        raise ValueError(f"n_eigenvalues must be >= 5, got {n_eigenvalues}")
    if superop.block_info is None:
        superop = parity_blocks(superop)
    d = superop.dim
    sector_eigenvalues: dict[str, np.ndarray] = {}
    steady_states: list[tuple[str, np.ndarray]] = []
    gap_candidates: list[float] = []
    for label in SECTOR_LABELS:
        idx = superop.block_info[label]
        w, v = _sector_eigs(superop.sector_matrix(label), n_eigenvalues, sigma)
        sector_eigenvalues[label] = w
        worst_re = float(np.max(w.real))
        if worst_re > _STEADY_RE_TOL:
            raise SolverError(
                f"sector {label} reports a growing mode Re = {worst_re:.3e}"
            )
        if label in ("ee", "oo"):
            # drop exactly one symmetry-guaranteed zero: the steady state
            i_zero = int(np.argmin(np.abs(w)))
            if abs(w[i_zero].real) > _STEADY_RE_TOL:
                raise SolverError(
                    f"sector {label} steady eigenvalue off zero: {w[i_zero]:.3e}"
                )
            gap_candidates.extend(abs(w[i].real) for i in range(len(w)) if i != i_zero)
            steady_states.append((label, _steady_state_sector(superop, label)))
        else:
            gap_candidates.extend(np.abs(w.real))
            i_lead = int(np.argmax(w.real))
            if abs(w[i_lead].real) <= degeneracy_threshold:
                coh = np.zeros((d, d), dtype=complex)
                coh[idx % d, idx // d] = v[:, i_lead]
                steady_states.append((label, coh / np.linalg.norm(coh)))
    pooled = np.concatenate(list(sector_eigenvalues.values()))
    pooled = pooled[np.argsort(-pooled.real)]
    degeneracy = int(np.sum(np.abs(pooled.real) <= degeneracy_threshold))
    return SpectrumResult(
        eigenvalues=pooled,
        sector_eigenvalues=sector_eigenvalues,
        steady_states=steady_states,
        gap=float(min(gap_candidates)),
        degeneracy=degeneracy,
        degeneracy_threshold=degeneracy_threshold,
    )


def default_fock_dim(g_max: float, zeta: float, safety: float = 1.6) -> int:
    """Truncation for an effective-model sweep up to g_max, with headroom."""
    beta_max = math.sqrt(zeta) * g_max / 2.0
    return math.ceil(required_fock_dim(beta_max) * safety)


@dataclass(frozen=True)
class GapPoint:
    g: float
    zeta: float
    fock_dim: int
    gap: float
    degeneracy: int


@dataclass(frozen=True)
class PhotonPoint:
    g: float
    zeta: float
    fock_dim: int
    photon_ratio: float


def gap_sweep(
    g_values: Sequence[float],
    zeta_values: Sequence[float],
    fock_dim: int | None = None,
    n_eigenvalues: int = 12,
    degeneracy_threshold: float = 1e-8,
) -> list[GapPoint]:
    """Gap and steady-state degeneracy across a (g, zeta) grid."""
    rows = []
    for zeta in zeta_values:
        nfock = fock_dim or default_fock_dim(max(g_values), zeta)
        for g in g_values:
            superop = parity_blocks(
                build_effective(EffectiveParams(g=float(g), zeta=float(zeta), fock_dim=nfock))
            )
            res = spectrum(
                superop, n_eigenvalues=n_eigenvalues, degeneracy_threshold=degeneracy_threshold
            )
            rows.append(
                GapPoint(
                    g=float(g),
                    zeta=float(zeta),
                    fock_dim=nfock,
                    gap=res.gap,
                    degeneracy=res.degeneracy,
                )
            )
    return rows


def photon_ratio(superop: Superoperator, sector: str = "ee") -> float:
    """<a^dag a>/zeta in the steady state of the given diagonal sector."""
    if superop.model_tag != MODEL_EFFECTIVE:
        raise ValueError("photon ratio is defined for the effective model")
    rho = _steady_state_sector(superop, sector)
    n_diag = np.arange(superop.dim)
    return float(np.real(np.sum(n_diag * np.diag(rho))) / superop.params.zeta)


def photon_sweep(
    g_values: Sequence[float],
    zeta_values: Sequence[float],
    fock_dim: int | None = None,
    sector: str = "ee",
) -> list[PhotonPoint]:
    """Renormalized steady-state photon number across a (g, zeta) grid."""
    rows = []
    for zeta in zeta_values:
        nfock = fock_dim or default_fock_dim(max(g_values), zeta)
        for g in g_values:
            superop = parity_blocks(
                build_effective(EffectiveParams(g=float(g), zeta=float(zeta), fock_dim=nfock))
            )
            rows.append(
                PhotonPoint(
                    g=float(g),
                    zeta=float(zeta),
                    fock_dim=nfock,
                    photon_ratio=photon_ratio(superop, sector),
                )
            )
    return rows


def gap_closure_coupling(
    zeta: float,
    fock_dim: int,
    threshold: float = 1e-6,
    lo: float = 1.0,
    hi: float = math.sqrt(2.0),
    tol: float = 0.01,
    n_eigenvalues: int = 12,
) -> float:
    """Bisect for the smallest g at which the gap falls below `threshold`.

    The gap decreases monotonically between the critical point and the
    decoherence-free coupling sqrt(2), where it vanishes identically, so the
    default bracket ends there. (At small zeta the gap partially reopens
    beyond sqrt(2); the first closure always lies inside the bracket.)
    """

    def gap_at(g: float) -> float:
        superop = parity_blocks(
            build_effective(EffectiveParams(g=g, zeta=zeta, fock_dim=fock_dim))
        )
        return spectrum(superop, n_eigenvalues=n_eigenvalues).gap

    if gap_at(lo) < threshold:
        raise ValueError(f"gap already below threshold at g={lo}")
    if gap_at(hi) >= threshold:
        raise ValueError(f"gap still above threshold at g={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap_at(mid) < threshold:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def krylov_expv(
    A: sp.spmatrix,
    v: np.ndarray,
    t: float,
    tol: float = 1e-10,
    m: int = 30,
) -> np.ndarray:
    """exp(t*A) @ v by restarted Arnoldi with adaptive substeps.

    Each substep projects A onto an m-dimensional Krylov basis and
    exponentiates the small Hessenberg block; the standard a-posteriori
    estimate beta*h_{m+1,m}*|e_m^T exp(tau H) e_1| controls the substep
    length. A happy breakdown (invariant subspace) finishes the remaining
    time in one exact shot.
    """
    v = np.asarray(v, dtype=complex)
    n = v.shape[0]
    beta0 = float(np.linalg.norm(v))
    if t == 0.0 or beta0 == 0.0:
        return v.copy()
    anorm = float(np.max(np.abs(A).sum(axis=1)))
    if anorm == 0.0:
        return v.copy()
    w = v.copy()
    t_done = 0.0
    tau = min(t, max(m / (2.0 * anorm), 1e-8))
    V = np.empty((n, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    while t_done < t:
        tau = min(tau, t - t_done)
        beta = float(np.linalg.norm(w))
        if beta == 0.0:
            return w
        V[:, 0] = w / beta
        H[:] = 0.0
        k_used = m
        breakdown = False
        for j in range(m):
            p = A @ V[:, j]
            for i in range(j + 1):
                H[i, j] = np.vdot(V[:, i], p)
                p -= H[i, j] * V[:, i]
            # one re-orthogonalization pass keeps the basis clean
            for i in range(j + 1):
                c = np.vdot(V[:, i], p)
                H[i, j] += c
                p -= c * V[:, i]
            hj = float(np.linalg.norm(p))
            H[j + 1, j] = hj
            if hj <= 1e-14 * anorm:
                k_used = j + 1
                breakdown = True
                break
            V[:, j + 1] = p / hj
        Hk = H[:k_used, :k_used]
        while True:
            F = scipy.linalg.expm(tau * Hk)
            if breakdown:
                err = 0.0
            else:
                err = beta * abs(H[k_used, k_used - 1] * tau) * abs(F[k_used - 1, 0])
            if err <= max(tol * beta, 1e-300) or tau <= 1e-14 * t:
                break
            tau *= max(0.2, 0.7 * (tol * beta / err) ** (1.0 / k_used))
        w = beta * (V[:, :k_used] @ F[:, 0])
        t_done += tau
        if not breakdown and err > 0.0:
            grow = 0.9 * (tol * beta / err) ** (1.0 / k_used)
            tau *= min(2.0, max(0.2, grow))
    return w


def evolve(
    rho0: np.ndarray,
    superop: Superoperator,
    t: float,
    tol: float = 1e-10,
    krylov_dim: int = 30,
) -> np.ndarray:
    """Propagate a density matrix for time t under the generator.

    The result is re-Hermitized, (rho + rho^dag)/2, and trace-renormalized;
    both correction magnitudes are logged at debug level.
    """
    if t < 0:
        raise ValueError(f"evolution time must be >= 0, got {t}")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (superop.dim, superop.dim):
        raise ValueError(
            f"state shape {rho0.shape} does not match superoperator dim {superop.dim}"
        )
    if t == 0.0:
        return rho0.copy()
    w = krylov_expv(superop.matrix, vectorize(rho0), t, tol=tol, m=krylov_dim)
    rho = devectorize(w)
    herm_corr = float(np.max(np.abs(rho - rho.conj().T))) / 2.0
    rho = (rho + rho.conj().T) / 2.0
    tr = float(np.trace(rho).real)
    if tr <= 0:
        raise SolverError(f"propagated state has non-positive trace {tr:.3e}")
    logger.debug(
        "evolve t=%.4g: hermiticity correction %.3e, trace correction %.3e",
        t,
        herm_corr,
        abs(tr - 1.0),
    )
    return rho / tr


STEADY_STATE_MAGIC = b"RCSS"


def dump_steady_state(path, matrix: np.ndarray, sector_label: str) -> None:
    """Write a steady-state matrix in the documented little-endian layout.

    Layout: 4-byte magic ``RCSS``, uint32 dimension d, 2 ascii bytes of the
    sector label, then d*d complex entries in row-major order, each stored as
    a little-endian (real, imag) pair of 64-bit floats.
    """
    matrix = np.asarray(matrix, dtype=complex)
    d = matrix.shape[0]
    if matrix.shape != (d, d):
        raise ValueError(f"expected a square matrix, got {matrix.shape}")
    if sector_label not in SECTOR_LABELS:
        raise ValueError(f"sector label must be one of {SECTOR_LABELS}")
    with open(path, "wb") as fh:
        fh.write(STEADY_STATE_MAGIC)
        fh.write(struct.pack("<I", d))
        fh.write(sector_label.encode("ascii"))
        fh.write(np.ascontiguousarray(matrix).astype("<c16").tobytes())


def load_steady_state(path) -> tuple[str, np.ndarray]:
    """Read a matrix written by :func:`dump_steady_state`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != STEADY_STATE_MAGIC:
            raise ValueError(f"not a steady-state dump (magic {magic!r})")
        (d,) = struct.unpack("<I", fh.read(4))
        label = fh.read(2).decode("ascii")
        data = np.frombuffer(fh.read(16 * d * d), dtype="<c16")
    return label, data.reshape(d, d).astype(complex)
