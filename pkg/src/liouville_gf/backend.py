"""Statevector stand-in for the quantum processor.

Ground states come from exact diagonalization inside fixed
(N_up, N_down) sectors; approximate states are controlled-fidelity
admixtures of low-lying excited states. Expectation values are either exact
or perturbed per Pauli string with shot-noise-sized Gaussian errors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ._jit import kernels
from .lattice import LatticeModel
from .pauli import DimensionError, OperatorSum, anticommutator

MAX_QUBITS = 14
NORM_TOL = 1e-12
DEGENERACY_TOL = 1e-9
_DENSE_SECTOR_DIM = 600


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuantumState:
    n: int
    amplitudes: np.ndarray
    sector: tuple[int, int] | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << self.n:
            raise DimensionError(f"expected {1 << self.n} amplitudes, got {amps.shape[0]}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, n: int, amplitudes, sector=None) -> "QuantumState":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        return cls(n, amps / np.linalg.norm(amps), sector)

    @classmethod
    def basis(cls, n: int, index: int, sector=None) -> "QuantumState":
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n, amps, sector)

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "QuantumState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass
class MeasurementBackend:
    """Exact (``shots == 0``) or shot-sampled expectation values.

    Sampled draws come from a counter-based stream keyed on
    ``(rng_seed, *key)``; callers that pass explicit keys get results that do
    not depend on call order. Calls without a key use an internal counter.
    """

    shots: int = 0
    rng_seed: int = 0
    _counter: itertools.count = field(default_factory=itertools.count, repr=False, compare=False)

    def __post_init__(self):
        if int(self.shots) != self.shots or self.shots < 0:
            raise ValueError(f"shots must be a non-negative integer, got {self.shots!r}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @classmethod
    def exact(cls) -> "MeasurementBackend":
        return cls(0)

    @property
    def mode(self) -> str:
        return "sampled" if self.shots else "exact"

    @property
    def sampled(self) -> bool:
        return self.shots > 0

    def standard_error(self, e):
        e = np.clip(np.asarray(e, dtype=float), -1.0, 1.0)
        return np.sqrt((1.0 - e**2) / self.shots)

    def normals(self, count: int, key=None) -> np.ndarray:
        if key is None:
            key = (next(self._counter),)
        ss = np.random.SeedSequence([int(self.rng_seed), *(int(k) for k in key)])
        return np.random.Generator(np.random.Philox(ss)).standard_normal(count)


# sectors and sparse Hamiltonians ---------------------------------------------


def _popcount(v):
    return np.bitwise_count(np.asarray(v, dtype=np.int64)).astype(np.int64)


def sector_indices(model: LatticeModel, n_up: int, n_down: int) -> np.ndarray:
    b = np.arange(1 << model.n_qubits, dtype=np.int64)
    keep = (_popcount(b & model.up_mask) == n_up) & (_popcount(b & model.down_mask) == n_down)
    return b[keep]


def sparse_matrix(op: OperatorSum) -> scipy.sparse.csr_matrix:
    """Sparse 2^n x 2^n matrix of a Pauli sum (column b maps to row b ^ x)."""
    dim = 1 << op.n
    b = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    for x, z, w in zip(op.x, op.z, op.w):
        phase = (1j) ** (int(_popcount(x & z)) % 4)
        sign = 1 - 2 * (_popcount(z & b) & 1)
        rows.append(b ^ x)
        cols.append(b)
        data.append(w * phase * sign)
    if not rows:
        return scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    m = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return m.tocsr()


def _check_hamiltonian(H: OperatorSum, model: LatticeModel, max_qubits: int) -> None:
    if H.n != model.n_qubits:
        raise DimensionError(f"Hamiltonian has {H.n} qubits, model has {model.n_qubits}")
    if H.n > max_qubits:
        raise DimensionError(f"{H.n} qubits exceeds the diagonalization cap of {max_qubits}")
    if np.any(np.abs(H.w.imag) > 1e-12):
        raise NotHermitianError("Hamiltonian has complex Pauli weights")


def _real_block(H_sparse, idx):
    block = H_sparse[idx][:, idx]
    if block.nnz and np.max(np.abs(block.data.imag)) > 1e-12:
        return block
    return block.real


def sector_eigh(H_sparse, idx: np.ndarray, count: int):
    """Lowest ``count`` eigenpairs of the Hamiltonian restricted to ``idx``."""
    dim = idx.shape[0]
    count = min(count, dim)
    block = _real_block(H_sparse, idx)
    if dim <= _DENSE_SECTOR_DIM or count >= dim - 1:
        vals, vecs = scipy.linalg.eigh(block.toarray())
        return vals[:count], vecs[:, :count]
    v0 = np.ones(dim) / np.sqrt(dim)
    vals, vecs = scipy.sparse.linalg.eigsh(block, k=count, which="SA", v0=v0, tol=1e-13)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _pick_in_degenerate(vecs: np.ndarray) -> np.ndarray:
    """Vector of a degenerate eigenspace whose support starts earliest."""
    if vecs.shape[1] == 1:
        return vecs[:, 0]
    q, _ = np.linalg.qr(vecs)
    for i in range(q.shape[0]):
        proj = q @ np.conj(q[i])
        if np.linalg.norm(proj) > 1e-6:
            return proj / np.linalg.norm(proj)
    raise AssertionError("empty eigenspace")  # pragma: no cover


def _fix_phase(v: np.ndarray) -> np.ndarray:
    first = np.nonzero(np.abs(v) > 1e-10)[0][0]
    v = v * (abs(v[first]) / v[first])
    if np.all(np.abs(v.imag) < 1e-14):
        v = v.real.astype(np.complex128)
    return v


def _embed(model, idx, vec, sector) -> QuantumState:
    amps = np.zeros(1 << model.n_qubits, dtype=np.complex128)
    amps[idx] = _fix_phase(np.asarray(vec, dtype=np.complex128))
    return QuantumState.normalized(model.n_qubits, amps, sector)


def exact_ground_state(H: OperatorSum, model: LatticeModel, max_qubits: int = MAX_QUBITS):
    """Global ground state over all (N_up, N_down) sectors.

    Degenerate minima across sectors are broken by smallest total particle
    number, then largest N_up - N_down; within a sector by earliest basis
    support.
    """
    _check_hamiltonian(H, model, max_qubits)
    Hs = sparse_matrix(H)
    L = model.sites
    best = []
    for n_up in range(L + 1):
        for n_down in range(L + 1):
            idx = sector_indices(model, n_up, n_down)
            vals, vecs = sector_eigh(Hs, idx, 4)
            best.append((vals[0], n_up, n_down, idx, vals, vecs))
    e_min = min(b[0] for b in best)
    ties = [b for b in best if b[0] - e_min < DEGENERACY_TOL]
    ties.sort(key=lambda b: (b[1] + b[2], -(b[1] - b[2])))
    e0, n_up, n_down, idx, vals, vecs = ties[0]
    if vals.shape[0] == 4 and vals[-1] - e0 < DEGENERACY_TOL:
        vals, vecs = sector_eigh(Hs, idx, idx.shape[0])
    degenerate = vecs[:, vals - e0 < DEGENERACY_TOL]
    state = _embed(model, idx, _pick_in_degenerate(degenerate), (n_up, n_down))
    energy = expectation(state, H).real
    return state, float(energy)


def make_approximate_state(
    exact: QuantumState,
    fidelity: float,
    n_mix: int,
    seed: int,
    H: OperatorSum,
    model: LatticeModel | None = None,
) -> QuantumState:
    """``sqrt(F)|g0> + sqrt(1-F)|chi>`` with ``chi`` drawn from excited states.

    ``chi`` is a seeded random real combination of the ``n_mix`` lowest
    excited eigenstates in the ground state's particle-number sector.
    """
    if not 0.0 < fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in (0, 1], got {fidelity}")
    if fidelity == 1.0:
        return exact
    if exact.sector is None:
        raise ValueError("the reference state needs a particle-number sector")
    model = model or LatticeModel(H.n // 2)
    idx = sector_indices(model, *exact.sector)
    if idx.shape[0] < n_mix + 1:
        raise ValueError(f"sector {exact.sector} has {idx.shape[0]} states, need {n_mix + 1}")
    _, vecs = sector_eigh(sparse_matrix(H), idx, n_mix + 1)
    g0 = exact.amplitudes[idx]
    overlaps = np.abs(np.conj(vecs.T) @ g0)
    excited = np.delete(vecs, int(np.argmax(overlaps)), axis=1)
    coeffs = np.random.default_rng(seed).standard_normal(n_mix)
    chi = excited @ coeffs
    chi = chi - g0 * np.vdot(g0, chi)
    chi /= np.linalg.norm(chi)
    amps = np.zeros_like(exact.amplitudes)
    amps[idx] = np.sqrt(fidelity) * g0 + np.sqrt(1.0 - fidelity) * chi
    return QuantumState.normalized(exact.n, amps, exact.sector)


# expectation values -----------------------------------------------------------


def _check_state(state: QuantumState, A: OperatorSum) -> None:
    if state.n != A.n:
        raise DimensionError(f"state has {state.n} qubits, operator has {A.n}")


def pauli_expectations(state: QuantumState, A: OperatorSum) -> np.ndarray:
    """Exact ``<P_s>`` for every string of ``A`` (real for Pauli strings)."""
    _check_state(state, A)
    if not A.term_count:
        return np.zeros(0)
    return kernels.expectations(A.x, A.z, state.amplitudes).real


def measure(state: QuantumState, A: OperatorSum, backend: MeasurementBackend | None = None, key=None):
    """``(value, standard_error)`` of ``<psi|A|psi>``.

    Strings are accumulated in canonical order. In sampled mode each
    non-identity string expectation ``e`` is perturbed by a Gaussian of width
    ``sqrt((1 - e^2)/shots)`` and clamped to [-1, 1]. The identity string
    counts as exactly 1 in both modes.
    The error is the root-sum-square of the per-string errors times weights.
    """
    e = pauli_expectations(state, A)
    if not e.shape[0]:
        return 0j, 0.0
    stderr = 0.0
    identity = (A.x == 0) & (A.z == 0)
    e = np.where(identity, 1.0, e)  # analytic, never sampled
    if backend is not None and backend.sampled:
        sigma = np.where(identity, 0.0, backend.standard_error(e))
        noise = backend.normals(e.shape[0], key) * sigma
        e = np.where(identity, 1.0, np.clip(e + noise, -1.0, 1.0))
        stderr = float(np.sqrt(np.sum(np.abs(A.w) ** 2 * sigma**2)))
    # cumsum is a sequential reduction, so the order is fixed
    return complex(np.cumsum(A.w * e)[-1]), stderr


def expectation(state: QuantumState, A: OperatorSum, backend: MeasurementBackend | None = None, key=None) -> complex:
    """``<psi|A|psi>``, exact or shot-sampled depending on ``backend``."""
    return measure(state, A, backend, key)[0]


def apply(A: OperatorSum, state: QuantumState) -> np.ndarray:
    """Unnormalized vector ``A|psi>``."""
    _check_state(state, A)
    return kernels.apply_sum(A.x, A.z, A.w, state.amplitudes)


def measure_anticommutator(
    state: QuantumState, A: OperatorSum, B: OperatorSum, backend: MeasurementBackend | None = None, key=None
):
    """``(value, standard_error)`` of ``<{A^dag, B}>``.

    Exact mode evaluates ``<A psi|B psi> + <B^dag psi|A^dag psi>`` on the
    statevector, which equals the term-wise expectation of the expanded
    anticommutator. Sampled mode expands the anticommutator into Pauli
    strings and samples each one.
    """
    _check_state(state, A)
    _check_state(state, B)
    if backend is not None and backend.sampled:
        return measure(state, anticommutator(A.dagger(), B, tol=0.0), backend, key)
    if not A.term_count or not B.term_count:
        return 0j, 0.0
    a_psi = apply(A, state)
    b_psi = apply(B, state)
    bd_psi = apply(B.dagger(), state)
    ad_psi = apply(A.dagger(), state)
    return complex(np.vdot(a_psi, b_psi) + np.vdot(bd_psi, ad_psi)), 0.0


def anticommutator_expectation(
    state: QuantumState, A: OperatorSum, B: OperatorSum, backend: MeasurementBackend | None = None, key=None
) -> complex:
    return measure_anticommutator(state, A, B, backend, key)[0]
