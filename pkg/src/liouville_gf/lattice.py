"""One-dimensional Hubbard chain and its Jordan-Wigner image.

Modes are spin-blocked: site i with spin up is qubit i, spin down is qubit
i + L. The qubit state with Z = +1 is the empty mode, so ``n_p = (I - Z_p)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import OperatorSum, add, linear_combination, multiply, prune

UP, DOWN = 0, 1


@dataclass(frozen=True)
class LatticeModel:
    sites: int
    t: float = 1.0
    U: float = 4.0
    mu: float = 2.0

    def __post_init__(self):
        if int(self.sites) != self.sites or self.sites < 1:
            raise ValueError(f"sites must be a positive integer, got {self.sites!r}")
        for name in ("t", "U", "mu"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def n_qubits(self) -> int:
        return 2 * self.sites

    def mode(self, site: int, spin: int) -> int:
        if not 0 <= site < self.sites or spin not in (UP, DOWN):
            raise IndexError(f"no mode (site={site}, spin={spin}) in a {self.sites}-site chain")
        return site + self.sites * spin

    def site_spin(self, p: int) -> tuple[int, int]:
        if not 0 <= p < self.n_qubits:
            raise IndexError(f"mode {p} out of range")
        return p % self.sites, p // self.sites

    @property
    def up_mask(self) -> int:
        return (1 << self.sites) - 1

    @property
    def down_mask(self) -> int:
        return self.up_mask << self.sites

    @property
    def half_filled(self) -> bool:
        return abs(self.mu - self.U / 2) < 1e-12


def jw_annihilation(p: int, n: int) -> OperatorSum:
    """``c_p = Z^(x p) (X + iY)/2`` on qubit p."""
    if not 0 <= p < n:
        raise IndexError(f"mode {p} out of range for {n} qubits")
    string = (1 << p) - 1
    bit = 1 << p
    return OperatorSum(n, [bit, bit], [string, string | bit], [0.5, 0.5j])


def jw_creation(p: int, n: int) -> OperatorSum:
    return jw_annihilation(p, n).dagger()


def number_operator(p: int, n: int) -> OperatorSum:
    return OperatorSum(n, [0, 0], [0, 1 << p], [0.5, -0.5])


def total_number(n: int, modes=None) -> OperatorSum:
    modes = range(n) if modes is None else modes
    return linear_combination([(1.0, number_operator(p, n)) for p in modes])


def hopping(p: int, q: int, n: int) -> OperatorSum:
    """``c_p^dag c_q + c_q^dag c_p``."""
    cp, cq = jw_annihilation(p, n), jw_annihilation(q, n)
    return prune(add(multiply(cp.dagger(), cq), multiply(cq.dagger(), cp)), 0.0)


def build_hubbard(model: LatticeModel) -> OperatorSum:
    """Open-chain Hubbard Hamiltonian including its identity term.

    Built from products of Jordan-Wigner operators so the Pauli expansion is
    exact; weights that cancel (e.g. the single-Z terms at mu = U/2) are
    removed.
    """
    L, n = model.sites, model.n_qubits
    parts = []
    for spin in (UP, DOWN):
        for i in range(L - 1):
            parts.append((-model.t, hopping(model.mode(i, spin), model.mode(i + 1, spin), n)))
        for i in range(L):
            parts.append((-model.mu, number_operator(model.mode(i, spin), n)))
    for i in range(L):
        nn = multiply(number_operator(model.mode(i, UP), n), number_operator(model.mode(i, DOWN), n))
        parts.append((model.U, nn))
    H = linear_combination(parts)
    H = prune(H, 1e-14)
    # weights are real by construction; drop the float signed-zero imaginary parts
    return OperatorSum(n, H.x, H.z, H.w.real.astype(np.complex128), _canonical=True)


def h0_matrix(model: LatticeModel) -> np.ndarray:
    """Single-spin hopping-plus-chemical-potential matrix (L x L)."""
    L = model.sites
    h0 = -model.mu * np.eye(L)
    idx = np.arange(L - 1)
    h0[idx, idx + 1] = -model.t
    h0[idx + 1, idx] = -model.t
    return h0
