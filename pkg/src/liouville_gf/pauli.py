"""Complex-weighted sums of n-qubit Pauli strings.

A :class:`PauliTerm` is a phase-free string stored as two bitmasks; every
phase lives in the weights of an :class:`OperatorSum`. Sums are kept in
canonical order, lexicographic in ``(x_mask, z_mask)``, so that reductions
are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from ._jit import kernels

PRUNE_TOL = 1e-12
MAX_QUBITS = 31

_CHAR_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_CHAR = {v: k for k, v in _CHAR_TO_BITS.items()}
_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


def _check_n(n: int) -> int:
    n = int(n)
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    return n


@dataclass(frozen=True, order=True)
class PauliTerm:
    """Tensor product of single-qubit Paulis; qubit q is (x bit q, z bit q)."""

    n: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        _check_n(self.n)
        full = (1 << self.n) - 1
        if self.x_mask & ~full or self.z_mask & ~full or self.x_mask < 0 or self.z_mask < 0:
            raise DimensionError(f"masks do not fit in {self.n} qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliTerm":
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                bx, bz = _CHAR_TO_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli label {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z)

    @property
    def label(self) -> str:
        return "".join(
            _BITS_TO_CHAR[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)] for q in range(self.n)
        )

    @property
    def weight(self) -> int:
        """Number of non-identity factors."""
        return bin(self.x_mask | self.z_mask).count("1")

    def commutes_with(self, other: "PauliTerm") -> bool:
        _same_n(self.n, other.n)
        s = bin(self.x_mask & other.z_mask).count("1") + bin(self.z_mask & other.x_mask).count("1")
        return s % 2 == 0

    def __repr__(self):
        return f"PauliTerm({self.label!r})"


def _same_n(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"qubit count mismatch: {a} vs {b}")


def multiply_terms(a: PauliTerm, b: PauliTerm) -> tuple[complex, PauliTerm]:
    """Return ``(phase, product)`` with ``phase * product == a @ b``."""
    _same_n(a.n, b.n)

    def pc(v):
        return bin(v).count("1")

    x3 = a.x_mask ^ b.x_mask
    z3 = a.z_mask ^ b.z_mask
    e = (pc(a.x_mask & a.z_mask) + pc(b.x_mask & b.z_mask) + 2 * pc(a.z_mask & b.x_mask) - pc(x3 & z3)) % 4
    return _I_POWERS[e], PauliTerm(a.n, x3, z3)


class OperatorSum:
    """Immutable sum ``sum_s w_s P_s`` over n-qubit Pauli strings.

    Terms are merged and stored in canonical order. Use :meth:`prune` to drop
    small weights; construction alone only merges duplicates.
    """

    __slots__ = ("n", "x", "z", "w")

    def __init__(self, n: int, x=(), z=(), w=(), *, _canonical: bool = False):
        n = _check_n(n)
        x = np.asarray(x, dtype=np.int64).reshape(-1)
        z = np.asarray(z, dtype=np.int64).reshape(-1)
        w = np.asarray(w, dtype=np.complex128).reshape(-1)
        if not (x.shape == z.shape == w.shape):
            raise ValueError("x, z and w must have equal length")
        if not _canonical and x.shape[0]:
            full = (1 << n) - 1
            if np.any((x & ~full) != 0) or np.any((z & ~full) != 0) or np.any(x < 0) or np.any(z < 0):
                raise DimensionError(f"masks do not fit in {n} qubits")
            x, z, w = kernels.merge(x, z, w, n)
        for arr in (x, z, w):
            arr.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    def __setattr__(self, name, value):
        raise AttributeError("OperatorSum is immutable")

    # construction -----------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "OperatorSum":
        return cls(n, _canonical=True)

    @classmethod
    def identity(cls, n: int, weight: complex = 1.0) -> "OperatorSum":
        return cls(n, [0], [0], [weight])

    @classmethod
    def from_terms(cls, n: int, terms: Mapping[str, complex] | Iterable[tuple[str, complex]]) -> "OperatorSum":
        """Build from ``{label: weight}`` or ``[(label, weight), ...]``."""
        items = terms.items() if isinstance(terms, Mapping) else terms
        xs, zs, ws = [], [], []
        for label, weight in items:
            p = PauliTerm.from_label(label)
            _same_n(n, p.n)
            xs.append(p.x_mask)
            zs.append(p.z_mask)
            ws.append(weight)
        return cls(n, xs, zs, ws)

    @classmethod
    def from_term(cls, term: PauliTerm, weight: complex = 1.0) -> "OperatorSum":
        return cls(term.n, [term.x_mask], [term.z_mask], [weight], _canonical=True)

    # inspection -------------------------------------------------------------

    @property
    def term_count(self) -> int:
        return int(self.x.shape[0])

    def __len__(self):
        return self.term_count

    def __iter__(self) -> Iterator[tuple[PauliTerm, complex]]:
        for x, z, w in zip(self.x, self.z, self.w):
            yield PauliTerm(self.n, int(x), int(z)), complex(w)

    def to_dict(self) -> dict[str, complex]:
        return {p.label: w for p, w in self}

    def coefficient(self, label: str) -> complex:
        p = PauliTerm.from_label(label)
        _same_n(self.n, p.n)
        hit = np.nonzero((self.x == p.x_mask) & (self.z == p.z_mask))[0]
        return complex(self.w[hit[0]]) if hit.size else 0j

    @property
    def is_hermitian(self) -> bool:
        return bool(np.all(self.w.imag == 0))

    def __eq__(self, other):
        if not isinstance(other, OperatorSum):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None

    def __repr__(self):
        if not self.term_count:
            return f"OperatorSum(n={self.n}, 0)"
        body = " + ".join(f"({w:.6g})*{p.label}" for p, w in list(self)[:8])
        more = f" + ... ({self.term_count} terms)" if self.term_count > 8 else ""
        return f"OperatorSum(n={self.n}, {body}{more})"

    # algebra ---------------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, c):
        if isinstance(c, OperatorSum):
            return NotImplemented
        return scale(self, c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return scale(self, 1.0 / c)

    def __matmul__(self, other):
        return multiply(self, other)

    def dagger(self) -> "OperatorSum":
        return dagger(self)

    def prune(self, tol: float = PRUNE_TOL) -> "OperatorSum":
        return prune(self, tol)

    # serialization ----------------------------------------------------------

    def to_records(self) -> list[dict]:
        return [{"pauli_label": p.label, "weight_re": w.real, "weight_im": w.imag} for p, w in self]

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "OperatorSum":
        records = list(records)
        if not records:
            raise ValueError("cannot infer qubit count from an empty record list")
        n = len(records[0]["pauli_label"])
        return cls.from_terms(
            n, [(r["pauli_label"], complex(r["weight_re"], r["weight_im"])) for r in records]
        )


def add(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    _same_n(a.n, b.n)
    if not b.term_count:
        return a
    if not a.term_count:
        return b
    x, z, w = kernels.merge(
        np.concatenate([a.x, b.x]), np.concatenate([a.z, b.z]), np.concatenate([a.w, b.w]), a.n
    )
    return OperatorSum(a.n, x, z, w, _canonical=True)


def linear_combination(pairs: Iterable[tuple[complex, OperatorSum]]) -> OperatorSum:
    """``sum_i c_i * op_i`` with a single merge pass."""
    pairs = [(c, op) for c, op in pairs]
    if not pairs:
        raise ValueError("empty combination")
    n = pairs[0][1].n
    for _, op in pairs:
        _same_n(n, op.n)
    x = np.concatenate([op.x for _, op in pairs])
    z = np.concatenate([op.z for _, op in pairs])
    w = np.concatenate([op.w * c for c, op in pairs])
    x, z, w = kernels.merge(x, z, w, n)
    return OperatorSum(n, x, z, w, _canonical=True)


def scale(a: OperatorSum, c: complex) -> OperatorSum:
    return OperatorSum(a.n, a.x, a.z, a.w * complex(c), _canonical=True)


def dagger(a: OperatorSum) -> OperatorSum:
    # Pauli strings are self-adjoint
    return OperatorSum(a.n, a.x, a.z, np.conj(a.w), _canonical=True)


def prune(a: OperatorSum, tol: float = PRUNE_TOL) -> OperatorSum:
    keep = np.abs(a.w) >= tol
    if keep.all():
        return a
    return OperatorSum(a.n, a.x[keep], a.z[keep], a.w[keep], _canonical=True)


def _pairs(a: OperatorSum, b: OperatorSum, mode: int) -> OperatorSum:
    _same_n(a.n, b.n)
    x, z, w = kernels.pair_products(a.x, a.z, a.w, b.x, b.z, b.w, a.n, mode)
    return OperatorSum(a.n, x, z, w, _canonical=True)


def multiply(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """Operator product ``a @ b`` (merged, not pruned)."""
    return _pairs(a, b, kernels.MODE_PRODUCT)


def commutator(a: OperatorSum, b: OperatorSum, tol: float = PRUNE_TOL) -> OperatorSum:
    """``ab - ba``; commuting string pairs are skipped."""
    return prune(_pairs(a, b, kernels.MODE_COMMUTATOR), tol)


def anticommutator(a: OperatorSum, b: OperatorSum, tol: float = PRUNE_TOL) -> OperatorSum:
    """``ab + ba``; anticommuting string pairs are skipped."""
    return prune(_pairs(a, b, kernels.MODE_ANTICOMMUTATOR), tol)
