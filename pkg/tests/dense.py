"""Independent dense-matrix oracles for the tests.

Pauli strings are built with explicit Kronecker products; qubit q is bit q
of the basis index, so the rightmost Kronecker factor is qubit 0.
"""

from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def label_matrix(label):
    return reduce(np.kron, [PAULI[ch] for ch in reversed(label)])


def operator_matrix(op):
    dim = 1 << op.n
    out = np.zeros((dim, dim), dtype=complex)
    for term, w in op:
        out += w * label_matrix(term.label)
    return out


def annihilation(p, n):
    """Fermion lowering matrix with a parity string on modes below p."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |1> -> |0>, |0> empty
    factors = [Z] * p + [lower] + [I2] * (n - p - 1)
    return reduce(np.kron, list(reversed(factors)))


def hubbard_matrix(L, t, U, mu):
    n = 2 * L
    c = [annihilation(p, n) for p in range(n)]
    num = [ci.conj().T @ ci for ci in c]
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for s in (0, L):
        for i in range(L - 1):
            hop = c[s + i].conj().T @ c[s + i + 1]
            H -= t * (hop + hop.conj().T)
    for i in range(L):
        H += U * num[i] @ num[i + L]
        H -= mu * (num[i] + num[i + L])
    return H, c
