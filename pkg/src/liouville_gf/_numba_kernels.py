"""Numba kernels for Pauli-sum products and statevector application.

Masks are int64 (bit q = qubit q). A term with masks (x, z) stands for
``i**popcount(x & z) * X**x Z**z`` so that x = z = 1 on a qubit is Y.
Canonical key is ``(x << n) | z``, which orders terms by (x, z).
"""

import numpy as np
from numba import njit

MODE_PRODUCT = 0
MODE_COMMUTATOR = 1
MODE_ANTICOMMUTATOR = 2

DENSE_MAX_QUBITS = 10


@njit(cache=True, inline="always")
def _popcount(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@njit(cache=True, inline="always")
def _times_i_power(c, e):
    # exact multiplication by i**e (no rounding)
    if e == 0:
        return c
    if e == 1:
        return complex(-c.imag, c.real)
    if e == 2:
        return complex(-c.real, -c.imag)
    return complex(c.imag, -c.real)


@njit(cache=True)
def _pair_terms(ax, az, aw, bx, bz, bw, mode):
    """All surviving pair products, unmerged, in (i, j) row-major order."""
    ma = ax.shape[0]
    mb = bx.shape[0]
    ya = np.empty(ma, np.int64)
    yb = np.empty(mb, np.int64)
    for i in range(ma):
        ya[i] = _popcount(ax[i] & az[i])
    for j in range(mb):
        yb[j] = _popcount(bx[j] & bz[j])
    keys_x = np.empty(ma * mb, np.int64)
    keys_z = np.empty(ma * mb, np.int64)
    vals = np.empty(ma * mb, np.complex128)
    cnt = 0
    scale = 1.0 if mode == MODE_PRODUCT else 2.0
    for i in range(ma):
        x1 = ax[i]
        z1 = az[i]
        for j in range(mb):
            x2 = bx[j]
            z2 = bz[j]
            if mode != MODE_PRODUCT:
                s = (_popcount(x1 & z2) + _popcount(z1 & x2)) & 1
                if mode == MODE_COMMUTATOR and s == 0:
                    continue
                if mode == MODE_ANTICOMMUTATOR and s == 1:
                    continue
            x3 = x1 ^ x2
            z3 = z1 ^ z2
            e = (ya[i] + yb[j] + 2 * _popcount(z1 & x2) - _popcount(x3 & z3)) & 3
            keys_x[cnt] = x3
            keys_z[cnt] = z3
            vals[cnt] = _times_i_power(aw[i] * bw[j] * scale, e)
            cnt += 1
    return keys_x[:cnt], keys_z[:cnt], vals[:cnt]


@njit(cache=True)
def _pair_products_dense(ax, az, aw, bx, bz, bw, n, mode):
    size = 1 << (2 * n)
    acc = np.zeros(size, np.complex128)
    touched = np.zeros(size, np.bool_)
    ma = ax.shape[0]
    mb = bx.shape[0]
    ya = np.empty(ma, np.int64)
    yb = np.empty(mb, np.int64)
    for i in range(ma):
        ya[i] = _popcount(ax[i] & az[i])
    for j in range(mb):
        yb[j] = _popcount(bx[j] & bz[j])
    scale = 1.0 if mode == MODE_PRODUCT else 2.0
    for i in range(ma):
        x1 = ax[i]
        z1 = az[i]
        for j in range(mb):
            x2 = bx[j]
            z2 = bz[j]
            if mode != MODE_PRODUCT:
                s = (_popcount(x1 & z2) + _popcount(z1 & x2)) & 1
                if mode == MODE_COMMUTATOR and s == 0:
                    continue
                if mode == MODE_ANTICOMMUTATOR and s == 1:
                    continue
            x3 = x1 ^ x2
            z3 = z1 ^ z2
            e = (ya[i] + yb[j] + 2 * _popcount(z1 & x2) - _popcount(x3 & z3)) & 3
            k = (x3 << n) | z3
            acc[k] += _times_i_power(aw[i] * bw[j] * scale, e)
            touched[k] = True
    idx = np.nonzero(touched)[0]
    mask = (1 << n) - 1
    ox = np.empty(idx.shape[0], np.int64)
    oz = np.empty(idx.shape[0], np.int64)
    ow = np.empty(idx.shape[0], np.complex128)
    for t in range(idx.shape[0]):
        k = idx[t]
        ox[t] = k >> n
        oz[t] = k & mask
        ow[t] = acc[k]
    return ox, oz, ow


@njit(cache=True)
def merge(x, z, w, n):
    """Sort terms canonically and sum duplicates in input order."""
    m = x.shape[0]
    keys = np.empty(m, np.int64)
    for t in range(m):
        keys[t] = (x[t] << n) | z[t]
    order = np.argsort(keys, kind="mergesort")
    ox = np.empty(m, np.int64)
    oz = np.empty(m, np.int64)
    ow = np.empty(m, np.complex128)
    cnt = -1
    last = -1
    for t in range(m):
        k = keys[order[t]]
        if k != last:
            cnt += 1
            ox[cnt] = x[order[t]]
            oz[cnt] = z[order[t]]
            ow[cnt] = w[order[t]]
            last = k
        else:
            ow[cnt] += w[order[t]]
    cnt += 1
    return ox[:cnt], oz[:cnt], ow[:cnt]


@njit(cache=True)
def pair_products(ax, az, aw, bx, bz, bw, n, mode):
    """Merged Pauli expansion of a*b (mode 0), [a, b] (1) or {a, b} (2)."""
    if n <= DENSE_MAX_QUBITS:
        return _pair_products_dense(ax, az, aw, bx, bz, bw, n, mode)
    kx, kz, kv = _pair_terms(ax, az, aw, bx, bz, bw, mode)
    return merge(kx, kz, kv, n)


@njit(cache=True)
def apply_sum(x, z, w, psi):
    """Return (sum_j w_j P_j) psi."""
    dim = psi.shape[0]
    out = np.zeros(dim, np.complex128)
    for j in range(x.shape[0]):
        xj = x[j]
        zj = z[j]
        c = _times_i_power(w[j], _popcount(xj & zj) & 3)
        for b in range(dim):
            v = c * psi[b]
            if _popcount(zj & b) & 1:
                out[b ^ xj] -= v
            else:
                out[b ^ xj] += v
    return out


@njit(cache=True)
def expectations(x, z, psi):
    """Per-term <psi|P_j|psi>."""
    dim = psi.shape[0]
    m = x.shape[0]
    out = np.empty(m, np.complex128)
    for j in range(m):
        xj = x[j]
        zj = z[j]
        acc = 0.0 + 0.0j
        for b in range(dim):
            v = np.conj(psi[b ^ xj]) * psi[b]
            if _popcount(zj & b) & 1:
                acc -= v
            else:
                acc += v
        out[j] = _times_i_power(acc, _popcount(xj & zj) & 3)
    return out
