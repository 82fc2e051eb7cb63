"""Vectorized numpy versions of the kernels in ``_numba_kernels``.

Same signatures and conventions; used when JIT is disabled.
"""

import numpy as np

MODE_PRODUCT = 0
MODE_COMMUTATOR = 1
MODE_ANTICOMMUTATOR = 2

DENSE_MAX_QUBITS = 10
_CHUNK = 1 << 21

_I_POWERS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


def _popcount(v):
    return np.bitwise_count(v).astype(np.int64)


def _times_i_power(c, e):
    # exact multiplication by i**e, elementwise
    re, im = c.real, c.imag
    out_re = np.where(e == 0, re, np.where(e == 1, -im, np.where(e == 2, -re, im)))
    out_im = np.where(e == 0, im, np.where(e == 1, re, np.where(e == 2, -im, -re)))
    return out_re + 1j * out_im


def _chunk_pairs(ax, az, aw, bx, bz, bw, mode):
    """Yield (x, z, w) of surviving pair products, in (i, j) row-major order."""
    ma, mb = ax.shape[0], bx.shape[0]
    if ma == 0 or mb == 0:
        return
    ya = _popcount(ax & az)
    yb = _popcount(bx & bz)
    scale = 1.0 if mode == MODE_PRODUCT else 2.0
    rows = max(1, _CHUNK // mb)
    for start in range(0, ma, rows):
        sl = slice(start, start + rows)
        x1 = ax[sl, None]
        z1 = az[sl, None]
        x3 = x1 ^ bx[None, :]
        z3 = z1 ^ bz[None, :]
        e = (ya[sl, None] + yb[None, :] + 2 * _popcount(z1 & bx[None, :]) - _popcount(x3 & z3)) & 3
        c = (aw[sl, None] * scale) * bw[None, :]
        if mode != MODE_PRODUCT:
            s = (_popcount(x1 & bz[None, :]) + _popcount(z1 & bx[None, :])) & 1
            keep = s == 1 if mode == MODE_COMMUTATOR else s == 0
            x3, z3, e, c = x3[keep], z3[keep], e[keep], c[keep]
        yield x3.ravel(), z3.ravel(), _times_i_power(c.ravel(), e.ravel())


def merge(x, z, w, n):
    """Sort terms canonically and sum duplicates in input order."""
    if x.shape[0] == 0:
        return x.astype(np.int64), z.astype(np.int64), w.astype(np.complex128)
    keys = (x << n) | z
    uniq, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=w.real, minlength=uniq.shape[0])
    im = np.bincount(inv, weights=w.imag, minlength=uniq.shape[0])
    mask = (1 << n) - 1
    return (uniq >> n).astype(np.int64), (uniq & mask).astype(np.int64), re + 1j * im


def pair_products(ax, az, aw, bx, bz, bw, n, mode):
    """Merged Pauli expansion of a*b (mode 0), [a, b] (1) or {a, b} (2)."""
    if n <= DENSE_MAX_QUBITS:
        size = 1 << (2 * n)
        re = np.zeros(size)
        im = np.zeros(size)
        hits = np.zeros(size, dtype=np.int64)
        for x3, z3, c in _chunk_pairs(ax, az, aw, bx, bz, bw, mode):
            k = (x3 << n) | z3
            re += np.bincount(k, weights=c.real, minlength=size)
            im += np.bincount(k, weights=c.imag, minlength=size)
            hits += np.bincount(k, minlength=size)
        idx = np.nonzero(hits)[0]
        mask = (1 << n) - 1
        return (idx >> n).astype(np.int64), (idx & mask).astype(np.int64), re[idx] + 1j * im[idx]
    ox = np.empty(0, np.int64)
    oz = np.empty(0, np.int64)
    ow = np.empty(0, np.complex128)
    for x3, z3, c in _chunk_pairs(ax, az, aw, bx, bz, bw, mode):
        ox, oz, ow = merge(np.concatenate([ox, x3]), np.concatenate([oz, z3]), np.concatenate([ow, c]), n)
    return ox, oz, ow


def _term_blocks(x, dim):
    rows = max(1, _CHUNK // max(dim, 1))
    for start in range(0, x.shape[0], rows):
        yield slice(start, start + rows)


def apply_sum(x, z, w, psi):
    """Return (sum_j w_j P_j) psi."""
    dim = psi.shape[0]
    b = np.arange(dim, dtype=np.int64)
    re = np.zeros(dim)
    im = np.zeros(dim)
    for sl in _term_blocks(x, dim):
        c = _times_i_power(w[sl], _popcount(x[sl] & z[sl]) & 3)
        sign = 1 - 2 * (_popcount(z[sl, None] & b[None, :]) & 1)
        vals = (c[:, None] * sign) * psi[None, :]
        dest = (x[sl, None] ^ b[None, :]).ravel()
        re += np.bincount(dest, weights=vals.real.ravel(), minlength=dim)
        im += np.bincount(dest, weights=vals.imag.ravel(), minlength=dim)
    return re + 1j * im


def expectations(x, z, psi):
    """Per-term <psi|P_j|psi>."""
    dim = psi.shape[0]
    b = np.arange(dim, dtype=np.int64)
    out = np.empty(x.shape[0], np.complex128)
    for sl in _term_blocks(x, dim):
        sign = 1 - 2 * (_popcount(z[sl, None] & b[None, :]) & 1)
        raw = (np.conj(psi[x[sl, None] ^ b[None, :]]) * sign * psi[None, :]).sum(axis=1)
        out[sl] = _times_i_power(raw, _popcount(x[sl] & z[sl]) & 3)
    return out
