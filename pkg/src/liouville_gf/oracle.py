"""Brute-force references by full diagonalization.

Lehmann poles and residues of ``G_xy = <{c_x(t), c_y^dag}>`` for an exact
eigenstate, computed sector by sector and independent of the recursion.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .backend import QuantumState, apply, sector_indices, sparse_matrix
from .greens import PoleResidueForm
from .lattice import LatticeModel, jw_annihilation, jw_creation
from .pauli import OperatorSum

MAX_SITES = 6


def _sector_spectrum(Hs, model, sector):
    n_up, n_down = sector
    if not (0 <= n_up <= model.sites and 0 <= n_down <= model.sites):
        return None
    idx = sector_indices(model, n_up, n_down)
    block = Hs[idx][:, idx].toarray()
    vals, vecs = scipy.linalg.eigh(block)
    return idx, vals, vecs


def lehmann_greens(
    H: OperatorSum,
    model: LatticeModel,
    state: QuantumState,
    energy: float,
    modes=None,
    merge_tol: float = 1e-9,
) -> dict[tuple[int, int], PoleResidueForm]:
    """Pole/residue form of every ``G_xy`` (same spin) for an eigenstate."""
    if model.sites > MAX_SITES:
        raise ValueError(f"oracle is capped at {MAX_SITES} sites")
    if state.sector is None:
        raise ValueError("state needs a particle-number sector")
    Hs = sparse_matrix(H)
    n = model.n_qubits
    modes = list(range(n)) if modes is None else list(modes)
    n_up, n_down = state.sector
    cache = {}

    def spectrum(sector):
        if sector not in cache:
            cache[sector] = _sector_spectrum(Hs, model, sector)
        return cache[sector]

    def amplitudes(op, sector):
        spec = spectrum(sector)
        if spec is None:
            return None
        idx, vals, vecs = spec
        v = apply(op, state)[idx]
        return vals, np.conj(vecs.T) @ v

    out = {}
    for spin in (0, 1):
        spin_modes = [p for p in modes if model.site_spin(p)[1] == spin]
        dp = (1, 0) if spin == 0 else (0, 1)
        particle = (n_up + dp[0], n_down + dp[1])
        hole = (n_up - dp[0], n_down - dp[1])
        creat = {p: amplitudes(jw_creation(p, n), particle) for p in spin_modes}
        annih = {p: amplitudes(jw_annihilation(p, n), hole) for p in spin_modes}
        for x in spin_modes:
            for y in spin_modes:
                poles, res = [], []
                if creat[x] is not None:
                    vals, ax = creat[x]
                    _, ay = creat[y]
                    poles.append(vals - energy)
                    res.append(np.conj(ax) * ay)
                if annih[x] is not None:
                    vals, hx = annih[x]
                    _, hy = annih[y]
                    poles.append(energy - vals)
                    res.append(np.conj(hy) * hx)
                p = np.concatenate(poles) if poles else np.zeros(0)
                r = np.concatenate(res) if res else np.zeros(0)
                if np.any(np.abs(r.imag) > 1e-10):
                    raise ValueError("complex residues; only real models are supported")
                form = PoleResidueForm(p, r.real)
                out[(x, y)] = _drop_small(form.merged(merge_tol))
    return out


def _drop_small(form: PoleResidueForm, tol: float = 1e-14) -> PoleResidueForm:
    keep = np.abs(form.residues) > tol
    return PoleResidueForm(form.poles[keep], form.residues[keep])
