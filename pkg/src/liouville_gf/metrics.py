"""Galitskii-Migdal energies and Wasserstein convergence.

At zero temperature the contour integral reduces to a sum over the negative
poles of each element; a pole sitting at the chemical potential (within
``ZERO_POLE_TOL``) counts with weight 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .greens import (
    ContinuedFraction,
    PoleResidueForm,
    SpectralDensity,
    offdiag_residues,
    poles_residues,
)
from .lattice import UP, LatticeModel, h0_matrix
from .recursion import RecursionOutput

ZERO_POLE_TOL = 1e-9
NORMALIZATION_SLACK = 0.05


class NormalizationError(ValueError):
    pass


# Wasserstein ------------------------------------------------------------------


def _discrete_w1(pa, wa, pb, wb) -> float:
    pts = np.concatenate([pa, pb])
    wts = np.concatenate([wa, -wb])
    order = np.argsort(pts, kind="stable")
    pts, cdf = pts[order], np.cumsum(wts[order])
    return float(np.sum(np.abs(cdf[:-1]) * np.diff(pts)))


def _normalizer(total: float, signed: bool) -> float:
    if signed:
        return 1.0
    if abs(total - 1.0) > NORMALIZATION_SLACK:
        raise NormalizationError(f"total weight {total:.4f} is not within 5% of 1")
    return total


def wasserstein(a, b, *, signed: bool = False, mass_tol: float = 1e-8) -> float:
    """One-dimensional earth-mover distance between two spectra.

    Pole/residue forms are compared exactly as weighted point masses; two
    :class:`SpectralDensity` on a common grid by the trapezoid area between
    their cumulative densities. Unit-weight inputs are renormalized first.
    With ``signed=True`` the weights may be negative (off-diagonal
    elements): no renormalization, but both totals must agree within
    ``mass_tol``.
    """
    if isinstance(a, PoleResidueForm) and isinstance(b, PoleResidueForm):
        ta, tb = a.total_weight, b.total_weight
        if signed and abs(ta - tb) > mass_tol:
            raise NormalizationError(f"total weights differ: {ta:.3e} vs {tb:.3e}")
        return _discrete_w1(
            a.poles, a.residues / _normalizer(ta, signed), b.poles, b.residues / _normalizer(tb, signed)
        )
    if isinstance(a, SpectralDensity) and isinstance(b, SpectralDensity):
        if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid):
            raise ValueError("spectral densities must share a grid")
        fa = _cumulative(a.grid, a.values)
        fb = _cumulative(b.grid, b.values)
        if not signed:
            fa = fa / _normalizer(fa[-1], False)
            fb = fb / _normalizer(fb[-1], False)
        return float(np.trapezoid(np.abs(fa - fb), a.grid))
    raise TypeError("wasserstein needs two PoleResidueForm or two SpectralDensity inputs")


def _cumulative(grid, values):
    steps = np.diff(grid)
    return np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * steps)])


# Green's matrix and Galitskii-Migdal ------------------------------------------


@dataclass
class GreensMatrixAtIteration:
    """Residue columns of the Green's matrix at iteration k (k alphas).

    ``columns[spin][r][r_prime]`` is the pole/residue form of the element
    obtained from seed r with target r' (site indices within the block). A
    missing spin block is filled from the other one when ``paramagnetic``.
    """

    k: int
    model: LatticeModel
    columns: dict[int, dict[int, dict[int, PoleResidueForm]]] = field(default_factory=dict)
    paramagnetic: bool = True

    def element(self, r_prime: int, r: int, spin: int = UP) -> PoleResidueForm:
        return self._block(spin)[r][r_prime]

    def _block(self, spin):
        if spin in self.columns:
            return self.columns[spin]
        if self.paramagnetic and self.columns:
            return next(iter(self.columns.values()))
        raise KeyError(f"no columns for spin {spin}")


def greens_matrix(
    outputs: Sequence[RecursionOutput],
    model: LatticeModel,
    iteration: int,
    *,
    reflect: bool = True,
    paramagnetic: bool = True,
) -> GreensMatrixAtIteration:
    """Residue columns at ``iteration`` (alpha_0..alpha_{iteration-1}).

    Targets are read from each output's m coefficients. With ``reflect`` the
    columns of unseeded sites are filled by chain reflection i -> L-1-i.
    """
    L = model.sites
    cols: dict[int, dict[int, dict[int, PoleResidueForm]]] = {}
    for out in outputs:
        site, spin = model.site_spin(out.seed_mode)
        cf = ContinuedFraction.from_recursion(out, iteration)
        col = {site: poles_residues(cf)}
        for target, m in out.m_coeffs.items():
            t_site, t_spin = model.site_spin(target)
            if t_spin != spin or t_site == site:
                continue
            col[t_site] = offdiag_residues(cf, m[: cf.k + 1])
        cols.setdefault(spin, {})[site] = col
    if reflect:
        for block in cols.values():
            for site in list(block):
                mirror = L - 1 - site
                if mirror not in block:
                    block[mirror] = {L - 1 - t: form for t, form in block[site].items()}
    return GreensMatrixAtIteration(k=iteration, model=model, columns=cols, paramagnetic=paramagnetic)


def occupied_weights(poles: np.ndarray, tol0: float = ZERO_POLE_TOL) -> np.ndarray:
    return np.where(poles < -tol0, 1.0, np.where(np.abs(poles) <= tol0, 0.5, 0.0))


def galitskii_migdal(G: GreensMatrixAtIteration, H0: np.ndarray, tol0: float = ZERO_POLE_TOL) -> float:
    """``E = 1/2 sum_spin sum_{r r'} sum_{occupied p} (w_p d_rr' + H0_rr') Res G_r'r(w_p)``."""
    L = G.model.sites
    H0 = np.asarray(H0, dtype=float)
    if H0.shape != (L, L):
        raise ValueError(f"H0 must be {L}x{L}")
    energy = 0.0
    for spin in (0, 1):
        block = G._block(spin)
        for r in range(L):
            if r not in block:
                raise KeyError(f"missing column for site {r}, spin {spin}")
            col = block[r]
            for r_prime in range(L):
                if H0[r, r_prime] == 0.0 and r_prime != r:
                    continue
                if r_prime not in col:
                    raise KeyError(f"missing element ({r_prime}, {r}) for spin {spin}")
                form = col[r_prime]
                occ = occupied_weights(form.poles, tol0)
                factor = H0[r, r_prime] + (form.poles if r_prime == r else 0.0)
                energy += float(np.sum(occ * factor * form.residues))
    return 0.5 * energy


# convergence ------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRecord:
    k: int
    wasserstein: float
    pauli_count: int
    energy_gm: float
    energy_expectation: float

    @property
    def even(self) -> bool:
        return self.k % 2 == 0


@dataclass
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    count: int


def line_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 2:
        return LineFit(float("nan"), float("nan"), float("nan"), int(x.shape[0]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return LineFit(float(slope), float(intercept), float(r2), int(x.shape[0]))


@dataclass
class ConvergenceSeries:
    records: list[ConvergenceRecord]
    exp_fit: LineFit
    power_fit: LineFit
    floor: float

    def even(self) -> list[ConvergenceRecord]:
        return [r for r in self.records if r.even]


def distance_at(out: RecursionOutput, iteration: int, reference: PoleResidueForm) -> float:
    cf = ContinuedFraction.from_recursion(out, iteration)
    return wasserstein(poles_residues(cf), reference)


def convergence_series(
    outputs: Sequence[RecursionOutput],
    model: LatticeModel,
    reference: PoleResidueForm | None,
    energy_expectation: float,
    H0: np.ndarray | None = None,
    *,
    distance_seed: int | None = None,
    reflect: bool = True,
    paramagnetic: bool = True,
    floor: float = 1e-5,
    power_window: tuple[int, int] = (2, 14),
) -> ConvergenceSeries:
    """Per-iteration distance, Pauli count and energies.

    ``iteration`` n uses alpha_0..alpha_{n-1}; the distance is taken on the
    diagonal element of ``distance_seed`` (default: the first output) and
    the Pauli count is that of the newest operator f_{n-1}. The exponential
    fit covers even iterations before the distance first drops below
    ``floor``; the power-law fit covers even iterations in ``power_window``.
    Without a reference the distances are NaN; without full seed coverage
    of the Green's matrix the energies are NaN.
    """
    if not outputs:
        raise ValueError("need at least one recursion output")
    H0 = h0_matrix(model) if H0 is None else H0
    main = outputs[0] if distance_seed is None else next(o for o in outputs if o.seed_mode == distance_seed)
    last = max(o.k for o in outputs) + 1
    records = []
    for n in range(1, last + 1):
        G = greens_matrix(outputs, model, n, reflect=reflect, paramagnetic=paramagnetic)
        try:
            e_gm = galitskii_migdal(G, H0)
        except KeyError:
            e_gm = float("nan")
        p = main.pauli_counts[min(n, len(main.pauli_counts)) - 1]
        d = float("nan") if reference is None else distance_at(main, n, reference)
        records.append(
            ConvergenceRecord(
                k=n,
                wasserstein=d,
                pauli_count=int(p),
                energy_gm=e_gm,
                energy_expectation=float(energy_expectation),
            )
        )
    pre_floor = []
    for r in records:
        if not np.isfinite(r.wasserstein):
            continue
        if r.wasserstein < floor:
            break
        if r.even:
            pre_floor.append(r)
    exp_fit = line_fit([r.k for r in pre_floor], [np.log(r.wasserstein) for r in pre_floor])
    lo, hi = power_window
    win = [r for r in records if r.even and lo <= r.k <= hi and r.wasserstein > 0]
    power_fit = line_fit([np.log(r.pauli_count) for r in win], [np.log(r.wasserstein) for r in win])
    return ConvergenceSeries(records, exp_fit, power_fit, floor)

