"""Green's functions from recursion coefficients.

A truncated recursion is a Jacobi matrix J with diagonal alphas and
off-diagonal betas. Its eigenvalues are the poles of G_rr and the squared
first eigenvector components the residues. The off-diagonal elements follow
from the overlaps m_k with ``g_k(z) = Q_k(z) + L_k(z) G_rr(z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .recursion import RecursionOutput


@dataclass(frozen=True)
class ContinuedFraction:
    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float).reshape(-1)
        b = np.asarray(self.betas, dtype=float).reshape(-1)
        if a.shape[0] < 1:
            raise ValueError("need at least one alpha")
        if b.shape[0] != a.shape[0] - 1:
            raise ValueError(f"need {a.shape[0] - 1} betas, got {b.shape[0]}")
        if np.any(b <= 0):
            raise ValueError("betas must be strictly positive")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)

    @property
    def k(self) -> int:
        return self.alphas.shape[0] - 1

    @classmethod
    def from_recursion(cls, out: RecursionOutput, iteration: int | None = None) -> "ContinuedFraction":
        """Fraction after ``iteration`` steps, i.e. alpha_0..alpha_{iteration-1}.

        Iterations past a clean termination return the full fraction.
        """
        count = len(out.alphas) if iteration is None else min(iteration, len(out.alphas))
        if count < 1:
            raise ValueError("iteration must be at least 1")
        return cls(out.alphas[:count], out.betas[: count - 1])

    def jacobi(self) -> np.ndarray:
        return np.diag(self.alphas) + np.diag(self.betas, 1) + np.diag(self.betas, -1)


@dataclass(frozen=True)
class PoleResidueForm:
    """``G(z) = sum_p residues[p] / (z - poles[p])``."""

    poles: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.poles, dtype=float).reshape(-1)
        r = np.asarray(self.residues, dtype=float).reshape(-1)
        if p.shape != r.shape:
            raise ValueError("poles and residues must have the same length")
        order = np.argsort(p, kind="stable")
        object.__setattr__(self, "poles", p[order])
        object.__setattr__(self, "residues", r[order])

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.residues))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.sum(self.residues / (z[..., None] - self.poles), axis=-1)

    def merged(self, tol: float = 1e-9) -> "PoleResidueForm":
        """Combine poles closer than ``tol`` and drop zero residues."""
        poles, res = [], []
        for p, r in zip(self.poles, self.residues):
            if poles and p - poles[-1] <= tol:
                w = res[-1] + r
                if w != 0:
                    poles[-1] = (poles[-1] * res[-1] + p * r) / w if abs(w) > 1e-300 else poles[-1]
                res[-1] = w
            else:
                poles.append(p)
                res.append(r)
        keep = [i for i, r in enumerate(res) if r != 0.0]
        return PoleResidueForm(np.array(poles)[keep], np.array(res)[keep])

    def to_dict(self) -> dict:
        return {"poles": self.poles.tolist(), "residues": self.residues.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PoleResidueForm":
        return cls(d["poles"], d["residues"])


@dataclass(frozen=True)
class SpectralDensity:
    grid: np.ndarray
    values: np.ndarray
    eta: float

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def to_csv(self) -> str:
        lines = ["omega,A"]
        lines += [f"{w:.10g},{a:.17g}" for w, a in zip(self.grid, self.values)]
        return "\n".join(lines) + "\n"


def _check_upper(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("retarded evaluation needs Im z > 0")
    return z


def cf_eval(cf: ContinuedFraction, z):
    """Bottom-up evaluation of the continued fraction at ``z`` (Im z > 0)."""
    z = _check_upper(z)
    tail = np.zeros_like(z)
    for j in range(cf.k, 0, -1):
        tail = cf.betas[j - 1] ** 2 / (z - cf.alphas[j] - tail)
    out = 1.0 / (z - cf.alphas[0] - tail)
    return out if out.ndim else complex(out)


def jacobi_eigh(cf: ContinuedFraction):
    if cf.k == 0:
        return cf.alphas.copy(), np.ones((1, 1))
    return scipy.linalg.eigh_tridiagonal(cf.alphas, cf.betas)


def poles_residues(cf: ContinuedFraction) -> PoleResidueForm:
    poles, vecs = jacobi_eigh(cf)
    return PoleResidueForm(poles, vecs[0] ** 2)


def offdiag_residues(cf: ContinuedFraction, m: Sequence[float]) -> PoleResidueForm:
    """Residues of ``sum_k m_k g_k`` at the poles of the diagonal element.

    ``g_k`` has residue ``U[k, p] U[0, p]`` at pole p, which equals
    ``L_k(w_p) * residue_p`` with ``U`` the Jacobi eigenvectors.
    """
    m = np.asarray(m, dtype=float)
    if m.shape[0] != cf.k + 1:
        raise ValueError(f"need {cf.k + 1} m coefficients, got {m.shape[0]}")
    poles, vecs = jacobi_eigh(cf)
    return PoleResidueForm(poles, (m @ vecs) * vecs[0])


def polynomials_LQ(cf: ContinuedFraction, z, k: int):
    """``L_0..L_k`` and ``Q_0..Q_k`` at ``z`` (rows indexed by degree).

    ``beta_{j+1} X_{j+1} = (z - alpha_j) X_j - beta_j X_{j-1}`` with
    ``L_{-1} = 0, L_0 = 1, Q_0 = 0, Q_1 = -1/beta_1``.
    """
    if not 0 <= k <= cf.k:
        raise ValueError(f"k must lie in [0, {cf.k}]")
    z = np.asarray(z, dtype=complex)
    L = np.zeros((k + 1,) + z.shape, dtype=complex)
    Q = np.zeros_like(L)
    L[0] = 1.0
    if k >= 1:
        L[1] = (z - cf.alphas[0]) / cf.betas[0]
        Q[1] = -1.0 / cf.betas[0]
    for j in range(1, k):
        b_next, b_j = cf.betas[j], cf.betas[j - 1]
        L[j + 1] = ((z - cf.alphas[j]) * L[j] - b_j * L[j - 1]) / b_next
        Q[j + 1] = ((z - cf.alphas[j]) * Q[j] - b_j * Q[j - 1]) / b_next
    return L, Q


def offdiag_eval(cf: ContinuedFraction, m: Sequence[float], z, k: int | None = None):
    """``sum_{k'<=k} m_k' (Q_k'(z) + L_k'(z) G_rr(z))`` at truncation k."""
    k = cf.k if k is None else k
    m = np.asarray(m, dtype=float)
    if m.shape[0] != k + 1:
        raise ValueError(f"need {k + 1} m coefficients, got {m.shape[0]}")
    cut = ContinuedFraction(cf.alphas[: k + 1], cf.betas[:k])
    z = _check_upper(z)
    L, Q = polynomials_LQ(cut, z, k)
    g = cf_eval(cut, z)
    out = np.tensordot(m, Q + L * g, axes=1)
    return out if np.ndim(out) else complex(out)


def frequency_grid(omega_min: float = -10.0, omega_max: float = 10.0, step: float = 0.01) -> np.ndarray:
    count = int(round((omega_max - omega_min) / step)) + 1
    return omega_min + step * np.arange(count)


def spectral_density(form, grid, eta: float = 0.05) -> SpectralDensity:
    """``A(w) = -Im G(w + i eta) / pi`` on a uniform grid."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    grid = np.asarray(grid, dtype=float)
    steps = np.diff(grid)
    if grid.shape[0] < 2 or np.any(np.abs(steps - steps[0]) > 1e-9 * max(1.0, abs(steps[0]))):
        raise ValueError("grid must be uniform with at least two points")
    z = grid + 1j * eta
    if isinstance(form, ContinuedFraction):
        g = cf_eval(form, z)
    elif isinstance(form, PoleResidueForm):
        g = form(z)
    else:
        raise TypeError(f"cannot evaluate {type(form).__name__}")
    return SpectralDensity(grid, -np.asarray(g).imag / np.pi, float(eta))


def has_zero_pole(form: PoleResidueForm, tol: float = 1e-6, weight_tol: float = 1e-8) -> bool:
    hit = (np.abs(form.poles) <= tol) & (np.abs(form.residues) > weight_tol)
    return bool(np.any(hit))
