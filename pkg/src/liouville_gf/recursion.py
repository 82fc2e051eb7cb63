"""Hybrid three-term Liouvillian recursion.

Operators are built classically as Pauli sums; the coefficients that feed
back into the construction (alpha, beta and the overlaps m) are measured on
the supplied state through a :class:`MeasurementBackend`, so shot noise
propagates exactly as it would on hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backend import MeasurementBackend, QuantumState, measure_anticommutator
from .lattice import LatticeModel, jw_annihilation, jw_creation
from .pauli import PRUNE_TOL, OperatorSum, commutator, linear_combination, prune

# L(f) = [f, H] reproduces the retarded pole convention 1/(w - alpha)
F_H = "f_H"
H_F = "H_f"
SIGN_CONVENTIONS = (F_H, H_F)

BETA_TOL_EXACT = 1e-8

STOP_KMAX = "k_max"
STOP_BETA = "beta_below_tol"
STOP_NEGATIVE = "negative_norm"
STOP_CLAMPED = "negative_norm_clamped"

_KEY_ALPHA, _KEY_BETA, _KEY_M = 0, 1, 2


def default_tol_beta(shots: int) -> float:
    return 10.0 / math.sqrt(shots) if shots else BETA_TOL_EXACT


class AlgebraError(RuntimeError):
    """A quantity that must be real came out complex in exact arithmetic."""


class NegativeNorm(RuntimeError):
    """Measured beta^2 below -tol_beta: noise overwhelmed the signal."""

    def __init__(self, iteration: int, beta_sq: float, output: "RecursionOutput"):
        super().__init__(f"negative beta^2 = {beta_sq:.3e} measured at iteration {iteration}")
        self.iteration = iteration
        self.beta_sq = beta_sq
        self.output = output


@dataclass
class RecursionOutput:
    seed_mode: int
    sign_convention: str = F_H
    alphas: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    m_coeffs: dict[int, list[float]] = field(default_factory=dict)
    pauli_counts: list[int] = field(default_factory=list)
    alpha_stderr: list[float] = field(default_factory=list)
    beta_sq_stderr: list[float] = field(default_factory=list)
    terminated: str = ""
    terminated_k: int = -1
    operators: list[OperatorSum] | None = None

    @property
    def k(self) -> int:
        """Index of the last measured alpha."""
        return len(self.alphas) - 1

    @property
    def iterations(self) -> int:
        return len(self.alphas)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed_mode,
            "sign_convention": self.sign_convention,
            "alphas": list(self.alphas),
            "betas": list(self.betas),
            "m": {str(t): list(v) for t, v in self.m_coeffs.items()},
            "pauli_counts": list(self.pauli_counts),
            "alpha_stderr": list(self.alpha_stderr),
            "beta_sq_stderr": list(self.beta_sq_stderr),
            "terminated": {"reason": self.terminated, "k": self.terminated_k},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecursionOutput":
        return cls(
            seed_mode=int(d["seed"]),
            sign_convention=d["sign_convention"],
            alphas=[float(a) for a in d["alphas"]],
            betas=[float(b) for b in d["betas"]],
            m_coeffs={int(t): [float(x) for x in v] for t, v in d["m"].items()},
            pauli_counts=[int(p) for p in d["pauli_counts"]],
            alpha_stderr=[float(s) for s in d.get("alpha_stderr", [])],
            beta_sq_stderr=[float(s) for s in d.get("beta_sq_stderr", [])],
            terminated=d["terminated"]["reason"],
            terminated_k=int(d["terminated"]["k"]),
        )


def liouvillian_apply(H: OperatorSum, f: OperatorSum, sign_convention: str = F_H, tol: float = PRUNE_TOL) -> OperatorSum:
    if sign_convention == F_H:
        return commutator(f, H, tol)
    if sign_convention == H_F:
        return commutator(H, f, tol)
    raise ValueError(f"unknown sign convention {sign_convention!r}")


def recursion_step(
    H: OperatorSum,
    f_k: OperatorSum,
    f_km1: OperatorSum | None,
    alpha_k: float,
    beta_k: float,
    *,
    sign_convention: str = F_H,
    tol: float = PRUNE_TOL,
    lf_k: OperatorSum | None = None,
) -> OperatorSum:
    """Residual ``L(f_k) - alpha_k f_k - beta_k f_{k-1}``, i.e. beta_{k+1} f_{k+1}."""
    if lf_k is None:
        lf_k = liouvillian_apply(H, f_k, sign_convention, tol)
    parts = [(1.0, lf_k), (-alpha_k, f_k)]
    if f_km1 is not None and beta_k != 0.0:
        parts.append((-beta_k, f_km1))
    return prune(linear_combination(parts), tol)


def _real(value: complex, what: str, backend: MeasurementBackend | None) -> float:
    if (backend is None or not backend.sampled) and abs(value.imag) > 1e-8:
        raise AlgebraError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def measure_alpha(
    f_k: OperatorSum,
    H: OperatorSum,
    state: QuantumState,
    backend: MeasurementBackend | None = None,
    *,
    sign_convention: str = F_H,
    tol: float = PRUNE_TOL,
    lf_k: OperatorSum | None = None,
    key=None,
    return_stderr: bool = False,
):
    """``<{f_k^dag, L(f_k)}>`` for a normalized ``f_k``."""
    if lf_k is None:
        lf_k = liouvillian_apply(H, f_k, sign_convention, tol)
    value, err = measure_anticommutator(state, f_k, lf_k, backend, key)
    alpha = _real(value, "alpha", backend)
    return (alpha, err) if return_stderr else alpha


def measure_beta_sq(
    residual: OperatorSum,
    state: QuantumState,
    backend: MeasurementBackend | None = None,
    *,
    key=None,
    return_stderr: bool = False,
):
    """``<{r^dag, r}>``; non-negative in exact arithmetic."""
    value, err = measure_anticommutator(state, residual, residual, backend, key)
    beta_sq = _real(value, "beta^2", backend)
    return (beta_sq, err) if return_stderr else beta_sq


def measure_m(
    f_k: OperatorSum,
    r_prime: int,
    state: QuantumState,
    backend: MeasurementBackend | None = None,
    *,
    key=None,
) -> float:
    """Overlap ``<{f_k, c_{r'}^dag}>`` with a target mode."""
    # <{A^dag, B}> with A = f_k^dag, B = c_{r'}^dag
    c_dag = jw_creation(r_prime, f_k.n)
    value, _ = measure_anticommutator(state, f_k.dagger(), c_dag, backend, key)
    return _real(value, "m", backend)


def run_recursion(
    model: LatticeModel,
    H: OperatorSum,
    seed_mode: int,
    state: QuantumState,
    backend: MeasurementBackend | None = None,
    k_max: int = 30,
    tol_beta: float | None = None,
    offdiag_targets: Sequence[int] = (),
    *,
    sign_convention: str = F_H,
    prune_tol: float = PRUNE_TOL,
    negative_policy: str = "raise",
    keep_operators: bool = False,
) -> RecursionOutput:
    """Run the recursion from ``f_0 = c_r`` for up to ``k_max`` iterations.

    Iteration k (counted from 1) measures alpha_{k-1}, so a full run holds
    alpha_0..alpha_{k_max-1}. Each step k records m_k for every target, measures alpha_k, builds
    the residual and measures beta_{k+1}^2. |beta^2| <= tol_beta stops
    cleanly; beta^2 < -tol_beta raises :class:`NegativeNorm` (the partial
    output is attached) unless ``negative_policy == "clamp"``, which stops
    cleanly instead.
    """
    if sign_convention not in SIGN_CONVENTIONS:
        raise ValueError(f"unknown sign convention {sign_convention!r}")
    if negative_policy not in ("raise", "clamp"):
        raise ValueError(f"unknown negative_policy {negative_policy!r}")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    return _recurse(
        model, H, seed_mode, state, backend, k_max, tol_beta, offdiag_targets,
        sign_convention, prune_tol, negative_policy, keep_operators, None,
    )


def _recurse(
    model, H, seed_mode, state, backend, k_max, tol_beta, offdiag_targets,
    sign_convention, prune_tol, negative_policy, keep_operators, offsets,
) -> RecursionOutput:
    # offsets (alpha_0, beta_1, alpha_1, ...) are added to measured values;
    # used only to differentiate the recursion for error propagation
    backend = backend or MeasurementBackend.exact()
    if tol_beta is None:
        tol_beta = default_tol_beta(backend.shots)
    n = model.n_qubits
    if H.n != n or state.n != n:
        raise ValueError("model, Hamiltonian and state must agree on the qubit count")

    out = RecursionOutput(seed_mode=seed_mode, sign_convention=sign_convention)
    out.m_coeffs = {int(t): [] for t in offdiag_targets}
    if keep_operators:
        out.operators = []

    f = jw_annihilation(seed_mode, n)
    f_prev: OperatorSum | None = None
    beta = 0.0
    k = 0
    while True:
        out.pauli_counts.append(f.term_count)
        if keep_operators:
            out.operators.append(f)
        for t in out.m_coeffs:
            out.m_coeffs[t].append(measure_m(f, t, state, backend, key=(seed_mode, k, _KEY_M, t)))
        lf = liouvillian_apply(H, f, sign_convention, prune_tol)
        alpha, a_err = measure_alpha(
            f, H, state, backend, lf_k=lf, key=(seed_mode, k, _KEY_ALPHA, 0), return_stderr=True
        )
        if offsets is not None and 2 * k < len(offsets):
            alpha += offsets[2 * k]
        out.alphas.append(alpha)
        out.alpha_stderr.append(a_err)
        if k >= k_max - 1:
            out.terminated, out.terminated_k = STOP_KMAX, k
            return out
        residual = recursion_step(H, f, f_prev, alpha, beta, tol=prune_tol, lf_k=lf)
        beta_sq, b_err = measure_beta_sq(residual, state, backend, key=(seed_mode, k, _KEY_BETA, 0), return_stderr=True)
        if beta_sq < -tol_beta:
            if negative_policy == "clamp":
                out.terminated, out.terminated_k = STOP_CLAMPED, k
                return out
            out.terminated, out.terminated_k = STOP_NEGATIVE, k
            raise NegativeNorm(k, beta_sq, out)
        if beta_sq <= tol_beta:
            out.terminated, out.terminated_k = STOP_BETA, k
            return out
        beta = math.sqrt(beta_sq)
        if offsets is not None and 2 * k + 1 < len(offsets):
            beta += offsets[2 * k + 1]
        out.betas.append(beta)
        out.beta_sq_stderr.append(b_err)
        f_prev, f = f, residual / beta
        k += 1


def operator_inner(a: OperatorSum, b: OperatorSum, state: QuantumState) -> complex:
    """Exact ``<{a^dag, b}>``."""
    return measure_anticommutator(state, a, b)[0]


def gram_matrix(ops: Sequence[OperatorSum], state: QuantumState) -> np.ndarray:
    G = np.empty((len(ops), len(ops)), dtype=np.complex128)
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            G[i, j] = operator_inner(a, b, state)
    return G


def coefficient_vector(out: RecursionOutput) -> np.ndarray:
    """Interleaved ``(alpha_0, beta_1, alpha_1, ..., alpha_k)``."""
    c = np.empty(2 * len(out.alphas) - 1)
    c[0::2] = out.alphas
    c[1::2] = out.betas[: len(out.alphas) - 1]
    return c


def coefficient_stderr(out: RecursionOutput) -> np.ndarray:
    """Per-measurement standard errors in :func:`coefficient_vector` order.

    The beta error follows from that of beta^2 as ``s / (2 beta)``.
    """
    s = np.empty(2 * len(out.alphas) - 1)
    s[0::2] = out.alpha_stderr
    b = np.asarray(out.betas[: len(out.alphas) - 1])
    s[1::2] = np.asarray(out.beta_sq_stderr[: len(b)]) / (2.0 * b)
    return s


def coefficient_response(
    model: LatticeModel,
    H: OperatorSum,
    seed_mode: int,
    state: QuantumState,
    k_max: int,
    *,
    step: float = 1e-6,
    sign_convention: str = F_H,
    prune_tol: float = PRUNE_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact coefficients and their total response to measurement errors.

    ``T[i, j]`` is the derivative of coefficient i with respect to an error
    in measurement j, including its feedback through all later operators.
    Forward differences of exact replays; rows are lower triangular with a
    unit diagonal.
    """

    def replay(offsets):
        out = _recurse(
            model, H, seed_mode, state, MeasurementBackend.exact(), k_max, BETA_TOL_EXACT, (),
            sign_convention, prune_tol, "raise", False, offsets,
        )
        return coefficient_vector(out)

    base = replay(None)
    size = base.shape[0]
    T = np.zeros((size, size))
    for j in range(size):
        offsets = np.zeros(size)
        offsets[j] = step
        shifted = replay(offsets)
        if shifted.shape != base.shape:
            raise AlgebraError("perturbed replay terminated at a different iteration")
        T[:, j] = (shifted - base) / step
    return base, T


def propagated_stderr(response: np.ndarray, stderr: Sequence[float]) -> np.ndarray:
    """Combined standard error ``sqrt(diag(T D T^T))`` for independent errors."""
    T = np.asarray(response, dtype=float)
    s = np.asarray(stderr, dtype=float)
    cov = (T * s**2) @ T.T
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))
