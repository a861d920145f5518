"""Teleportation witnesses ``W(U) = I/d - (U (x) I)|psi+><psi+|(U^dag (x) I)``.

A witness of the form ``alpha I - |chi><chi|`` is optimal when the product
vectors it annihilates span the whole space.  For ``W(I)`` the d^2 vectors

    |jj>,  (|k>+|l>)(|k>+|l>),  (|k>+i|l>)(|k>-i|l>),   k < l,

do this, and ``W(U)`` inherits the certificate through ``U (x) I``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UsageError
from .fef import FefConfig, check_unitary, fef_objective, fully_entangled_fraction
from .linalg import (
    DERIVED_TOL,
    STRUCT_TOL,
    DensityMatrix,
    PureState,
    as_bipartite,
    as_density,
    max_entangled,
    schmidt_coefficients,
)
from .verdict import Verdict

RESIDUAL_TOL = 1e-10
SOURCES = ("identity", "rotated", "pure")


@dataclass(frozen=True, eq=False)
class Witness:
    """``alpha I - |chi><chi|`` on a d x d system.

    ``source`` is ``"identity"`` for W(I), ``"rotated"`` for W(U) (with
    ``unitary`` set) or ``"pure"`` for a witness built around an arbitrary
    entangled vector.
    """

    alpha: float
    chi: np.ndarray
    d: int
    source: str = "pure"
    unitary: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise UsageError(f"unknown witness source {self.source!r}")
        chi = np.array(self.chi, dtype=complex)
        if chi.shape != (self.d * self.d,):
            raise UsageError(f"chi must have length {self.d * self.d}")
        chi.flags.writeable = False
        object.__setattr__(self, "chi", chi)
        if self.source in ("identity", "rotated") and abs(self.alpha - 1.0 / self.d) > 1e-15:
            raise UsageError("teleportation witnesses W(I), W(U) have alpha = 1/d")
        if self.source == "rotated" and self.unitary is None:
            raise UsageError("a rotated witness records its unitary")

    @property
    def matrix(self) -> np.ndarray:
        dim = self.d * self.d
        return self.alpha * np.eye(dim) - np.outer(self.chi, self.chi.conj())

    def expectation_vector(self, v: np.ndarray) -> float:
        """``<v|W|v>`` for an unnormalized vector."""
        v = np.asarray(v, dtype=complex)
        return float(self.alpha * np.vdot(v, v).real - abs(np.vdot(self.chi, v)) ** 2)


def witness_identity(d: int) -> Witness:
    if d < 2:
        raise UsageError(f"d must be >= 2, got {d}")
    return Witness(1.0 / d, max_entangled(d).amplitudes, d, "identity")


def witness_rotated(u: np.ndarray) -> Witness:
    u = check_unitary(u)
    d = u.shape[0]
    if d < 2:
        raise UsageError(f"d must be >= 2, got {d}")
    # (U (x) I)|psi+> has amplitude matrix U / sqrt(d)
    return Witness(1.0 / d, u.ravel() / np.sqrt(d), d, "rotated", u.copy())


def witness_from_pure(state: PureState) -> Witness:
    """``alpha I - |psi><psi|`` with alpha the largest squared Schmidt coefficient."""
    layout = state.layout
    if layout.dim_a != layout.dim_b:
        raise UsageError("witnesses are built on d x d systems")
    alpha = float(schmidt_coefficients(state)[0] ** 2)
    if alpha >= 1.0 - DERIVED_TOL:
        raise UsageError("product vector: alpha = 1 makes alpha I - |psi><psi| positive, not a witness")
    return Witness(alpha, state.amplitudes, layout.dim_a, "pure")


def evaluate(w: Witness, state: DensityMatrix | PureState) -> float:
    """``Tr(W rho)``."""
    rho = as_density(state)
    if rho.dim != w.d * w.d:
        raise UsageError(f"witness acts on dimension {w.d * w.d}, state has dimension {rho.dim}")
    value = w.alpha - np.vdot(w.chi, rho.matrix @ w.chi)
    if abs(value.imag) > DERIVED_TOL:
        raise UsageError(f"imaginary residue {abs(value.imag):.1e} in witness value")
    return float(value.real)


def optimality_vectors(d: int) -> list[np.ndarray]:
    """The d^2 unnormalized product vectors annihilated by W(I), in the order K_j, K_kl, K'_kl."""
    if d < 2:
        raise UsageError(f"d must be >= 2, got {d}")
    basis = np.eye(d, dtype=complex)
    vectors = [np.kron(basis[j], basis[j]) for j in range(d)]
    pairs = [(k, l) for k in range(d) for l in range(k + 1, d)]
    for k, l in pairs:
        a = basis[k] + basis[l]
        vectors.append(np.kron(a, a))
    for k, l in pairs:
        vectors.append(np.kron(basis[k] + 1j * basis[l], basis[k] - 1j * basis[l]))
    return vectors


@dataclass(frozen=True, eq=False)
class OptimalityCertificate:
    vectors: list
    annihilation_residuals: np.ndarray
    gram_rank: int
    optimal: bool
    note: str = ""


def _core_unitary(w: Witness) -> Optional[np.ndarray]:
    """V with ``chi = (V (x) I)|psi+>``, or None when chi is not maximally entangled."""
    if w.source == "identity":
        return np.eye(w.d, dtype=complex)
    if w.source == "rotated":
        return w.unitary
    v = w.chi.reshape(w.d, w.d) * np.sqrt(w.d)
    if np.max(np.abs(v.conj().T @ v - np.eye(w.d))) > STRUCT_TOL:
        return None
    return v


def gram_rank(vectors) -> int:
    """Rank of the Gram matrix, counting singular values above ``n * eps * s_max``."""
    mat = np.array(vectors)
    gram = mat.conj() @ mat.T
    s = np.linalg.svd(gram, compute_uv=False)
    return int(np.sum(s > gram.shape[0] * np.finfo(float).eps * s[0]))


def check_optimality(w: Witness) -> OptimalityCertificate:
    """Residuals ``<v|W|v>`` on the transported product vectors and their Gram rank."""
    core = _core_unitary(w)
    if core is None:
        return OptimalityCertificate(
            [], np.array([]), 0, False,
            note="Schmidt spectrum of chi is not uniform; no annihilated product basis is known",
        )
    vectors = [np.kron(core, np.eye(w.d)) @ v for v in optimality_vectors(w.d)]
    residuals = np.array([w.expectation_vector(v) for v in vectors])
    rank = gram_rank(vectors)
    optimal = rank == w.d ** 2 and float(np.max(np.abs(residuals))) <= RESIDUAL_TOL
    return OptimalityCertificate(vectors, residuals, rank, optimal)


@dataclass(frozen=True, eq=False)
class WitnessDetection:
    minimum: float
    unitary: np.ndarray
    verdict: Verdict


def detect_useful_via_witness(state: DensityMatrix | PureState, d: int,
                              config: FefConfig = FefConfig()) -> WitnessDetection:
    """Minimize ``Tr(W(U) rho) = 1/d - <psi+|(U^dag (x) I) rho (U (x) I)|psi+>`` over U.

    Useful iff the minimum found is below ``-usefulness_margin``; the minimizing
    U is the certificate.
    """
    rho = as_density(as_bipartite(state, d))
    res = fully_entangled_fraction(rho, d, config)
    u = res.optimizer_unitary
    minimum = 1.0 / d - fef_objective(rho, u)
    verdict = Verdict.USEFUL if minimum < -config.usefulness_margin else Verdict.INCONCLUSIVE
    return WitnessDetection(minimum, u, verdict)
