"""Pauli matrices and complementary observable triples.

Convention: ``sigma_2 = i(|0><1| - |1><0|)``, i.e. the negative of the usual
``sigma_y``.  With this sign the Pauli triple itself satisfies
``sigma_1 sigma_2 sigma_3 = -i I`` and every complementary triple obeys
``X_1 X_2 = -i X_3`` cyclically.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ContractError, UsageError
from .linalg import is_unitary

FRAME_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMAS = (SIGMA_1, SIGMA_2, SIGMA_3)

for _m in (I2, *SIGMAS):
    _m.flags.writeable = False


class PauliId(IntEnum):
    I = 0
    X = 1
    Y = 2
    Z = 3

    @property
    def matrix(self) -> np.ndarray:
        return (I2, *SIGMAS)[self]


def pauli(k: int) -> np.ndarray:
    return PauliId(k).matrix


def bloch_operator(a) -> np.ndarray:
    """``a . sigma`` for a real 3-vector."""
    a = np.asarray(a, dtype=float)
    return a[0] * SIGMA_1 + a[1] * SIGMA_2 + a[2] * SIGMA_3


def bloch_vector(x: np.ndarray) -> np.ndarray:
    """Components ``(1/2) Tr(X sigma_j)`` of a traceless single-qubit operator."""
    return np.array([0.5 * np.trace(x @ s).real for s in SIGMAS])


@dataclass(frozen=True)
class EulerAngles:
    """z-y-z chart of SU(2); ``alpha, gamma`` in [0, 2 pi), ``beta`` in [0, pi]."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        two_pi = 2 * np.pi
        if not (0 <= self.alpha < two_pi and 0 <= self.beta <= np.pi and 0 <= self.gamma < two_pi):
            raise UsageError(f"Euler angles out of range: {self}")

    @classmethod
    def wrap(cls, alpha: float, beta: float, gamma: float) -> "EulerAngles":
        """Canonical angles whose rotation agrees with the raw ones up to a global phase."""
        two_pi = 2 * np.pi
        beta = float(np.mod(beta + np.pi, two_pi) - np.pi)
        if beta < 0:
            # R(a, -b, g) = R(a + pi, b, g - pi)
            beta, alpha, gamma = -beta, alpha + np.pi, gamma - np.pi
        alpha = float(np.mod(alpha, two_pi))
        gamma = float(np.mod(gamma, two_pi))
        # np.mod can round up to exactly 2 pi
        alpha = 0.0 if alpha >= two_pi else alpha
        gamma = 0.0 if gamma >= two_pi else gamma
        return cls(alpha, min(beta, np.pi), gamma)


def su2_from_euler(angles) -> np.ndarray:
    """``exp(-i a s3/2) exp(-i b s2/2) exp(-i g s3/2)``; accepts EulerAngles or any 3-sequence."""
    if isinstance(angles, EulerAngles):
        a, b, g = angles.alpha, angles.beta, angles.gamma
    else:
        a, b, g = angles
    return su2_batch(np.array([[a, b, g]], dtype=float))[0]


def su2_batch(angles: np.ndarray) -> np.ndarray:
    """Vectorized ``su2_from_euler`` over the last axis (size 3); returns ``(..., 2, 2)``."""
    angles = np.asarray(angles, dtype=float)
    a, b, g = angles[..., 0], angles[..., 1], angles[..., 2]
    c, s = np.cos(b / 2), np.sin(b / 2)
    ep = np.exp(-0.5j * (a + g))
    em = np.exp(-0.5j * (a - g))
    out = np.empty(angles.shape[:-1] + (2, 2), dtype=complex)
    # exp(-i b sigma_2/2) = [[c, s], [-s, c]] with this sigma_2 convention
    out[..., 0, 0] = ep * c
    out[..., 0, 1] = em * s
    out[..., 1, 0] = -em.conj() * s
    out[..., 1, 1] = ep.conj() * c
    return out


@dataclass(frozen=True, eq=False)
class ComplementaryTriple:
    """Observables ``X_k = R sigma_k R^dag = a_k . sigma`` with ``X_1 X_2 X_3 = -i I``."""

    observables: tuple[np.ndarray, np.ndarray, np.ndarray]
    frame: np.ndarray
    su2: np.ndarray

    def __getitem__(self, k: int) -> np.ndarray:
        """``triple[k]`` is ``X_k`` for k in 1..3."""
        if k not in (1, 2, 3):
            raise IndexError("complementary observables are indexed 1..3")
        return self.observables[k - 1]

    def product_residual(self) -> float:
        x1, x2, x3 = self.observables
        return float(np.max(np.abs(x1 @ x2 @ x3 + 1j * I2)))


def _frozen(m):
    m = np.array(m, copy=True)
    m.flags.writeable = False
    return m


def triple_from_su2(r: np.ndarray) -> ComplementaryTriple:
    r = np.asarray(r, dtype=complex)
    if r.shape != (2, 2) or not is_unitary(r):
        raise ContractError("triple_from_su2 requires a 2x2 unitary")
    xs = tuple(_frozen(r @ s @ r.conj().T) for s in SIGMAS)
    frame = np.array([bloch_vector(x) for x in xs])
    return ComplementaryTriple(xs, _frozen(frame), _frozen(r))


def _su2_for(xs) -> np.ndarray:
    """A unitary R with ``X_k R = R sigma_k`` (unique up to phase), fixed to det R = 1."""
    # row-major vec: vec(X R - R S) = (X (x) I - I (x) S^T) vec(R)
    system = np.vstack([np.kron(x, I2) - np.kron(I2, s.T) for x, s in zip(xs, SIGMAS)])
    _, _, vh = np.linalg.svd(system)
    r = vh[-1].conj().reshape(2, 2)
    r = r / np.sqrt(abs(np.linalg.det(r)))
    return r / np.sqrt(np.linalg.det(r))


def triple_from_frame(a1, a2, a3) -> ComplementaryTriple:
    frame = np.array([a1, a2, a3], dtype=float)
    if frame.shape != (3, 3):
        raise UsageError("a frame is three real 3-vectors")
    gram = np.max(np.abs(frame @ frame.T - np.eye(3)))
    if gram > FRAME_TOL:
        raise UsageError(f"frame is not orthonormal: Gram residual {gram:.1e} exceeds {FRAME_TOL:g}")
    det = np.linalg.det(frame)
    if abs(det - 1.0) > FRAME_TOL:
        raise UsageError(f"frame is not right-handed: determinant {det:+.6f}, expected +1")
    xs = tuple(_frozen(bloch_operator(a)) for a in frame)
    return ComplementaryTriple(xs, _frozen(frame), _frozen(_su2_for(xs)))


def pauli_triple() -> ComplementaryTriple:
    return triple_from_su2(I2)


def random_triple(rng: np.random.Generator) -> ComplementaryTriple:
    angles = rng.uniform(0, 2 * np.pi, size=3)
    return triple_from_su2(su2_from_euler(angles))
