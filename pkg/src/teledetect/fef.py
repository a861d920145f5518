"""Fully entangled fraction, optimal teleportation fidelity and usefulness.

For a d x d state the fully entangled fraction is

    F(rho) = max_U <psi+| (U^dag (x) I) rho (U (x) I) |psi+>,

and the best teleportation fidelity it supports is ``(d F + 1) / (d + 1)``.  The
state beats every classical (separable) resource iff ``F > 1/d``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, UsageError
from .linalg import (
    DERIVED_TOL,
    DensityMatrix,
    PureState,
    as_bipartite,
    as_density,
    is_unitary,
    make_rng,
    random_unitaries,
)
from .verdict import Verdict

MIN_D, MAX_D = 2, 8
TIE_TOL = 1e-12
REL_IMPROVEMENT_TOL = 1e-12
MIN_STEP = 2.0 ** -40


class FefMethod(str, Enum):
    CLOSED_FORM_PURE = "ClosedFormPure"
    MANIFOLD_ASCENT = "ManifoldAscent"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class FefConfig:
    restarts: int = 32
    max_iter: int = 500
    seed: int = 0
    usefulness_margin: float = 1e-7
    force_optimizer: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.restarts < 0 or self.max_iter < 1 or self.jobs < 1:
            raise UsageError("restarts must be >= 0, max_iter and jobs >= 1")


@dataclass(frozen=True, eq=False)
class FefResult:
    value: float
    optimizer_unitary: np.ndarray
    method: FefMethod
    restarts_used: int
    converged: bool


@dataclass(frozen=True, eq=False)
class TeleportationVerdict:
    fef: FefResult
    fidelity: float
    useful: Verdict


def fef_objective(rho: DensityMatrix, u: np.ndarray) -> float:
    """``<psi+|(U^dag (x) I) rho (U (x) I)|psi+>`` for one unitary U."""
    u = np.asarray(u, dtype=complex)
    # (U (x) I)|psi+> has amplitude matrix U / sqrt(d)
    v = u.ravel()
    return float(np.real(np.vdot(v, rho.matrix @ v))) / u.shape[0]


def fidelity_from_fef(f: float, d: int) -> float:
    if d < 2:
        raise UsageError(f"d must be >= 2, got {d}")
    if not -DERIVED_TOL <= f <= 1 + DERIVED_TOL:
        raise UsageError(f"fully entangled fraction must lie in [0, 1], got {f}")
    return (d * f + 1) / (d + 1)


def fef_pure(state: PureState, d: int) -> FefResult:
    """Closed form ``(sum of Schmidt coefficients)^2 / d``.

    With ``M = W diag(s) V^dag`` the amplitude matrix, ``U = W V^dag`` attains
    ``|Tr(U^dag M)| = sum(s)``.
    """
    state = as_bipartite(state, d)
    w, s, vh = np.linalg.svd(state.amplitude_matrix())
    return FefResult(
        value=float(np.sum(s) ** 2 / d),
        optimizer_unitary=w @ vh,
        method=FefMethod.CLOSED_FORM_PURE,
        restarts_used=0,
        converged=True,
    )


def _polar(m: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def _values(rho_t: np.ndarray, us: np.ndarray) -> np.ndarray:
    flat = us.reshape(us.shape[0], -1)
    return np.real(np.sum(flat.conj() * (flat @ rho_t), axis=1)) / us.shape[1]


def ascend_batch(rho: np.ndarray, us: np.ndarray, max_iter: int = 500):
    """Projected-gradient ascent of the FEF objective from every unitary in ``us``.

    Each start steps along the gradient with respect to ``conj(U)``, rescaled to
    Frobenius norm ``sqrt(d)``, with a backtracking step halving from 1.0, then
    retracts with the polar factor.
    A start stops when its relative improvement drops below 1e-12, when no step
    improves it, or after ``max_iter`` iterations.  Returns ``(unitaries,
    values, converged)``.
    """
    us = np.array(us, dtype=complex)
    starts, d, _ = us.shape
    rho_t = rho.T
    vals = _values(rho_t, us)
    active = np.ones(starts, dtype=bool)
    converged = np.zeros(starts, dtype=bool)

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        u, f = us[idx], vals[idx]
        grad = (u.reshape(idx.size, -1) @ rho_t).reshape(idx.size, d, d) / d
        # unit step moves as far as ||U||_F = sqrt(d); raw gradients are O(1/d^2) smaller
        norms = np.linalg.norm(grad.reshape(idx.size, -1), axis=1)
        grad = grad * (np.sqrt(d) / np.where(norms > 0, norms, 1.0))[:, None, None]
        step = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        new_u, new_f = u.copy(), f.copy()
        while pending.any():
            p = np.flatnonzero(pending)
            cand = _polar(u[p] + step[p, None, None] * grad[p])
            fc = _values(rho_t, cand)
            better = fc > f[p]
            new_u[p[better]], new_f[p[better]] = cand[better], fc[better]
            pending[p[better]] = False
            step[p[~better]] *= 0.5
            pending &= step >= MIN_STEP
        stalled = (new_f - f) <= REL_IMPROVEMENT_TOL * np.abs(f)
        us[idx], vals[idx] = new_u, new_f
        active[idx[stalled]] = False
        converged[idx[stalled]] = True
    return us, vals, converged


def _start_unitaries(d: int, restarts: range, seed: int) -> np.ndarray:
    out = []
    for k in restarts:
        if k == 0:
            out.append(np.eye(d, dtype=complex))
        else:
            out.append(random_unitaries(1, d, make_rng(seed, k))[0])
    return np.array(out)


def _run_chunk(rho: np.ndarray, d: int, restarts: range, config: FefConfig):
    return ascend_batch(rho, _start_unitaries(d, restarts, config.seed), config.max_iter)


def fef_optimize(state: DensityMatrix | PureState, d: int, config: FefConfig = FefConfig()) -> FefResult:
    """Lower bound on F from manifold ascent started at the identity and ``config.restarts`` Haar unitaries.

    The reported value is re-evaluated at the returned unitary; ties between
    restarts within 1e-12 go to the lowest restart index.
    """
    if not MIN_D <= d <= MAX_D:
        raise UsageError(f"d must lie in [{MIN_D}, {MAX_D}] for the optimizer, got {d}")
    rho = as_density(as_bipartite(state, d))
    total = config.restarts + 1
    bounds = np.linspace(0, total, min(config.jobs, total) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    if len(chunks) == 1:
        parts = [_run_chunk(rho.matrix, d, chunks[0], config)]
    else:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_run_chunk, [rho.matrix] * len(chunks), [d] * len(chunks), chunks,
                                  [config] * len(chunks)))
    us = np.concatenate([p[0] for p in parts])
    vals = np.concatenate([p[1] for p in parts])
    conv = np.concatenate([p[2] for p in parts])
    best = 0
    for k in range(1, vals.size):
        if vals[k] > vals[best] + TIE_TOL:
            best = k
    u = us[best]
    return FefResult(
        value=fef_objective(rho, u),
        optimizer_unitary=u,
        method=FefMethod.MANIFOLD_ASCENT,
        restarts_used=int(vals.size),
        converged=bool(conv[best]),
    )


def _dominant_vector(rho: DensityMatrix) -> PureState:
    lam, vecs = np.linalg.eigh(rho.matrix)
    return PureState.normalized(vecs[:, -1], rho.layout)


def fully_entangled_fraction(state: DensityMatrix | PureState, d: int, config: FefConfig = FefConfig()) -> FefResult:
    """Closed form for pure inputs (unless ``force_optimizer``), manifold ascent otherwise."""
    if not config.force_optimizer:
        if isinstance(state, PureState):
            return fef_pure(state, d)
        if state.is_pure(DERIVED_TOL):
            return fef_pure(_dominant_vector(state), d)
    return fef_optimize(state, d, config)


def is_useful(state: DensityMatrix | PureState, d: int, config: FefConfig = FefConfig()) -> TeleportationVerdict:
    """Useful iff the certified lower bound on F exceeds ``1/d + usefulness_margin``."""
    res = fully_entangled_fraction(state, d, config)
    useful = Verdict.USEFUL if res.value > 1.0 / d + config.usefulness_margin else Verdict.INCONCLUSIVE
    return TeleportationVerdict(res, fidelity_from_fef(res.value, d), useful)


def check_unitary(u: np.ndarray, d: int | None = None) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if d is not None and u.shape != (d, d):
        raise UsageError(f"unitary must be {d}x{d}, got shape {u.shape}")
    if not is_unitary(u):
        raise ContractError("matrix is not unitary within 1e-10")
    return u
