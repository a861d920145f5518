"""The Gamma detection operator for 2n-qubit states.

Gamma is built from n complementary triples ``X^{A_i}`` and the fixed Pauli
observables on the B qubits.  When ``X_k^{A_i} = R_i sigma_k R_i^dag`` it equals
the projector onto ``(R_1 (x) ... (x) R_n (x) I)|phi+>``, so its expectation can be
evaluated as an overlap without forming the ``4^n x 4^n`` matrix.  A pure state
with ``<Gamma> = 1`` for some triples is an ideal resource for teleporting n
qubits; a fully separable state never exceeds ``2^-n``.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import UsageError
from .linalg import (
    DERIVED_TOL,
    DensityMatrix,
    PureState,
    SubsystemLayout,
    as_density,
    embed_operator,
    make_rng,
    tensor_product,
)
from .pauli import I2, SIGMAS, ComplementaryTriple, su2_batch, triple_from_su2
from .simplex import initial_simplices, minimize_batch
from .verdict import Verdict

MAX_PAIRS_PRODUCT = 6
MAX_PAIRS_SUM = 4
# sign of X_k (x) sigma_k in each per-pair bracket
PAIR_SIGNS = (1.0, -1.0, 1.0)
TIE_TOL = 1e-12
INITIAL_STEP = 0.5


@dataclass(frozen=True, eq=False)
class GammaOperator:
    triples: tuple[ComplementaryTriple, ...]
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.triples)


def _check_pairs(triples, limit: int) -> tuple[ComplementaryTriple, ...]:
    triples = tuple(triples)
    if not 1 <= len(triples) <= limit:
        raise UsageError(f"number of qubit pairs must lie in [1, {limit}], got {len(triples)}")
    return triples


def pair_factor(triple: ComplementaryTriple) -> np.ndarray:
    """``(1/4)(I (x) I + X_1 (x) s_1 - X_2 (x) s_2 + X_3 (x) s_3)`` on one (A_i, B_i) pair."""
    out = np.kron(I2, I2)
    for k, sign in enumerate(PAIR_SIGNS):
        out = out + sign * np.kron(triple.observables[k], SIGMAS[k])
    return out / 4


def build_gamma_product(triples: Sequence[ComplementaryTriple]) -> GammaOperator:
    triples = _check_pairs(triples, MAX_PAIRS_PRODUCT)
    n = len(triples)
    m = tensor_product([pair_factor(t) for t in triples])
    # slots are A_1 B_1 A_2 B_2 ...; reorder to A_1 .. A_n B_1 .. B_n
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    m = m.reshape((2,) * (4 * n)).transpose(order + [2 * n + k for k in order])
    dim = 4 ** n
    return GammaOperator(triples, m.reshape(dim, dim))


def gamma_terms(triples: Sequence[ComplementaryTriple]) -> Iterator[tuple[float, list[int], np.ndarray]]:
    """Signed Pauli-product terms of Gamma, each as ``(sign, slot positions, local operator)``.

    The constant term comes first with no positions.  Every other term picks a
    nonempty set S of pairs ``i_1 < ... < i_s`` and an observable index ``j`` in
    {1, 2, 3} per pair in S; its sign is ``(-1)^(number of j == 2)``.
    """
    n = len(triples)
    yield 1.0, [], np.eye(1, dtype=complex)
    for size in range(1, n + 1):
        for pairs in itertools.combinations(range(n), size):
            for js in itertools.product((1, 2, 3), repeat=size):
                sign = (-1.0) ** js.count(2)
                a_ops = [triples[i].observables[j - 1] for i, j in zip(pairs, js)]
                b_ops = [SIGMAS[j - 1] for j in js]
                positions = list(pairs) + [n + i for i in pairs]
                yield sign, positions, tensor_product(a_ops + b_ops)


def build_gamma_sum(triples: Sequence[ComplementaryTriple]) -> GammaOperator:
    """Gamma assembled term by term from its Pauli expansion (``4^n`` terms)."""
    triples = _check_pairs(triples, MAX_PAIRS_SUM)
    layout = SubsystemLayout.multiqubit(len(triples))
    dim = layout.total_dim
    m = np.zeros((dim, dim), dtype=complex)
    for sign, positions, op in gamma_terms(triples):
        m += sign * (embed_operator(op, positions, layout) if positions else np.eye(dim))
    return GammaOperator(triples, m / dim)


def _local_rotation(triples: Sequence[ComplementaryTriple]) -> np.ndarray:
    return tensor_product([t.su2 for t in triples])


def gamma_vector(triples: Sequence[ComplementaryTriple]) -> np.ndarray:
    """``(R (x) I)|phi+>``, the vector Gamma projects onto."""
    r = _local_rotation(triples)
    return r.ravel() / np.sqrt(r.shape[0])


def _qubits_per_side(state) -> int:
    layout = state.layout
    if not layout.is_multiqubit:
        raise UsageError(f"expected a 2n-qubit A|B layout, got dims {layout.dims} split at {layout.side_split}")
    return layout.qubits_per_side


def gamma_expectation(state: DensityMatrix | PureState, triples: Sequence[ComplementaryTriple]) -> float:
    """``<Gamma>`` evaluated as ``<phi+|(R^dag (x) I) rho (R (x) I)|phi+>``."""
    triples = tuple(triples)
    n = _qubits_per_side(state)
    if len(triples) != n:
        raise UsageError(f"state has {n} qubits per side but {len(triples)} triples were given")
    v = gamma_vector(triples)
    if isinstance(state, PureState):
        return float(abs(np.vdot(v, state.amplitudes)) ** 2)
    return float(np.real(np.vdot(v, state.matrix @ v)))


# ------------------------------------------------------------------- search

@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 32
    max_iter: int = 400
    seed: int = 0
    ideal_tol: float = 1e-6
    margin: float = 1e-7
    jobs: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.max_iter < 1 or self.jobs < 1:
            raise UsageError("restarts, max_iter and jobs must all be >= 1")


@dataclass(frozen=True, eq=False)
class GammaSearchResult:
    best_value: float
    best_triples: tuple[ComplementaryTriple, ...]
    best_angles: np.ndarray
    restarts_used: int
    converged: bool
    verdict: Verdict
    best_restart: int = 0
    restart_values: np.ndarray = field(default=None, repr=False)


class _GammaObjective:
    """Batched ``-<Gamma>`` over rows of Euler angles (3 per A qubit)."""

    def __init__(self, rho: DensityMatrix, n: int):
        self.n = n
        lam, vecs = np.linalg.eigh(rho.matrix)
        keep = lam > 1e-14
        self.weights = lam[keep]
        self.vecs = vecs[:, keep]
        self.scale = 1.0 / np.sqrt(2 ** n)

    def vectors(self, x: np.ndarray) -> np.ndarray:
        m = x.shape[0]
        rots = su2_batch(x.reshape(m, self.n, 3))
        r = rots[:, 0]
        for i in range(1, self.n):
            r = np.einsum("bij,bkl->bikjl", r, rots[:, i]).reshape(m, 2 ** (i + 1), 2 ** (i + 1))
        return r.reshape(m, -1) * self.scale

    def __call__(self, x: np.ndarray) -> np.ndarray:
        overlaps = self.vectors(x).conj() @ self.vecs
        return -(np.abs(overlaps) ** 2 @ self.weights)


def _starting_points(n: int, restarts: range, seed: int) -> np.ndarray:
    rows = []
    for k in restarts:
        if k == 0:
            rows.append(np.zeros(3 * n))
        else:
            rows.append(make_rng(seed, k).uniform(0.0, 2 * np.pi, size=3 * n))
    return np.array(rows)


def _run_chunk(rho: DensityMatrix, n: int, restarts: range, config: SearchConfig):
    objective = _GammaObjective(rho, n)
    x0 = _starting_points(n, restarts, config.seed)
    run = minimize_batch(objective, initial_simplices(x0, INITIAL_STEP), max_iter=config.max_iter)
    return run.x, -run.fun, run.converged


def _chunks(total: int, jobs: int) -> list[range]:
    bounds = np.linspace(0, total, min(jobs, total) + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def maximize_gamma(state: DensityMatrix | PureState, config: SearchConfig = SearchConfig(),
                   mode: str = "ideal") -> GammaSearchResult:
    """Best ``<Gamma>`` over complementary triples found by restarted simplex search.

    The first restart starts at the Pauli triples (zero Euler angles), the rest at
    uniformly random angles drawn from per-restart streams of ``config.seed``.
    ``best_value`` is recomputed at the returned triples, so it is a certified
    lower bound on the supremum.  ``mode`` selects the verdict vocabulary:
    ``"ideal"`` (pure-state resource test) or ``"separability"``.
    """
    if mode not in ("ideal", "separability"):
        raise UsageError(f"unknown mode {mode!r}")
    n = _qubits_per_side(state)
    rho = as_density(state)
    chunks = _chunks(config.restarts, config.jobs)
    if len(chunks) == 1:
        parts = [_run_chunk(rho, n, chunks[0], config)]
    else:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_run_chunk, [rho] * len(chunks), [n] * len(chunks), chunks,
                                  [config] * len(chunks)))
    xs = np.vstack([p[0] for p in parts])
    values = np.concatenate([p[1] for p in parts])
    conv = np.concatenate([p[2] for p in parts])

    best = 0
    for k in range(1, values.size):
        if values[k] > values[best] + TIE_TOL:
            best = k
    angles = xs[best].reshape(n, 3)
    triples = tuple(triple_from_su2(r) for r in su2_batch(angles))
    value = gamma_expectation(rho, triples)
    if mode == "ideal":
        verdict = Verdict.IDEAL if value >= 1.0 - config.ideal_tol else Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.ENTANGLED if value > 2.0 ** -n + config.margin else Verdict.INCONCLUSIVE
    return GammaSearchResult(
        best_value=value,
        best_triples=triples,
        best_angles=angles,
        restarts_used=int(values.size),
        converged=bool(conv[best]),
        verdict=verdict,
        best_restart=best,
        restart_values=values,
    )


def detect_ideal_resource(state: DensityMatrix | PureState, config: SearchConfig = SearchConfig()) -> GammaSearchResult:
    """Ideal iff some complementary triples give ``<Gamma> >= 1 - ideal_tol``.

    Only pure states are accepted.  An Ideal verdict ships its triples in
    ``best_triples``; a failed search is Inconclusive, never a proof of non-ideality.
    """
    if isinstance(state, DensityMatrix) and not state.is_pure(DERIVED_TOL):
        raise UsageError(f"ideal-resource detection needs a pure state (purity {state.purity():.12f})")
    return maximize_gamma(state, config, mode="ideal")


def separability_test(state: DensityMatrix | PureState, config: SearchConfig = SearchConfig()) -> GammaSearchResult:
    """Entangled iff the search beats the fully-separable bound ``2^-n`` by ``config.margin``."""
    return maximize_gamma(state, config, mode="separability")
