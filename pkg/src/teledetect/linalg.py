"""Dense state/operator types, tensor-slot bookkeeping and seeded sampling.

Slot 0 is the leftmost (most significant) tensor factor, so the basis index of a
composite state is the mixed-radix number over the slot values.  Multiqubit
layouts order their slots ``A_1 .. A_n, B_1 .. B_n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import ContractError, StateValidationError, UsageError

STRUCT_TOL = 1e-10
EIG_TOL = 1e-9
DERIVED_TOL = 1e-9

MAX_PURE_DIM = 4096
MAX_DENSITY_DIM = 1024


@dataclass(frozen=True)
class SubsystemLayout:
    """Local dimensions of every tensor slot and where side A ends."""

    dims: tuple[int, ...]
    side_split: int

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2 or any(d < 2 for d in dims):
            raise UsageError(f"layout needs at least two slots of dimension >= 2, got {dims}")
        if not 1 <= self.side_split <= len(dims) - 1:
            raise UsageError(f"side_split {self.side_split} out of range for {len(dims)} slots")

    @classmethod
    def multiqubit(cls, n: int) -> "SubsystemLayout":
        if n < 1:
            raise UsageError(f"qubits per side must be >= 1, got {n}")
        return cls((2,) * (2 * n), n)

    @classmethod
    def bipartite(cls, d: int, d_b: int | None = None) -> "SubsystemLayout":
        return cls((d, d if d_b is None else d_b), 1)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def dim_a(self) -> int:
        return int(np.prod(self.dims[: self.side_split]))

    @property
    def dim_b(self) -> int:
        return int(np.prod(self.dims[self.side_split:]))

    @property
    def is_multiqubit(self) -> bool:
        return all(d == 2 for d in self.dims) and 2 * self.side_split == len(self.dims)

    @property
    def qubits_per_side(self) -> int:
        if not self.is_multiqubit:
            raise UsageError(f"layout {self.dims} (split {self.side_split}) is not an A|B multiqubit layout")
        return self.side_split


def _frozen_array(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=complex, copy=True)
    if arr.ndim != ndim:
        raise UsageError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StateValidationError("entries must be finite (found NaN or Inf)")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        amps = _frozen_array(self.amplitudes, 1)
        object.__setattr__(self, "amplitudes", amps)
        if amps.size != self.layout.total_dim:
            raise StateValidationError(
                f"amplitude count {amps.size} does not match layout dimension {self.layout.total_dim}"
            )
        if amps.size > MAX_PURE_DIM:
            raise UsageError(f"pure-state dimension {amps.size} exceeds the supported maximum {MAX_PURE_DIM}")
        residual = abs(np.linalg.norm(amps) - 1.0)
        if residual > STRUCT_TOL:
            raise StateValidationError(f"norm residual {residual:.1e} exceeds {STRUCT_TOL:g}")

    @classmethod
    def normalized(cls, amplitudes, layout: SubsystemLayout) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex)
        return cls(v / np.linalg.norm(v), layout)

    def amplitude_matrix(self) -> np.ndarray:
        """Coefficients ``M`` with ``|phi> = sum_ij M_ij |i>_A |j>_B``."""
        return self.amplitudes.reshape(self.layout.dim_a, self.layout.dim_b)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.layout)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        m = _frozen_array(self.matrix, 2)
        object.__setattr__(self, "matrix", m)
        dim = self.layout.total_dim
        if m.shape != (dim, dim):
            raise StateValidationError(f"matrix shape {m.shape} does not match layout dimension {dim}")
        if dim > MAX_DENSITY_DIM:
            raise UsageError(f"density dimension {dim} exceeds the supported maximum {MAX_DENSITY_DIM}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > STRUCT_TOL:
            raise StateValidationError(f"hermiticity residual {herm:.1e} exceeds {STRUCT_TOL:g}")
        tr = abs(np.trace(m) - 1.0)
        if tr > STRUCT_TOL:
            raise StateValidationError(f"trace residual {tr:.1e} exceeds {STRUCT_TOL:g}")
        lam = np.linalg.eigvalsh(m)[0]
        if lam < -EIG_TOL:
            raise StateValidationError(f"minimum eigenvalue {lam:.1e} is below {-EIG_TOL:g}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def is_pure(self, tol: float = DERIVED_TOL) -> bool:
        return self.purity() >= 1.0 - tol

    def with_layout(self, layout: SubsystemLayout) -> "DensityMatrix":
        return DensityMatrix(self.matrix, layout)


def as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    return state.density() if isinstance(state, PureState) else state


def as_bipartite(state: PureState | DensityMatrix, d: int):
    """Regroup ``state`` as a ``d x d`` bipartite state over its own A|B cut."""
    layout = state.layout
    if layout.dim_a != d or layout.dim_b != d:
        raise UsageError(
            f"state with A|B dimensions {layout.dim_a}x{layout.dim_b} cannot be read as a {d}x{d} bipartite state"
        )
    new = SubsystemLayout.bipartite(d)
    if isinstance(state, PureState):
        return PureState(state.amplitudes, new)
    return DensityMatrix(state.matrix, new)


# ---------------------------------------------------------------- operators

def tensor_product(ops: Sequence[np.ndarray]) -> np.ndarray:
    if len(ops) == 0:
        raise UsageError("tensor_product needs at least one operand")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in ops))


def embed_operator(op: np.ndarray, positions: Sequence[int], layout: SubsystemLayout) -> np.ndarray:
    """Full-space operator acting as ``op`` on ``positions`` (in that order) and as identity elsewhere."""
    op = np.asarray(op, dtype=complex)
    dims = layout.dims
    positions = [int(p) for p in positions]
    if len(set(positions)) != len(positions) or any(not 0 <= p < len(dims) for p in positions):
        raise UsageError(f"positions {positions} must be distinct slots in range(0, {len(dims)})")
    sub_dims = [dims[p] for p in positions]
    sub = int(np.prod(sub_dims)) if positions else 1
    if op.shape != (sub, sub):
        raise UsageError(f"operator shape {op.shape} does not match slot dimension {sub}")

    rest = [k for k in range(len(dims)) if k not in positions]
    rest_dim = int(np.prod([dims[k] for k in rest])) if rest else 1
    big = np.kron(op, np.eye(rest_dim))
    # big acts on slots ordered positions + rest; move them to natural order
    order = positions + rest
    shape = [dims[k] for k in order]
    big = big.reshape(shape + shape)
    inverse = np.argsort(order)
    m = len(dims)
    big = big.transpose(list(inverse) + [m + i for i in inverse])
    total = layout.total_dim
    return big.reshape(total, total)


def is_hermitian(op: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.max(np.abs(op - op.conj().T)) <= tol


def is_unitary(u: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol


def expectation(state: DensityMatrix, op: np.ndarray) -> float:
    """``Tr(op rho)`` for a Hermitian observable."""
    op = np.asarray(op, dtype=complex)
    if op.shape != state.matrix.shape:
        raise UsageError(f"operator shape {op.shape} does not match state shape {state.matrix.shape}")
    if not is_hermitian(op):
        raise ContractError("expectation requires a Hermitian operator")
    # Tr(op rho) = sum_ij op_ij rho_ji
    value = np.sum(op * state.matrix.T)
    if abs(value.imag) > EIG_TOL:
        raise ContractError(f"imaginary residue {abs(value.imag):.1e} in expectation value")
    return float(value.real)


def partial_trace(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced operator on the slots ``keep`` (returned in ascending slot order)."""
    dims = list(dims)
    m = len(dims)
    keep = sorted(int(k) for k in keep)
    t = np.asarray(matrix).reshape(dims + dims)
    traced = [k for k in range(m) if k not in keep]
    # trace out from the highest slot down so indices stay valid
    for count, k in enumerate(sorted(traced, reverse=True)):
        cur = m - count
        t = np.trace(t, axis1=k, axis2=k + cur)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def partial_transpose(rho: DensityMatrix | np.ndarray, side: str = "B",
                      layout: SubsystemLayout | None = None) -> np.ndarray:
    """Transpose the A or B factor of the A|B cut.

    A bare matrix is accepted together with its ``layout`` so the map can be
    applied to operators that are not states (e.g. a previous partial transpose).
    """
    if side not in ("A", "B"):
        raise UsageError(f"side must be 'A' or 'B', got {side!r}")
    if isinstance(rho, DensityMatrix):
        matrix, layout = rho.matrix, rho.layout
    else:
        if layout is None:
            raise UsageError("a bare matrix needs its layout")
        matrix = np.asarray(rho)
        if matrix.shape != (layout.total_dim, layout.total_dim):
            raise UsageError(f"matrix shape {matrix.shape} does not match layout dimension {layout.total_dim}")
    da, db = layout.dim_a, layout.dim_b
    t = matrix.reshape(da, db, da, db)
    t = t.transpose(2, 1, 0, 3) if side == "A" else t.transpose(0, 3, 2, 1)
    return t.reshape(da * db, da * db)


def is_ppt(rho: DensityMatrix) -> bool:
    return bool(np.linalg.eigvalsh(partial_transpose(rho, "B"))[0] >= -EIG_TOL)


def schmidt_coefficients(state: PureState) -> np.ndarray:
    """Singular values of the A|B amplitude matrix, descending."""
    return np.linalg.svd(state.amplitude_matrix(), compute_uv=False)


# ----------------------------------------------------------------- sampling

def make_rng(seed, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator; ``key`` derives independent child streams."""
    if isinstance(seed, np.random.Generator):
        if key:
            raise UsageError("child keys need an integer seed, not a Generator")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _ginibre(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar unitary from the QR decomposition of a Ginibre matrix."""
    rng = make_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, (dim, dim)))
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def random_unitaries(count: int, dim: int, seed) -> np.ndarray:
    """Stack of ``count`` Haar unitaries, shape ``(count, dim, dim)``."""
    rng = make_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, (count, dim, dim)))
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def random_haar_pure(layout: SubsystemLayout, seed) -> PureState:
    rng = make_rng(seed)
    return PureState.normalized(_ginibre(rng, layout.total_dim), layout)


def random_product_pure(layout: SubsystemLayout, seed) -> PureState:
    rng = make_rng(seed)
    factors = []
    for d in layout.dims:
        v = _ginibre(rng, d)
        factors.append(v / np.linalg.norm(v))
    return PureState.normalized(reduce(np.kron, factors), layout)


def random_density(layout: SubsystemLayout, rank: int | None, seed) -> DensityMatrix:
    """``G G^dag / Tr(G G^dag)`` with a Ginibre ``G`` of the given rank."""
    dim = layout.total_dim
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise UsageError(f"rank must lie in [1, {dim}], got {rank}")
    rng = make_rng(seed)
    g = _ginibre(rng, (dim, rank))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m / np.trace(m).real, layout)


# ---------------------------------------------------------- reference states

def bell_tensor(n: int) -> PureState:
    """``2^{-n/2} sum_i |i_1..i_n>_A |i_1..i_n>_B`` in the A_1..A_n,B_1..B_n layout."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    d = 2 ** n
    return PureState(np.eye(d, dtype=complex).ravel() / np.sqrt(d), SubsystemLayout.multiqubit(n))


def max_entangled(d: int) -> PureState:
    """``|psi+> = d^{-1/2} sum_i |ii>`` on a d x d bipartite layout."""
    if d < 2:
        raise UsageError(f"d must be >= 2, got {d}")
    return PureState(np.eye(d, dtype=complex).ravel() / np.sqrt(d), SubsystemLayout.bipartite(d))


def werner(p: float, d: int = 2) -> DensityMatrix:
    """Isotropic mixture ``p |psi+><psi+| + (1-p) I/d^2`` (the two-qubit Werner family at d=2)."""
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"mixing weight p must lie in [0, 1], got {p}")
    psi = max_entangled(d).amplitudes
    dim = d * d
    m = p * np.outer(psi, psi.conj()) + (1.0 - p) * np.eye(dim) / dim
    return DensityMatrix(m, SubsystemLayout.bipartite(d))
