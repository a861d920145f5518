"""Nelder-Mead simplex descent run on many independent starts in lockstep.

Each start keeps its own simplex and follows the usual reflect / expand /
contract / shrink rules; only the objective evaluations are batched, so every
start evolves exactly as it would alone.  By default the coefficients scale
with the dimension (Gao & Han's adaptive choice, as in scipy's
``adaptive=True``), which converges markedly faster beyond a handful of
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

REFLECT = 1.0


def coefficients(dim: int, adaptive: bool = True) -> tuple[float, float, float]:
    """``(expand, contract, shrink)`` for a ``dim``-parameter simplex."""
    if not adaptive or dim < 2:
        return 2.0, 0.5, 0.5
    return 1.0 + 2.0 / dim, 0.75 - 0.5 / dim, 1.0 - 1.0 / dim


@dataclass
class SimplexRun:
    """Final state of every start: best point, best value, iterations, convergence."""

    x: np.ndarray          # (starts, dim)
    fun: np.ndarray        # (starts,)
    diameter: np.ndarray   # (starts,)
    iterations: np.ndarray  # (starts,)
    converged: np.ndarray  # (starts,) bool


def initial_simplices(x0: np.ndarray, step: float) -> np.ndarray:
    """Axis-aligned simplices ``x0, x0 + step e_1, ..., x0 + step e_d``."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    dim = x0.shape[1]
    offsets = np.vstack([np.zeros(dim), step * np.eye(dim)])
    return x0[:, None, :] + offsets[None, :, :]


def _diameter(sims: np.ndarray) -> np.ndarray:
    return np.max(np.linalg.norm(sims[:, 1:, :] - sims[:, :1, :], axis=2), axis=1)


def minimize_batch(
    fun: Callable[[np.ndarray], np.ndarray],
    simplices: np.ndarray,
    max_iter: int = 400,
    xtol: float = 1e-9,
    adaptive: bool = True,
) -> SimplexRun:
    """Minimize ``fun`` from every simplex in ``simplices`` (shape ``(starts, dim+1, dim)``).

    ``fun`` maps an ``(m, dim)`` array of points to ``m`` objective values.
    A start stops once its simplex diameter falls below ``xtol`` (converged) or
    after ``max_iter`` iterations.  ``adaptive=False`` gives the classic 1/2/0.5/0.5.
    """
    sims = np.array(simplices, dtype=float)
    starts, npts, dim = sims.shape
    expand_c, contract_c, shrink_c = coefficients(dim, adaptive)
    fs = fun(sims.reshape(-1, dim)).reshape(starts, npts)
    iterations = np.zeros(starts, dtype=int)
    converged = np.zeros(starts, dtype=bool)
    active = np.ones(starts, dtype=bool)

    for _ in range(max_iter):
        order = np.argsort(fs, axis=1, kind="stable")
        sims = np.take_along_axis(sims, order[:, :, None], axis=1)
        fs = np.take_along_axis(fs, order, axis=1)
        done = _diameter(sims) < xtol
        converged |= done & active
        active &= ~done
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iterations[idx] += 1

        s, f = sims[idx], fs[idx]
        worst, f_worst = s[:, -1], f[:, -1]
        f_best, f_second = f[:, 0], f[:, -2]
        centroid = s[:, :-1].mean(axis=1)
        xr = centroid + REFLECT * (centroid - worst)
        fr = fun(xr)

        expand = fr < f_best
        accept_r = ~expand & (fr < f_second)
        outside = ~expand & ~accept_r & (fr < f_worst)
        inside = ~expand & ~accept_r & ~outside

        trial = np.where(
            expand[:, None], centroid + expand_c * (centroid - worst),
            np.where(outside[:, None], centroid + contract_c * (xr - centroid),
                     centroid + contract_c * (worst - centroid)))
        need = expand | outside | inside
        ft = np.full(idx.size, np.inf)
        if need.any():
            ft[need] = fun(trial[need])

        new_x = worst.copy()
        new_f = f_worst.copy()
        take_e = expand & (ft < fr)
        take_r = accept_r | (expand & ~take_e)
        take_c = (outside & (ft <= fr)) | (inside & (ft < f_worst))
        new_x[take_r], new_f[take_r] = xr[take_r], fr[take_r]
        new_x[take_e], new_f[take_e] = trial[take_e], ft[take_e]
        new_x[take_c], new_f[take_c] = trial[take_c], ft[take_c]
        s[:, -1], f[:, -1] = new_x, new_f

        shrink = (outside | inside) & ~take_c
        if shrink.any():
            k = np.flatnonzero(shrink)
            best = s[k, :1, :]
            s[k, 1:] = best + shrink_c * (s[k, 1:] - best)
            f[k, 1:] = fun(s[k, 1:].reshape(-1, dim)).reshape(k.size, dim)

        sims[idx], fs[idx] = s, f

    order = np.argsort(fs, axis=1, kind="stable")
    sims = np.take_along_axis(sims, order[:, :, None], axis=1)
    fs = np.take_along_axis(fs, order, axis=1)
    diam = _diameter(sims)
    converged |= diam < xtol
    return SimplexRun(sims[:, 0].copy(), fs[:, 0].copy(), diam, iterations, converged)
