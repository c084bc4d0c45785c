"""Signal-space CoSaMP over a redundant dictionary.

The estimate lives in signal space: each iteration expands the support with a
selection scheme applied to the back-projected residual, solves a min-norm
least-squares fit of y against the measured atoms of the merged support,
shrinks back with a second scheme, and re-projects. Plain schemes give the
classical behaviour; the eps extension schemes trade support size for
robustness to strongly correlated atoms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dictionaries import Dictionary
from .linalg import SupportSet, ls_synthesize, project, rank_rcond
from .projections import SelectionScheme, select

STOP_RESIDUAL = "residual"
STOP_STAGNATION = "stagnation"
STOP_MAX_ITERS = "max_iters"

# Stagnation looks at the relative residual drop over this many iterations.
STAGNATION_WINDOW = 3


@dataclass(frozen=True)
class HaltingRule:
    """When to stop iterating: residual floor, stagnation floor, iteration cap."""

    max_iters: int = 50
    residual_tol: float = 1e-6
    stagnation_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.residual_tol < 0 or self.stagnation_tol < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass(frozen=True)
class SSCoSaMPConfig:
    """Sparsity k, expansion factor a, and the two selection schemes.

    scheme_expand picks new atoms from the residual proxy and must target a*k
    atoms; scheme_shrink prunes the merged fit back to k atoms.
    """

    k: int
    scheme_expand: SelectionScheme
    scheme_shrink: SelectionScheme
    a: int = 2
    halting: HaltingRule = field(default_factory=HaltingRule)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.a < 1:
            raise ValueError("a must be >= 1")
        if self.scheme_expand.k != self.a * self.k:
            raise ValueError("scheme_expand must target a*k atoms")
        if self.scheme_shrink.k != self.k:
            raise ValueError("scheme_shrink must target k atoms")


@dataclass(frozen=True)
class TraceEntry:
    """Per-iteration sizes and norms (error_norm only when the truth is known)."""

    iteration: int
    support_size: int
    merged_size: int
    residual_norm: float
    error_norm: float | None = None


@dataclass(frozen=True)
class RecoveryReport:
    """Outcome of a recovery run."""

    estimate: np.ndarray
    support: SupportSet
    iterations: int
    stop_reason: str
    residual_norm: float
    trace: tuple[TraceEntry, ...]
    wall_time: float

    def to_dict(self, include_estimate: bool = True) -> dict:
        """JSON-friendly view; complex entries become [real, imag] pairs."""
        out: dict = {
            "support": list(self.support.indices),
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "residual_norm": self.residual_norm,
            "wall_time": self.wall_time,
            "trace": [
                {
                    "iteration": t.iteration,
                    "support_size": t.support_size,
                    "merged_size": t.merged_size,
                    "residual_norm": t.residual_norm,
                    **({"error_norm": t.error_norm} if t.error_norm is not None else {}),
                }
                for t in self.trace
            ],
        }
        if include_estimate:
            x = self.estimate
            if np.iscomplexobj(x):
                out["estimate"] = [[float(v.real), float(v.imag)] for v in x]
            else:
                out["estimate"] = [float(v) for v in x]
        return out


def _stagnated(history: list[float], tol: float) -> bool:
    if len(history) < STAGNATION_WINDOW + 1:
        return False
    old = history[-1 - STAGNATION_WINDOW]
    new = history[-1]
    if old <= 0.0:
        return True
    return (old - new) / old < tol


def sscosamp(
    y: np.ndarray,
    M: np.ndarray,
    D: Dictionary,
    config: SSCoSaMPConfig,
    x_true: np.ndarray | None = None,
) -> RecoveryReport:
    """Recover x from y = M x + e, assuming x is spanned by k dictionary atoms.

    Returns the projected estimate, its support, and a per-iteration trace.
    Stop reasons: "residual" (relative residual under the floor), "stagnation"
    (relative residual drop over a short window under the floor), "max_iters".
    """
    y = np.asarray(y)
    M = np.asarray(M)
    if M.ndim != 2 or y.shape != (M.shape[0],):
        raise ValueError("y must be a vector with one entry per measurement row")
    if M.shape[1] != D.d:
        raise ValueError("measurement columns must match the dictionary signal dimension")
    start = time.perf_counter()
    halting = config.halting
    dtype = np.result_type(M, D.matrix, y)
    x = np.zeros(D.d, dtype=dtype)
    support = SupportSet.empty(D.n)
    y_norm = float(np.linalg.norm(y))
    residual = y.astype(dtype, copy=True)
    res_norm = y_norm
    history = [res_norm]
    trace: list[TraceEntry] = []
    stop_reason = STOP_MAX_ITERS
    iterations = 0
    if res_norm <= halting.residual_tol * max(y_norm, 1.0):
        stop_reason = STOP_RESIDUAL
    else:
        for it in range(1, halting.max_iters + 1):
            proxy = M.conj().T @ residual
            expand = select(config.scheme_expand, D, proxy)
            merged = support.union(expand)
            x_fit = ls_synthesize(M, D.matrix, merged, y)
            support = select(config.scheme_shrink, D, x_fit)
            x = project(D.matrix, support, x_fit)
            residual = y - M @ x
            res_norm = float(np.linalg.norm(residual))
            history.append(res_norm)
            iterations = it
            err = float(np.linalg.norm(x - x_true)) if x_true is not None else None
            trace.append(TraceEntry(it, len(support), len(merged), res_norm, err))
            if res_norm <= halting.residual_tol * max(y_norm, 1.0):
                stop_reason = STOP_RESIDUAL
                break
            if _stagnated(history, halting.stagnation_tol):
                stop_reason = STOP_STAGNATION
                break
    wall = time.perf_counter() - start
    return RecoveryReport(
        estimate=x,
        support=support,
        iterations=iterations,
        stop_reason=stop_reason,
        residual_norm=res_norm,
        trace=tuple(trace),
        wall_time=wall,
    )


def eps_omp_recover(
    y: np.ndarray,
    M: np.ndarray,
    D: Dictionary,
    k: int,
    eps: float,
) -> tuple[np.ndarray, SupportSet]:
    """One-shot eps-OMP on the measured atoms.

    Selection correlates the residual against the columns of M D, exclusion
    uses the dictionary's own correlation closure, and the final estimate is a
    min-norm fit of y over the measured atoms of the closure.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    y = np.asarray(y)
    M = np.asarray(M)
    if M.ndim != 2 or y.shape != (M.shape[0],):
        raise ValueError("y must be a vector with one entry per measurement row")
    if M.shape[1] != D.d:
        raise ValueError("measurement columns must match the dictionary signal dimension")
    composite = M @ D.matrix
    table = D.neighbor_table(eps)
    picked: list[int] = []
    excluded = np.zeros(D.n, dtype=bool)
    dtype = np.result_type(composite, y)
    r = y.astype(dtype, copy=True)
    for _ in range(k):
        if excluded.all():
            break
        corr = np.abs(composite.conj().T @ r)
        corr[excluded] = -1.0
        i = int(np.argmax(corr))
        picked.append(i)
        excluded[table[i]] = True
        cols = composite[:, sorted(picked)]
        coef, _, _, _ = np.linalg.lstsq(cols, y, rcond=rank_rcond(cols.shape))
        r = y - cols @ coef
    support = SupportSet.from_iterable(np.flatnonzero(excluded), D.n)
    x = ls_synthesize(M, D.matrix, support, y)
    return x, support


def iteration_invariant_check(
    errors: list[float] | tuple[float, ...],
    rho: float,
    eta: float,
    e_norm: float,
    tol: float = 1e-9,
) -> bool:
    """True when every step satisfies err_t <= rho * err_{t-1} + eta * ||e||.

    errors[0] is the initial error ||x - x^0||; subsequent entries follow the
    iterates. tol absorbs floating-point slack.
    """
    if len(errors) < 2:
        return True
    bound_add = eta * e_norm + tol
    return all(errors[t] <= rho * errors[t - 1] + bound_add for t in range(1, len(errors)))
