"""Support-selection schemes: the projections that drive signal-space recovery.

A scheme maps a signal z to a support T such that the atoms indexed by T span
a good k-term approximation of z. Plain schemes (thresholding, OMP, the
representation-domain CoSaMP/IHT pursuits, the brute-force oracle) return at
most k atoms. The extension variants (eps-OMP, eps-thresholding) may return up
to zeta*k atoms, where zeta is the size of the largest group of mutually
correlated atoms: they exclude already-covered atoms during selection and
return the correlation closure of what they picked.

Determinism: every argmax breaks ties toward the lowest index, and all
randomness is injected through explicit seeds, so identical inputs always give
identical supports.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dictionaries import SALT_ESTIMATOR, Dictionary, rng_from
from .linalg import (
    SupportSet,
    captured_and_residual_sq,
    orthonormal_range,
    project,
    rank_rcond,
    top_k_indices,
)

SCHEME_KINDS = ("threshold", "omp", "cosamp-rep", "iht-rep", "eps-omp", "eps-threshold", "oracle")
_EPS_KINDS = ("eps-omp", "eps-threshold")

# Hard cap on the number of supports the brute-force oracle may enumerate.
ORACLE_SUPPORT_BUDGET = 200_000


class BudgetExceededError(RuntimeError):
    """Raised when a combinatorial enumeration would exceed its guard."""


@dataclass(frozen=True)
class SelectionScheme:
    """A support-selection scheme instance: kind, target sparsity, knobs.

    eps is the correlation slack of the extension variants. max_iters and
    rel_tol cap the representation-domain pursuits (defaults: 50 iterations
    for cosamp-rep, 200 for iht-rep, relative improvement floor 1e-6).
    """

    kind: str
    k: int
    eps: float = 0.0
    max_iters: int | None = None
    rel_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("scheme k must be >= 1")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("eps must lie in [0, 1)")
        if self.eps != 0.0 and self.kind not in _EPS_KINDS:
            raise ValueError(f"eps is only meaningful for {_EPS_KINDS}, not {self.kind!r}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass(frozen=True)
class NearOptimalityEstimate:
    """Empirical near-optimality constants of a scheme against the oracle.

    c_hat bounds the worst observed residual ratio (scheme over optimal,
    squared norms, clamped to >= 1). ctilde_hat bounds the worst observed
    captured-energy ratio (clamped to <= 1). Ratios with a vanishing optimal
    denominator are skipped; the *_trials counters say how many contributed.
    """

    c_hat: float
    ctilde_hat: float
    trials: int
    residual_trials: int
    capture_trials: int
    zeta: int

    def __post_init__(self) -> None:
        if self.c_hat < 1.0 - 1e-9:
            raise ValueError("c_hat must be >= 1 up to tolerance")
        if self.ctilde_hat > 1.0 + 1e-9:
            raise ValueError("ctilde_hat must be <= 1 up to tolerance")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def zeta_factor(scheme: SelectionScheme, D: Dictionary) -> int:
    """Support-inflation factor: 1 for plain schemes, the measured largest
    per-atom extension set for the eps variants."""
    if scheme.kind not in _EPS_KINDS:
        return 1
    table = D.neighbor_table(scheme.eps)
    return max(len(hits) for hits in table)


def threshold_select(D: Dictionary, z: np.ndarray, k: int) -> SupportSet:
    """Indices of the k largest |d_i^* z|; ties go to the lowest index."""
    if not 1 <= k <= D.n:
        raise ValueError("threshold requires 1 <= k <= n")
    corr = np.abs(D.matrix.conj().T @ z)
    return SupportSet(tuple(int(i) for i in top_k_indices(corr, k)), D.n)


def omp_select(D: Dictionary, z: np.ndarray, k: int) -> SupportSet:
    """Orthogonal matching pursuit: k greedy picks with full re-fit each round."""
    if not 1 <= k <= min(D.d, D.n):
        raise ValueError("omp requires 1 <= k <= min(d, n)")
    selected: list[int] = []
    taken = np.zeros(D.n, dtype=bool)
    r = z
    for _ in range(k):
        corr = np.abs(D.matrix.conj().T @ r)
        corr[taken] = -1.0
        i = int(np.argmax(corr))
        selected.append(i)
        taken[i] = True
        T = SupportSet.from_iterable(selected, D.n)
        r = z - project(D.matrix, T, z)
    return SupportSet.from_iterable(selected, D.n)


def eps_extend(D: Dictionary, T: SupportSet, eps: float) -> SupportSet:
    """Correlation closure of T: every atom whose normalized correlation with
    some atom of T reaches 1 - eps^2 (eps = 0 keeps only collinear atoms)."""
    if T.universe != D.n:
        raise ValueError("support universe does not match the dictionary")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if len(T) == 0:
        return T
    threshold = 1.0 - max(eps * eps, 1e-12)
    rows = D.correlation_rows(T.as_array())
    hits = np.flatnonzero((rows >= threshold).any(axis=0))
    return SupportSet.from_iterable(hits.tolist() + list(T), D.n)


def _extension_union(table: tuple[np.ndarray, ...], picked: list[int], n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for i in picked:
        mask[table[i]] = True
    return mask


def eps_omp_select(D: Dictionary, z: np.ndarray, k: int, eps: float) -> SupportSet:
    """OMP with correlation exclusion: each of the k rounds picks the best atom
    outside the closure of what was already picked, re-fits, and the final
    answer is the closure itself (at most zeta*k atoms)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    table = D.neighbor_table(eps)
    picked: list[int] = []
    excluded = np.zeros(D.n, dtype=bool)
    r = z
    for _ in range(k):
        if excluded.all():
            break
        corr = np.abs(D.matrix.conj().T @ r)
        corr[excluded] = -1.0
        i = int(np.argmax(corr))
        picked.append(i)
        T_hat = SupportSet.from_iterable(picked, D.n)
        r = z - project(D.matrix, T_hat, z)
        excluded = _extension_union(table, picked, D.n)
    return SupportSet.from_iterable(np.flatnonzero(excluded), D.n)


def eps_threshold_select(D: Dictionary, z: np.ndarray, k: int, eps: float) -> SupportSet:
    """Thresholding with correlation exclusion: correlations are computed once,
    each round takes the best atom outside the current closure."""
    if k < 1:
        raise ValueError("k must be >= 1")
    table = D.neighbor_table(eps)
    corr = np.abs(D.matrix.conj().T @ z)
    picked: list[int] = []
    excluded = np.zeros(D.n, dtype=bool)
    for _ in range(k):
        if excluded.all():
            break
        masked = np.where(excluded, -1.0, corr)
        i = int(np.argmax(masked))
        picked.append(i)
        excluded = _extension_union(table, picked, D.n)
    return SupportSet.from_iterable(np.flatnonzero(excluded), D.n)


def _sparse_support(values: np.ndarray) -> SupportSet:
    return SupportSet.from_iterable(np.flatnonzero(values), values.shape[0])


def cosamp_rep_select(
    D: Dictionary, z: np.ndarray, k: int, max_iters: int = 50, rel_tol: float = 1e-6
) -> SupportSet:
    """Support of a k-sparse representation found by CoSaMP run on (D, z).

    Stops on a near-zero residual or when the residual improves by less than
    rel_tol relative per iteration; hitting the iteration cap while still
    improving emits a RuntimeWarning and returns the best iterate's support.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = D.n
    alpha = np.zeros(n, dtype=np.result_type(D.matrix, z))
    r = z.astype(alpha.dtype, copy=True)
    z_norm = float(np.linalg.norm(z))
    prev_res = float(np.linalg.norm(r))
    best_res, best_support = prev_res, _sparse_support(alpha)
    converged = prev_res <= 1e-12 * max(z_norm, 1.0)
    for _ in range(max_iters):
        if converged:
            break
        proxy = np.abs(D.matrix.conj().T @ r)
        omega = np.union1d(np.flatnonzero(alpha), top_k_indices(proxy, 2 * k))
        cols = D.matrix[:, omega]
        coef, _, _, _ = np.linalg.lstsq(cols, z, rcond=rank_rcond(cols.shape))
        keep = top_k_indices(np.abs(coef), k)
        alpha = np.zeros_like(alpha)
        alpha[omega[keep]] = coef[keep]
        r = z - D.matrix @ alpha
        res = float(np.linalg.norm(r))
        if res < best_res:
            best_res, best_support = res, _sparse_support(alpha)
        if res <= 1e-12 * max(z_norm, 1.0) or prev_res - res < rel_tol * prev_res:
            converged = True
        prev_res = res
    if not converged:
        warnings.warn("cosamp-rep hit its iteration cap while still improving", RuntimeWarning)
    return best_support


def iht_rep_select(
    D: Dictionary, z: np.ndarray, k: int, max_iters: int = 200, rel_tol: float = 1e-6
) -> SupportSet:
    """Support of a k-sparse representation found by unit-step iterative hard
    thresholding on (D, z). Same convergence/warning contract as cosamp-rep."""
    if k < 1:
        raise ValueError("k must be >= 1")
    alpha = np.zeros(D.n, dtype=np.result_type(D.matrix, z))
    r = z.astype(alpha.dtype, copy=True)
    z_norm = float(np.linalg.norm(z))
    prev_res = float(np.linalg.norm(r))
    best_res, best_support = prev_res, _sparse_support(alpha)
    converged = prev_res <= 1e-12 * max(z_norm, 1.0)
    for _ in range(max_iters):
        if converged:
            break
        v = alpha + D.matrix.conj().T @ r
        keep = top_k_indices(np.abs(v), k)
        new_alpha = np.zeros_like(alpha)
        new_alpha[keep] = v[keep]
        if np.array_equal(new_alpha, alpha):
            converged = True
            break
        alpha = new_alpha
        r = z - D.matrix @ alpha
        res = float(np.linalg.norm(r))
        if res < best_res:
            best_res, best_support = res, _sparse_support(alpha)
        if res <= 1e-12 * max(z_norm, 1.0) or abs(prev_res - res) < rel_tol * prev_res:
            converged = True
        prev_res = res
    if not converged:
        warnings.warn("iht-rep hit its iteration cap while still improving", RuntimeWarning)
    return best_support


def _oracle_tables(D: Dictionary, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached (supports, padded orthonormal bases) for all supports of one size."""
    cached = D._oracle_cache.get(size)
    if cached is not None:
        return cached
    supports = np.asarray(list(combinations(range(D.n), size)), dtype=np.intp)
    bases = np.zeros((supports.shape[0], D.d, size), dtype=D.matrix.dtype)
    for row, T in enumerate(supports):
        U = orthonormal_range(D.matrix[:, T])
        bases[row, :, : U.shape[1]] = U
    D._oracle_cache[size] = (supports, bases)
    return supports, bases


def _check_oracle_budget(n: int, k: int) -> None:
    if not (n <= 24 or k <= 3):
        raise BudgetExceededError(f"combinatorial budget exceeded: n={n}, k={k}")
    total = sum(math.comb(n, s) for s in range(k + 1))
    if total > ORACLE_SUPPORT_BUDGET:
        raise BudgetExceededError(
            f"combinatorial budget exceeded: {total} supports for n={n}, k={k}"
        )


def oracle_stats(D: Dictionary, z: np.ndarray, k: int) -> tuple[SupportSet, float, float]:
    """Best support of size at most k with its captured and residual energy.

    Exhaustive search. Exact residual ties resolve to the lexicographically
    smallest index tuple (so a strict prefix beats its extensions and z = 0
    returns the empty support).
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    k = min(k, D.n)
    _check_oracle_budget(D.n, k)
    total = float(np.real(np.vdot(z, z)))
    best_residual = total
    best_captured = 0.0
    best_tuple: tuple[int, ...] = ()
    for size in range(1, k + 1):
        supports, bases = _oracle_tables(D, size)
        captured = np.linalg.norm(np.einsum("sdr,d->sr", bases.conj(), z), axis=1) ** 2
        row = int(np.argmax(captured))
        cap = float(captured[row])
        residual = max(total - cap, 0.0)
        cand = tuple(int(i) for i in supports[row])
        if residual < best_residual or (residual == best_residual and cand < best_tuple):
            best_residual, best_captured, best_tuple = residual, cap, cand
    return SupportSet(best_tuple, D.n), best_captured, best_residual


def oracle_select(D: Dictionary, z: np.ndarray, k: int) -> SupportSet:
    return oracle_stats(D, z, k)[0]


def select(scheme: SelectionScheme, D: Dictionary, z: np.ndarray) -> SupportSet:
    """Run a scheme on a signal."""
    if scheme.kind == "threshold":
        return threshold_select(D, z, scheme.k)
    if scheme.kind == "omp":
        return omp_select(D, z, scheme.k)
    if scheme.kind == "eps-omp":
        return eps_omp_select(D, z, scheme.k, scheme.eps)
    if scheme.kind == "eps-threshold":
        return eps_threshold_select(D, z, scheme.k, scheme.eps)
    if scheme.kind == "cosamp-rep":
        return cosamp_rep_select(D, z, scheme.k, scheme.max_iters or 50, scheme.rel_tol)
    if scheme.kind == "iht-rep":
        return iht_rep_select(D, z, scheme.k, scheme.max_iters or 200, scheme.rel_tol)
    if scheme.kind == "oracle":
        return oracle_select(D, z, scheme.k)
    raise ValueError(f"unknown scheme kind {scheme.kind!r}")  # pragma: no cover


def _estimator_draw(D: Dictionary, k: int, trial: int, rng: np.random.Generator) -> np.ndarray:
    complex_field = D.field_tag == "complex"

    def noise(size: int) -> np.ndarray:
        if complex_field:
            return rng.standard_normal(size) + 1j * rng.standard_normal(size)
        return rng.standard_normal(size)

    if trial % 2 == 0:
        return noise(D.d)
    support = np.sort(rng.choice(D.n, size=k, replace=False))
    coeffs = noise(k)
    sigma = (0.0, 0.1, 1.0)[(trial // 2) % 3]
    return D.matrix[:, support] @ coeffs + sigma * noise(D.d)


def estimate_near_optimality(
    scheme: SelectionScheme, D: Dictionary, trials: int, seed: int
) -> NearOptimalityEstimate:
    """Monte-Carlo estimate of a scheme's near-optimality constants.

    Half the test signals are pure Gaussian vectors, half are exactly k-sparse
    syntheses plus noise at sigma in {0, 0.1, 1}, which stresses both the
    residual and the captured-energy side of near-optimality.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    k = scheme.k
    c_hat = 1.0
    ctilde_hat = 1.0
    residual_trials = 0
    capture_trials = 0
    for trial in range(trials):
        rng = rng_from(seed, SALT_ESTIMATOR, trial)
        z = _estimator_draw(D, k, trial, rng)
        z_sq = float(np.real(np.vdot(z, z)))
        _, opt_cap, opt_res = oracle_stats(D, z, k)
        T = select(scheme, D, z)
        cap, res = captured_and_residual_sq(D.matrix, T, z)
        if opt_res > (1e-10) ** 2 * z_sq:
            c_hat = max(c_hat, res / opt_res)
            residual_trials += 1
        if opt_cap > (1e-10) ** 2 * z_sq:
            ctilde_hat = min(ctilde_hat, cap / opt_cap)
            capture_trials += 1
    return NearOptimalityEstimate(
        c_hat=c_hat,
        ctilde_hat=ctilde_hat,
        trials=trials,
        residual_trials=residual_trials,
        capture_trials=capture_trials,
        zeta=zeta_factor(scheme, D),
    )
