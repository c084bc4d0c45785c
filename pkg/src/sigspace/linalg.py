"""Dense linear-algebra kernels shared by the whole package.

Everything here is a thin, convention-fixing layer over numpy/LAPACK. The two
conventions that matter package-wide:

* Rank decisions: a singular value is treated as zero when it falls below
  ``max(rows, cols) * machine_eps * 10 * sigma_max``. Highly correlated atoms
  make near-singular subproblems routine, so the cutoff is deliberately a
  factor 10 looser than numpy's default.
* Rank-deficient least squares always returns the minimum-norm solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

# Extra slack on top of max(dims)*eps*sigma_max when deciding numerical rank.
RANK_CUTOFF_FACTOR = 10.0

_EPS = float(np.finfo(np.float64).eps)


def rank_rcond(shape: tuple[int, int]) -> float:
    """Relative singular-value cutoff for a matrix of the given shape."""
    return max(shape) * _EPS * RANK_CUTOFF_FACTOR


@dataclass(frozen=True)
class SupportSet:
    """A strictly increasing tuple of atom indices inside a universe of size n.

    The ascending order is part of the contract: submatrix column order and
    coefficient indexing follow it, so results are reproducible regardless of
    the order in which a scheme discovered the indices.
    """

    indices: tuple[int, ...]
    universe: int

    def __post_init__(self) -> None:
        idx = self.indices
        if any(not isinstance(i, int) for i in idx):
            object.__setattr__(self, "indices", tuple(int(i) for i in idx))
            idx = self.indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("support indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.universe):
            raise ValueError(
                f"support indices must lie in [0, {self.universe}), got {idx[0]}..{idx[-1]}"
            )
        if self.universe < 0:
            raise ValueError("universe size must be nonnegative")

    @classmethod
    def from_iterable(cls, indices: Iterable[int], universe: int) -> "SupportSet":
        """Build a support from any iterable, sorting and deduplicating."""
        return cls(tuple(sorted({int(i) for i in indices})), universe)

    @classmethod
    def empty(cls, universe: int) -> "SupportSet":
        return cls((), universe)

    def union(self, other: "SupportSet") -> "SupportSet":
        if self.universe != other.universe:
            raise ValueError("cannot union supports over different universes")
        return SupportSet.from_iterable(self.indices + other.indices, self.universe)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, i: object) -> bool:
        return i in self.indices


def subdict(D: np.ndarray, T: SupportSet) -> np.ndarray:
    """Columns of D restricted to T, in ascending index order."""
    if D.shape[1] != T.universe:
        raise ValueError(f"support universe {T.universe} does not match n={D.shape[1]}")
    return D[:, T.as_array()]


def orthonormal_range(A: np.ndarray) -> np.ndarray:
    """An orthonormal basis of range(A), empty for the zero/empty matrix.

    Basis vectors are left singular vectors whose singular value clears the
    package rank cutoff, so duplicated or nearly collinear columns collapse
    to a single direction instead of poisoning projections.
    """
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if A.shape[1] == 0 or A.shape[0] == 0:
        return np.zeros((A.shape[0], 0), dtype=A.dtype)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((A.shape[0], 0), dtype=A.dtype)
    cutoff = rank_rcond(A.shape) * s[0]
    return U[:, s > cutoff]


def project(D: np.ndarray, T: SupportSet, z: np.ndarray) -> np.ndarray:
    """Orthogonal projection of z onto span of the atoms indexed by T."""
    U = orthonormal_range(subdict(D, T))
    if U.shape[1] == 0:
        return np.zeros_like(z, dtype=np.result_type(D, z))
    return U @ (U.conj().T @ z)


def coproject(D: np.ndarray, T: SupportSet, z: np.ndarray) -> np.ndarray:
    """Residual complement z - P_T z."""
    return z - project(D, T, z)


def captured_and_residual_sq(D: np.ndarray, T: SupportSet, z: np.ndarray) -> tuple[float, float]:
    """(||P_T z||^2, ||z - P_T z||^2) computed from one basis, residual clamped >= 0."""
    U = orthonormal_range(subdict(D, T))
    total = float(np.real(np.vdot(z, z)))
    if U.shape[1] == 0:
        return 0.0, total
    cap = float(np.linalg.norm(U.conj().T @ z) ** 2)
    return cap, max(total - cap, 0.0)


def ls_synthesize(M: np.ndarray, D: np.ndarray, T: SupportSet, y: np.ndarray) -> np.ndarray:
    """Signal-space least-squares fit restricted to a support.

    Returns x_p = D_T a where a = argmin ||M D_T a - y||_2, taking the
    minimum-norm solution when M D_T is rank deficient. The output always
    lies in range(D_T); an empty support gives the zero signal.
    """
    out_dtype = np.result_type(M, D, y)
    if len(T) == 0:
        return np.zeros(D.shape[0], dtype=out_dtype)
    cols = subdict(D, T)
    A = M @ cols
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=rank_rcond(A.shape))
    return cols @ coef


def top_k_indices(magnitudes: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties resolved to the lowest index.

    Returns indices in ascending order. Relies on a stable sort of the negated
    magnitudes so equal values keep their original (ascending-index) order.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    k = min(k, magnitudes.shape[0])
    order = np.argsort(-magnitudes, kind="stable")
    return np.sort(order[:k])
