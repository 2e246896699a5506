"""Frequency-lattice algebra on the integer torus lattice.

A quasiperiodic field in ``d`` physical dimensions is the restriction of a
periodic field on the ``n``-torus along the slice ``y = P^T x``.  Torus
frequencies ``k`` (integer ``n``-tuples) map to physical frequencies
``P @ k``.  This module holds the projection matrix, the truncated
frequency sets ``K_N^n`` and their fixed row-major linearization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class ProjectionMatrix:
    """Real ``d x n`` matrix mapping torus frequencies to physical ones.

    ``rationally_independent`` only documents that the columns are
    Q-linearly independent; floating point cannot certify it, so it is
    never checked.
    """

    entries: np.ndarray
    rationally_independent: bool = True

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("projection matrix must be a non-empty 2-D array")
        d, n = a.shape
        if n < d:
            raise ValueError(f"need n >= d, got d={d}, n={n}")
        if not np.all(np.isfinite(a)):
            raise ValueError("projection matrix has non-finite entries")
        sv = np.linalg.svd(a, compute_uv=False)
        if sv[-1] <= RANK_TOL * max(sv[0], 1.0):
            raise ValueError(f"projection matrix must have rank d={d}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def from_rows(cls, d: int, n: int, values: Sequence[float]) -> "ProjectionMatrix":
        """Build from a flat row-major list, as stored in experiment configs."""
        values = list(values)
        if len(values) != d * n:
            raise ValueError(f"expected {d * n} entries for a {d}x{n} matrix, got {len(values)}")
        return cls(np.asarray(values, dtype=float).reshape(d, n))

    def to_rows(self) -> list[float]:
        return [float(v) for v in self.entries.ravel()]

    def __eq__(self, other):
        if not isinstance(other, ProjectionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class FrequencyIndexSet:
    """The truncated lattice ``K_N^n`` with its fixed enumeration.

    For even ``N`` each component lies in ``[-N/2, N/2)``; for odd ``N`` in
    ``[-(N-1)/2, (N-1)/2]``.  Either way the lower bound is ``-(N // 2)``, and
    the linear index of ``k`` is ``sum_j (k_j + N//2) * N**(n-1-j)`` (first
    component varies slowest).
    """

    N: int
    n: int
    indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N <= 0 or self.n <= 0:
            raise ValueError(f"N and n must be positive, got N={self.N}, n={self.n}")
        axis = np.arange(self.N) - self.N // 2
        grids = np.meshgrid(*([axis] * self.n), indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=-1).astype(np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def low(self) -> int:
        return -(self.N // 2)

    @property
    def high(self) -> int:
        """Largest allowed component (inclusive)."""
        return self.N - 1 - self.N // 2

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    def __len__(self) -> int:
        return self.N**self.n

    def __iter__(self) -> Iterator[MultiIndex]:
        for row in self.indices:
            yield tuple(int(v) for v in row)

    def __contains__(self, k) -> bool:
        k = np.asarray(k)
        return k.shape == (self.n,) and bool(np.all((k >= self.low) & (k <= self.high)))

    def contains_array(self, ks: np.ndarray) -> np.ndarray:
        """Row-wise membership mask for an ``(m, n)`` integer array."""
        ks = np.asarray(ks)
        return np.all((ks >= self.low) & (ks <= self.high), axis=-1)

    def linearize_array(self, ks: np.ndarray) -> np.ndarray:
        """Vectorised :func:`linearize` for an ``(m, n)`` array of members."""
        shifted = np.asarray(ks, dtype=np.int64) - self.low
        return np.ravel_multi_index(tuple(shifted.T), self.shape)


def build_index_set(N: int, n: int) -> FrequencyIndexSet:
    return FrequencyIndexSet(N, n)


def linearize(k: Sequence[int], index_set: FrequencyIndexSet) -> int:
    if len(k) != index_set.n:
        raise ValueError(f"multi-index {tuple(k)} has length {len(k)}, expected {index_set.n}")
    if tuple(k) not in index_set:
        raise IndexError(f"multi-index {tuple(k)} is outside K_{index_set.N}^{index_set.n}")
    i = 0
    for kj in k:
        i = i * index_set.N + (int(kj) - index_set.low)
    return i


def delinearize(i: int, index_set: FrequencyIndexSet) -> MultiIndex:
    if not 0 <= i < len(index_set):
        raise IndexError(f"linear index {i} outside [0, {len(index_set)})")
    out = []
    for _ in range(index_set.n):
        i, r = divmod(i, index_set.N)
        out.append(r + index_set.low)
    return tuple(reversed(out))


def frequency(P: ProjectionMatrix, k: Sequence[int]) -> np.ndarray:
    """Physical frequency ``P @ k``; ``k`` may also be an ``(m, n)`` array."""
    k = np.asarray(k)
    if k.shape[-1] != P.n:
        raise ValueError(f"multi-index length {k.shape[-1]} does not match n={P.n}")
    return k @ P.entries.T


def wrap_mod(kV: Sequence[int], kU: Sequence[int], N: int) -> MultiIndex:
    """``(kV - kU) mod N`` reduced componentwise into the range of ``K_N``."""
    diff = np.asarray(kV, dtype=np.int64) - np.asarray(kU, dtype=np.int64)
    h = N // 2
    return tuple(int(v) for v in (diff + h) % N - h)


def wrap_array(diff: np.ndarray, N: int) -> np.ndarray:
    """Vectorised reduction of integer differences into ``[-N//2, N - N//2)``."""
    h = N // 2
    return (np.asarray(diff) + h) % N - h
