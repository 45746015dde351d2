"""Permutations, cycle decompositions, and counting utilities.

A permutation pi on {0..n-1} is stored as its forward mapping array
(``mapping[i] = pi(i)``); the matrix form Pi with ``Pi[i, pi(i)] = 1`` is
materialized only on demand, so applying Pi to a vector is the gather
``v[mapping]`` and Pi^T v is the corresponding scatter.  External
serialization (JSON/CSV cells) uses 1-based arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, InvalidArgumentError


@dataclass(frozen=True, eq=False)
class Permutation:
    """A bijection on {0..n-1} with cached cycle structure."""

    mapping: np.ndarray = field()

    def __post_init__(self):
        m = np.asarray(self.mapping, dtype=np.intp).copy()
        if m.ndim != 1 or m.size == 0:
            raise InvalidArgumentError("mapping must be a nonempty 1-d integer array")
        n = m.size
        seen = np.zeros(n, dtype=bool)
        if m.min() < 0 or m.max() >= n:
            raise InvalidArgumentError("mapping values must lie in {0..n-1}")
        seen[m] = True
        if not seen.all():
            raise InvalidArgumentError("mapping is not a bijection of {0..n-1}")
        m.flags.writeable = False
        object.__setattr__(self, "mapping", m)

    @property
    def n(self) -> int:
        return self.mapping.size

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @classmethod
    def from_one_based(cls, values) -> "Permutation":
        return cls(np.asarray(values, dtype=np.intp) - 1)

    def to_one_based(self) -> list[int]:
        return [int(v) + 1 for v in self.mapping]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Pi @ v for a vector, or Pi @ M row shuffle for a matrix."""
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise DimensionError(f"cannot apply size-{self.n} permutation to length-{v.shape[0]} input")
        return v[self.mapping]

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        """Pi^T @ v (equivalently applying the inverse permutation)."""
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise DimensionError(f"cannot apply size-{self.n} permutation to length-{v.shape[0]} input")
        out = np.empty_like(v)
        out[self.mapping] = v
        return out

    def inverse(self) -> "Permutation":
        inv = np.empty(self.n, dtype=np.intp)
        inv[self.mapping] = np.arange(self.n)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(i) = self(other(i))."""
        if other.n != self.n:
            raise DimensionError("cannot compose permutations of different sizes")
        return Permutation(self.mapping[other.mapping])

    def matrix(self) -> np.ndarray:
        """Dense n x n matrix with Pi[i, pi(i)] = 1, so Pi @ v == v[mapping]."""
        mat = np.zeros((self.n, self.n))
        mat[np.arange(self.n), self.mapping] = 1.0
        return mat

    @cached_property
    def fixed_point_count(self) -> int:
        return int(np.count_nonzero(self.mapping == np.arange(self.n)))

    @cached_property
    def _cycle_type(self) -> "CycleType":
        counts: dict[int, int] = {}
        seen = np.zeros(self.n, dtype=bool)
        for start in range(self.n):
            if seen[start]:
                continue
            length = 0
            j = start
            while not seen[j]:
                seen[j] = True
                j = int(self.mapping[j])
                length += 1
            counts[length] = counts.get(length, 0) + 1
        return CycleType(self.n, counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.mapping, other.mapping)

    def __repr__(self) -> str:
        return f"Permutation({self.to_one_based()})"


@dataclass(frozen=True)
class CycleType:
    """Multiset of cycle lengths: counts[k] = number of k-cycles."""

    n: int
    counts: dict[int, int]

    def __post_init__(self):
        clean = {int(k): int(c) for k, c in self.counts.items() if c != 0}
        if any(k < 1 or k > self.n for k in clean) or any(c < 0 for c in clean.values()):
            raise InvalidArgumentError("cycle lengths must lie in {1..n} with nonnegative counts")
        if sum(k * c for k, c in clean.items()) != self.n:
            raise InvalidArgumentError(f"cycle lengths must partition n={self.n}")
        object.__setattr__(self, "counts", clean)

    @property
    def total_cycles(self) -> int:
        return sum(self.counts.values())

    @property
    def fixed_points(self) -> int:
        return self.counts.get(1, 0)


def cycle_type(p: Permutation) -> CycleType:
    """Cycle-length counts {k: n_k} of the disjoint-cycle decomposition."""
    return p._cycle_type


def overlap(a: Permutation, b: Permutation) -> float:
    """Fraction of indices on which the two permutations agree."""
    if a.n != b.n:
        raise DimensionError(f"overlap undefined for sizes {a.n} and {b.n}")
    return float(np.count_nonzero(a.mapping == b.mapping)) / a.n


def sample_uniform(n: int, rng: np.random.Generator) -> Permutation:
    """Uniformly random permutation (Fisher-Yates via the supplied generator)."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    return Permutation(rng.permutation(n))


def sample_derangement(n: int, rng: np.random.Generator) -> Permutation:
    """Uniformly random fixed-point-free permutation, by rejection."""
    if n < 2:
        raise InvalidArgumentError("derangements require n >= 2")
    idx = np.arange(n)
    while True:
        m = rng.permutation(n)
        if not np.any(m == idx):
            return Permutation(m)


def derangement_count(m: int) -> int:
    """Number of derangements D(m), exact integer recurrence."""
    if m < 0:
        raise InvalidArgumentError("m must be >= 0")
    if m == 0:
        return 1
    prev2, prev1 = 1, 0  # D(0), D(1)
    if m == 1:
        return 0
    for k in range(2, m + 1):
        prev2, prev1 = prev1, (k - 1) * (prev1 + prev2)
    return prev1


def count_with_fixed_points(n: int, n1: int) -> int:
    """Number of permutations of n elements with exactly n1 fixed points.

    Exact value C(n, n1) * D(n - n1); the crude cap C(n, n1) * (n - n1)!
    bounds it from above.  n1 = n - 1 is impossible and rejected.
    """
    if not 0 <= n1 <= n:
        raise InvalidArgumentError(f"n1 must lie in 0..{n}, got {n1}")
    if n1 == n - 1:
        raise InvalidArgumentError("no permutation has exactly n-1 fixed points")
    return math.comb(n, n1) * derangement_count(n - n1)
