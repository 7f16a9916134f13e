"""Index-set combinatorics for sphere arrangements.

Index sets are plain sorted tuples of sphere labels (1-based ints).  The
empty tuple () is reserved for the standard volume form slot.  Ordered
sequences, where the enumeration order carries weight, are yielded as
non-sorted tuples by :func:`ordered_subsets`.
"""

from __future__ import annotations

import itertools
from math import comb
from typing import Iterable, Iterator

from .errors import DimensionMismatch

IndexSet = tuple  # sorted tuple of distinct ints


def index_set(items: Iterable[int]) -> IndexSet:
    """Canonicalize an iterable of labels into a sorted tuple, rejecting repeats."""
    t = tuple(sorted(items))
    if len(set(t)) != len(t):
        raise ValueError(f"repeated index in {t}")
    return t


def delete(J: IndexSet, j: int) -> IndexSet:
    """The set J with element j removed."""
    return tuple(x for x in J if x != j)


def admissible_sets(m: int, n: int) -> list[IndexSet]:
    """All J in {1..m} with 1 <= |J| <= n+1, lexicographic."""
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    out: list[IndexSet] = []
    for p in range(1, min(m, n + 1) + 1):
        out.extend(itertools.combinations(range(1, m + 1), p))
    return sorted(out)


def dimension(m: int, n: int) -> int:
    """Rank of the middle twisted cohomology of the arrangement complement:
    sum_{v=1}^{n} C(m, v) + C(m-1, n)."""
    return sum(comb(m, v) for v in range(1, n + 1)) + comb(m - 1, n)


def nbc_basis(m: int, n: int) -> list[IndexSet]:
    """The non-broken-circuit subfamily of the admissible sets.

    For m > n+1 the underlying order is n+1 < 1 < ... < n < n+2 < ... < m,
    which keeps every J with |J| <= n and exactly the (n+1)-sets containing
    the distinguished label n+1.  For m <= n+1 there are no dependent sets
    and every admissible set survives.
    """
    adm = admissible_sets(m, n)
    if m <= n + 1:
        basis = adm
    else:
        basis = [J for J in adm if len(J) <= n or (n + 1) in J]
    want = dimension(m, n)
    if len(basis) != want:
        raise DimensionMismatch(
            f"nbc basis has {len(basis)} elements, dimension formula gives {want}"
        )
    return basis


def is_nbc(J: IndexSet, m: int, n: int) -> bool:
    p = len(J)
    if p == 0 or p > n + 1:
        return False
    if m <= n + 1 or p <= n:
        return True
    return (n + 1) in J


def subsets(pool: Iterable[int], q: int) -> Iterator[IndexSet]:
    """Unordered q-subsets of pool, as sorted tuples."""
    return itertools.combinations(sorted(pool), q)


def ordered_subsets(pool: Iterable[int], q: int) -> Iterator[tuple]:
    """All ordered sequences of q distinct elements of pool.

    Enumeration is permutations of each combination, so the count is
    C(|pool|, q) * q!.  No caching: callers iterate once per use.
    """
    return itertools.permutations(sorted(pool), q)


def nonempty_subsets(pool: Iterable[int]) -> Iterator[IndexSet]:
    items = sorted(pool)
    for q in range(1, len(items) + 1):
        yield from itertools.combinations(items, q)
