"""Twisted-cohomology classes over the admissible index system.

A class is a finite rational linear combination of basis symbols indexed
by admissible index sets: kind "F" uses the first-kind generators
F_J = varpi / prod_{j in J} f_j (the empty set indexing varpi itself),
kind "W0" uses the second-kind generators W0(J) varpi, triangular
combinations of the F_K with Cayley-Menger coefficients:

    W0(j) varpi = B(0*j) F_j,
    W0(J) varpi = -sum_{j in J} B(0 j dJ / 0 * dJ) F_{dJ} + B(0*J) F_J,

with dJ the deletion of j.  The logarithmic wedge forms are never data
here: their normalization involves sqrt(B(0J)), which cancels in every
identity actually used downstream, so each such identity is implemented
already solved into rational W0/F coefficients.

For m > n+1 the admissible system is overcomplete; equality of classes is
decided by eager reduction to the non-broken-circuit (NBC) subfamily.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .arrangement import STAR, Arrangement, b0, b0s, cm_minor, require_nonzero
from .errors import ResonantDenominator, SingularMinor
from .indices import (
    IndexSet,
    admissible_sets,
    delete,
    index_set,
    is_nbc,
    nonempty_subsets,
    ordered_subsets,
)


@dataclass(frozen=True)
class LambdaPoint:
    """An exact rational exponent vector (lambda_1 .. lambda_m)."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))

    @classmethod
    def of(cls, *values) -> "LambdaPoint":
        return cls(tuple(values))

    @property
    def m(self) -> int:
        return len(self.values)

    def lam(self, j: int) -> Fraction:
        return self.values[j - 1]

    @property
    def lam_inf(self) -> Fraction:
        return sum(self.values, Fraction(0))

    def lam_sum(self, J: Iterable[int]) -> Fraction:
        return sum((self.lam(j) for j in J), Fraction(0))

    def lam_prod(self, J: Iterable[int]) -> Fraction:
        out = Fraction(1)
        for j in J:
            out *= self.lam(j)
        return out

    def shift(self, j: int, step: int = -1) -> "LambdaPoint":
        vals = list(self.values)
        vals[j - 1] += step
        return LambdaPoint(tuple(vals))

    def check_nonresonant(self) -> None:
        """The blanket condition: lambda_j not in {0,1,2,...} and
        2 lambda_inf not in {0,-1,-2,...}."""
        for j, v in enumerate(self.values, start=1):
            if v.denominator == 1 and v >= 0:
                raise ResonantDenominator(f"lambda_{j} = {v} is a non-negative integer")
        tw = 2 * self.lam_inf
        if tw.denominator == 1 and tw <= 0:
            raise ResonantDenominator(f"2 lambda_inf = {tw} is a non-positive integer")

    def floats(self) -> list:
        return [float(v) for v in self.values]


class CohomClass:
    """Immutable linear combination of F_J or W0(J)varpi symbols.

    ``coeffs`` maps sorted index tuples to nonzero Fractions; the empty
    tuple stands for the bare volume form varpi in either kind.
    """

    __slots__ = ("kind", "coeffs")

    def __init__(self, kind: str, coeffs: Optional[Mapping] = None):
        if kind not in ("F", "W0"):
            raise ValueError("kind must be 'F' or 'W0'")
        object.__setattr__(self, "kind", kind)
        clean = {}
        for key, val in (coeffs or {}).items():
            val = Fraction(val)
            if val != 0:
                clean[index_set(key)] = val
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, *a):  # immutability guard
        raise AttributeError("CohomClass is immutable")

    # -- constructors --

    @classmethod
    def zero(cls, kind: str = "F") -> "CohomClass":
        return cls(kind, {})

    @classmethod
    def single(cls, kind: str, key, coeff=1) -> "CohomClass":
        return cls(kind, {tuple(key): Fraction(coeff)})

    # -- linear algebra --

    def __add__(self, other: "CohomClass") -> "CohomClass":
        if self.kind != other.kind:
            raise ValueError("cannot add classes of different kind")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return CohomClass(self.kind, out)

    def __sub__(self, other: "CohomClass") -> "CohomClass":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "CohomClass":
        s = Fraction(scalar)
        return CohomClass(self.kind, {k: s * v for k, v in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CohomClass)
            and self.kind == other.kind
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.coeffs.items()))))

    def __repr__(self):
        if not self.coeffs:
            return f"CohomClass({self.kind}, 0)"
        parts = [f"{v}*{self.kind}{k}" for k, v in sorted(self.coeffs.items())]
        return f"CohomClass({' + '.join(parts)})"

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def get(self, key) -> Fraction:
        return self.coeffs.get(tuple(key), Fraction(0))

    def support(self) -> list:
        return sorted(self.coeffs)


def weight_range(cls: CohomClass) -> tuple[int, int]:
    """(min |J|, max |J|) over the support of an F-kind class; (0, 0) for
    the zero class."""
    if cls.kind != "F":
        raise ValueError("weight is graded on the F basis")
    if cls.is_zero:
        return (0, 0)
    sizes = [len(k) for k in cls.coeffs]
    return (min(sizes), max(sizes))


# -- second-kind generators in the F basis ----------------------------------


def w0_in_F(arr: Arrangement, J: Iterable[int]) -> CohomClass:
    """Expansion of W0(J)varpi over the F_K.

    For |J| = n+2 the class is cohomologically zero (this is exactly the
    partial-fraction relation used for NBC reduction), and for larger J the
    defining minors vanish identically, so the zero class is returned in
    both cases.
    """
    J = index_set(J)
    if not J:
        raise ValueError("J must be nonempty")
    if len(J) >= arr.n + 2:
        return CohomClass.zero("F")
    if len(J) == 1:
        return CohomClass.single("F", J, b0s(arr, J))
    coeffs = {J: b0s(arr, J)}
    for j in J:
        dJ = delete(J, j)
        coeffs[dJ] = coeffs.get(dJ, Fraction(0)) - cm_minor(
            arr, (0, j) + dJ, (0, STAR) + dJ
        )
    return CohomClass("F", coeffs)


def to_F(arr: Arrangement, cls: CohomClass) -> CohomClass:
    """Rewrite a W0-kind class over the F basis (the varpi slot passes
    through)."""
    if cls.kind == "F":
        return cls
    out = CohomClass.zero("F")
    for K, c in cls.coeffs.items():
        if K == ():
            out = out + CohomClass.single("F", (), c)
        else:
            out = out + c * w0_in_F(arr, K)
    return out


# -- transition matrix between the two kinds ---------------------------------


def beta_one_step(arr: Arrangement, J: IndexSet, l: int) -> Fraction:
    """beta_{J, J u {l}} = B(0 * J / 0 l J) / B(0 * J)."""
    den = require_nonzero(b0s(arr, J), f"B(0*{''.join(map(str, J))})")
    num = cm_minor(arr, (0, STAR) + J, (0, l) + J)
    return num / den


def beta(arr: Arrangement, K: Iterable[int], J: Iterable[int]) -> Fraction:
    """Closed-form chain sum for the triangular transition coefficient
    beta_{K,J}: sum over all orderings of J - K of the product of one-step
    quotients along the growing chain."""
    K = index_set(K)
    J = index_set(J)
    if not set(K) <= set(J):
        return Fraction(0)
    gap = tuple(sorted(set(J) - set(K)))
    total = Fraction(0)
    for order in ordered_subsets(gap, len(gap)):
        term = Fraction(1)
        L = K
        for l in order:
            term *= beta_one_step(arr, L, l)
            L = index_set(L + (l,))
        total += term
    return total if gap else Fraction(1)


def beta_recurrence(arr: Arrangement, K: Iterable[int], J: Iterable[int]) -> Fraction:
    """The same coefficient through the first-step recurrence
    beta_{K,J} = sum_{l in J-K} beta_{K,K u l} beta_{K u l, J}; kept as an
    independent path for cross-checking."""
    K = index_set(K)
    J = index_set(J)
    if K == J:
        return Fraction(1)
    if not set(K) < set(J):
        return Fraction(0)
    total = Fraction(0)
    for l in sorted(set(J) - set(K)):
        Kl = index_set(K + (l,))
        total += beta_one_step(arr, K, l) * beta_recurrence(arr, Kl, J)
    return total


def beta_tilde(arr: Arrangement, K: Iterable[int], J: Iterable[int]) -> Fraction:
    J = index_set(J)
    return beta(arr, K, J) / require_nonzero(b0s(arr, J), "B(0*J)")


def beta_matrix(arr: Arrangement) -> dict:
    """All beta_{K,J} over admissible K subset-of J, as a dict
    {(K, J): Fraction}; upper-triangular in the inclusion order."""
    out = {}
    for J in admissible_sets(arr.m, arr.n):
        for K in nonempty_subsets(J):
            out[(K, J)] = beta(arr, K, J)
    return out


def f_in_w0(arr: Arrangement, J: Iterable[int]) -> CohomClass:
    """B(0*J) F_J as a W0-kind class: sum_{K subset J} beta_{K,J} W0(K)varpi."""
    J = index_set(J)
    return CohomClass("W0", {K: beta(arr, K, J) for K in nonempty_subsets(J)})


# -- reduction to the NBC basis ----------------------------------------------


def _expand48(arr: Arrangement, J: IndexSet) -> dict:
    """Partial-fraction rewriting of F_J for |J| = n+2:
    F_J = sum_v [B(0 * dJ_v / 0 j_v dJ_v) / B(0*J)] F_{dJ_v}."""
    den = require_nonzero(b0s(arr, J), "B(0*J), |J| = n+2")
    out = {}
    for j in J:
        dJ = delete(J, j)
        out[dJ] = cm_minor(arr, (0, STAR) + dJ, (0, j) + dJ) / den
    return out


def _w0_relation(arr: Arrangement, K: IndexSet) -> dict:
    """Rewrite W0(K)varpi, |K| = n+1 with n+1 not in K, over the deletions
    of J = K u {n+1} that do contain n+1:

        W0(dJ_mu) = sum_{v != mu} [B(0 j_mu dd / 0 j_v dd) / B(0 dJ_v)] W0(dJ_v),

    the rationalized form of the alternating wedge relation combined with
    the Jacobi identity B(0 dJ_mu) B(0 dJ_v) = B(0 j_mu dd / 0 j_v dd)^2.
    """
    star = arr.n + 1
    J = index_set(K + (star,))
    out = {}
    for jv in K:  # deletions other than the distinguished one
        dd = delete(delete(J, star), jv)
        num = cm_minor(arr, (0, star) + dd, (0, jv) + dd)
        den = require_nonzero(b0(arr, delete(J, jv)), "B(0 dJ)")
        out[delete(J, jv)] = num / den
    return out


def _nbc_f_expansion(arr: Arrangement, key: IndexSet) -> dict:
    """NBC expansion of a single F_key (sizes 1 .. n+2), memoized on the
    arrangement.  The varpi slot () is returned as itself."""
    cache = arr._scratch.setdefault("nbc_f", {})
    if key in cache:
        return cache[key]
    n, m = arr.n, arr.m
    if key == () or is_nbc(key, m, n):
        out = {key: Fraction(1)}
    elif len(key) == n + 2:
        out = {}
        for sub, c in _expand48(arr, key).items():
            for k2, c2 in _nbc_f_expansion(arr, sub).items():
                out[k2] = out.get(k2, Fraction(0)) + c * c2
    elif len(key) == n + 1:
        # route through the second kind: B(0*J) F_J = sum beta_{K,J} W0(K),
        # replace the top W0(J) by its NBC relation, re-expand over F.
        den = require_nonzero(b0s(arr, key), "B(0*J)")
        acc: dict = {}

        def add_w0(K: IndexSet, c: Fraction):
            for k2, c2 in w0_in_F(arr, K).coeffs.items():
                acc[k2] = acc.get(k2, Fraction(0)) + c * c2

        for K in nonempty_subsets(key):
            c = beta(arr, K, key) / den
            if K == key:
                for K2, c2 in _w0_relation(arr, key).items():
                    add_w0(K2, c * c2)
            else:
                add_w0(K, c)
        out = {k: v for k, v in acc.items() if v != 0}
    else:
        raise ValueError(f"no reduction rule for F-support of size {len(key)}")
    cache[key] = out
    return out


def reduce_to_nbc(
    arr: Arrangement,
    cls: CohomClass,
    lam: Optional[LambdaPoint] = None,
    expand_varpi: bool = False,
) -> CohomClass:
    """Project a class onto the NBC subfamily; idempotent.

    F-kind support of size n+2 is removed by partial fractions, size-(n+1)
    non-NBC sets via the second-kind relation.  W0-kind support of size
    >= n+2 is cohomologically zero and dropped.  The varpi slot is kept
    unless ``expand_varpi`` is set, in which case it is rewritten through
    the standard-form expansion, which needs the exponent point ``lam``.
    """
    if cls.kind == "W0":
        out: dict = {}
        for K, c in cls.coeffs.items():
            if K == () or is_nbc(K, arr.m, arr.n):
                out[K] = out.get(K, Fraction(0)) + c
            elif len(K) >= arr.n + 2:
                continue
            else:
                for K2, c2 in _w0_relation(arr, K).items():
                    out[K2] = out.get(K2, Fraction(0)) + c * c2
        reduced = CohomClass("W0", out)
    else:
        out = {}
        for key, c in cls.coeffs.items():
            for k2, c2 in _nbc_f_expansion(arr, key).items():
                out[k2] = out.get(k2, Fraction(0)) + c * c2
        reduced = CohomClass("F", out)
    if expand_varpi and reduced.get(()) != 0:
        if lam is None:
            raise ValueError("expanding the varpi slot requires a lambda point")
        from .contiguity import standard_form  # deferred: avoids an import cycle

        c0 = reduced.get(())
        norm = 2 * lam.lam_inf + arr.n
        if norm == 0:
            raise ResonantDenominator("2 lambda_inf + n = 0")
        body = CohomClass(reduced.kind, {k: v for k, v in reduced.coeffs.items() if k})
        expansion = standard_form(arr, lam)  # W0 class of (2 lam_inf + n) varpi
        target = to_F(arr, expansion) if reduced.kind == "F" else expansion
        return reduce_to_nbc(arr, body + (c0 / norm) * target, lam)
    return reduced
