"""Contiguity relations: multiplication operators in both exponent directions.

Multiplying a class by f_j (or dividing by it) realizes the unit shift of
the exponent lambda_j.  This module expands those operators over the
admissible bases:

* ``standard_form``    - the expansion of (2 lam_inf + n) varpi over the
                         second-kind generators W0(J)varpi;
* ``mult_fj``          - f_j . F_J over the F system;
* ``mult_fJ_w0``       - prod_{l in L} f_l . W0(base)varpi, the nested
                         chain-sum workhorse behind mult_fj;
* ``mult_diff``        - (f_j - f_k) . F_k over the W0 system;
* ``gamma`` / ``gamma_tilde`` - the negative-direction coefficients of
  W0^(j)(J)varpi = (lam_j - 1) f_j^{-1} W0(J)varpi and
  F_J^(j) = (lam_j - 1) f_j^{-1} F_J, from the closed forms, with an
  independent recurrence path (``fj_inv_class_recurrence``) retained as an
  oracle.

Exponents enter as exact rational points, never as indeterminates; the
rational-function structure in lambda is checked by evaluating at several
points.  Ordered-sequence sums iterate over permutations directly, which
is cheap at desk scale (n <= 5).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional

from .arrangement import STAR, Arrangement, b0, b0s, cm_minor, require_nonzero
from .cohomology import (
    CohomClass,
    LambdaPoint,
    beta,
    reduce_to_nbc,
    to_F,
    w0_in_F,
)
from .errors import ResonantDenominator, SingularMinor
from .indices import (
    IndexSet,
    admissible_sets,
    delete,
    index_set,
    nonempty_subsets,
    ordered_subsets,
)


def _check_m(arr: Arrangement) -> None:
    if arr.m < arr.n + 1:
        raise ValueError(
            "positive contiguity expansions need m >= n+1 "
            "(fewer spheres embed via zero exponents, which is out of scope here)"
        )


def _lam_chain_denominator(lam: LambdaPoint, base: Fraction, length: int) -> Fraction:
    """prod_{s=1}^{length} (lam_inf + base - s), rejecting vanishing factors."""
    out = Fraction(1)
    li = lam.lam_inf
    for s in range(1, length + 1):
        f = li + base - s
        if f == 0:
            raise ResonantDenominator(f"lambda_inf + {base} - {s} = 0")
        out *= f
    return out


# -- standard form -----------------------------------------------------------


def standard_form(arr: Arrangement, lam: LambdaPoint) -> CohomClass:
    """W0 expansion of (2 lam_inf + n) varpi.

    The coefficient of W0(J)varpi is
    (-1)^{|J|} prod_{j in J} lambda_j / prod_{s=1}^{|J|-1}(lam_inf + n - s),
    over every admissible J in {1..m}.  Callers wanting varpi itself divide
    by 2 lam_inf + n.
    """
    coeffs = {}
    for J in admissible_sets(arr.m, arr.n):
        num = lam.lam_prod(J)
        if num == 0:
            continue
        den = _lam_chain_denominator(lam, Fraction(arr.n), len(J) - 1)
        coeffs[J] = (-1) ** len(J) * num / den
    return CohomClass("W0", coeffs)


# -- positive contiguity -----------------------------------------------------


def mult_fJ_w0(
    arr: Arrangement,
    lam: LambdaPoint,
    L: Iterable[int],
    base: Optional[Iterable[int]] = None,
) -> CohomClass:
    """Class of prod_{l in L} f_l . W0(base)varpi, L inside the (n+1)-set
    ``base`` (default {1..n+1}), |L| <= n.

    The expansion sums over ordered sequences K of exponent labels drawn
    from L u base^c and ordered deletion sequences M from L, constrained by
    base cap {k_1..k_s} inside {mu_1..mu_s} (otherwise a chain denominator
    acquires a repeated symbol); each pair contributes a product of two
    minor chains.  Output is W0-kind; the empty key carries the varpi term
    that appears when |L| = n.
    """
    _check_m(arr)
    n = arr.n
    base = index_set(base if base is not None else range(1, n + 2))
    if len(base) != n + 1:
        raise ValueError("base must have n+1 elements")
    L = index_set(L)
    if not set(L) <= set(base):
        raise ValueError("multiplier set must lie inside the base set")
    p = len(L)
    if p > n:
        raise ValueError("multiplier set must have at most n elements")
    Lc = tuple(sorted(set(base) - set(L)))  # base minus L
    bN = require_nonzero(b0(arr, base), "B(0 base)")
    bLc = require_nonzero(b0(arr, Lc), "B(0 base-L)")
    outside = tuple(sorted(set(range(1, arr.m + 1)) - set(base)))

    coeffs: dict = {}
    if p == n:
        coeffs[()] = Fraction(-1) ** n * bN
    pool = tuple(sorted(set(L) | set(outside)))
    for q in range(0, p + 1):
        den = _lam_chain_denominator(lam, Fraction(p), q)
        for K in ordered_subsets(pool, q):
            num = lam.lam_prod(K)
            if num == 0:
                continue
            key = index_set(set(K) | set(Lc))
            pref = (-1) ** q * num / den * bN / bLc
            total = Fraction(0)
            for M in ordered_subsets(L, q):
                ok = True
                for s in range(1, q + 1):
                    if not set(K[:s]) & set(base) <= set(M[:s]):
                        ok = False
                        break
                if not ok:
                    continue
                term = Fraction(1)
                # chain over the growing K-prefix against the fixed tail Lc
                for s in range(1, q + 1):
                    tail = tuple(reversed(K[: s - 1])) + Lc
                    term *= cm_minor(arr, (0, STAR) + tail, (0, M[s - 1]) + tail)
                    term /= require_nonzero(
                        b0(arr, tuple(reversed(K[:s])) + Lc), "B(0 K-prefix base-L)"
                    )
                # chain over deletions of the base set
                for s in range(1, q + 1):
                    dbase = tuple(sorted(set(base) - set(M[:s])))
                    tail = tuple(reversed(K[: s - 1])) + dbase
                    term *= cm_minor(arr, (0, K[s - 1]) + tail, (0, M[s - 1]) + tail)
                    term /= require_nonzero(
                        b0(arr, tuple(reversed(K[:s])) + dbase),
                        "B(0 K-prefix deleted-base)",
                    )
                total += term
            if total:
                coeffs[key] = coeffs.get(key, Fraction(0)) + pref * total
    return CohomClass("W0", coeffs)


def mult_fj(arr: Arrangement, lam: LambdaPoint, j: int, J: Iterable[int]) -> CohomClass:
    """Class of f_j . F_J over the F system, reduced onto the NBC family
    (the varpi slot is kept as the empty key).

    For j in J the product telescopes to F_{J - j}.  Otherwise the
    expansion has three groups: exponent-weighted products of
    multiplication operators on second-kind generators, a -B(0*J/0jJ)/B(0J)
    multiple of F_J, and deletion terms with B(0 v dJ / 0 j dJ)/B(0J)
    coefficients.
    """
    J = index_set(J)
    if not J:
        raise ValueError("J must be nonempty")
    if j in J:
        return CohomClass.single("F", delete(J, j))
    _check_m(arr)
    n = arr.n
    p = len(J)
    N = tuple(range(1, n + 2))
    bN = require_nonzero(b0(arr, N), "B(0 N)")
    bJ = require_nonzero(b0(arr, J), "B(0 J)")
    lead = lam.lam_inf + n - p
    if lead == 0:
        raise ResonantDenominator(f"lambda_inf + {n} - {p} = 0")

    out = CohomClass("F", {J: -cm_minor(arr, (0, STAR) + J, (0, j) + J) / bJ})
    for v in J:
        dJ = delete(J, v)
        out = out + CohomClass.single(
            "F", dJ, cm_minor(arr, (0, v) + dJ, (0, j) + dJ) / bJ
        )
    NcapJc = tuple(x for x in N if x not in J)
    for v in NcapJc:
        c = cm_minor(arr, (0, v) + J, (0, j) + J) / (bN * bJ * lead)
        if c == 0:
            continue
        mults = tuple(x for x in NcapJc if x != v)
        out = out + (c * lam.lam(v)) * to_F(arr, mult_fJ_w0(arr, lam, mults, N))
        dN = delete(N, v)
        for k in range(n + 2, arr.m + 1):
            ck = lam.lam(k)
            if ck == 0:
                continue
            ck *= cm_minor(arr, (0, v) + dN, (0, k) + dN)
            ck /= require_nonzero(b0(arr, (k,) + dN), "B(0 k dN)")
            out = out + (c * ck) * to_F(
                arr, mult_fJ_w0(arr, lam, mults, index_set((k,) + dN))
            )
    return reduce_to_nbc(arr, out)


def mult_diff(arr: Arrangement, lam: LambdaPoint, j: int, k: int) -> CohomClass:
    """Class of (f_j - f_k) . F_k over the W0 system.

    The leading term is B(0jk/0*k)/B(0*k) W0(k)varpi; the chain sums run
    over ordered sequences drawn from the labels other than k.
    """
    if j == k:
        raise ValueError("need j != k")
    n = arr.n
    lead = cm_minor(arr, (0, j, k), (0, STAR, k)) / require_nonzero(
        b0s(arr, (k,)), "B(0*k)"
    )
    coeffs = {(k,): lead}
    pool = tuple(x for x in range(1, arr.m + 1) if x != k)
    for q in range(1, min(n, len(pool)) + 1):
        den = _lam_chain_denominator(lam, Fraction(n), q)
        for K in ordered_subsets(pool, q):
            num = lam.lam_prod(K)
            if num == 0:
                continue
            term = cm_minor(arr, (0, j, k), (0, K[0], k)) / require_nonzero(
                b0(arr, (K[0], k)), "B(0 k_1 k)"
            )
            for s in range(2, q + 1):
                tail = tuple(reversed(K[: s - 1])) + (k,)
                term *= cm_minor(arr, (0, STAR) + tail, (0, K[s - 1]) + tail)
                term /= require_nonzero(
                    b0(arr, tuple(reversed(K[:s])) + (k,)), "B(0 K-prefix k)"
                )
            key = index_set(K + (k,))
            c = (-1) ** q * num / den * term
            if c:
                coeffs[key] = coeffs.get(key, Fraction(0)) + c
    return CohomClass("W0", coeffs)


# -- negative contiguity (division by f_j) -----------------------------------


def _reduce48_F(arr: Arrangement, cls: CohomClass) -> CohomClass:
    """Rewrite F-support of size n+2 by partial fractions, leaving the rest."""
    from .cohomology import _expand48

    out: dict = {}
    for key, c in cls.coeffs.items():
        if len(key) == arr.n + 2:
            for k2, c2 in _expand48(arr, key).items():
                out[k2] = out.get(k2, Fraction(0)) + c * c2
        elif len(key) > arr.n + 2:
            raise ValueError("unexpected F-support beyond n+2")
        else:
            out[key] = out.get(key, Fraction(0)) + c
    return CohomClass("F", out)


def mfj_inv_w0(arr: Arrangement, j: int, L: Iterable[int]) -> CohomClass:
    """Exponent-free class of f_j^{-1} W0(L)varpi for j outside L: the
    literal partial fraction F_K -> F_{jK}, with the size-(n+2) overflow
    rewritten back into admissible support."""
    L = index_set(L)
    if j in L:
        raise ValueError("j must lie outside L")
    n = arr.n
    if len(L) == n + 1:
        factor = cm_minor(arr, (0, STAR) + L, (0, j) + L) / require_nonzero(
            b0s(arr, index_set((j,) + L)), "B(0*jL)"
        )
        coeffs = {L: factor * b0s(arr, L)}
        for v in L:
            dL = delete(L, v)
            key = index_set((j,) + dL)
            coeffs[key] = coeffs.get(key, Fraction(0)) - factor * cm_minor(
                arr, (0, STAR, j) + dL, (0, STAR, v) + dL
            )
        return CohomClass("F", coeffs)
    coeffs = {}
    for K, c in w0_in_F(arr, L).coeffs.items():
        key = index_set((j,) + K)
        coeffs[key] = coeffs.get(key, Fraction(0)) + c
    return CohomClass("F", coeffs)


def _z_form(arr: Arrangement, j: int, J: IndexSet) -> CohomClass:
    """The exponent-free block multiplying (lam_inf + n - p) when dividing
    W0(J)varpi by f_j, j in J, |J| >= 2."""
    dJ = delete(J, j)
    coeffs = {dJ: b0(arr, dJ)}
    for v in dJ:
        dd = delete(dJ, v)
        coeffs[delete(J, v)] = -cm_minor(arr, (0, j) + dd, (0, v) + dd)
    coeffs[J] = cm_minor(arr, (0, STAR) + dJ, (0, j) + dJ)
    return CohomClass("F", coeffs)


def _z_form_k(arr: Arrangement, j: int, J: IndexSet, k: int) -> CohomClass:
    """The exponent-free block multiplying lambda_k (k outside J) in the
    same division; for |J| = n+1 the reduced variant with admissible
    support is used."""
    n = arr.n
    dJ = delete(J, j)
    if len(J) <= n:
        coeffs = {
            index_set((k,) + dJ): cm_minor(arr, (0, STAR) + dJ, (0, k) + dJ)
        }
        for v in dJ:
            dd = delete(dJ, v)
            key = index_set((k,) + delete(J, v))
            coeffs[key] = coeffs.get(key, Fraction(0)) - cm_minor(
                arr, (0, STAR, j) + dd, (0, k, v) + dd
            )
        kJ = index_set((k,) + J)
        coeffs[kJ] = coeffs.get(kJ, Fraction(0)) - cm_minor(
            arr, (0, STAR, k) + dJ, (0, STAR, j) + dJ
        )
        return CohomClass("F", coeffs)
    factor = cm_minor(arr, (0, STAR) + J, (0, k) + J) / require_nonzero(
        b0s(arr, index_set((k,) + J)), "B(0*kJ)"
    )
    kdJ = index_set((k,) + dJ)
    coeffs = {kdJ: factor * b0s(arr, kdJ)}
    coeffs[J] = coeffs.get(J, Fraction(0)) - factor * cm_minor(
        arr, (0, STAR, k) + dJ, (0, STAR, j) + dJ
    )
    for v in dJ:
        dd = delete(dJ, v)
        key = index_set((k,) + delete(J, v))
        coeffs[key] = coeffs.get(key, Fraction(0)) - factor * cm_minor(
            arr, (0, STAR, k, j) + dd, (0, STAR, k, v) + dd
        )
    return CohomClass("F", coeffs)


def gamma(
    arr: Arrangement,
    lam: LambdaPoint,
    j: int,
    J: Iterable[int],
    nbc: bool = True,
) -> CohomClass:
    """Coefficients gamma^j_{K,J} of W0^(j)(J)varpi = (lam_j - 1) f_j^{-1}
    W0(J)varpi over the F_K, from the closed forms.

    With ``nbc`` set (the default) the output is reduced onto the NBC
    family; pass ``nbc=False`` to read coefficients over the plain
    admissible system (as the closed forms state them).
    """
    J = index_set(J)
    p = len(J)
    n = arr.n
    if j not in J:
        cls = (lam.lam(j) - 1) * mfj_inv_w0(arr, j, J)
    elif p == 1:
        coeffs = {J: -(lam.lam_inf + n - 2 + lam.lam(j))}
        for k in range(1, arr.m + 1):
            if k == j:
                continue
            lk = lam.lam(k)
            if lk == 0:
                continue
            coeffs[(k,)] = coeffs.get((k,), Fraction(0)) - lk
            key = index_set((j, k))
            coeffs[key] = coeffs.get(key, Fraction(0)) - lk * cm_minor(
                arr, (0, STAR, k), (0, STAR, j)
            )
        cls = CohomClass("F", coeffs)
    else:
        lead = lam.lam_inf + n - p
        cls = lead * _z_form(arr, j, J)
        for k in range(1, arr.m + 1):
            if k in J:
                continue
            lk = lam.lam(k)
            if lk != 0:
                cls = cls + lk * _z_form_k(arr, j, J, k)
    return reduce_to_nbc(arr, cls) if nbc else cls


def gamma_tilde(
    arr: Arrangement,
    lam: LambdaPoint,
    j: int,
    J: Iterable[int],
    nbc: bool = True,
) -> CohomClass:
    """Coefficients gamma~^j_{K,J} of F_J^(j) = (lam_j - 1) f_j^{-1} F_J,
    composed from gamma through the triangular transition matrix:
    gamma~^j_{.,J} = sum_{L subset J} gamma^j_{.,L} beta_{L,J} / B(0*J)."""
    J = index_set(J)
    den = require_nonzero(b0s(arr, J), "B(0*J)")
    out = CohomClass.zero("F")
    for L in nonempty_subsets(J):
        c = beta(arr, L, J) / den
        if c != 0:
            out = out + c * gamma(arr, lam, j, L, nbc=False)
    return reduce_to_nbc(arr, out) if nbc else out


def fj_inv_class_recurrence(
    arr: Arrangement, lam: LambdaPoint, j: int, J: Iterable[int]
) -> CohomClass:
    """Independent oracle for F_J^(j): the recurrence that peels one index
    at a time, solving the linear system coming from the Stokes identities
    of the co-radial (n-1)-form.  Support is admissible but not
    NBC-reduced; compare with gamma_tilde after reduction."""
    memo = arr._scratch.setdefault(("fj_inv_rec", lam.values), {})

    def rec(j: int, J: IndexSet) -> CohomClass:
        key = (j, J)
        if key in memo:
            return memo[key]
        n = arr.n
        p = len(J)
        if j not in J:
            cls = _reduce48_F(
                arr,
                CohomClass.single("F", index_set((j,) + J), lam.lam(j) - 1),
            )
        elif p == 1:
            den = require_nonzero(b0s(arr, J), "B(0*j)")
            coeffs = {J: -(lam.lam_inf + n - 2 + lam.lam(j)) / den}
            for k in range(1, arr.m + 1):
                if k == j:
                    continue
                lk = lam.lam(k)
                if lk == 0:
                    continue
                coeffs[(k,)] = coeffs.get((k,), Fraction(0)) - lk / den
                kk = index_set((j, k))
                coeffs[kk] = coeffs.get(kk, Fraction(0)) - lk * cm_minor(
                    arr, (0, STAR, k), (0, STAR, j)
                ) / den
            cls = CohomClass("F", coeffs)
        else:
            dJ = delete(J, j)
            bdJ = b0s(arr, dJ)
            U = CohomClass.zero("F")
            for v in dJ:
                U = U + bdJ * rec(v, dJ)
            for mu in dJ:
                dd = delete(dJ, mu)
                c = cm_minor(arr, (0, STAR, mu) + dd, (0, STAR, j) + dd)
                if c == 0:
                    continue
                dmuJ = delete(J, mu)
                for v in dmuJ:
                    U = U - c * rec(v, dmuJ)
            coef_J = (lam.lam_inf + n - p - 1) * cm_minor(
                arr, (0, j) + dJ, (0, STAR) + dJ
            )
            coef_J += lam.lam(j) * bdJ
            for mu in dJ:
                dd = delete(dJ, mu)
                coef_J -= lam.lam(mu) * cm_minor(
                    arr, (0, STAR, mu) + dd, (0, STAR, j) + dd
                )
            U = U + CohomClass.single("F", J, coef_J)
            for k in range(1, arr.m + 1):
                if k in J:
                    continue
                lk = lam.lam(k)
                if lk == 0:
                    continue
                t = CohomClass.single("F", index_set((k,) + dJ), bdJ)
                for mu in dJ:
                    dd = delete(dJ, mu)
                    t = t - cm_minor(
                        arr, (0, STAR, mu) + dd, (0, STAR, j) + dd
                    ) * CohomClass.single("F", index_set((k,) + delete(J, mu)))
                t = t - cm_minor(
                    arr, (0, STAR, k) + dJ, (0, STAR, j) + dJ
                ) * _reduce48_F(arr, CohomClass.single("F", index_set((k,) + J)))
                U = U + lk * t
            cls = (1 / require_nonzero(b0s(arr, J), "B(0*J)")) * U
        memo[key] = cls
        return cls

    return rec(j, index_set(J))


# -- the chain-sum identity behind the standard form -------------------------


def eta_single(arr: Arrangement, j: int) -> Fraction:
    """[B(0 n+1 j / 0 * j) + B(0 * j / 0 * n+1)] / B(0*j); equals 1."""
    star = arr.n + 1
    num = cm_minor(arr, (0, star, j), (0, STAR, j)) + cm_minor(
        arr, (0, STAR, j), (0, STAR, star)
    )
    return num / require_nonzero(b0s(arr, (j,)), "B(0*j)")


def eta_value(arr: Arrangement, J: Iterable[int]) -> Fraction:
    """The chain sum eta_J over anchors j in J and orderings of J - j;
    equals 1 for every J with 2 <= |J| <= n+1 (the collapse that turns the
    raw Stokes expansion into the standard form)."""
    J = index_set(J)
    if len(J) < 2:
        raise ValueError("eta_value needs |J| >= 2; use eta_single")
    star = arr.n + 1
    total = Fraction(0)
    for j in J:
        dJ = delete(J, j)
        for mu in ordered_subsets(dJ, len(dJ)):
            first = cm_minor(arr, (0, star, j), (0, mu[0], j))
            if first == 0:
                continue
            term = first / require_nonzero(b0(arr, (mu[0], j)), "B(0 mu1 j)")
            for s in range(2, len(mu) + 1):
                tail = tuple(reversed(mu[: s - 1])) + (j,)
                term *= cm_minor(arr, (0, STAR) + tail, (0, mu[s - 1]) + tail)
                term /= require_nonzero(
                    b0(arr, tuple(reversed(mu[:s])) + (j,)), "B(0 mu-prefix j)"
                )
            total += term
    return total
