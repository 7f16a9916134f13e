"""Parameter-space 1-forms and the Gauss-Manin connection matrix.

Differentials are taken with respect to the isometry invariants, on the
basis {dr_j^2} u {drho_jk^2 : j < k}; that keeps every coefficient exactly
rational.  The chain rule back to raw quadratic coefficients (needed only
by the finite-difference oracle) lives in :mod:`spherule.verify`.

The connection matrix Theta is computed over the NBC basis: the column of
a singleton J = {j} comes from dividing the variational expansion of
nabla_B varpi by f_j and shifting lambda_j; columns of larger J follow the
one-index-at-a-time recursion

    Theta_{K,J} = sum_L  gamma~^j_{K,L}(lam) / (lam_j - 1)
                  * Theta_{L, J-j} evaluated at lam - e_j,

whose value is independent of the anchor j in J.  The (lam_j - 1)
denominators are poles of this representation only; the assembled matrix
is regular there, which the tests probe by multi-point evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .arrangement import (
    STAR,
    Arrangement,
    MinorSpec,
    b0,
    b0s,
    cm_minor,
    require_nonzero,
)
from .cohomology import CohomClass, LambdaPoint, reduce_to_nbc, _nbc_f_expansion
from .contiguity import (
    _lam_chain_denominator,
    gamma,
    gamma_tilde,
    mfj_inv_w0,
)
from .errors import ResonantDenominator, SingularMinor
from .indices import (
    IndexSet,
    admissible_sets,
    delete,
    index_set,
    nbc_basis,
    ordered_subsets,
    subsets,
)

RKey = tuple  # ("r", j) or ("rho", j, k) with j < k


def r_key(j: int) -> RKey:
    return ("r", j)


def rho_key(j: int, k: int) -> RKey:
    if j == k:
        raise ValueError("rho key needs distinct indices")
    return ("rho", min(j, k), max(j, k))


class ParamOneForm:
    """A covector on parameter space: rational coefficients on the
    differential basis {dr_j^2} u {drho_jk^2}."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[Mapping] = None):
        clean = {}
        for key, val in (coeffs or {}).items():
            val = Fraction(val)
            if val != 0:
                clean[key] = val
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, *a):
        raise AttributeError("ParamOneForm is immutable")

    @classmethod
    def zero(cls) -> "ParamOneForm":
        return cls({})

    def __add__(self, other: "ParamOneForm") -> "ParamOneForm":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return ParamOneForm(out)

    def __sub__(self, other: "ParamOneForm") -> "ParamOneForm":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "ParamOneForm":
        s = Fraction(scalar)
        return ParamOneForm({k: s * v for k, v in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, ParamOneForm) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return "ParamOneForm(0)"
        bits = [f"{v}*d{k}" for k, v in sorted(self.coeffs.items())]
        return f"ParamOneForm({' + '.join(bits)})"

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def get(self, key: RKey) -> Fraction:
        return self.coeffs.get(key, Fraction(0))

    def evaluate(self, rates: Mapping) -> float:
        """Pair with a tangent vector given as a rates table
        {basis key: d(invariant)/dt}."""
        return float(sum(float(v) * float(rates.get(k, 0.0)) for k, v in self.coeffs.items()))

    def pullback(self, arr: "Arrangement") -> dict:
        """Exact coefficients over the raw coordinate differentials
        da_{jv} ((j, v), v = 0 for the constant slot), via
        dr_j^2 = 2 sum_v a_jv da_jv - da_j0 and
        drho_jk^2 = 2 sum_v (a_jv - a_kv)(da_jv - da_kv).

        For m >= n+2 the invariants are functionally dependent (the rank
        constraint of the distance matrix), so distinct coefficient tables
        can pull back to the same covector; pullback equality is the
        faithful comparison of parameter-space forms.
        """
        out: dict = {}

        def add(j, v, c):
            if c:
                out[(j, v)] = out.get((j, v), Fraction(0)) + c

        for key, c in self.coeffs.items():
            if key[0] == "r":
                j = key[1]
                row = arr.alpha[j - 1]
                for v in range(1, arr.n + 1):
                    add(j, v, 2 * c * row[v - 1])
                add(j, 0, -c)
            else:
                _, j, k = key
                rj, rk = arr.alpha[j - 1], arr.alpha[k - 1]
                for v in range(1, arr.n + 1):
                    d = 2 * c * (rj[v - 1] - rk[v - 1])
                    add(j, v, d)
                    add(k, v, -d)
        return {k: v for k, v in out.items() if v != 0}


def pullback_equal(arr: Arrangement, f: ParamOneForm, g: ParamOneForm) -> bool:
    """Equality as covectors on the actual parameter space (exact)."""
    return f.pullback(arr) == g.pullback(arr)


def pullback_zero(arr: Arrangement, f: ParamOneForm) -> bool:
    return not f.pullback(arr)


def _entry_key(s, t) -> Optional[RKey]:
    """Basis key of the invariant sitting at a Cayley-Menger entry, if any."""
    if s == 0 or t == 0 or s == t:
        return None
    if s == STAR:
        return r_key(t)
    if t == STAR:
        return r_key(s)
    return rho_key(s, t)


def minor_differential(arr: Arrangement, rows, cols=None) -> ParamOneForm:
    """d of a Cayley-Menger minor by the cofactor rule: the derivative with
    respect to each entry is its signed cofactor, and an invariant collects
    the cofactors of every position it occupies."""
    if isinstance(rows, MinorSpec):
        spec = rows
    else:
        spec = MinorSpec(tuple(rows), tuple(cols))
    rows, cols = spec.rows, spec.cols
    k = len(rows)
    out: dict = {}
    for a in range(k):
        for b in range(k):
            key = _entry_key(rows[a], cols[b])
            if key is None:
                continue
            sub_rows = rows[:a] + rows[a + 1 :]
            sub_cols = cols[:b] + cols[b + 1 :]
            if k == 1:
                cof = Fraction(1)
            else:
                cof = (-1) ** (a + b) * cm_minor(arr, sub_rows, sub_cols)
            if cof:
                out[key] = out.get(key, Fraction(0)) + cof
    return ParamOneForm(out)


def dlog_minor(arr: Arrangement, rows, cols=None) -> ParamOneForm:
    value = cm_minor(arr, rows, cols if cols is not None else rows)
    if value == 0:
        raise SingularMinor("dlog of a vanishing minor")
    return (1 / value) * minor_differential(arr, rows, cols if cols is not None else rows)


def _dlog_b0(arr: Arrangement, J: Iterable[int]) -> ParamOneForm:
    seq = (0,) + tuple(J)
    return dlog_minor(arr, seq, seq)


def _dlog_b0s(arr: Arrangement, J: Iterable[int]) -> ParamOneForm:
    seq = (0, STAR) + tuple(J)
    return dlog_minor(arr, seq, seq)


# -- the invariant forms theta_J ---------------------------------------------


def theta(arr: Arrangement, J: Iterable[int]) -> ParamOneForm:
    """The 1-form weighting W0(J)varpi in the variational expansion of
    nabla_B varpi.

    theta_j = -1/2 dlog B(0*j); for |J| = p >= 2,

        theta_J = (-1)^p sum_{j<k in J} 1/2 dlog B(0jk)
                  * sum_{orderings mu of J-{j,k}} prod_s
                    B(0 * mu_{s-1}..mu_1 j k / 0 mu_s mu_{s-1}..mu_1 j k)
                    / B(0 mu_s..mu_1 j k),

    which for p = 2 collapses to 1/2 dlog B(0jk)."""
    J = index_set(J)
    p = len(J)
    if p == 0:
        raise ValueError("J must be nonempty")
    if p == 1:
        return Fraction(-1, 2) * _dlog_b0s(arr, J)
    total = ParamOneForm.zero()
    for i, j in enumerate(J):
        for k in J[i + 1 :]:
            rest = tuple(x for x in J if x not in (j, k))
            chain_sum = Fraction(0)
            for mu in ordered_subsets(rest, len(rest)):
                term = Fraction(1)
                for s in range(1, len(mu) + 1):
                    tail = tuple(reversed(mu[: s - 1])) + (j, k)
                    term *= cm_minor(arr, (0, STAR) + tail, (0, mu[s - 1]) + tail)
                    term /= require_nonzero(
                        b0(arr, tuple(reversed(mu[:s])) + (j, k)), "B(0 mu.. j k)"
                    )
                chain_sum += term
            if chain_sum:
                total = total + (Fraction((-1) ** p, 2) * chain_sum) * _dlog_b0(
                    arr, (j, k)
                )
    return total


# -- the auxiliary coordinate-frame forms theta_k^j --------------------------


def _gram(arr: Arrangement) -> list:
    """Gram matrix of the center offsets from sphere n+1:
    G_jk = (rho_{j,n+1}^2 + rho_{k,n+1}^2 - rho_jk^2)/2, 1 <= j,k <= n."""
    n = arr.n
    m1 = n + 1
    return [
        [
            (arr.rho2(j, m1) + arr.rho2(k, m1) - arr.rho2(j, k)) / 2
            for k in range(1, n + 1)
        ]
        for j in range(1, n + 1)
    ]


def _gram_differential(arr: Arrangement, j: int, k: int) -> ParamOneForm:
    n = arr.n
    m1 = n + 1
    half = Fraction(1, 2)
    out: dict = {}
    out[rho_key(j, m1)] = out.get(rho_key(j, m1), Fraction(0)) + half
    out[rho_key(k, m1)] = out.get(rho_key(k, m1), Fraction(0)) + half
    if j != k:
        out[rho_key(j, k)] = out.get(rho_key(j, k), Fraction(0)) - half
    return ParamOneForm(out)


def _solve_fraction_system(A: list, b: list) -> list:
    """Exact Gaussian elimination for a small dense system."""
    k = len(A)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for c in range(k):
        piv = next((i for i in range(c, k) if M[i][c] != 0), None)
        if piv is None:
            raise SingularMinor("frame-form system is singular")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(k):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [M[i][k] for i in range(k)]


def theta_chain_table(arr: Arrangement) -> dict:
    """All frame forms theta_k^j (1 <= j <= k <= n) for a normalized
    arrangement shape with m = n+1, solved exactly from the invariants.

    With dalpha = X alpha (X upper triangular, X_{j,s} = theta_s^j) and
    G = alpha alpha^T the Gram matrix of center offsets, X is the unique
    upper-triangular solution of X G + G X^T = dG.  Solving the linear
    system per basis direction keeps everything rational; in particular no
    dr_j^2 component ever appears.
    """
    n = arr.n
    if arr.m != n + 1:
        raise ValueError("frame forms are defined for m = n+1")
    G = _gram(arr)
    unknowns = [(j, s) for j in range(1, n + 1) for s in range(j, n + 1)]
    A = []
    targets = []
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            row = []
            for (j, s) in unknowns:
                c = Fraction(0)
                if j == a:
                    c += G[s - 1][b - 1]
                if j == b:
                    c += G[s - 1][a - 1]
                row.append(c)
            A.append(row)
            targets.append(_gram_differential(arr, a, b))
    keys = sorted({k for t in targets for k in t.coeffs})
    sol: dict = {u: {} for u in unknowns}
    for key in keys:
        rhs = [t.get(key) for t in targets]
        x = _solve_fraction_system(A, rhs)
        for u, v in zip(unknowns, x):
            if v != 0:
                sol[u][key] = v
    return {(j, s): ParamOneForm(c) for (j, s), c in sol.items()}


def theta_chain(arr: Arrangement, j: int, k: int) -> ParamOneForm:
    """The frame form theta_k^j, 1 <= j <= k <= n (m = n+1)."""
    if not (1 <= j <= k <= arr.n):
        raise ValueError("need 1 <= j <= k <= n")
    cache = arr._scratch.setdefault("theta_chain", {})
    if not cache:
        cache.update(theta_chain_table(arr))
    return cache[(j, k)]


def theta_chain_diag_closed(arr: Arrangement, j: int) -> ParamOneForm:
    """Closed form for the diagonal frame form:
    theta_j^j = 1/2 dlog(-B(0 j..n+1)/B(0 j+1..n+1))."""
    n = arr.n
    J = tuple(range(j, n + 2))
    out = Fraction(1, 2) * _dlog_b0(arr, J)
    if j < n:  # for j = n the lower minor is B(0 n+1), a constant
        out = out - Fraction(1, 2) * _dlog_b0(arr, tuple(range(j + 1, n + 2)))
    return out


def theta_chain_super_closed(arr: Arrangement, j: int) -> ParamOneForm:
    """Closed form for theta_{j+1}^j via the displayed quotient of minors."""
    n = arr.n
    if not (1 <= j <= n - 1):
        raise ValueError("need 1 <= j <= n-1")
    tail = tuple(range(j + 2, n + 2))
    den = require_nonzero(b0(arr, tuple(range(j + 1, n + 2))), "B(0 j+1..n+1)")
    num = cm_minor(arr, (0, j) + tail, (0, j + 1) + tail)
    piece = minor_differential(arr, (0, j) + tail, (0, j + 1) + tail)
    logs = _dlog_b0(arr, tuple(range(j, n + 2)))
    if tail:
        logs = logs + _dlog_b0(arr, tail)
    else:
        # B(0 empty) never occurs: tail empty only when j+2 > n+1, i.e. j = n
        raise AssertionError
    return (1 / den) * (piece - Fraction(num, 2) * logs)


# -- Gauss-Manin -------------------------------------------------------------


@dataclass(frozen=True)
class ConnectionMatrix:
    """Theta over the NBC basis: entries[(K, J)] is the 1-form weighting
    F_K in the variational expansion of F_J."""

    basis: tuple
    entries: dict

    def entry(self, K, J) -> ParamOneForm:
        return self.entries.get((tuple(K), tuple(J)), ParamOneForm.zero())

    def column(self, J) -> dict:
        J = tuple(J)
        return {K: self.entries[(K, J)] for K in self.basis if (K, J) in self.entries}

    def trace(self) -> ParamOneForm:
        out = ParamOneForm.zero()
        for K in self.basis:
            out = out + self.entry(K, K)
        return out


def _pick_anchor(lam: LambdaPoint, J: IndexSet) -> int:
    for j in J:
        if lam.lam(j) != 1:
            return j
    raise ResonantDenominator(
        f"every lambda_j = 1 on {J}; the column recursion has no valid anchor"
    )


def gm_column(
    arr: Arrangement,
    lam: LambdaPoint,
    J: Iterable[int],
    anchor: Optional[int] = None,
) -> dict:
    """Column Theta_{., J} of the connection matrix over the NBC basis."""
    J = index_set(J)
    n = arr.n
    basis = nbc_basis(arr.m, n)
    if J not in basis:
        raise ValueError(f"{J} is not an NBC basis element")
    if len(J) == 1:
        j = J[0]
        col = {K: ParamOneForm.zero() for K in basis}
        for L in admissible_sets(arr.m, n):
            p = len(L)
            den = _lam_chain_denominator(lam, Fraction(n - 1), p - 1)
            if j in L:
                coef = lam.lam_prod(delete(L, j)) / den
                if coef == 0:
                    continue
                cls = gamma(arr, lam, j, L, nbc=True)
            else:
                coef = lam.lam_prod(L) / den
                if coef == 0:
                    continue
                cls = reduce_to_nbc(arr, mfj_inv_w0(arr, j, L))
            if cls.is_zero:
                continue
            th = theta(arr, L)
            for K, c in cls.coeffs.items():
                col[K] = col[K] + (coef * c) * th
        return col
    j = anchor if anchor is not None else _pick_anchor(lam, J)
    if j not in J:
        raise ValueError("anchor must belong to J")
    if lam.lam(j) == 1:
        raise ResonantDenominator(f"lambda_{j} = 1 blocks the column recursion")
    sub = gm_column(arr, lam.shift(j), delete(J, j))
    col = {K: ParamOneForm.zero() for K in basis}
    inv = 1 / (lam.lam(j) - 1)
    for L in basis:
        form = sub[L]
        if form.is_zero:
            continue
        gt = gamma_tilde(arr, lam, j, L, nbc=True)
        for K, c in gt.coeffs.items():
            col[K] = col[K] + (inv * c) * form
    return col


def gm_theta(
    arr: Arrangement,
    lam: LambdaPoint,
    K: Iterable[int],
    J: Iterable[int],
    anchor: Optional[int] = None,
) -> ParamOneForm:
    """Single entry Theta_{K,J} of the Gauss-Manin matrix (NBC indices)."""
    return gm_column(arr, lam, J, anchor=anchor)[index_set(K)]


def gm_matrix(arr: Arrangement, lam: LambdaPoint) -> ConnectionMatrix:
    basis = tuple(nbc_basis(arr.m, arr.n))
    entries = {}
    for J in basis:
        for K, form in gm_column(arr, lam, J).items():
            if not form.is_zero:
                entries[(K, J)] = form
    return ConnectionMatrix(basis=basis, entries=entries)


# -- curve-case forms (n = 1) -------------------------------------------------


def _require_n1(arr: Arrangement) -> None:
    if arr.n != 1:
        raise ValueError("zeta forms are defined for n = 1")


def zeta_pair(arr: Arrangement, j: int, k: int) -> ParamOneForm:
    """zeta_{jk} = B(0*j/0kj) theta_j + B(0*k/0jk) theta_k + B(0jk) theta_jk;
    symmetric in j, k."""
    _require_n1(arr)
    return (
        cm_minor(arr, (0, STAR, j), (0, k, j)) * theta(arr, (j,))
        + cm_minor(arr, (0, STAR, k), (0, j, k)) * theta(arr, (k,))
        + b0(arr, (j, k)) * theta(arr, index_set((j, k)))
    )


def zeta_pair_marked(arr: Arrangement, j: int, k: int) -> ParamOneForm:
    """zeta_{jk,j} = -B(0*k/0*j) theta_j + B(0*k) theta_k + B(0*k/0jk) theta_jk."""
    _require_n1(arr)
    return (
        -cm_minor(arr, (0, STAR, k), (0, STAR, j)) * theta(arr, (j,))
        + b0s(arr, (k,)) * theta(arr, (k,))
        + cm_minor(arr, (0, STAR, k), (0, j, k)) * theta(arr, index_set((j, k)))
    )


def zeta_triple(arr: Arrangement, j: int, k: int, l: int) -> ParamOneForm:
    """zeta_{jkl} = B(0*jk/0ljk) theta_jk + B(0*jl/0kjl) theta_jl
    + B(0*kl/0jkl) theta_kl; identically the zero covector."""
    _require_n1(arr)
    return (
        cm_minor(arr, (0, STAR, j, k), (0, l, j, k)) * theta(arr, index_set((j, k)))
        + cm_minor(arr, (0, STAR, j, l), (0, k, j, l)) * theta(arr, index_set((j, l)))
        + cm_minor(arr, (0, STAR, k, l), (0, j, k, l)) * theta(arr, index_set((k, l)))
    )


# -- closed-form oracle tables ------------------------------------------------


def gm_closed_m2(arr: Arrangement, lam: LambdaPoint) -> dict:
    """Closed-form connection table for m = 2 over {1}, {2}, {1,2}
    (any n): the oracle the recursion is checked against.

    The diagonal pair entry is assembled from the one-step recursion
    anchored at k, written out with the explicit two-sphere transition
    coefficients; this form makes the j <-> k symmetry manifest entry by
    entry.
    """
    if arr.m != 2:
        raise ValueError("this table is for m = 2")
    n = arr.n
    li = lam.lam_inf
    th = {1: theta(arr, (1,)), 2: theta(arr, (2,)), 12: theta(arr, (1, 2))}
    bss = {j: b0s(arr, (j,)) for j in (1, 2)}
    bs12 = b0s(arr, (1, 2))
    b12 = b0(arr, (1, 2))

    def bmix(a, b):  # B(0*a / 0*b)
        return cm_minor(arr, (0, STAR, a), (0, STAR, b))

    def bstar(a, b):  # B(0*a / 0 b a)
        return cm_minor(arr, (0, STAR, a), (0, b, a))

    out = {}
    for j, k in ((1, 2), (2, 1)):
        J = (j,)
        out[((j,), J)] = (-(li + n - 2 + lam.lam(j))) * th[j] + lam.lam(k) * th[12]
        out[((k,), J)] = (-lam.lam(k)) * (th[j] + th[12])
        out[((1, 2), J)] = lam.lam(k) * (
            (-bmix(k, j)) * th[j] + bss[k] * th[k] + bstar(k, j) * th[12]
        )
        out[((j,), (1, 2))] = (-lam.lam(j)) * (
            (bstar(j, k) / bs12) * th[j]
            + (bstar(k, j) / bs12) * th[k]
            + (b12 / bs12) * th[12]
        ) + (li + n - 2) * (
            (bmix(j, k) / bs12) * th[j]
            - (bss[k] / bs12) * th[k]
            - (bstar(k, j) / bs12) * th[12]
        )
    # diagonal pair entry: one-step composition anchored at b = 2, with the
    # explicit two-sphere transition coefficients
    a, b = 1, 2
    lamq = lam.shift(b)
    t_aa = (-(lamq.lam_inf + n - 2 + lamq.lam(a))) * th[a] + lamq.lam(b) * th[12]
    t_ba = (-lamq.lam(b)) * (th[a] + th[12])
    t_aba = lamq.lam(b) * (
        (-bmix(b, a)) * th[a] + bss[b] * th[b] + bstar(b, a) * th[12]
    )
    gt_a = lam.lam(b) - 1  # coefficient of F_{ab} in (lam_b - 1)/f_b . F_a
    gt_b = -lam.lam(a) * bmix(a, b) / bss[b]
    gt_ab = (
        -lam.lam(a) * bmix(a, b) * bstar(b, a) / (bs12 * bss[b])
        + (li + lam.lam(b) + n - 3) * bstar(a, b) / bs12
    )
    inv = 1 / (lam.lam(b) - 1)
    out[((1, 2), (1, 2))] = inv * (gt_a * t_aa + gt_b * t_ba + gt_ab * t_aba)
    return out


def gm_closed_n1(arr: Arrangement, lam: LambdaPoint, K, J) -> ParamOneForm:
    """Closed-form table for n = 1 over the admissible system: direct
    transcriptions of the curve-case entries (singleton columns and the
    two-index columns assembled from the zeta forms).  Entries not covered
    by the table are zero."""
    _require_n1(arr)
    K = index_set(K)
    J = index_set(J)
    li = lam.lam_inf

    def bstar(a, b):  # B(0*a / 0 b a)
        return cm_minor(arr, (0, STAR, a), (0, b, a))

    if len(J) == 1:
        j = J[0]
        if K == J:
            out = (-(li + lam.lam(j) - 1)) * theta(arr, (j,))
            for v in range(1, arr.m + 1):
                if v != j:
                    out = out + lam.lam(v) * theta(arr, index_set((j, v)))
            return out
        if len(K) == 1:
            k = K[0]
            return (-lam.lam(k)) * (theta(arr, (j,)) + theta(arr, index_set((j, k))))
        if len(K) == 2 and j in K:
            k = K[0] if K[1] == j else K[1]
            return lam.lam(k) * zeta_pair_marked(arr, j, k)
        return ParamOneForm.zero()
    j, k = J
    bsJ = require_nonzero(b0s(arr, J), "B(0*jk)")
    if K == J:
        out = lam.lam(k) * theta(arr, (j,)) + lam.lam(j) * theta(arr, (k,))
        out = out + (
            2 * (lam.lam(j) + lam.lam(k) - 1) * b0s(arr, (j,)) * bstar(k, j) / bsJ
        ) * theta(arr, (j,))
        out = out + (
            2 * (lam.lam(j) + lam.lam(k) - 1) * b0s(arr, (k,)) * bstar(j, k) / bsJ
        ) * theta(arr, (k,))
        out = out - (
            (lam.lam(j) + lam.lam(k) - 1)
            * (1 + 2 * b0(arr, J) * cm_minor(arr, (0, STAR, j), (0, STAR, k)) / bsJ)
        ) * theta(arr, J)
        for v in range(1, arr.m + 1):
            if v in J:
                continue
            lv = lam.lam(v)
            if lv == 0:
                continue
            bsJv = require_nonzero(b0s(arr, index_set(J + (v,))), "B(0*jkv)")
            out = out + lv * theta(arr, index_set((j, v)))
            out = out + (
                lv * b0s(arr, (j,)) * cm_minor(arr, (0, STAR, k, v), (0, j, k, v)) / bsJv
            ) * theta(arr, (j,))
            out = out + (
                lv * b0s(arr, (k,)) * cm_minor(arr, (0, STAR, j, v), (0, k, j, v)) / bsJv
            ) * theta(arr, (k,))
            out = out + (
                lv * b0s(arr, (v,)) * cm_minor(arr, (0, STAR, j, k), (0, v, j, k)) / bsJv
            ) * theta(arr, (v,))
            out = out + (
                lv
                * cm_minor(arr, (0, STAR, k, v), (0, j, k, v))
                * cm_minor(arr, (0, STAR, j, v), (0, STAR, j, k))
                * bstar(k, j)
                / (bsJv * bsJ)
            ) * theta(arr, index_set((k, v)))
            out = out + (
                lv
                * cm_minor(arr, (0, STAR, j, v), (0, k, j, v))
                * cm_minor(arr, (0, STAR, k, v), (0, STAR, k, j))
                * bstar(j, k)
                / (bsJv * bsJ)
            ) * theta(arr, index_set((j, v)))
            out = out + (
                lv * bstar(k, j) * bstar(j, k) / bsJ
            ) * theta(arr, J)
    elif len(K) == 1:
        v = K[0]
        if v in J:
            other = k if v == j else j
            return (-lam.lam(v)) * (1 / bsJ) * zeta_pair(arr, j, k) - (
                (li - 1) / bsJ
            ) * zeta_pair_marked(arr, v, other)
        return (-lam.lam(v)) * (1 / bsJ) * zeta_pair(arr, j, k)
    elif len(K) == 2 and len(set(K) & set(J)) == 1:
        shared = (set(K) & set(J)).pop()
        l = (set(K) - set(J)).pop()
        a = shared
        b = k if a == j else j  # the other element of J
        ll = lam.lam(l)
        bsJl = require_nonzero(b0s(arr, index_set(J + (l,))), "B(0*jkl)")
        out = ll * (
            -(
                b0s(arr, index_set((a, l)))
                * cm_minor(arr, (0, STAR) + J, (0, l) + J)
                * cm_minor(arr, (0, STAR, b), (0, STAR, a))
                / (bsJl * bsJ)
                + cm_minor(arr, (0, STAR, a, l), (0, b, a, l))
                * cm_minor(arr, (0, STAR, l), (0, STAR, a))
                / bsJl
            )
        ) * theta(arr, (a,))
        out = out + ll * (
            b0s(arr, (b,))
            * b0s(arr, index_set((a, l)))
            * cm_minor(arr, (0, STAR) + J, (0, l) + J)
            / (bsJl * bsJ)
        ) * theta(arr, (b,))
        out = out + ll * (
            b0s(arr, (l,)) * cm_minor(arr, (0, STAR, a, l), (0, b, a, l)) / bsJl
        ) * theta(arr, (l,))
        out = out + ll * (
            bstar(l, a) * cm_minor(arr, (0, STAR, a, l), (0, b, a, l)) / bsJl
        ) * theta(arr, index_set((a, l)))
        out = out + ll * (
            bstar(b, a)
            * b0s(arr, index_set((a, l)))
            * cm_minor(arr, (0, STAR) + J, (0, l) + J)
            / (bsJl * bsJ)
        ) * theta(arr, J)
    else:
        return ParamOneForm.zero()
    return out


# -- Wronskian trace and the trace conjecture ---------------------------------


def wronskian_trace(arr: Arrangement, lam: LambdaPoint) -> tuple:
    """For m = 2: (trace of the connection matrix, d_B log of the
    two-sphere Wronskian).  The closed covector is

        (lam_1 + (n-2)/2) dlog B(0*1) + (lam_2 + (n-2)/2) dlog B(0*2)
        + (lam_inf + (n-3)/2) dlog B(0*12) - (n-2)/2 dlog B(012),

    and the two covectors agree exactly."""
    if arr.m != 2:
        raise ValueError("the Wronskian trace is the m = 2 case")
    n = arr.n
    mat = gm_matrix(arr, lam)
    trace = mat.trace()
    half = Fraction(1, 2)
    closed = (lam.lam(1) + half * (n - 2)) * _dlog_b0s(arr, (1,))
    closed = closed + (lam.lam(2) + half * (n - 2)) * _dlog_b0s(arr, (2,))
    closed = closed + (lam.lam_inf + half * (n - 3)) * _dlog_b0s(arr, (1, 2))
    if n != 2:
        closed = closed - (half * (n - 2)) * _dlog_b0(arr, (1, 2))
    return trace, closed


def conjecture_residual(arr: Arrangement, lam: LambdaPoint) -> ParamOneForm:
    """Exploratory: trace(Theta) minus
    sum_{J in basis} (lam_J + (n-|J|-1)/2) dlog B(0*J), for m <= n+1.
    The conjecture says this residual is independent of lambda; the checker
    only reports it."""
    if arr.m > arr.n + 1:
        raise ValueError("the trace conjecture is stated for m <= n+1")
    mat = gm_matrix(arr, lam)
    out = mat.trace()
    for J in mat.basis:
        p = len(J)
        out = out - (lam.lam_sum(J) + Fraction(arr.n - p - 1, 2)) * _dlog_b0s(arr, J)
    return out


# -- variational expansion of varpi and the unbounded-chamber coefficients ----


def nabla_b_varpi(arr: Arrangement, lam: LambdaPoint) -> dict:
    """Coefficient forms of W0(J)varpi in nabla_B(varpi):
    (prod_{j in J} lambda_j / prod_{s=1}^{p-1}(lam_inf + n - s)) theta_J."""
    out = {}
    for J in admissible_sets(arr.m, arr.n):
        num = lam.lam_prod(J)
        if num == 0:
            continue
        den = _lam_chain_denominator(lam, Fraction(arr.n), len(J) - 1)
        out[J] = (num / den) * theta(arr, J)
    return out


def infinity_cycle_coeffs(lam: LambdaPoint, n: int) -> dict:
    """Homological expansion of the unbounded chamber over the bounded
    ones (m = n+1): coefficients -sin(pi lam_{J^c})/sin(pi lam_inf) over
    basis sets with |J| <= n when n is odd, -cos(pi lam_{J^c})/cos(pi
    lam_inf) over the whole basis when n is even.  Floating point output.
    """
    m = lam.m
    if m != n + 1:
        raise ValueError("the unbounded-chamber expansion needs m = n+1")
    li = lam.lam_inf
    odd = n % 2 == 1
    if odd:
        if li.denominator == 1:
            raise ResonantDenominator("sin(pi lam_inf) = 0")
        den = math.sin(math.pi * float(li))
    else:
        if li.denominator == 2:
            raise ResonantDenominator("cos(pi lam_inf) = 0")
        den = math.cos(math.pi * float(li))
    out = {}
    full = set(range(1, m + 1))
    for J in admissible_sets(m, n):
        if odd and len(J) > n:
            continue
        lc = lam.lam_sum(sorted(full - set(J)))
        num = math.sin(math.pi * float(lc)) if odd else math.cos(math.pi * float(lc))
        out[J] = -num / den
    return out
