"""Sphere arrangements and their exact Cayley-Menger determinant calculus.

A sphere S_j in R^n is stored through the quadratic
f_j(x) = Q(x) + 2 sum_v a_{jv} x_v + a_{j0}, Q(x) = sum x_v^2,
with exact rational coefficients.  Everything metric about the
arrangement is carried by the isometry invariants

    r_j^2    = sum_v a_{jv}^2 - a_{j0}          (squared radius)
    rho_jk^2 = sum_v (a_{jv} - a_{kv})^2        (squared center distance)

and the symmetric Cayley-Menger matrix over the symbol set
{0, *, 1, ..., m} built from them.  Minors of that matrix, written
B(rows/cols), are the structure constants of the entire package; they are
evaluated exactly with fraction-free elimination, with a naive cofactor
expansion kept as an independent oracle for small sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NegativeDiscriminant, SingularMinor, ZeroRadius
from .indices import IndexSet, nonempty_subsets

STAR = "*"
Sym = object  # 0, STAR, or a sphere label (int >= 1)


def _symkey(s) -> tuple:
    if s == 0:
        return (0, 0)
    if s == STAR:
        return (1, 0)
    return (2, s)


def _sort_with_parity(seq: Sequence) -> tuple[tuple, int]:
    """Sort symbols, returning (sorted tuple, permutation sign)."""
    keyed = sorted(range(len(seq)), key=lambda i: _symkey(seq[i]))
    sign = 1
    perm = list(keyed)
    # count inversions of the permutation taking seq to sorted order
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return tuple(seq[i] for i in keyed), sign


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class MinorSpec:
    """Row/column symbol sequences selecting a signed Cayley-Menger minor.

    Symbols come from {0, "*", 1..m}; duplicates are allowed (the minor is
    then zero by repeated rows or columns).
    """

    rows: tuple
    cols: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        cols = tuple(self.cols)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        if len(rows) != len(cols) or len(rows) < 1:
            raise ValueError("rows and cols must have equal length >= 1")
        for s in rows + cols:
            if not (s == 0 or s == STAR or (isinstance(s, int) and s >= 1)):
                raise ValueError(f"bad symbol {s!r}")


@dataclass(frozen=True)
class Arrangement:
    """m spheres in R^n given by exact quadratic coefficients.

    ``alpha[j-1]`` is the row (a_{j1}, ..., a_{jn}, a_{j0}) of sphere j.
    The derived invariant tables are computed once and cached; since the
    object is immutable they can never drift from the coefficients.
    """

    n: int
    m: int
    alpha: tuple
    _r2: tuple = field(init=False, repr=False, compare=False)
    _rho2: tuple = field(init=False, repr=False, compare=False)
    _minors: dict = field(init=False, repr=False, compare=False, default_factory=dict)
    _scratch: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        rows = []
        for row in self.alpha:
            row = tuple(_frac(x) for x in row)
            if len(row) != self.n + 1:
                raise ValueError("each alpha row needs n linear entries plus a_{j0}")
            rows.append(row)
        if len(rows) != self.m:
            raise ValueError("need one alpha row per sphere")
        object.__setattr__(self, "alpha", tuple(rows))
        r2 = tuple(sum(a * a for a in row[:-1]) - row[-1] for row in rows)
        rho2 = tuple(
            tuple(
                sum((rows[j][v] - rows[k][v]) ** 2 for v in range(self.n))
                for k in range(self.m)
            )
            for j in range(self.m)
        )
        object.__setattr__(self, "_r2", r2)
        object.__setattr__(self, "_rho2", rho2)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rows(cls, n: int, rows: Iterable[Iterable]) -> "Arrangement":
        rows = [tuple(r) for r in rows]
        return cls(n=n, m=len(rows), alpha=tuple(rows))

    @classmethod
    def from_centers(cls, n: int, spheres: Iterable[tuple]) -> "Arrangement":
        """Build from (center, radius_sq) pairs: a_{jv} = -c_{jv},
        a_{j0} = |c|^2 - r^2."""
        rows = []
        for center, radius_sq in spheres:
            c = tuple(_frac(x) for x in center)
            if len(c) != n:
                raise ValueError("center has wrong dimension")
            r2 = _frac(radius_sq)
            rows.append(tuple(-x for x in c) + (sum(x * x for x in c) - r2,))
        return cls.from_rows(n, rows)

    # -- invariants --------------------------------------------------------

    def r2(self, j: int) -> Fraction:
        return self._r2[j - 1]

    def rho2(self, j: int, k: int) -> Fraction:
        return self._rho2[j - 1][k - 1]

    def center(self, j: int) -> tuple:
        return tuple(-a for a in self.alpha[j - 1][:-1])

    def cm_entry(self, s, t) -> Fraction:
        """Entry of the Cayley-Menger matrix at symbol pair (s, t)."""
        if s == 0 or t == 0:
            return Fraction(0) if s == t else Fraction(1)
        if s == STAR or t == STAR:
            if s == t:
                return Fraction(0)
            j = t if s == STAR else s
            return self.r2(j)
        return self.rho2(s, t)

    def float_alpha(self) -> list:
        return [[float(a) for a in row] for row in self.alpha]


def build_cm_matrix(arr: Arrangement) -> tuple:
    """The full (m+2)x(m+2) Cayley-Menger matrix, rows/cols ordered
    [0, *, 1, ..., m]."""
    syms = [0, STAR] + list(range(1, arr.m + 1))
    return tuple(tuple(arr.cm_entry(s, t) for t in syms) for s in syms)


# -- exact determinants ----------------------------------------------------


def _det_bareiss(rows: list) -> Fraction:
    """Exact determinant of a square matrix of Fractions.

    Denominators are cleared row by row so the elimination runs on Python
    ints (fraction-free Bareiss with column pivoting)."""
    k = len(rows)
    scale = Fraction(1)
    M = []
    for row in rows:
        lcm = 1
        for x in row:
            lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
        scale *= lcm
        M.append([int(x * lcm) for x in row])
    sign = 1
    prev = 1
    for c in range(k - 1):
        if M[c][c] == 0:
            for i in range(c + 1, k):
                if M[i][c] != 0:
                    M[c], M[i] = M[i], M[c]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(c + 1, k):
            for j in range(c + 1, k):
                M[i][j] = (M[i][j] * M[c][c] - M[i][c] * M[c][j]) // prev
            M[i][c] = 0
        prev = M[c][c]
    return Fraction(sign * M[k - 1][k - 1]) / scale


def _det_cofactor(rows: list) -> Fraction:
    """Naive cofactor expansion along the first row; the independent oracle."""
    k = len(rows)
    if k == 1:
        return rows[0][0]
    total = Fraction(0)
    for j in range(k):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        term = rows[0][j] * _det_cofactor(minor)
        total += term if j % 2 == 0 else -term
    return total


def _submatrix(arr: Arrangement, rows: Sequence, cols: Sequence) -> list:
    return [[arr.cm_entry(s, t) for t in cols] for s in rows]


def cm_minor(arr: Arrangement, rows, cols=None) -> Fraction:
    """Signed Cayley-Menger minor B(rows/cols).

    ``rows`` may be a MinorSpec.  Duplicate symbols give 0; transposing two
    row (or column) symbols flips the sign.  Values are cached per
    arrangement against the sorted symbol sequences.
    """
    if isinstance(rows, MinorSpec):
        spec = rows
    else:
        spec = MinorSpec(tuple(rows), tuple(cols))
    if len(set(spec.rows)) != len(spec.rows) or len(set(spec.cols)) != len(spec.cols):
        return Fraction(0)
    srows, sr = _sort_with_parity(spec.rows)
    scols, sc = _sort_with_parity(spec.cols)
    rk = tuple(_symkey(s) for s in srows)
    ck = tuple(_symkey(s) for s in scols)
    key = (srows, scols) if rk <= ck else (scols, srows)  # B is symmetric
    cached = arr._minors.get(key)
    if cached is None:
        cached = _det_bareiss(_submatrix(arr, key[0], key[1]))
        arr._minors[key] = cached
    return sr * sc * cached


def cm_minor_cofactor(arr: Arrangement, rows, cols=None) -> Fraction:
    """Same minor as :func:`cm_minor` via cofactor expansion (oracle path,
    sizes up to ~8)."""
    if isinstance(rows, MinorSpec):
        spec = rows
    else:
        spec = MinorSpec(tuple(rows), tuple(cols))
    return _det_cofactor(_submatrix(arr, spec.rows, spec.cols))


def b0(arr: Arrangement, J: Iterable[int]) -> Fraction:
    """Principal minor B(0 J)."""
    seq = (0,) + tuple(J)
    return cm_minor(arr, seq, seq)


def b0s(arr: Arrangement, J: Iterable[int]) -> Fraction:
    """Principal minor B(0 * J)."""
    seq = (0, STAR) + tuple(J)
    return cm_minor(arr, seq, seq)


def require_nonzero(value: Fraction, what: str) -> Fraction:
    if value == 0:
        raise SingularMinor(f"{what} vanishes")
    return value


# -- Lorentz configuration minors ------------------------------------------


def a_principal_minor(arr: Arrangement, J: Iterable[int]) -> Fraction:
    """Principal minor A(J) of the Lorentz configuration matrix
    a_{jk} = (r_j^2 + r_k^2 - rho_jk^2) / (2 r_j r_k).

    Computed rationally as det_{j,k in J}(r_j^2 + r_k^2 - rho_jk^2) divided
    by 2^p prod r_j^2, which also realizes the identity
    2^p prod_{j in J} r_j^2 A(J) = (-1)^{p-1} B(0 * J).
    """
    J = tuple(J)
    if not J:
        raise ValueError("J must be nonempty")
    for j in J:
        if arr.r2(j) == 0:
            raise ZeroRadius(f"sphere {j} has r^2 = 0")
    mat = [
        [arr.r2(j) + arr.r2(k) - arr.rho2(j, k) for k in J]
        for j in J
    ]
    denom = Fraction(2) ** len(J)
    for j in J:
        denom *= arr.r2(j)
    return _det_bareiss(mat) / denom


# -- general-position predicates -------------------------------------------


@dataclass(frozen=True)
class HypothesesReport:
    """Outcome of the two general-position hypotheses over all admissible J."""

    h1_ok: bool
    h2_ok: bool
    h1_violations: tuple  # (J, minor name, value)
    h2_violations: tuple

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok


def check_hypotheses(arr: Arrangement) -> HypothesesReport:
    """Check, for every J with 1 <= |J| <= n+1:

    H1: B(0 J) != 0 (|J| >= 2) and B(0 * J) != 0;
    H2: (-1)^{|J|-1} B(0 * J) > 0.
    """
    h1: list = []
    h2: list = []
    top = min(arr.m, arr.n + 1)
    for J in nonempty_subsets(range(1, arr.m + 1)):
        p = len(J)
        if p > top:
            continue
        bs = b0s(arr, J)
        if p >= 2 and b0(arr, J) == 0:
            h1.append((J, "B(0J)", Fraction(0)))
        if bs == 0:
            h1.append((J, "B(0*J)", Fraction(0)))
        if (-1) ** (p - 1) * bs <= 0:
            h2.append((J, "(-1)^(p-1) B(0*J)", (-1) ** (p - 1) * bs))
    return HypothesesReport(
        h1_ok=not h1, h2_ok=not h2, h1_violations=tuple(h1), h2_violations=tuple(h2)
    )


# -- reconstruction from invariants ----------------------------------------


def derive_normalized_alphas(r2: Sequence, rho2: Sequence, n: int) -> Arrangement:
    """Rebuild a normalized arrangement (m = n+1) from invariant tables.

    The normalized shape puts sphere n+1 at the origin and makes the center
    matrix anti-triangular: a_{jv} = 0 for v > n+1-j, with positive pivots
    a_{j,n+1-j}.  Centers are recovered by a Cholesky-style factorization of
    the Gram matrix G_{jk} = (rho_{j,n+1}^2 + rho_{k,n+1}^2 - rho_{jk}^2)/2
    processed from the shortest row upward.  Square roots are floating
    point; the returned Arrangement stores them as exact binary rationals,
    so round-tripping the invariants is accurate to ~1e-14 relative.

    Raises NegativeDiscriminant when a pivot square is non-positive, i.e.
    the tables are not realizable by a real arrangement in general position.
    """
    m = n + 1
    r2 = [Fraction(x) if not isinstance(x, float) else Fraction(x) for x in r2]
    if len(r2) != m:
        raise ValueError("need n+1 radii for a normalized reconstruction")
    rho = [[Fraction(x) if not isinstance(x, float) else Fraction(x) for x in row] for row in rho2]

    def g(j: int, k: int) -> float:
        return float(rho[j - 1][m - 1] + rho[k - 1][m - 1] - rho[j - 1][k - 1]) / 2.0

    a = [[0.0] * n for _ in range(n)]  # a[j-1][v-1], spheres 1..n
    for k in range(n, 0, -1):  # sphere with the next shortest row
        v = n + 1 - k  # pivot coordinate of sphere k
        pivot_sq = g(k, k) - sum(a[k - 1][w] ** 2 for w in range(v - 1))
        if pivot_sq <= 0:
            raise NegativeDiscriminant(
                f"pivot for sphere {k} has square {pivot_sq}; "
                "invariants admit no real normalized coordinates"
            )
        a[k - 1][v - 1] = math.sqrt(pivot_sq)
        for j in range(1, k):
            dot = sum(a[j - 1][w] * a[k - 1][w] for w in range(v - 1))
            a[j - 1][v - 1] = (g(j, k) - dot) / a[k - 1][v - 1]
    rows = []
    for j in range(1, n + 1):
        a_j0 = float(rho[j - 1][m - 1] - r2[j - 1])
        rows.append(tuple(a[j - 1]) + (a_j0,))
    rows.append((0.0,) * n + (-float(r2[m - 1]),))
    return Arrangement.from_rows(n, rows)
