"""Numerical oracle: chamber integrals and end-to-end identity checks.

For n = 1 the complement of the arrangement in the real line decomposes
into 2m - 1 bounded intervals between consecutive sphere roots; each
bounded chamber carries the twisted pairing up to a nonzero per-chamber
constant once the twist is taken as prod_j |f_j|^{lambda_j} with real
positive exponents.  Every identity verified here is linear over a single
chamber, so that constant drops out.

Integrals are evaluated with double-exponential (tanh-sinh) quadrature,
which absorbs the algebraic endpoint singularities |x - root|^(lambda-1).
Convergence is decided symbolically beforehand: each integrand term knows
its Laurent powers in the f_j and the effective exponent at an endpoint
must exceed -1, so failures are diagnosed rather than produced as NaNs.

The Gauss-Manin check differentiates the chamber integrals through the
raw quadratic coefficients with Richardson-extrapolated central
differences and compares against the connection matrix paired with the
tangent pushed to invariant coordinates by the chain rule
dr_j^2 = 2 sum a_jv da_jv - da_j0.
"""

from __future__ import annotations

import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import tanhsinh as _tanhsinh

from .arrangement import Arrangement, b0s, cm_minor, STAR
from .cohomology import CohomClass, LambdaPoint, to_F
from .connection import ConnectionMatrix, ParamOneForm, gm_matrix, r_key, rho_key
from .errors import (
    ConvergenceViolation,
    DegenerateRoots,
    StepTooLarge,
    ToleranceNotMet,
)
from .indices import IndexSet, index_set, nbc_basis

__all__ = [
    "Chamber",
    "QuadratureResult",
    "TwistIntegrand",
    "chambers_1d",
    "integrate",
    "verify_identity",
    "verify_gauss_manin",
    "random_arrangement",
    "random_crossing_arrangement_1d",
    "random_lambda",
]


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("SPHERULE_THREADS", "1")))
    except ValueError:
        return 1


def _map_jobs(fn: Callable, items: Sequence):
    workers = _thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- chambers ----------------------------------------------------------------


@dataclass(frozen=True)
class Chamber:
    """A bounded interval (a, b) between consecutive sphere roots (n = 1).

    Endpoints are exact rationals whenever the root is rational (always
    true for the generators shipped here); otherwise the nearest binary
    rational is stored and the provenance tuple (sphere, sign) keeps the
    exact characterization x = -a_{j1} + sign * r_j.
    """

    a: Fraction
    b: Fraction
    left: tuple  # (sphere index, -1 or +1)
    right: tuple

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")

    def midpoint(self) -> float:
        return (float(self.a) + float(self.b)) / 2.0


def _sqrt_fraction(x: Fraction) -> Optional[Fraction]:
    if x < 0:
        return None
    ns = math.isqrt(x.numerator)
    ds = math.isqrt(x.denominator)
    if ns * ns == x.numerator and ds * ds == x.denominator:
        return Fraction(ns, ds)
    return None


def chambers_1d(arr: Arrangement) -> list:
    """The 2m - 1 bounded chambers of a line arrangement.

    Requires every r_j^2 > 0 and all 2m roots distinct; coincidence is
    decided exactly through the pair minors B(0*jk), which vanish if and
    only if two spheres share a root.
    """
    if arr.n != 1:
        raise ValueError("chamber enumeration is implemented for n = 1")
    for j in range(1, arr.m + 1):
        if arr.r2(j) <= 0:
            raise DegenerateRoots(f"sphere {j} has r^2 <= 0")
    for j in range(1, arr.m + 1):
        for k in range(j + 1, arr.m + 1):
            if b0s(arr, (j, k)) == 0:
                raise DegenerateRoots(f"spheres {j} and {k} are tangent")
    roots = []
    for j in range(1, arr.m + 1):
        c = -arr.alpha[j - 1][0]
        r = _sqrt_fraction(arr.r2(j))
        if r is None:
            r = Fraction(math.sqrt(float(arr.r2(j))))
        roots.append((c - r, (j, -1)))
        roots.append((c + r, (j, +1)))
    roots.sort(key=lambda t: t[0])
    out = []
    for (a, pa), (b, pb) in zip(roots, roots[1:]):
        out.append(Chamber(a=a, b=b, left=pa, right=pb))
    return out


# -- integrands ---------------------------------------------------------------


class TwistIntegrand:
    """A finite sum of Laurent monomials in the quadrics:
    sum_t c_t prod_j f_j(x)^{p_{t,j}}, integrated against the twist
    prod_j |f_j|^{lambda_j}."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple]):
        clean = []
        for coeff, powers in terms:
            c = float(coeff)
            if c != 0.0:
                clean.append((c, {int(j): int(p) for j, p in powers.items() if p}))
        self.terms = tuple(clean)

    @classmethod
    def from_class(cls, arr: Arrangement, phi: CohomClass) -> "TwistIntegrand":
        phi = to_F(arr, phi)
        return cls(
            (coeff, {j: -1 for j in key}) for key, coeff in phi.coeffs.items()
        )

    @classmethod
    def from_key(cls, key) -> "TwistIntegrand":
        return cls([(1.0, {j: -1 for j in key})])

    @classmethod
    def monomial(cls, coeff, powers) -> "TwistIntegrand":
        return cls([(coeff, dict(powers))])

    def __add__(self, other: "TwistIntegrand") -> "TwistIntegrand":
        return TwistIntegrand(self.terms + other.terms)

    def scaled(self, c) -> "TwistIntegrand":
        return TwistIntegrand((float(c) * t, p) for t, p in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def endpoint_exponents(self, lam: Sequence, j: int) -> list:
        """Effective exponent of |f_j| near a root of sphere j, per term."""
        return [float(lam[j - 1]) + powers.get(j, 0) for _, powers in self.terms]


def _check_convergence(
    integrand: TwistIntegrand, lam: Sequence, chamber: Chamber
) -> None:
    for j, _side in (chamber.left, chamber.right):
        for e in integrand.endpoint_exponents(lam, j):
            if e <= -1.0:
                raise ConvergenceViolation(
                    f"effective exponent {e} of sphere {j} at a chamber endpoint"
                )


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def _chamber_signs(arr_f: list, mid: float, m: int) -> list:
    return [
        1.0 if (mid * mid + 2.0 * row[0] * mid + row[1]) > 0 else -1.0
        for row in arr_f
    ]


def integrate(
    arr: Arrangement,
    lam: Sequence,
    phi,
    chamber: Chamber,
    rtol: float = 1e-10,
) -> QuadratureResult:
    """Integral over one chamber of prod_j |f_j|^{lambda_j} times phi.

    ``phi`` may be a CohomClass, a bare index set (meaning F_J), or a
    TwistIntegrand.  Convergence of every Laurent term at both endpoints
    is checked symbolically first.  Double-exponential quadrature targets
    relative error ``rtol``; the error estimate comes from the difference
    of successive refinement levels.
    """
    if isinstance(phi, CohomClass):
        integrand = TwistIntegrand.from_class(arr, phi)
    elif isinstance(phi, TwistIntegrand):
        integrand = phi
    else:
        integrand = TwistIntegrand.from_key(tuple(phi))
    lam_f = [float(x) for x in lam]
    _check_convergence(integrand, lam_f, chamber)
    if integrand.is_zero:
        return QuadratureResult(0.0, 0.0, 0)

    arr_f = [[float(row[0]), float(row[1])] for row in arr.alpha]
    m = arr.m
    signs = _chamber_signs(arr_f, chamber.midpoint(), m)
    lin = np.array([2.0 * row[0] for row in arr_f])
    const = np.array([row[1] for row in arr_f])
    term_data = []
    for coeff, powers in integrand.terms:
        sgn = 1.0
        exps = []
        for j in range(1, m + 1):
            p = powers.get(j, 0)
            if p % 2:
                sgn *= signs[j - 1]
            exps.append(lam_f[j - 1] + p)
        term_data.append((coeff * sgn, np.array(exps)))

    def f(x):
        x = np.asarray(x, dtype=float)
        fj = np.abs(x[..., None] * x[..., None] + x[..., None] * lin + const)
        out = np.zeros_like(x)
        with np.errstate(divide="ignore", over="ignore"):
            for c, exps in term_data:
                out = out + c * np.prod(fj**exps, axis=-1)
        return out

    res = _tanhsinh(f, float(chamber.a), float(chamber.b), rtol=rtol, atol=1e-300)
    value = float(res.integral)
    err = float(res.error)
    if not res.success and not (abs(value) < 1e-14 and err < 1e-14):
        raise ToleranceNotMet(
            f"quadrature stalled at error {err} for target rtol {rtol}"
        )
    return QuadratureResult(value, err, int(res.nfev))


# -- identity verification -----------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    ok: bool
    residuals: tuple  # per chamber: |lhs - rhs| / max(1, |lhs|)
    values: tuple  # per chamber: (lhs, rhs)

    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def verify_identity(
    arr: Arrangement,
    lam: Sequence,
    lhs,
    rhs,
    chambers: Optional[list] = None,
    tol: float = 1e-6,
) -> IdentityReport:
    """Integrate both sides over every bounded chamber and compare at
    relative tolerance tol (absolute below magnitude 1)."""
    if chambers is None:
        chambers = chambers_1d(arr)

    def one(ch):
        lv = integrate(arr, lam, lhs, ch).value
        rv = integrate(arr, lam, rhs, ch).value
        return lv, rv

    values = _map_jobs(one, chambers)
    residuals = tuple(abs(lv - rv) / max(1.0, abs(lv)) for lv, rv in values)
    return IdentityReport(
        ok=all(r <= tol for r in residuals),
        residuals=residuals,
        values=tuple(values),
    )


# -- Gauss-Manin finite differences ---------------------------------------------


def invariant_rates(arr: Arrangement, tangent: dict) -> dict:
    """Push a tangent on the raw coefficients {(j, v): da_{jv}/dt}
    (v = 0 meaning the constant slot) to the invariant basis:
    dr_j^2 = 2 sum_v a_jv da_jv - da_j0,
    drho_jk^2 = 2 sum_v (a_jv - a_kv)(da_jv - da_kv)."""
    n, m = arr.n, arr.m

    def t(j, v):
        return float(tangent.get((j, v), 0.0))

    rates = {}
    for j in range(1, m + 1):
        row = arr.alpha[j - 1]
        rates[r_key(j)] = 2.0 * sum(
            float(row[v - 1]) * t(j, v) for v in range(1, n + 1)
        ) - t(j, 0)
    for j in range(1, m + 1):
        for k in range(j + 1, m + 1):
            rj, rk = arr.alpha[j - 1], arr.alpha[k - 1]
            rates[rho_key(j, k)] = 2.0 * sum(
                (float(rj[v - 1]) - float(rk[v - 1])) * (t(j, v) - t(k, v))
                for v in range(1, n + 1)
            )
    return rates


def _perturbed(arr: Arrangement, tangent: dict, h: float) -> Arrangement:
    rows = []
    for j in range(1, arr.m + 1):
        row = list(arr.alpha[j - 1])
        for v in range(1, arr.n + 1):
            row[v - 1] = Fraction(float(row[v - 1]) + h * float(tangent.get((j, v), 0.0)))
        row[-1] = Fraction(float(row[-1]) + h * float(tangent.get((j, 0), 0.0)))
        rows.append(row)
    return Arrangement.from_rows(arr.n, rows)


def _matched_chamber(pert: Arrangement, ch: Chamber) -> Chamber:
    """The chamber of the perturbed arrangement with the same provenance
    (the cycle deforms with the arrangement)."""
    for cand in chambers_1d(pert):
        if cand.left == ch.left and cand.right == ch.right:
            return cand
    raise DegenerateRoots("chamber lost under perturbation; reduce the step")


@dataclass(frozen=True)
class GaussManinReport:
    ok: bool
    max_residual: float
    entries: tuple  # (J, chamber idx, fd value, matrix value, residual)


def verify_gauss_manin(
    arr: Arrangement,
    lam: LambdaPoint,
    tangent: dict,
    h: float = 1e-3,
    tol: float = 1e-5,
    matrix: Optional[ConnectionMatrix] = None,
) -> GaussManinReport:
    """Compare d/dt of every NBC chamber integral along ``tangent`` with
    the connection-matrix pairing.

    Central differences at steps h and h/2 are Richardson-combined; if the
    two estimates disagree beyond tolerance the step is rejected as too
    large.  Tolerance is relative against max(1, |derivative|).
    """
    if arr.n != 1:
        raise ValueError("the finite-difference check is implemented for n = 1")
    basis = nbc_basis(arr.m, arr.n)
    if matrix is None:
        matrix = gm_matrix(arr, lam)
    rates = invariant_rates(arr, tangent)
    chambers = chambers_1d(arr)
    lam_f = lam.floats()

    base_vals = {
        (K, i): integrate(arr, lam_f, K, ch).value
        for K in basis
        for i, ch in enumerate(chambers)
    }
    pert_vals = {}
    for step in (h, h / 2, -h, -h / 2):
        pert = _perturbed(arr, tangent, step)
        pchambers = [_matched_chamber(pert, ch) for ch in chambers]

        def one(item):
            K, i = item
            return integrate(pert, lam_f, K, pchambers[i]).value

        keys = [(K, i) for K in basis for i in range(len(chambers))]
        vals = _map_jobs(one, keys)
        for key, v in zip(keys, vals):
            pert_vals[(step,) + key] = v

    entries = []
    ok = True
    for J in basis:
        col = {K: matrix.entry(K, J).evaluate(rates) for K in basis}
        for i in range(len(chambers)):
            d1 = (pert_vals[(h, J, i)] - pert_vals[(-h, J, i)]) / (2 * h)
            d2 = (pert_vals[(h / 2, J, i)] - pert_vals[(-h / 2, J, i)]) / h
            fd = (4 * d2 - d1) / 3
            richardson_resid = abs(d2 - d1) / 3
            predicted = sum(base_vals[(K, i)] * col[K] for K in basis)
            scale = max(1.0, abs(fd))
            if richardson_resid > tol * scale * 10:
                raise StepTooLarge(
                    f"Richardson residual {richardson_resid} too large at h={h}"
                )
            resid = abs(fd - predicted) / scale
            entries.append((J, i, fd, predicted, resid))
            ok = ok and resid <= tol
    return GaussManinReport(
        ok=ok,
        max_residual=max(e[4] for e in entries) if entries else 0.0,
        entries=tuple(entries),
    )


# -- seeded random data ---------------------------------------------------------


def random_arrangement(
    rng: random.Random,
    n: int,
    m: int,
    bound: int = 20,
    require_h1: bool = True,
    max_tries: int = 500,
) -> Arrangement:
    """A random rational arrangement with small numerators/denominators,
    filtered so that no principal minor needed by the calculus vanishes."""
    for _ in range(max_tries):
        rows = []
        for _j in range(m):
            center = [
                Fraction(rng.randint(-bound, bound), rng.randint(1, 4))
                for _ in range(n)
            ]
            r2 = Fraction(rng.randint(1, bound), rng.randint(1, 4))
            rows.append((center, r2))
        arr = Arrangement.from_centers(n, rows)
        if not require_h1:
            return arr
        from .arrangement import check_hypotheses

        if check_hypotheses(arr).h1_ok:
            return arr
    raise RuntimeError("could not sample a general-position arrangement")


def random_crossing_arrangement_1d(rng: random.Random, m: int) -> Arrangement:
    """An m-circle line arrangement with every pair properly crossing
    (each sphere j spans (x_j, x_{j+m}) over 2m interleaved rational
    points), hence rational roots and the full crossing hypotheses."""
    while True:
        pts = sorted(
            Fraction(rng.randint(-40, 40), rng.choice([1, 2, 3, 4]))
            for _ in range(2 * m)
        )
        if len(set(pts)) == 2 * m:
            break
    rows = []
    for j in range(m):
        a, b = pts[j], pts[j + m]
        # (x - a)(x - b): coefficient row (alpha_1, alpha_0)
        rows.append((-(a + b) / 2, a * b))
    return Arrangement.from_rows(1, rows)


def random_lambda(
    rng: random.Random,
    m: int,
    lo: Fraction = Fraction(1, 8),
    hi: Fraction = Fraction(2),
    avoid_one: bool = True,
) -> LambdaPoint:
    """Random rational exponents in (lo, hi), avoiding integers (and 1)."""
    vals = []
    while len(vals) < m:
        den = rng.choice([3, 4, 5, 7, 8])
        num = rng.randint(int(lo * den) + 1, int(hi * den) - 1)
        v = Fraction(num, den)
        if v.denominator == 1:
            continue
        if avoid_one and v == 1:
            continue
        vals.append(v)
    return LambdaPoint(tuple(vals))
