"""Exact factored rationals and integer linear algebra over their exponent vectors.

Every nonzero rational is represented as a sign together with a finite
prime -> exponent mapping.  On top of that representation this module
computes the lattice of multiplicative relations among a list of rationals
and answers the relation questions that drive the order criteria:
multiplicative independence, products equal to -1, products equal to 1
with odd exponent sum, and odd-power bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from sympy import factorint

RationalLike = Union[int, str, Fraction, "FactoredRational"]

DEFAULT_DIGIT_BOUND = 64


class FactorDigitBoundExceeded(ValueError):
    """Input too large for the configured factorization digit bound."""

    def __init__(self, value: int, digits: int, bound: int):
        self.value = value
        self.digits = digits
        self.bound = bound
        super().__init__(
            f"refusing to factor {digits}-digit integer (bound {bound} digits)"
        )


@dataclass(frozen=True)
class FactoredRational:
    """A nonzero rational as sign * prod(p^e) with all primes explicit.

    ``factors`` is a tuple of (prime, exponent) pairs with primes strictly
    ascending and no zero exponents; |value| = 1 is the empty tuple.
    """

    sign: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        primes = [p for p, _ in self.factors]
        if primes != sorted(primes) or len(set(primes)) != len(primes):
            raise ValueError("factors must have strictly ascending primes")
        if any(e == 0 for _, e in self.factors):
            raise ValueError("zero exponents are not allowed")

    @property
    def exponents(self) -> dict[int, int]:
        return dict(self.factors)

    def value(self) -> Fraction:
        num, den = 1, 1
        for p, e in self.factors:
            if e > 0:
                num *= p**e
            else:
                den *= p**-e
        return Fraction(self.sign * num, den)

    @property
    def numerator(self) -> int:
        return self.value().numerator

    @property
    def denominator(self) -> int:
        return self.value().denominator

    def is_unit_magnitude(self) -> bool:
        return not self.factors

    def is_one(self) -> bool:
        return self.sign == 1 and not self.factors

    def __mul__(self, other: "FactoredRational") -> "FactoredRational":
        exps = dict(self.factors)
        for p, e in other.factors:
            e2 = exps.get(p, 0) + e
            if e2:
                exps[p] = e2
            else:
                exps.pop(p)
        return FactoredRational(self.sign * other.sign, _sorted_factors(exps))

    def __pow__(self, k: int) -> "FactoredRational":
        if k == 0:
            return FactoredRational(1, ())
        sign = self.sign if k % 2 else 1
        return FactoredRational(sign, _sorted_factors({p: e * k for p, e in self.factors}))

    def abs(self) -> "FactoredRational":
        return FactoredRational(1, self.factors)

    def to_json(self) -> dict:
        return {"sign": self.sign, "factors": [[p, e] for p, e in self.factors]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "FactoredRational":
        return cls(int(obj["sign"]), tuple((int(p), int(e)) for p, e in obj["factors"]))

    def __str__(self) -> str:
        return str(self.value())


def _sorted_factors(exps: Mapping[int, int]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((p, e) for p, e in exps.items() if e))


def factor_rational(q: RationalLike, *, digit_bound: int = DEFAULT_DIGIT_BOUND) -> FactoredRational:
    """Factor a nonzero rational exactly into sign and prime exponents.

    Accepts ints, Fractions, "num/den" strings, or an already factored value.
    Rejects zero, and rejects inputs whose numerator or denominator exceeds
    ``digit_bound`` decimal digits instead of factoring them slowly.
    """
    if isinstance(q, FactoredRational):
        return q
    if isinstance(q, str):
        q = Fraction(q)
    q = Fraction(q)
    if q == 0:
        raise ValueError("cannot factor 0: input must be a nonzero rational")
    exps: dict[int, int] = {}
    for n, s in ((q.numerator, 1), (q.denominator, -1)):
        n = abs(n)
        if n == 1:
            continue
        digits = len(str(n))
        if digits > digit_bound:
            raise FactorDigitBoundExceeded(n, digits, digit_bound)
        for p, e in factorint(n).items():
            exps[p] = exps.get(p, 0) + s * e
    return FactoredRational(1 if q > 0 else -1, _sorted_factors(exps))


def as_factored(values: Iterable[RationalLike]) -> tuple[FactoredRational, ...]:
    return tuple(factor_rational(v) for v in values)


# ---------------------------------------------------------------------------
# Integer matrices: Hermite reduction and kernels.
#
# All routines operate on lists of Python-int rows and stay in exact
# arithmetic; row operations are unimodular, so kernels come out saturated.
# ---------------------------------------------------------------------------


def row_hermite_form(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form: echelon, positive pivots, reduced above."""
    mat = [list(r) for r in rows]
    if not mat:
        return []
    ncols = len(mat[0])
    pivots: list[tuple[int, int]] = []
    top = 0
    for col in range(ncols):
        # gcd-eliminate below `top` in this column
        while True:
            live = [i for i in range(top, len(mat)) if mat[i][col]]
            if len(live) <= 1:
                break
            live.sort(key=lambda i: abs(mat[i][col]))
            piv = live[0]
            for i in live[1:]:
                f = mat[i][col] // mat[piv][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[piv])]
        live = [i for i in range(top, len(mat)) if mat[i][col]]
        if not live:
            continue
        i = live[0]
        mat[top], mat[i] = mat[i], mat[top]
        if mat[top][col] < 0:
            mat[top] = [-a for a in mat[top]]
        pivots.append((top, col))
        top += 1
    mat = mat[:top]
    # reduce entries above each pivot into [0, pivot)
    for r, c in reversed(pivots):
        for i in range(r):
            f = mat[i][c] // mat[r][c]
            if f:
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
    return mat


def right_kernel(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Basis of {x in Z^n : M x = 0} for the integer matrix M given as rows.

    Row-reduces [M^T | I]; rows whose M^T-part vanishes carry a saturated
    kernel basis in their identity part.
    """
    if not rows:
        return []
    nrows, ncols = len(rows), len(rows[0])
    aug = [[rows[i][j] for i in range(nrows)] + [int(i == j) for i in range(ncols)]
           for j in range(ncols)]
    # Hermite-reduce on the transposed block only; the identity block rides along.
    top = 0
    for col in range(nrows):
        while True:
            live = [i for i in range(top, ncols) if aug[i][col]]
            if len(live) <= 1:
                break
            live.sort(key=lambda i: abs(aug[i][col]))
            piv = live[0]
            for i in live[1:]:
                f = aug[i][col] // aug[piv][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[piv])]
        live = [i for i in range(top, ncols) if aug[i][col]]
        if live:
            i = live[0]
            aug[top], aug[i] = aug[i], aug[top]
            top += 1
    kernel = [row[nrows:] for row in aug[top:]]
    return canonical_basis(kernel)


def canonical_basis(vectors: Sequence[Sequence[int]]) -> list[list[int]]:
    """Canonicalize a lattice basis: HNF rows, content 1, leading entry > 0."""
    basis = row_hermite_form(vectors)
    out = []
    for v in basis:
        g = 0
        for a in v:
            g = math.gcd(g, a)
        if g > 1:
            v = [a // g for a in v]
        lead = next((a for a in v if a), 0)
        if lead < 0:
            v = [-a for a in v]
        out.append(v)
    return out


def in_lattice(basis: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """Whether v is an integer combination of the basis vectors."""
    if not any(v):
        return True
    if not basis:
        return False
    before = row_hermite_form(list(basis))
    after = row_hermite_form(list(basis) + [list(v)])
    return before == after


# ---------------------------------------------------------------------------
# Relation lattices.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentMatrix:
    """Exponent vectors of |a_i| over the union of occurring primes."""

    primes: tuple[int, ...]
    rows: tuple[tuple[int, ...], ...]
    negative: tuple[bool, ...]

    @classmethod
    def build(cls, rats: Sequence[FactoredRational]) -> "ExponentMatrix":
        primes = sorted({p for r in rats for p, _ in r.factors})
        rows = tuple(
            tuple(r.exponents.get(p, 0) for p in primes) for r in rats
        )
        return cls(tuple(primes), rows, tuple(r.sign < 0 for r in rats))


@dataclass(frozen=True)
class RelationLattice:
    """Integer basis of all x with prod |a_i|^{x_i} = 1."""

    basis: tuple[tuple[int, ...], ...]
    rank: int


def relation_lattice(values: Sequence[RationalLike]) -> RelationLattice:
    """Saturated kernel of the exponent matrix of |a_i|.

    Basis vectors are content-1 with positive leading entry, in Hermite
    form, so equal inputs give byte-identical output.
    """
    rats = as_factored(values)
    if not rats:
        raise ValueError("need at least one rational")
    mat = ExponentMatrix.build(rats)
    k = len(rats)
    if not mat.primes:
        # all |a_i| = 1: every vector is a relation
        basis = [[int(i == j) for j in range(k)] for i in range(k)]
    else:
        # kernel of the transposed exponent matrix
        transposed = [[mat.rows[i][j] for i in range(k)] for j in range(len(mat.primes))]
        basis = right_kernel(transposed)
    verified = []
    for v in basis:
        prod = FactoredRational(1, ())
        for r, e in zip(rats, v):
            prod = prod * (r.abs() ** e)
        if not prod.is_one():
            raise AssertionError("kernel vector failed exact verification")
        verified.append(tuple(v))
    return RelationLattice(tuple(verified), len(verified))


def _check_units(rats: Sequence[FactoredRational]) -> None:
    for r in rats:
        if r.is_unit_magnitude():
            raise ValueError("inputs must not be -1, 0, or 1")


def is_multiplicatively_independent(values: Sequence[RationalLike]) -> bool:
    """True iff prod a_i^{x_i} = 1 forces x = 0.

    Any nonzero relation among the signed values squares to a relation among
    absolute values, so the |a_i|-kernel alone decides.
    """
    rats = as_factored(values)
    _check_units(rats)
    return relation_lattice(rats).rank == 0


def _product_value(rats: Sequence[FactoredRational], exps: Sequence[int]) -> FactoredRational:
    prod = FactoredRational(1, ())
    for r, e in zip(rats, exps):
        prod = prod * (r**e)
    return prod


def _sign_parity(rats: Sequence[FactoredRational], v: Sequence[int]) -> int:
    return sum(e for r, e in zip(rats, v) if r.sign < 0) % 2


def find_sign_relation(values: Sequence[RationalLike]) -> Optional[tuple[int, ...]]:
    """An integer vector e with prod a_i^{e_i} = -1, if one exists.

    Any solution lies in the absolute-value relation lattice K, and the
    sign of a K-vector depends only on its parity class, so a GF(2) scan
    of the basis decides.  The returned witness is re-verified exactly.
    """
    rats = as_factored(values)
    _check_units(rats)
    lattice = relation_lattice(rats)
    for v in lattice.basis:
        if _sign_parity(rats, v) == 1:
            prod = _product_value(rats, v)
            if prod.sign != -1 or prod.factors:
                raise AssertionError("sign relation failed exact verification")
            return tuple(v)
    return None


def find_odd_sum_relation(values: Sequence[RationalLike]) -> Optional[tuple[int, ...]]:
    """An integer vector f with prod a_i^{f_i} = 1 and odd coordinate sum.

    Solves sigma(v) = 0, tau(v) = 1 over GF(2) on the relation lattice,
    where sigma is the sign parity and tau the coordinate-sum parity.
    """
    rats = as_factored(values)
    _check_units(rats)
    lattice = relation_lattice(rats)
    basis = lattice.basis
    if not basis:
        return None
    sigma = [_sign_parity(rats, v) for v in basis]
    tau = [sum(v) % 2 for v in basis]
    combo = _solve_gf2_two_row(sigma, tau)
    if combo is None:
        return None
    f = [0] * len(rats)
    for j in combo:
        f = [a + b for a, b in zip(f, basis[j])]
    prod = _product_value(rats, f)
    if not prod.is_one() or sum(f) % 2 != 1:
        raise AssertionError("odd-sum relation failed exact verification")
    return tuple(f)


def _solve_gf2_two_row(sigma: Sequence[int], tau: Sequence[int]) -> Optional[list[int]]:
    # solve sum x_j sigma_j = 0, sum x_j tau_j = 1 over GF(2); the target
    # (0,1) is a subset-sum of distinct column types, so either a (0,1)
    # column exists or a (1,0) and a (1,1) column pair up
    cols = {}
    for j, (s, t) in enumerate(zip(sigma, tau)):
        cols.setdefault((s % 2, t % 2), j)
    if (0, 1) in cols:
        return [cols[0, 1]]
    if (1, 0) in cols and (1, 1) in cols:
        return sorted([cols[1, 0], cols[1, 1]])
    return None


@dataclass(frozen=True)
class OddBasis:
    """Subset S of input indices plus odd-exponent representations.

    For every input index i, ``representations[i]`` is a pair (e, coeffs)
    with e odd and a_i^e = prod over S of a_s^{coeffs[s]}, verified exactly.
    """

    indices: tuple[int, ...]
    representations: tuple[tuple[int, dict[int, int]], ...]


def odd_basis(values: Sequence[RationalLike]) -> OddBasis:
    """Multiplicatively independent subset covering every input at an odd power.

    Follows the constructive elimination: while the current set carries a
    relation, halve it while all exponents are even, then discard one
    element that appears with an odd exponent, rewriting representations.
    Requires that no integer-exponent product of the inputs equals -1.
    """
    rats = as_factored(values)
    _check_units(rats)
    if find_sign_relation(rats) is not None:
        raise ValueError("a product of the inputs equals -1; no odd basis exists")
    k = len(rats)
    selected = list(range(k))
    reps: list[tuple[int, dict[int, int]]] = [(1, {i: 1}) for i in range(k)]
    while True:
        lattice = relation_lattice([rats[i] for i in selected])
        if lattice.rank == 0:
            break
        f = list(lattice.basis[0])
        while all(c % 2 == 0 for c in f):
            f = [c // 2 for c in f]
        pos = max(j for j, c in enumerate(f) if c % 2)
        t = selected[pos]
        ft = f[pos]
        coeffs = {s: f[j] for j, s in enumerate(selected) if j != pos}
        selected.pop(pos)
        new_reps = []
        for e, expo in reps:
            et = expo.get(t, 0)
            new_e = e * ft
            new_expo = {s: c * ft - et * coeffs.get(s, 0) for s, c in expo.items() if s != t}
            for s, c in coeffs.items():
                if s not in new_expo:
                    new_expo[s] = -et * c
            new_expo = {s: c for s, c in new_expo.items() if c}
            g = abs(new_e)
            for c in new_expo.values():
                g = math.gcd(g, c)
            if g > 1:
                new_e //= g
                new_expo = {s: c // g for s, c in new_expo.items()}
            if new_e < 0:
                new_e = -new_e
                new_expo = {s: -c for s, c in new_expo.items()}
            new_reps.append((new_e, new_expo))
        reps = new_reps
    for i, (e, expo) in enumerate(reps):
        lhs = rats[i] ** e
        rhs = FactoredRational(1, ())
        for s, c in expo.items():
            rhs = rhs * (rats[s] ** c)
        if lhs != rhs or e % 2 != 1:
            raise AssertionError("odd-basis representation failed exact verification")
    return OddBasis(tuple(selected), tuple(reps))
