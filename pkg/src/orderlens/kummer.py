"""Degrees of radical-cyclotomic fields Q(zeta_n, a_1^(1/m_1), ..., a_k^(1/m_k)).

The degree over Q equals phi(n) * prod(m_i) / |H| where H collects the
exponent tuples whose radical product is already an n-th power in
Q(zeta_n).  For rational bases that membership is decidable by pure
arithmetic: an n-th power defect in the exponents, one quadratic layer
(conductors of sqrt(d)), and availability of roots of unity are the only
obstructions.  No general algebraic number computation is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iter_product
from typing import Mapping, Optional, Sequence

from sympy import totient

from .rationals import (
    ExponentMatrix,
    FactoredRational,
    RationalLike,
    as_factored,
    factor_rational,
    is_multiplicatively_independent,
    right_kernel,
    row_hermite_form,
)

DEFAULT_ENUMERATION_CAP = 2**20


class EnumerationCapExceeded(ValueError):
    """Subgroup enumeration would exceed the configured cap."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"enumeration of size {size} exceeds cap {cap}")


class UniformityVerificationError(RuntimeError):
    """The finite verification set rejected every candidate exponent."""


# ---------------------------------------------------------------------------
# Quadratic conductors.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticConductor:
    """Squarefree radicand d with the least c such that sqrt(d) lies in Q(zeta_c)."""

    radicand: int
    conductor: int


def _squarefree_conductor(m: int) -> int:
    # m squarefree, m != 0, 1
    return abs(m) if m % 4 == 1 else 4 * abs(m)


def sqrt_conductor(d: RationalLike) -> QuadraticConductor:
    """Conductor of Q(sqrt(d)) for a nonzero rational d that is not a square."""
    r = factor_rational(d)
    m = r.sign
    for p, e in r.factors:
        if e % 2:
            m *= p
    if m == 1:
        raise ValueError(f"{d} is a rational square; Q(sqrt(d)) is trivial")
    return QuadraticConductor(m, _squarefree_conductor(m))


# ---------------------------------------------------------------------------
# Membership of rationals in (Q(zeta_n)^x)^d.
# ---------------------------------------------------------------------------


def _omega_parities(coeff: int, c: int, n2: int) -> tuple[bool, bool]:
    # which parities of j solve coeff * j == c (mod n2)
    g = math.gcd(coeff, n2)
    if c % g:
        return False, False
    m = n2 // g
    if m == 1:
        return True, True
    j0 = (c // g) * pow(coeff // g, -1, m) % m
    if m % 2:
        return True, True
    return j0 % 2 == 0, j0 % 2 == 1


def _class_is_dth_power(r0: int, sign: int, d: int, n2: int) -> bool:
    """Decide x^d = sign * r0 * (square) membership given only the square class.

    r0 is the positive squarefree part of the candidate's square class; n2
    is the (even) order of the torsion subgroup of the cyclotomic field.
    A d-th root exists iff some root of unity omega with the right d/2
    power makes r0*omega a square, and omega's parity class determines
    whether a conductor must divide n2 (even class) or exactly 2*n2 (odd).
    """
    if d % 2:
        even_ok, odd_ok = _omega_parities(d, 0, n2)
    else:
        c = 0 if sign == 1 else n2 // 2
        even_ok, odd_ok = _omega_parities(d // 2, c, n2)
    if even_ok and (r0 == 1 or n2 % _squarefree_conductor(r0) == 0):
        return True
    if odd_ok and r0 != 1:
        f = _squarefree_conductor(r0)
        if (2 * n2) % f == 0 and n2 % f != 0:
            return True
    return False


@lru_cache(maxsize=65536)
def _is_dth_power_cached(b: FactoredRational, d: int, n: int) -> bool:
    n2 = n if n % 2 == 0 else 2 * n
    if d == 1:
        return True
    for _, e in b.factors:
        if (2 * e) % d:
            return False
    r0 = 1
    for p, e in b.factors:
        if ((2 * e) // d) % 2:
            r0 *= p
    return _class_is_dth_power(r0, b.sign, d, n2)


def is_dth_power_in_cyclotomic(b: RationalLike, d: int, n: int) -> bool:
    """True iff the rational b is a d-th power in Q(zeta_n)."""
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    return _is_dth_power_cached(factor_rational(b), d, n)


# ---------------------------------------------------------------------------
# Field specifications.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KummerFieldSpec:
    """The field Q(zeta_n, a_1^(1/m_1), ..., a_k^(1/m_k)).

    Generators are normalized on construction: every m must divide n,
    trivial radicals are dropped, and duplicate bases merge by taking the
    lcm of their root indices.
    """

    n: int
    generators: tuple[tuple[FactoredRational, int], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("cyclotomic level n must be positive")
        merged: dict[FactoredRational, int] = {}
        for base, m in self.generators:
            base = factor_rational(base)
            m = int(m)
            if m < 1:
                raise ValueError("root index m must be positive")
            if self.n % m:
                raise ValueError(f"root index {m} does not divide level {self.n}")
            if m == 1 or base.is_one():
                continue
            merged[base] = math.lcm(merged.get(base, 1), m)
        norm = tuple(
            sorted(merged.items(), key=lambda bm: (bm[0].numerator, bm[0].denominator, bm[1]))
        )
        object.__setattr__(self, "generators", norm)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "generators": [
                {"base": str(base.value()), "m": m} for base, m in self.generators
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "KummerFieldSpec":
        gens = tuple(
            (factor_rational(g["base"]), int(g["m"])) for g in obj.get("generators", [])
        )
        return cls(int(obj["n"]), gens)


TRIVIAL_SPEC = KummerFieldSpec(1, ())


def field_spec(n: int, generators: Sequence[tuple[RationalLike, int]]) -> KummerFieldSpec:
    """Convenience constructor accepting plain rationals as bases."""
    return KummerFieldSpec(n, tuple((factor_rational(b), m) for b, m in generators))


def compose_specs(s1: KummerFieldSpec, s2: KummerFieldSpec) -> KummerFieldSpec:
    """Compositum: lcm of levels, concatenated generators, duplicates merged."""
    n = math.lcm(s1.n, s2.n)
    return KummerFieldSpec(n, s1.generators + s2.generators)


# ---------------------------------------------------------------------------
# Degrees.
# ---------------------------------------------------------------------------


def _power_class_subgroup_size(spec: KummerFieldSpec, cap: int) -> int:
    """Size of H = exponent tuples whose radical product is an n-th power.

    The n-th power valuation conditions are linear congruences on the
    exponent tuple; their solution subgroup is enumerated from a Hermite
    basis and filtered by the square-class test, which depends only on
    the parity profile of the tuple.
    """
    n = spec.n
    bases = [b for b, _ in spec.generators]
    ms = [m for _, m in spec.generators]
    k = len(bases)
    primes = sorted({p for b in bases for p, _ in b.factors})
    npr = len(primes)
    m0 = n if n % 2 else n // 2  # 2v == 0 (mod n)  <=>  v == 0 (mod m0)
    # coefficient of e_i in the valuation of the product at prime p
    coeff = [[(n // ms[i]) * bases[i].exponents.get(p, 0) for i in range(k)] for p in primes]
    if npr == 0 or m0 == 1:
        lattice = [[int(i == j) for j in range(k)] for i in range(k)]
    else:
        rows = [[c % m0 for c in row] + [m0 if j == idx else 0 for j in range(npr)]
                for idx, row in enumerate(coeff)]
        kernel = right_kernel(rows)
        lattice = [v[:k] for v in kernel]
    for i in range(k):
        lattice.append([ms[i] if j == i else 0 for j in range(k)])
    tri = row_hermite_form(lattice)
    if len(tri) != k:
        raise AssertionError("solution lattice is not full rank")
    pivots = [tri[i][i] for i in range(k)]
    sizes = [ms[i] // pivots[i] for i in range(k)]
    total = math.prod(sizes)
    if total > cap:
        raise EnumerationCapExceeded(total, cap)
    beta = [[coeff[pi][i] % n for pi in range(npr)] for i in range(k)]
    neg = [b.sign < 0 for b in bases]
    n2 = n if n % 2 == 0 else 2 * n

    @lru_cache(maxsize=None)
    def class_ok(parities: tuple[int, ...], sgn: int) -> bool:
        r0 = 1
        for p, par in zip(primes, parities):
            if par:
                r0 *= p
        return _class_is_dth_power(r0, -1 if sgn else 1, n, n2)

    count = 0
    for cs in iter_product(*(range(s) for s in sizes)):
        e = [0] * k
        for i, c in enumerate(cs):
            if c:
                for j in range(k):
                    e[j] += c * tri[i][j]
        e = [e[j] % ms[j] for j in range(k)]
        parities = tuple(
            0 if sum(e[i] * beta[i][pi] for i in range(k)) % n == 0 else 1
            for pi in range(npr)
        )
        sgn = sum(e[i] * (n // ms[i]) for i in range(k) if neg[i]) % 2
        if class_ok(parities, sgn):
            count += 1
    return count


@lru_cache(maxsize=16384)
def _kummer_degree_cached(spec: KummerFieldSpec, cap: int) -> int:
    phi = int(totient(spec.n))
    if not spec.generators:
        return phi
    total_m = math.prod(m for _, m in spec.generators)
    h = _power_class_subgroup_size(spec, cap)
    degree, rem = divmod(phi * total_m, h)
    if rem:
        raise AssertionError("degree formula produced a non-integer")
    return degree


def kummer_degree(spec: KummerFieldSpec, *, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """Exact degree [Q(zeta_n, a_1^(1/m_1), ...) : Q].

    The power-class subgroup is found by solving the valuation congruences
    first, so only their solution cosets are enumerated; ``cap`` bounds
    that enumeration (it degenerates to prod(m_i) only when the
    congruences impose no structure).
    """
    return _kummer_degree_cached(spec, cap)


# ---------------------------------------------------------------------------
# Uniform growth level and abelian data.
# ---------------------------------------------------------------------------


def maximal_abelian_radicands(values: Sequence[RationalLike]) -> list[int]:
    """Primes dividing any numerator or denominator of the inputs.

    The maximal abelian subfield of any radical extension of these bases
    lies inside Q(zeta_n, sqrt(b_1), ..., sqrt(b_K)) over this prime list.
    """
    rats = as_factored(values)
    return sorted({p for r in rats for p, _ in r.factors})


def _independent_minor_denominator_lcm(mat: ExponentMatrix) -> int:
    """lcm of denominators of the inverse of a full-rank square minor."""
    k = len(mat.rows)
    rows = [[Fraction(x) for x in row] for row in mat.rows]
    # greedy column selection by exact elimination
    work = [row[:] for row in rows]
    chosen: list[int] = []
    rank = 0
    for col in range(len(mat.primes)):
        piv = next((i for i in range(rank, k) if work[i][col] != 0), None)
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        for i in range(k):
            if i != rank and work[i][col] != 0:
                f = work[i][col] / work[rank][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[rank])]
        chosen.append(col)
        rank += 1
        if rank == k:
            break
    if rank < k:
        raise ValueError("exponent matrix does not have full row rank")
    square = [[rows[i][c] for c in chosen] for i in range(k)]
    inv = _fraction_inverse(square)
    return math.lcm(*(entry.denominator for row in inv for entry in row))


def _fraction_inverse(mat: list[list[Fraction]]) -> list[list[Fraction]]:
    k = len(mat)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(k)] for i, row in enumerate(mat)]
    for col in range(k):
        piv = next(i for i in range(col, k) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pval = aug[col][col]
        aug[col] = [a / pval for a in aug[col]]
        for i in range(k):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[k:] for row in aug]


def _divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factor_rational(n).factors:
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def uniformity_bound(
    values: Sequence[RationalLike],
    *,
    max_two_exponent: int = 10,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> int:
    """A level N above which radical-cyclotomic growth is exactly maximal.

    Built as 2^a times the lattice denominator of the exponent minor times
    the odd primes of the inputs, with a >= 3 raised until degree ratios
    are maximal over a finite verification set of divisors.  The finite
    set suffices in practice because the only degree drops for rational
    bases come from quadratic conductors supported on 8 and these primes.
    """
    rats = as_factored(values)
    if not is_multiplicatively_independent(rats):
        raise ValueError("uniformity bound requires multiplicatively independent inputs")
    mat = ExponentMatrix.build(rats)
    n_lattice = _independent_minor_denominator_lcm(mat)
    odd_primes = [p for p in mat.primes if p != 2]
    base_n = n_lattice * math.prod(odd_primes) if odd_primes else n_lattice
    v_primes = math.prod(mat.primes) if mat.primes else 1
    check_set = [v for v in _divisors(8 * v_primes) if v > 1]
    k = len(rats)
    for a in range(3, max_two_exponent + 1):
        big = 2**a * base_n
        if _uniformity_holds(rats, big, check_set, k, cap):
            return big
    raise UniformityVerificationError(
        f"no exponent up to 2^{max_two_exponent} passed the verification set"
    )


def _uniformity_holds(
    rats: Sequence[FactoredRational], big: int, check_set: Sequence[int], k: int, cap: int
) -> bool:
    phi_big = int(totient(big))

    def ratio_ok(gens_small, gens_large, v, expected_m):
        lo = kummer_degree(KummerFieldSpec(big, tuple(gens_small)), cap=cap)
        hi = kummer_degree(KummerFieldSpec(big * v, tuple(gens_large)), cap=cap)
        return hi * phi_big == lo * int(totient(big * v)) * expected_m

    for v in check_set:
        try:
            small = [(r, big) for r in rats]
            large = [(r, big * v) for r in rats]
            if not ratio_ok(small, large, v, v**k):
                return False
        except EnumerationCapExceeded:
            # joint growth too costly to enumerate; check one radical at a time
            for r in rats:
                if not ratio_ok([(r, big)], [(r, big * v)], v, v):
                    return False
    return True
