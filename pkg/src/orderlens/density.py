"""Exact local densities and rigorous enclosures for order-index prime sets.

A configuration fixes finitely generated groups W_1..W_t of rationals,
index targets k_1..k_t, and an optional radical-cyclotomic field F that
the counted primes must split completely in.  The local density at a
squarefree level n is an alternating sum of reciprocal field degrees; at
primes beyond the entanglement bound the levels decouple into Euler
factors determined only by group ranks, and the infinite product is
enclosed between exact rational bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from sympy import isprime, primerange

from .kummer import (
    KummerFieldSpec,
    compose_specs,
    kummer_degree,
    uniformity_bound,
)
from .rationals import (
    ExponentMatrix,
    FactoredRational,
    RationalLike,
    as_factored,
    factor_rational,
    relation_lattice,
    row_hermite_form,
)


class EntanglementBoundError(ValueError):
    """Euler factor requested at a prime inside the entangled range."""


@dataclass(frozen=True)
class DensityConfig:
    """Groups W_i with index targets k_i and an optional splitting field."""

    groups: tuple[tuple[FactoredRational, ...], ...]
    indices: tuple[int, ...]
    field: Optional[KummerFieldSpec] = None

    def __post_init__(self):
        if not self.groups:
            raise ValueError("need at least one group")
        if len(self.groups) != len(self.indices):
            raise ValueError("one index bound per group required")
        if any(k < 1 for k in self.indices):
            raise ValueError("index bounds must be positive")
        for gens in self.groups:
            if not any(not g.is_unit_magnitude() for g in gens):
                raise ValueError("every group must be infinite (a generator with |a| != 1)")

    @classmethod
    def make(
        cls,
        groups: Sequence[Sequence[RationalLike]],
        indices: Sequence[int],
        field: Optional[KummerFieldSpec] = None,
    ) -> "DensityConfig":
        return cls(
            tuple(as_factored(g) for g in groups),
            tuple(int(k) for k in indices),
            field,
        )


@dataclass(frozen=True)
class LocalDensity:
    n: int
    value: Fraction

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise ValueError("local density out of range")


@dataclass(frozen=True)
class DensityEnclosure:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi <= 1:
            raise ValueError("enclosure must satisfy 0 <= lo <= hi <= 1")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def to_json(self) -> dict:
        return {"lo": str(self.lo), "hi": str(self.hi)}

    @classmethod
    def from_json(cls, obj) -> "DensityEnclosure":
        return cls(Fraction(obj["lo"]), Fraction(obj["hi"]))


def q_of_ell(k: int, ell: int) -> int:
    """Smallest power of the prime ell that does not divide k."""
    q = ell
    while k % q == 0:
        q *= ell
    return q


# ---------------------------------------------------------------------------
# Entanglement bound.
# ---------------------------------------------------------------------------


def _all_generators(cfg: DensityConfig) -> tuple[FactoredRational, ...]:
    gens: list[FactoredRational] = []
    for group in cfg.groups:
        gens.extend(group)
    if cfg.field is not None:
        gens.extend(base for base, _ in cfg.field.generators)
    return tuple(g for g in gens if not g.is_unit_magnitude())


def _independent_subset(gens: Sequence[FactoredRational]) -> list[FactoredRational]:
    chosen: list[FactoredRational] = []
    rank = 0
    for g in gens:
        trial = chosen + [g]
        new_rank = len(trial) - relation_lattice(trial).rank
        if new_rank > rank:
            chosen.append(g)
            rank = new_rank
    return chosen


def _prime_factors(n: int) -> list[int]:
    return [p for p, _ in factor_rational(n).factors] if n > 1 else []


@lru_cache(maxsize=1024)
def _entanglement_data(cfg: DensityConfig) -> tuple[int, frozenset[int]]:
    """(bound, core primes): levels built from core primes see all degeneracy.

    Beyond the bound, every prime gives a clean Euler factor: its level is
    the prime itself, group ranks stay maximal mod that prime, and the
    radical fields are linearly disjoint from everything at lower levels.
    """
    gens = _all_generators(cfg)
    subset = _independent_subset(gens)
    uniform = uniformity_bound(subset)
    mat = ExponentMatrix.build(gens)
    tri = row_hermite_form([list(r) for r in mat.rows])
    pivot_prod = 1
    for i, row in enumerate(tri):
        lead = next((x for x in row if x), 1)
        pivot_prod *= abs(lead)
    t = len(cfg.groups)
    primes: set[int] = {2, 3}
    primes.update(_prime_factors(uniform))
    primes.update(_prime_factors(pivot_prod))
    for k in cfg.indices:
        primes.update(_prime_factors(k))
    if cfg.field is not None:
        primes.update(_prime_factors(cfg.field.n))
    # primes with (ell-1) ell <= t are not killed by the union bound
    primes.update(p for p in primerange(2, math.isqrt(t) + 2))
    bound = max(uniform, max(cfg.indices), max(primes), t)
    return bound, frozenset(primes)


def entanglement_bound(cfg: DensityConfig) -> int:
    """Primes beyond this value contribute independent Euler factors."""
    return _entanglement_data(cfg)[0]


# ---------------------------------------------------------------------------
# Local densities.
# ---------------------------------------------------------------------------


PAIR_CAP = 16


def _group_level_spec(gens: Sequence[FactoredRational], q: int) -> KummerFieldSpec:
    return KummerFieldSpec(q, tuple((g, q) for g in gens))


def local_density(cfg: DensityConfig, n: int, *, pair_cap: int = PAIR_CAP) -> LocalDensity:
    """Exact fraction of Galois elements compatible at squarefree level n.

    Inclusion-exclusion over the (group, prime | n) pairs: each subset T
    contributes (-1)^|T| / [F * M_T : Q], the proportion of elements
    fixing the compositum of the subset's radical fields and F.  The sum
    counts elements fixing F while moving every per-pair field, with no
    disjointness assumptions.
    """
    fr = factor_rational(n)
    if n < 1 or fr.sign < 0 or any(e != 1 for _, e in fr.factors):
        raise ValueError("level n must be a squarefree positive integer")
    ell_list = [p for p, _ in fr.factors]
    pairs = []
    for i, gens in enumerate(cfg.groups):
        for ell in ell_list:
            q = q_of_ell(cfg.indices[i], ell)
            pairs.append(_group_level_spec(gens, q))
    if len(pairs) > pair_cap:
        raise ValueError(f"{len(pairs)} (group, prime) pairs exceed cap {pair_cap}")
    base = cfg.field if cfg.field is not None else KummerFieldSpec(1)
    composed: dict[int, KummerFieldSpec] = {0: base}
    total = Fraction(0)
    for mask in range(1 << len(pairs)):
        if mask:
            low = mask & (mask - 1)
            idx = (mask ^ low).bit_length() - 1
            composed[mask] = compose_specs(composed[low], pairs[idx])
        sign = -1 if bin(mask).count("1") % 2 else 1
        total += Fraction(sign, kummer_degree(composed[mask]))
    return LocalDensity(n, total)


@lru_cache(maxsize=4096)
def _rank_table(cfg: DensityConfig) -> tuple[tuple[int, int], ...]:
    """(sign, rank of W_S) for every nonempty subset S of the groups."""
    t = len(cfg.groups)
    table = []
    for mask in range(1, 1 << t):
        gens: list[FactoredRational] = []
        for i in range(t):
            if mask >> i & 1:
                gens.extend(cfg.groups[i])
        rank = len(gens) - relation_lattice(gens).rank
        sign = -1 if bin(mask).count("1") % 2 else 1
        table.append((sign, rank))
    return tuple(table)


def ell_factor(cfg: DensityConfig, ell: int) -> Fraction:
    """Euler factor at a prime beyond the entanglement bound.

    Inclusion-exclusion over group subsets S with term 1/((ell-1) ell^rank(W_S)),
    the empty subset contributing 1.
    """
    bound = entanglement_bound(cfg)
    if not isprime(ell):
        raise ValueError("ell must be prime")
    if ell <= bound:
        raise EntanglementBoundError(
            f"prime {ell} is within the entanglement bound {bound}; use local_density"
        )
    return _ell_factor_from_table(_rank_table(cfg), ell)


def _ell_factor_from_table(table, ell: int) -> Fraction:
    total = Fraction(1)
    for sign, rank in table:
        total += Fraction(sign, (ell - 1) * ell**rank)
    return total


# ---------------------------------------------------------------------------
# Enclosures of the limiting density.
# ---------------------------------------------------------------------------

_PREC = 256


class _IntervalProduct:
    """Product of fractions in [0, 1] with outward-rounded fixed-point bounds."""

    def __init__(self):
        self.lo = 1 << _PREC
        self.hi = 1 << _PREC

    def multiply(self, f: Fraction) -> None:
        a, b = f.numerator, f.denominator
        self.lo = self.lo * a // b
        self.hi = -((-self.hi * a) // b)

    def bounds(self) -> tuple[Fraction, Fraction]:
        one = 1 << _PREC
        return Fraction(self.lo, one), min(Fraction(self.hi, one), Fraction(1))


def density_enclosure(cfg: DensityConfig, cutoff: int) -> DensityEnclosure:
    """Rigorous rational interval around the limiting density.

    Value: d_n at n = product of primes up to the entanglement bound,
    times Euler factors up to the cutoff.  The omitted tail is bounded
    below by 1 - t/cutoff via prod(1 - t/ell^2) >= 1 - t * sum 1/(m(m-1)).
    """
    bound, core = _entanglement_data(cfg)
    if cutoff < bound:
        raise ValueError(f"cutoff {cutoff} is below the entanglement bound {bound}")
    # Exact alternating sum only over the core primes; every other prime
    # up to the bound splices off an exact rank-table Euler factor, so dn
    # below equals d_n at n = product of primes <= bound.
    dn = local_density(cfg, math.prod(sorted(core))).value
    table = _rank_table(cfg)
    for ell in primerange(2, bound + 1):
        if ell not in core:
            dn *= _ell_factor_from_table(table, ell)
    if dn == 0:
        return DensityEnclosure(Fraction(0), Fraction(0))
    acc = _IntervalProduct()
    for ell in primerange(bound + 1, cutoff + 1):
        f = _ell_factor_from_table(table, ell)
        if f == 0:
            return DensityEnclosure(Fraction(0), Fraction(0))
        acc.multiply(f)
    plo, phi = acc.bounds()
    t = len(cfg.groups)
    tail = max(Fraction(0), 1 - Fraction(t, cutoff))
    lo = max(Fraction(0), dn * plo * tail)
    hi = min(Fraction(1), dn * phi)
    return DensityEnclosure(lo, hi)


def artin_constant(rank: int, cutoff: int) -> DensityEnclosure:
    """Enclosure of prod over primes of (1 - 1/((ell-1) ell^rank)).

    The partial product over ell <= cutoff is an upper bound; the tail is
    bounded using sum_{ell > c} 1/((ell-1) ell^r) <= sum_{m > c} 1/(m-1)^(r+1)
    <= 1/(r c^r) + 1/c^(r+1), so the lower endpoint multiplies by one
    minus that majorant.
    """
    if rank < 1 or cutoff < 1:
        raise ValueError("rank and cutoff must be positive")
    acc = _IntervalProduct()
    for ell in primerange(2, cutoff + 1):
        acc.multiply(1 - Fraction(1, (ell - 1) * ell**rank))
    plo, phi = acc.bounds()
    tail = Fraction(1, rank * cutoff**rank) + Fraction(1, cutoff ** (rank + 1))
    lo = max(Fraction(0), plo * (1 - tail))
    return DensityEnclosure(lo, phi)


# ---------------------------------------------------------------------------
# Positivity.
# ---------------------------------------------------------------------------


def core_level(cfg: DensityConfig) -> int:
    """Product of the core primes: the level that witnesses positivity."""
    _, primes = _entanglement_data(cfg)
    return math.prod(sorted(primes))


def density_positive(cfg: DensityConfig) -> bool:
    """Whether every local density is positive.

    Checked exactly at the core level; beyond it each Euler factor is at
    least 1 - t/ell^2 > 0 and levels splice multiplicatively, so the core
    level decides.
    """
    return local_density(cfg, core_level(cfg)).value > 0
