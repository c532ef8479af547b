"""Decision procedures for order statements, with machine-checkable certificates.

Equality of orders for rationals a_1..a_k holds for infinitely many primes
unless two relations exist simultaneously: a product of the a_i equal to
-1, and a product equal to 1 with odd exponent sum.  When both exist the
verdict is Finite and carries the two exactly verified vectors; otherwise
the verdict is PositiveDensity, optionally with a rigorous enclosure of
the density of a witnessing prime family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .density import (
    DensityConfig,
    DensityEnclosure,
    density_enclosure,
    density_positive,
    entanglement_bound,
)
from .kummer import KummerFieldSpec
from .rationals import (
    FactoredRational,
    RationalLike,
    as_factored,
    find_odd_sum_relation,
    find_sign_relation,
    relation_lattice,
)

FINITE = "finite"
POSITIVE_DENSITY = "positive_density"

DEFAULT_EXPONENT_LIMIT = 8
DEFAULT_PREDICTION_CUTOFF = 2000


class IndexExponentExhausted(RuntimeError):
    """No admissible exponent found below the search limit (indicates a bug)."""


@dataclass(frozen=True)
class Verdict:
    kind: str
    sign_relation: Optional[tuple[int, ...]] = None
    odd_sum_relation: Optional[tuple[int, ...]] = None
    index_exponent: Optional[int] = None
    prediction: Optional[DensityEnclosure] = None

    def __post_init__(self):
        if self.kind == FINITE:
            if self.sign_relation is None or self.odd_sum_relation is None:
                raise ValueError("finite verdict requires both certificates")
        elif self.kind == POSITIVE_DENSITY:
            if self.prediction is not None and not self.prediction.lo > 0:
                raise ValueError("attached prediction must be bounded away from zero")
        else:
            raise ValueError(f"unknown verdict kind {self.kind!r}")

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.sign_relation is not None:
            out["sign_relation"] = list(self.sign_relation)
        if self.odd_sum_relation is not None:
            out["odd_sum_relation"] = list(self.odd_sum_relation)
        if self.index_exponent is not None:
            out["index_exponent"] = self.index_exponent
        if self.prediction is not None:
            out["prediction"] = self.prediction.to_json()
        return out


def equal_order_config(values: Sequence[RationalLike], s: int) -> DensityConfig:
    """Configuration whose primes all satisfy ord_p(a_i) = (p-1)/(3*2^s).

    Each group is one generator with index target 3*2^s, and the counted
    primes split completely in the field adjoining zeta and all radicals
    at that level, pinning every order to exactly (p-1)/(3*2^s).
    """
    k = 3 * 2**s
    rats = as_factored(values)
    field = KummerFieldSpec(k, tuple((a, k) for a in rats))
    return DensityConfig(tuple((a,) for a in rats), tuple(k for _ in rats), field)


def minimal_index_exponent(
    values: Sequence[RationalLike], *, limit: int = DEFAULT_EXPONENT_LIMIT
) -> int:
    """Smallest s for which the 3*2^s index construction has positive density."""
    rats = as_factored(values)
    if find_sign_relation(rats) is not None and find_odd_sum_relation(rats) is not None:
        raise ValueError("orders agree only finitely often; no index construction exists")
    for s in range(limit + 1):
        if density_positive(equal_order_config(rats, s)):
            return s
    raise IndexExponentExhausted(
        f"no exponent up to {limit} passed the positivity test; this indicates a bug"
    )


def index_two_admissible(values: Sequence[RationalLike]) -> bool:
    """Whether all orders can be pinned to (p-1)/2, for positive inputs."""
    rats = as_factored(values)
    if any(r.sign < 0 for r in rats):
        raise ValueError("the index-2 construction applies to positive rationals only")
    field = KummerFieldSpec(2, tuple((a, 2) for a in rats))
    cfg = DensityConfig(tuple((a,) for a in rats), tuple(2 for _ in rats), field)
    return density_positive(cfg)


def decide_equal_orders(
    values: Sequence[RationalLike],
    *,
    predict: bool = False,
    cutoff: int = DEFAULT_PREDICTION_CUTOFF,
    exponent_limit: int = DEFAULT_EXPONENT_LIMIT,
) -> Verdict:
    """Whether ord_p(a_1) = ... = ord_p(a_k) holds for infinitely many p.

    Finite exactly when a sign relation and an odd-sum relation both
    exist; the verdict then carries both witnesses.  Otherwise the set of
    equalizing primes has positive density, and with ``predict`` set the
    verdict attaches an enclosure of the density of the witness family
    with all orders equal to (p-1)/(3*2^s).
    """
    rats = as_factored(values)
    e = find_sign_relation(rats)
    f = find_odd_sum_relation(rats)
    if e is not None and f is not None:
        return Verdict(FINITE, sign_relation=e, odd_sum_relation=f)
    if not predict:
        return Verdict(POSITIVE_DENSITY)
    s = minimal_index_exponent(rats, limit=exponent_limit)
    cfg = equal_order_config(rats, s)
    horizon = max(cutoff, entanglement_bound(cfg))
    return Verdict(
        POSITIVE_DENSITY,
        index_exponent=s,
        prediction=density_enclosure(cfg, horizon),
    )


@dataclass(frozen=True)
class OrderingEligibility:
    eligible: bool
    pair: Optional[tuple[int, int]] = None
    relation: Optional[tuple[int, ...]] = None


def decide_ordering_eligibility(values: Sequence[RationalLike]) -> OrderingEligibility:
    """Pairwise multiplicative independence, with an offending pair on failure.

    Eligible inputs admit every ordering of their orders on a positive
    density of primes; an ineligible pair is returned together with a
    relation vector witnessing the dependence.
    """
    rats = as_factored(values)
    for r in rats:
        if r.is_unit_magnitude():
            raise ValueError("inputs must not be -1, 0, or 1")
    for i in range(len(rats)):
        for j in range(i + 1, len(rats)):
            lattice = relation_lattice([rats[i], rats[j]])
            if lattice.rank:
                return OrderingEligibility(False, (i, j), lattice.basis[0])
    return OrderingEligibility(True)
