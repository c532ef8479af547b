"""Empirical verification over sieved primes: orders, indices, event censuses.

A smallest-prime-factor sieve makes factoring p-1 amortized cheap, after
which multiplicative orders come from the standard strip-down algorithm.
Census runs iterate all primes up to a bound, evaluate an event exactly
at each prime, and report counts at checkpoints; runs are deterministic
and shard-mergeable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .density import DensityEnclosure
from .kummer import KummerFieldSpec
from .rationals import FactoredRational, RationalLike, as_factored

DEFAULT_BOUND = 10_000_000


class InsufficientSampleError(ValueError):
    """Report too small for a statistically meaningful comparison."""


# ---------------------------------------------------------------------------
# Sieve.
# ---------------------------------------------------------------------------


def cache_directory() -> Path:
    env = os.environ.get("ORDERLENS_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "orderlens"


@dataclass
class PrimeSieve:
    """Smallest-prime-factor table for [2, bound]."""

    bound: int
    spf: np.ndarray

    @classmethod
    def build(cls, bound: int) -> "PrimeSieve":
        if bound < 2:
            raise ValueError("sieve bound must be at least 2")
        spf = np.zeros(bound + 1, dtype=np.uint32)
        for p in range(2, math.isqrt(bound) + 1):
            if spf[p] == 0:
                block = spf[p * p :: p]
                block[block == 0] = p
        unmarked = spf == 0
        unmarked[:2] = False
        spf[unmarked] = np.nonzero(unmarked)[0]
        return cls(bound, spf)

    @classmethod
    def load_or_build(cls, bound: int, cache_dir: Optional[Path] = None) -> "PrimeSieve":
        directory = Path(cache_dir) if cache_dir is not None else cache_directory()
        path = directory / f"spf_{bound}.npy"
        if path.exists():
            return cls(bound, np.load(path))
        sieve = cls.build(bound)
        try:
            directory.mkdir(parents=True, exist_ok=True)
            np.save(path, sieve.spf)
        except OSError:
            pass  # cache is best-effort
        return sieve

    def primes(self) -> np.ndarray:
        idx = np.arange(len(self.spf), dtype=np.uint32)
        return np.nonzero(self.spf == idx)[0][1:].astype(np.int64)  # drop index 0 artifact

    def factorize(self, m: int) -> dict[int, int]:
        if not 1 <= m <= self.bound:
            raise ValueError("value outside sieve range")
        out: dict[int, int] = {}
        spf = self.spf
        while m > 1:
            q = int(spf[m])
            e = 0
            while m % q == 0:
                m //= q
                e += 1
            out[q] = e
        return out

    def distinct_prime_factors(self, m: int) -> list[int]:
        out = []
        spf = self.spf
        while m > 1:
            q = int(spf[m])
            out.append(q)
            while m % q == 0:
                m //= q
        return out


# ---------------------------------------------------------------------------
# Orders and related per-prime computations.
# ---------------------------------------------------------------------------


def _residue(num: int, den: int, p: int) -> int:
    if den == 1:
        return num % p
    return num * pow(den, -1, p) % p


def _order_of_residue(a: int, p: int, prime_factors: Iterable[int]) -> int:
    o = p - 1
    for ell in prime_factors:
        while o % ell == 0 and pow(a, o // ell, p) == 1:
            o //= ell
    return o


def _as_num_den(a: RationalLike) -> tuple[int, int]:
    v = as_factored([a])[0].value()
    return v.numerator, v.denominator


def multiplicative_order(a: RationalLike, p: int, pm1_factors: Mapping[int, int]) -> int:
    """Least O >= 1 with a^O = 1 mod p; requires p coprime to a's support."""
    num, den = _as_num_den(a)
    if num % p == 0 or den % p == 0:
        raise ValueError(f"prime {p} divides the numerator or denominator of {a}")
    return _order_of_residue(_residue(num, den, p), p, list(pm1_factors))


def subgroup_index(
    generators: Sequence[RationalLike], p: int, pm1_factors: Mapping[int, int]
) -> int:
    """(p-1) / |<generators mod p>|.

    The multiplicative group mod p is cyclic, so per prime ell | p-1 the
    subgroup's ell-part is the largest among the generators'; equivalently
    the subgroup order is the lcm of the element orders.
    """
    factors = list(pm1_factors)
    order = 1
    for g in generators:
        num, den = _as_num_den(g)
        if num % p == 0 or den % p == 0:
            raise ValueError(f"prime {p} divides the numerator or denominator of {g}")
        order = math.lcm(order, _order_of_residue(_residue(num, den, p), p, factors))
    return (p - 1) // order


def poly_has_root(coeffs: Sequence[int], p: int) -> bool:
    """Whether the integer polynomial (ascending coefficients) has a root mod p.

    Reduces mod p first (a vanishing leading coefficient just lowers the
    degree; the zero polynomial has every root).  Small degrees are
    decided directly; otherwise the root count is deg gcd(P, x^p - x),
    with x^p computed by repeated squaring mod P.
    """
    reduced = [c % p for c in coeffs]
    while reduced and reduced[-1] == 0:
        reduced.pop()
    if not reduced:
        return True
    if len(reduced) == 1:
        return False
    if len(reduced) == 2:
        return True
    if p <= 3:
        return any(_poly_eval(reduced, x, p) == 0 for x in range(p))
    if len(reduced) == 3:
        c, b, a = reduced
        disc = (b * b - 4 * a * c) % p
        return disc == 0 or pow(disc, (p - 1) // 2, p) == 1
    xp = _poly_pow_x(p, reduced, p)
    xp_minus_x = _poly_sub(xp, [0, 1], p)
    return len(_poly_gcd(reduced, xp_minus_x, p)) > 1


def _poly_eval(poly, x, p):
    acc = 0
    for c in reversed(poly):
        acc = (acc * x + c) % p
    return acc


def _poly_trim(poly):
    while poly and poly[-1] == 0:
        poly.pop()
    return poly


def _poly_sub(a, b, p):
    out = [0] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] - c) % p
    return _poly_trim(out)


def _poly_mulmod(a, b, mod, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] = (out[i + j] + ca * cb) % p
    return _poly_rem(out, mod, p)


def _poly_rem(a, mod, p):
    a = a[:]
    inv_lead = pow(mod[-1], -1, p)
    while len(a) >= len(mod):
        if a[-1] == 0:
            a.pop()
            continue
        f = a[-1] * inv_lead % p
        shift = len(a) - len(mod)
        for i, c in enumerate(mod):
            a[shift + i] = (a[shift + i] - f * c) % p
        a.pop()
    return _poly_trim(a)


def _poly_pow_x(e: int, mod, p):
    result = [1]
    base = _poly_rem([0, 1], mod, p)
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def _poly_gcd(a, b, p):
    a, b = a[:], b[:]
    while b:
        a, b = b, _poly_rem(a, b, p)
    return a if a else [0]


# ---------------------------------------------------------------------------
# Events.
# ---------------------------------------------------------------------------

EQUAL_ORDERS = "equal_orders"
ORDERING = "ordering"
INDEX_DIVIDES = "index_divides"
SOLVABILITY = "solvability"
SPLITS_COMPLETELY = "splits_completely"
ALL_OF = "all_of"


@dataclass(frozen=True)
class EventSpec:
    """A per-prime predicate the census counts."""

    kind: str
    rationals: tuple[FactoredRational, ...] = ()
    ratio: Fraction = Fraction(1)
    k: int = 1
    pairs: tuple[tuple[FactoredRational, FactoredRational], ...] = ()
    polynomials: tuple[tuple[int, ...], ...] = ()
    field: Optional[KummerFieldSpec] = None
    events: tuple["EventSpec", ...] = ()

    @classmethod
    def equal_orders(cls, values: Sequence[RationalLike]) -> "EventSpec":
        rats = as_factored(values)
        if len(rats) < 2:
            raise ValueError("equal-orders event needs at least two rationals")
        return cls(EQUAL_ORDERS, rationals=rats)

    @classmethod
    def ordering(cls, values: Sequence[RationalLike], ratio: RationalLike = 1) -> "EventSpec":
        rats = as_factored(values)
        ratio = Fraction(ratio) if not isinstance(ratio, FactoredRational) else ratio.value()
        if len(rats) < 2:
            raise ValueError("ordering event needs at least two rationals")
        if ratio < 1:
            raise ValueError("ordering ratio must be at least 1")
        return cls(ORDERING, rationals=rats, ratio=ratio)

    @classmethod
    def index_divides(cls, generators: Sequence[RationalLike], k: int) -> "EventSpec":
        rats = as_factored(generators)
        if not rats or int(k) < 1:
            raise ValueError("index event needs generators and a positive k")
        return cls(INDEX_DIVIDES, rationals=rats, k=int(k))

    @classmethod
    def solvability(
        cls,
        pairs: Sequence[tuple[RationalLike, RationalLike]],
        polynomials: Sequence[Sequence[int]] = (),
    ) -> "EventSpec":
        fp = tuple((as_factored([a])[0], as_factored([b])[0]) for a, b in pairs)
        polys = []
        for coeffs in polynomials:
            trimmed = list(coeffs)
            while trimmed and trimmed[-1] == 0:
                trimmed.pop()
            if len(trimmed) < 2:
                raise ValueError("polynomials must be nonconstant")
            polys.append(tuple(int(c) for c in trimmed))
        if not fp and not polys:
            raise ValueError("solvability event needs at least one pair or polynomial")
        return cls(SOLVABILITY, pairs=fp, polynomials=tuple(polys))

    @classmethod
    def splits_completely(cls, spec: KummerFieldSpec) -> "EventSpec":
        return cls(SPLITS_COMPLETELY, field=spec)

    @classmethod
    def all_of(cls, events: Sequence["EventSpec"]) -> "EventSpec":
        if not events:
            raise ValueError("conjunction needs at least one event")
        return cls(ALL_OF, events=tuple(events))

    def bad_primes(self) -> frozenset[int]:
        """Primes dividing a numerator or denominator anywhere in the event."""
        out: set[int] = set()
        for r in self.rationals:
            out.update(p for p, _ in r.factors)
        for a, b in self.pairs:
            out.update(p for p, _ in a.factors)
            out.update(p for p, _ in b.factors)
        if self.field is not None:
            for base, _ in self.field.generators:
                out.update(p for p, _ in base.factors)
        for ev in self.events:
            out.update(ev.bad_primes())
        return frozenset(out)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in (EQUAL_ORDERS, ORDERING):
            out["rationals"] = [str(r.value()) for r in self.rationals]
            if self.kind == ORDERING:
                out["ratio"] = str(self.ratio)
        elif self.kind == INDEX_DIVIDES:
            out["generators"] = [str(r.value()) for r in self.rationals]
            out["k"] = self.k
        elif self.kind == SOLVABILITY:
            out["pairs"] = [[str(a.value()), str(b.value())] for a, b in self.pairs]
            out["polynomials"] = [list(c) for c in self.polynomials]
        elif self.kind == SPLITS_COMPLETELY:
            out["field"] = self.field.to_json()
        elif self.kind == ALL_OF:
            out["events"] = [ev.to_json() for ev in self.events]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "EventSpec":
        kind = obj["kind"]
        if kind == EQUAL_ORDERS:
            return cls.equal_orders(obj["rationals"])
        if kind == ORDERING:
            return cls.ordering(obj["rationals"], Fraction(obj.get("ratio", 1)))
        if kind == INDEX_DIVIDES:
            return cls.index_divides(obj["generators"], obj["k"])
        if kind == SOLVABILITY:
            return cls.solvability(
                [tuple(pair) for pair in obj.get("pairs", [])],
                obj.get("polynomials", []),
            )
        if kind == SPLITS_COMPLETELY:
            return cls.splits_completely(KummerFieldSpec.from_json(obj["field"]))
        if kind == ALL_OF:
            return cls.all_of([cls.from_json(e) for e in obj["events"]])
        raise ValueError(f"unknown event kind {kind!r}")


def _compile_event(event: EventSpec) -> tuple[bool, Callable]:
    """(needs p-1 factorization, evaluator(p, distinct_factors) -> bool)."""
    if event.kind == EQUAL_ORDERS:
        nds = [(r.numerator, r.denominator) for r in event.rationals]

        def run(p, facs):
            first = _order_of_residue(_residue(*nds[0], p), p, facs)
            for num, den in nds[1:]:
                if _order_of_residue(_residue(num, den, p), p, facs) != first:
                    return False
            return True

        return True, run

    if event.kind == ORDERING:
        nds = [(r.numerator, r.denominator) for r in event.rationals]
        cn, cd = event.ratio.numerator, event.ratio.denominator

        def run(p, facs):
            prev = _order_of_residue(_residue(*nds[0], p), p, facs)
            for num, den in nds[1:]:
                cur = _order_of_residue(_residue(num, den, p), p, facs)
                if prev * cd <= cn * cur:
                    return False
                prev = cur
            return True

        return True, run

    if event.kind == INDEX_DIVIDES:
        nds = [(r.numerator, r.denominator) for r in event.rationals]
        k = event.k

        def run(p, facs):
            order = 1
            for num, den in nds:
                order = math.lcm(
                    order, _order_of_residue(_residue(num, den, p), p, facs)
                )
            return k % ((p - 1) // order) == 0

        return True, run

    if event.kind == SOLVABILITY:
        nds = [
            ((a.numerator, a.denominator), (b.numerator, b.denominator))
            for a, b in event.pairs
        ]
        polys = [list(c) for c in event.polynomials]

        def run(p, facs):
            for (an, ad), (bn, bd) in nds:
                oa = _order_of_residue(_residue(an, ad, p), p, facs)
                ob = _order_of_residue(_residue(bn, bd, p), p, facs)
                if oa % ob:
                    return False
            return all(poly_has_root(c, p) for c in polys)

        return bool(nds), run

    if event.kind == SPLITS_COMPLETELY:
        spec = event.field
        n = spec.n
        gens = [(b.numerator, b.denominator, m) for b, m in spec.generators]

        def run(p, facs):
            if (p - 1) % n:
                return False
            for num, den, m in gens:
                if pow(_residue(num, den, p), (p - 1) // m, p) != 1:
                    return False
            return True

        return False, run

    if event.kind == ALL_OF:
        compiled = [_compile_event(ev) for ev in event.events]
        needs = any(n for n, _ in compiled)
        funcs = [f for _, f in compiled]

        def run(p, facs):
            return all(f(p, facs) for f in funcs)

        return needs, run

    raise ValueError(f"unknown event kind {event.kind!r}")


# ---------------------------------------------------------------------------
# Reports.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Checkpoint:
    x: int
    considered: int
    events: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.events, self.considered) if self.considered else Fraction(0)


@dataclass(frozen=True)
class CensusReport:
    event: EventSpec
    bound: int
    excluded: tuple[int, ...]
    checkpoints: tuple[Checkpoint, ...]

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    def to_json(self) -> dict:
        return {
            "event": self.event.to_json(),
            "bound": self.bound,
            "excluded_primes": list(self.excluded),
            "checkpoints": [
                {
                    "x": c.x,
                    "considered": c.considered,
                    "events": c.events,
                    "fraction": f"{float(c.fraction):.10f}",
                }
                for c in self.checkpoints
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "CensusReport":
        return cls(
            EventSpec.from_json(obj["event"]),
            int(obj["bound"]),
            tuple(obj["excluded_primes"]),
            tuple(
                Checkpoint(int(c["x"]), int(c["considered"]), int(c["events"]))
                for c in obj["checkpoints"]
            ),
        )

    def to_csv(self) -> str:
        lines = ["X,considered,events,fraction"]
        for c in self.checkpoints:
            lines.append(f"{c.x},{c.considered},{c.events},{float(c.fraction):.10f}")
        return "\n".join(lines) + "\n"


def default_checkpoints(bound: int) -> tuple[int, ...]:
    cps = []
    x = 10
    while x < bound:
        cps.append(x)
        x *= 10
    cps.append(bound)
    return tuple(cps)


def run_census(
    event: EventSpec,
    bound: int,
    *,
    checkpoints: Optional[Sequence[int]] = None,
    sieve: Optional[PrimeSieve] = None,
    shards: int = 1,
    threads: int = 1,
) -> CensusReport:
    """Count primes p <= bound satisfying the event, with checkpoint rows.

    Primes dividing any numerator or denominator in the event are excluded
    and reported.  The prime range is split into ``shards`` independent
    chunks whose partial counts merge by addition, so the report does not
    depend on the partition or on execution order.
    """
    if sieve is None:
        sieve = PrimeSieve.load_or_build(bound)
    if sieve.bound < bound:
        raise ValueError("sieve smaller than requested bound")
    cps = tuple(sorted(set(checkpoints))) if checkpoints else default_checkpoints(bound)
    if cps[-1] != bound:
        raise ValueError("final checkpoint must equal the bound")
    bad = event.bad_primes()
    needs_pm1, evaluator = _compile_event(event)
    primes = sieve.primes()
    primes = primes[primes <= bound]
    buckets = np.searchsorted(np.asarray(cps, dtype=np.int64), primes, side="left")
    shards = max(1, int(shards))
    chunk_bounds = [len(primes) * i // shards for i in range(shards + 1)]
    jobs = [
        (primes[chunk_bounds[i] : chunk_bounds[i + 1]],
         buckets[chunk_bounds[i] : chunk_bounds[i + 1]])
        for i in range(shards)
    ]

    def work(job):
        chunk, chunk_buckets = job
        return _run_chunk(evaluator, needs_pm1, sieve, chunk, chunk_buckets, len(cps), bad)

    if threads > 1 and shards > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, jobs))
    else:
        partials = [work(j) for j in jobs]

    considered = [0] * len(cps)
    events = [0] * len(cps)
    for c_part, e_part in partials:
        for i in range(len(cps)):
            considered[i] += c_part[i]
            events[i] += e_part[i]
    rows = []
    c_total = 0
    e_total = 0
    for i, x in enumerate(cps):
        c_total += considered[i]
        e_total += events[i]
        rows.append(Checkpoint(x, c_total, e_total))
    excluded = tuple(sorted(p for p in bad if p <= bound))
    return CensusReport(event, bound, excluded, tuple(rows))


def _run_chunk(evaluator, needs_pm1, sieve, chunk, chunk_buckets, ncp, bad):
    considered = [0] * ncp
    events = [0] * ncp
    spf = sieve.spf
    distinct = sieve.distinct_prime_factors
    for i in range(len(chunk)):
        p = int(chunk[i])
        if p in bad:
            continue
        b = int(chunk_buckets[i])
        considered[b] += 1
        facs = distinct(p - 1) if needs_pm1 else None
        if evaluator(p, facs):
            events[b] += 1
    return considered, events


def merge_reports(reports: Sequence[CensusReport]) -> CensusReport:
    """Merge reports over disjoint prime ranges of the same event and grid."""
    first = reports[0]
    for r in reports[1:]:
        if r.event != first.event or r.bound != first.bound:
            raise ValueError("reports are not mergeable")
        if tuple(c.x for c in r.checkpoints) != tuple(c.x for c in first.checkpoints):
            raise ValueError("checkpoint grids differ")
    rows = []
    for i, c in enumerate(first.checkpoints):
        rows.append(
            Checkpoint(
                c.x,
                sum(r.checkpoints[i].considered for r in reports),
                sum(r.checkpoints[i].events for r in reports),
            )
        )
    return CensusReport(first.event, first.bound, first.excluded, tuple(rows))


# ---------------------------------------------------------------------------
# Comparison against predictions.
# ---------------------------------------------------------------------------

MIN_SAMPLE = 10_000
ABSOLUTE_SLACK = 0.005


@dataclass(frozen=True)
class ReportComparison:
    consistent: bool
    z_score: float
    observed: Fraction
    slack: float


def compare_report(report: CensusReport, enclosure: DensityEnclosure) -> ReportComparison:
    """Check an observed fraction against a density enclosure.

    The enclosure is widened by four binomial standard deviations at the
    midpoint plus a small absolute slack; convergence of prime counts is
    slow, so a pure sampling tolerance would be overconfident.
    """
    final = report.final
    if final.considered < MIN_SAMPLE:
        raise InsufficientSampleError(
            f"final checkpoint has {final.considered} primes; need {MIN_SAMPLE}"
        )
    mid = enclosure.midpoint
    obs = final.fraction
    var = float(mid) * (1 - float(mid)) / final.considered
    slack = 4 * math.sqrt(var) + ABSOLUTE_SLACK
    consistent = float(enclosure.lo) - slack <= float(obs) <= float(enclosure.hi) + slack
    if var > 0:
        z = (float(obs) - float(mid)) / math.sqrt(var)
    else:
        z = 0.0 if obs == mid else math.inf
    return ReportComparison(consistent, z, obs, slack)
