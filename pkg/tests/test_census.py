import math
import random
from fractions import Fraction

import numpy as np
import pytest
from sympy import isprime, primerange

from orderlens.census import (
    CensusReport,
    EventSpec,
    InsufficientSampleError,
    PrimeSieve,
    compare_report,
    default_checkpoints,
    merge_reports,
    multiplicative_order,
    poly_has_root,
    run_census,
    subgroup_index,
)
from orderlens.density import DensityEnclosure
from orderlens.kummer import field_spec


@pytest.fixture(scope="module")
def sieve():
    return PrimeSieve.build(200_000)


# --- sieve -------------------------------------------------------------------


def naive_least_factor(n):
    for d in range(2, n + 1):
        if n % d == 0:
            return d


def test_sieve_spot_check(sieve):
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(2, sieve.bound)
        assert int(sieve.spf[n]) == naive_least_factor(n)


def test_sieve_primes_match_sympy(sieve):
    primes = sieve.primes()
    reference = list(primerange(2, 10_000))
    assert list(primes[primes < 10_000]) == reference


def test_sieve_factorize(sieve):
    assert sieve.factorize(360) == {2: 3, 3: 2, 5: 1}
    assert sieve.factorize(1) == {}
    assert sieve.distinct_prime_factors(360) == [2, 3, 5]


def test_sieve_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("ORDERLENS_CACHE", str(tmp_path))
    s1 = PrimeSieve.load_or_build(500)
    assert (tmp_path / "spf_500.npy").exists()
    s2 = PrimeSieve.load_or_build(500)
    assert np.array_equal(s1.spf, s2.spf)


# --- orders -------------------------------------------------------------------


def naive_order(a: Fraction, p: int) -> int:
    x = a.numerator * pow(a.denominator, -1, p) % p
    acc = x
    o = 1
    while acc != 1:
        acc = acc * x % p
        o += 1
    return o


def test_order_examples(sieve):
    assert multiplicative_order(2, 7, sieve.factorize(6)) == 3
    assert multiplicative_order(2, 11, sieve.factorize(10)) == 10
    assert multiplicative_order(2, 31, sieve.factorize(30)) == 5


def test_order_rejects_bad_prime(sieve):
    with pytest.raises(ValueError):
        multiplicative_order(Fraction(2, 7), 7, sieve.factorize(6))


def test_order_matches_naive_and_divides(sieve):
    rng = random.Random(11)
    values = [Fraction(2), Fraction(-2), Fraction(3, 5), Fraction(-7, 4)]
    primes = [p for p in primerange(11, 4000)]
    for _ in range(60):
        p = rng.choice(primes)
        facs = sieve.factorize(p - 1)
        for a in values:
            if a.numerator % p == 0 or a.denominator % p == 0:
                continue
            o = multiplicative_order(a, p, facs)
            assert o == naive_order(a, p)
            assert (p - 1) % o == 0
            x = a.numerator * pow(a.denominator, -1, p) % p
            assert pow(x, o, p) == 1
            for ell in facs:
                if o % ell == 0:
                    assert pow(x, o // ell, p) != 1


def test_subgroup_index_examples(sieve):
    facs = sieve.factorize(6)
    assert subgroup_index([2], 7, facs) == 2
    assert subgroup_index([2, 3], 7, facs) == 1
    assert subgroup_index([4], 7, facs) == 2


def brute_subgroup_size(gens, p):
    group = {1}
    frontier = [1]
    residues = [g.numerator * pow(g.denominator, -1, p) % p for g in map(Fraction, gens)]
    while frontier:
        x = frontier.pop()
        for r in residues:
            y = x * r % p
            if y not in group:
                group.add(y)
                frontier.append(y)
    return len(group)


def test_subgroup_index_against_brute_force(sieve):
    rng = random.Random(5)
    for _ in range(40):
        p = rng.choice([p for p in primerange(11, 500)])
        gens = rng.sample([2, 3, 5, -2, Fraction(4, 9)], rng.randint(1, 3))
        if any(Fraction(g).numerator % p == 0 or Fraction(g).denominator % p == 0 for g in gens):
            continue
        facs = sieve.factorize(p - 1)
        idx = subgroup_index(gens, p, facs)
        size = brute_subgroup_size(gens, p)
        assert idx * size == p - 1


# --- polynomial roots -----------------------------------------------------------


def test_poly_root_examples():
    assert poly_has_root([1, 0, 1], 5)      # x^2 + 1 at 5
    assert not poly_has_root([1, 0, 1], 7)
    assert poly_has_root([-3, 1], 101)      # x - 3
    assert poly_has_root([3, 1, 5], 5)      # leading coeff divisible: x + 3
    assert poly_has_root([-7, 7], 7)        # zero polynomial mod 7
    assert not poly_has_root([1, 5], 5)     # constant 1 mod 5


def test_poly_root_brute_force():
    rng = random.Random(13)
    for _ in range(150):
        p = rng.choice([2, 3, 5, 7, 11, 13, 17])
        deg = rng.randint(1, 5)
        coeffs = [rng.randint(-9, 9) for _ in range(deg)] + [rng.randint(1, 9)]
        expected = any(
            sum(c * x**i for i, c in enumerate(coeffs)) % p == 0 for x in range(p)
        )
        assert poly_has_root(coeffs, p) == expected


# --- events and censuses ---------------------------------------------------------


def test_event_json_roundtrip():
    events = [
        EventSpec.equal_orders([2, -2, 4]),
        EventSpec.ordering([2, 3, 5], Fraction(3, 2)),
        EventSpec.index_divides([2], 1),
        EventSpec.solvability([(2, 3)], [[1, 0, 1]]),
        EventSpec.splits_completely(field_spec(8, [(2, 2)])),
    ]
    events.append(EventSpec.all_of(events[:2]))
    for ev in events:
        assert EventSpec.from_json(ev.to_json()) == ev


def test_event_validation():
    with pytest.raises(ValueError):
        EventSpec.ordering([2, 3], Fraction(1, 2))
    with pytest.raises(ValueError):
        EventSpec.solvability([], [[5]])
    with pytest.raises(ValueError):
        EventSpec.equal_orders([2])


def brute_equal_orders_count(values, bound):
    count = 0
    bad = set()
    for v in map(Fraction, values):
        bad.update(p for p in primerange(2, bound + 1) if v.numerator % p == 0 or v.denominator % p == 0 and p <= max(abs(v.numerator), v.denominator))
    for p in primerange(2, bound + 1):
        if any(Fraction(v).numerator % p == 0 or Fraction(v).denominator % p == 0 for v in values):
            continue
        orders = {naive_order(Fraction(v), p) for v in values}
        if len(orders) == 1:
            count += 1
    return count


def test_census_equal_orders_small(sieve):
    report = run_census(EventSpec.equal_orders([2, 4]), 100, sieve=sieve)
    assert report.final.events == brute_equal_orders_count([2, 4], 100)
    assert report.final.events > 0
    assert report.excluded == (2,)
    # p = 7 has ord(2) = ord(4) = 3; confirm it is inside the count at X=100
    assert naive_order(Fraction(2), 7) == naive_order(Fraction(4), 7) == 3


def test_census_certified_finite_case(sieve):
    report = run_census(EventSpec.equal_orders([2, -2, 4]), 10_000, sieve=sieve)
    assert report.final.events == 0
    assert report.excluded == (2,)


def test_census_solvability_example(sieve):
    ev = EventSpec.solvability([(2, 3)])
    report = run_census(ev, 10, sieve=sieve, checkpoints=[10])
    # only p in {5, 7} are considered; 2^3 = 3 mod 5 counts, p = 7 fails
    assert report.final.considered == 2
    assert report.final.events == 1


def test_census_splits_completely_fraction(sieve):
    spec = field_spec(8, [(2, 2)])  # the whole field is Q(zeta_8): density 1/4
    report = run_census(EventSpec.splits_completely(spec), 200_000, sieve=sieve)
    frac = float(report.final.fraction)
    sigma = math.sqrt(0.25 * 0.75 / report.final.considered)
    assert abs(frac - 0.25) < 4 * sigma


def test_census_ordering_monotone_in_ratio(sieve):
    loose = run_census(EventSpec.ordering([2, 3], 1), 50_000, sieve=sieve)
    tight = run_census(EventSpec.ordering([2, 3], 2), 50_000, sieve=sieve)
    assert 0 < tight.final.events < loose.final.events


def test_census_determinism_under_sharding(sieve):
    ev = EventSpec.equal_orders([2, 3])
    reports = [
        run_census(ev, 30_000, sieve=sieve, shards=s, threads=t)
        for s, t in [(1, 1), (4, 1), (8, 1), (4, 4)]
    ]
    assert all(r == reports[0] for r in reports[1:])


def test_merge_reports_matches_single_run(sieve):
    ev = EventSpec.index_divides([2], 2)
    full = run_census(ev, 20_000, sieve=sieve)
    parts = [
        run_census(ev, 20_000, sieve=sieve, shards=s, threads=1)
        for s in (3, 5)
    ]
    assert merge_reports([full]).checkpoints == full.checkpoints
    assert parts[0] == parts[1] == full


def test_census_coherence_equal_vs_mutual_solvability(sieve):
    bound = 10_000
    equal = run_census(EventSpec.equal_orders([2, 3]), bound, sieve=sieve)
    mutual = run_census(EventSpec.solvability([(2, 3), (3, 2)]), bound, sieve=sieve)
    assert equal.final.events == mutual.final.events
    assert equal.final.considered == mutual.final.considered


def test_census_report_monotone_counts(sieve):
    report = run_census(EventSpec.equal_orders([2, 3]), 100_000, sieve=sieve)
    rows = report.checkpoints
    for a, b in zip(rows, rows[1:]):
        assert a.considered <= b.considered and a.events <= b.events
        assert 0 <= float(a.fraction) <= 1
    assert CensusReport.from_json(report.to_json()) == report
    assert report.to_csv().splitlines()[0] == "X,considered,events,fraction"


def test_compare_report(sieve):
    report = run_census(EventSpec.index_divides([2], 1), 200_000, sieve=sieve)
    artin = DensityEnclosure(Fraction("0.37"), Fraction("0.38"))
    assert compare_report(report, artin).consistent
    control = DensityEnclosure(Fraction("0.9"), Fraction("1.0"))
    assert not compare_report(report, control).consistent
    zero = run_census(EventSpec.equal_orders([2, -2, 4]), 200_000, sieve=sieve)
    assert compare_report(zero, DensityEnclosure(Fraction(0), Fraction(0))).consistent


def test_compare_report_insufficient_sample(sieve):
    report = run_census(EventSpec.equal_orders([2, 3]), 1000, sieve=sieve)
    with pytest.raises(InsufficientSampleError):
        compare_report(report, DensityEnclosure(Fraction(0), Fraction(1)))


def test_default_checkpoints():
    assert default_checkpoints(10**6) == (10, 100, 1000, 10**4, 10**5, 10**6)
    assert default_checkpoints(12345) == (10, 100, 1000, 10000, 12345)
