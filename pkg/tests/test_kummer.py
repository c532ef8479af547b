import math
from fractions import Fraction

import pytest
from sympy import primerange, totient

from orderlens.kummer import (
    EnumerationCapExceeded,
    KummerFieldSpec,
    compose_specs,
    field_spec,
    is_dth_power_in_cyclotomic,
    kummer_degree,
    maximal_abelian_radicands,
    sqrt_conductor,
    uniformity_bound,
)
from orderlens.rationals import factor_rational


# --- quadratic conductors ----------------------------------------------------


def test_sqrt_conductor_examples():
    assert sqrt_conductor(5).conductor == 5
    assert sqrt_conductor(3).conductor == 12
    assert sqrt_conductor(-3).conductor == 3
    assert sqrt_conductor(2).conductor == 8


def test_sqrt_conductor_rational_and_squares():
    assert sqrt_conductor(Fraction(1, 2)).conductor == 8
    assert sqrt_conductor(Fraction(-1, 3)).conductor == 3
    with pytest.raises(ValueError):
        sqrt_conductor(4)
    with pytest.raises(ValueError):
        sqrt_conductor(Fraction(9, 4))


# --- d-th power membership ---------------------------------------------------

MEMBERSHIP_CASES = [
    (2, 2, 8, True),
    (2, 2, 4, False),
    (2, 3, 9, False),
    (-4, 2, 4, True),
    (16, 8, 4, True),   # (1+i)^8 = 16
    (-8, 2, 8, True),
    (5, 2, 5, True),
    (3, 2, 12, True),
    (-3, 2, 3, True),
    (2, 2, 12, False),
    (-2, 2, 8, True),
    (6, 2, 24, True),
    (-1, 4, 8, True),
    (-1, 4, 4, False),
    (-1, 2, 4, True),
    (-1, 2, 2, False),
    (8, 2, 8, True),
    (Fraction(4, 9), 2, 1, True),
    (Fraction(2, 9), 2, 8, True),
]


@pytest.mark.parametrize("b,d,n,expected", MEMBERSHIP_CASES)
def test_membership_cases(b, d, n, expected):
    assert is_dth_power_in_cyclotomic(b, d, n) is expected


def dth_power_residue(b: Fraction, d: int, p: int) -> bool:
    num, den = b.numerator, b.denominator
    if num % p == 0 or den % p == 0:
        return True  # skip bad primes
    a = num * pow(den, -1, p) % p
    g = math.gcd(d, p - 1)
    return pow(a, (p - 1) // g, p) == 1


@pytest.mark.parametrize("b,d,n,expected", MEMBERSHIP_CASES)
def test_membership_against_split_prime_oracle(b, d, n, expected):
    """Membership forces d-th power residues at every completely split prime."""
    b = Fraction(b)
    n2 = n if n % 2 == 0 else 2 * n
    witnesses = 0
    for p in primerange(3, 100000):
        if (p - 1) % n2:
            continue
        ok = dth_power_residue(b, d, p)
        if expected:
            assert ok, f"member {b}^(1/{d}) fails residue test at split prime {p}"
            witnesses += 1
            if witnesses >= 200:
                break
        elif not ok:
            return  # found the expected obstruction
    if expected:
        assert witnesses > 0
    else:
        pytest.fail(f"no split prime ruled out {b} as a {d}-th power at level {n}")


# --- field specs and composition ---------------------------------------------


def test_spec_normalization_merges_duplicates():
    s = field_spec(12, [(2, 3), (2, 4)])
    assert s.generators == ((factor_rational(2), 12),)


def test_spec_rejects_bad_index():
    with pytest.raises(ValueError):
        field_spec(4, [(2, 3)])


def test_compose_examples():
    left = field_spec(3, [(2, 3)])
    right = field_spec(4, [(2, 4)])
    composed = compose_specs(left, right)
    assert composed == field_spec(12, [(2, 12)])
    assert compose_specs(left, KummerFieldSpec(1)) == left
    assert compose_specs(KummerFieldSpec(2), KummerFieldSpec(3)) == KummerFieldSpec(6)


def test_spec_json_roundtrip():
    s = field_spec(40, [(Fraction(-12, 5), 8), (2, 5)])
    assert KummerFieldSpec.from_json(s.to_json()) == s


# --- degrees -------------------------------------------------------------------


def test_degree_examples():
    assert kummer_degree(field_spec(8, [(2, 2)])) == 4
    assert kummer_degree(field_spec(4, [(2, 2)])) == 4
    assert kummer_degree(field_spec(5, [(2, 5)])) == 20
    assert kummer_degree(field_spec(20, [(5, 2)])) == 8


def test_degree_cyclotomic():
    for n in [1, 2, 7, 12, 36]:
        assert kummer_degree(KummerFieldSpec(n)) == int(totient(n))


def test_degree_known_fields():
    assert kummer_degree(field_spec(12, [(2, 12)])) == 48
    assert kummer_degree(field_spec(6, [(2, 6)])) == 12
    assert kummer_degree(field_spec(2, [(2, 2)])) == 2
    # Q(zeta_4, (-1)^(1/4)) = Q(zeta_8)
    assert kummer_degree(field_spec(4, [(-1, 4)])) == 4


def test_degree_multiplicative_for_coprime_conductor_support():
    left = field_spec(9, [(2, 9)])
    right = field_spec(8, [(2, 8)])
    assert kummer_degree(left) == 54
    assert kummer_degree(right) == 16
    assert kummer_degree(compose_specs(left, right)) == 54 * 16


def test_degree_monotone_in_level():
    gens = [(2, 2), (3, 2)]
    degrees = {}
    for n in [2, 4, 8, 24, 48]:
        degrees[n] = kummer_degree(field_spec(n, gens))
    for n, m in [(2, 4), (4, 8), (8, 24), (8, 48), (24, 48)]:
        assert degrees[m] % degrees[n] == 0


def test_degree_bounds_random_specs():
    import random

    rng = random.Random(20260810)
    pool = [2, 3, 5, 7, -2, -5, 6]
    for _ in range(25):
        k = rng.randint(1, 3)
        bases = rng.sample(pool, k)
        n = rng.choice([2, 4, 6, 8, 12, 24])
        gens = []
        for b in bases:
            m = rng.choice([d for d in [1, 2, 3, 4, 6, 8, 12, 24] if n % d == 0])
            gens.append((b, m))
        spec = field_spec(n, gens)
        deg = kummer_degree(spec)
        full = int(totient(n)) * math.prod(m for _, m in spec.generators)
        assert full % deg == 0
        assert deg * 2 ** len(spec.generators) >= full


def test_degree_cap():
    # a torsion base leaves its coordinate unconstrained, forcing a large scan
    with pytest.raises(EnumerationCapExceeded) as err:
        kummer_degree(field_spec(2**14, [(-1, 2**14), (6, 2**14)]), cap=2**12)
    assert err.value.cap == 2**12


def brute_force_degree(spec):
    """Independent slow path: enumerate all exponent tuples directly."""
    import itertools

    n = spec.n
    count = 0
    ms = [m for _, m in spec.generators]
    for tup in itertools.product(*(range(m) for m in ms)):
        prod = factor_rational(1)
        for (base, m), e in zip(spec.generators, tup):
            prod = prod * base ** (e * (n // m))
        if is_dth_power_in_cyclotomic(prod, n, n):
            count += 1
    return int(totient(n)) * math.prod(ms) // count


@pytest.mark.parametrize(
    "spec",
    [
        field_spec(18, [(-2, 9), (2, 18)]),
        field_spec(12, [(-2, 4), (3, 6)]),
        field_spec(8, [(2, 2), (-1, 8)]),
        field_spec(24, [(6, 4), (-3, 2)]),
        field_spec(9, [(-2, 9)]),
        field_spec(20, [(5, 2), (2, 4)]),
    ],
)
def test_degree_matches_brute_force(spec):
    assert kummer_degree(spec) == brute_force_degree(spec)


def test_splitting_fraction_matches_degree():
    """Fraction of primes splitting completely ~ 1/degree (4 binomial sigmas)."""
    cases = [field_spec(8, [(2, 2)]), field_spec(5, [(2, 5)]), field_spec(7, [])]
    bound = 200000
    for spec in cases:
        deg = kummer_degree(spec)
        n2 = spec.n if spec.n % 2 == 0 else 2 * spec.n
        considered = 0
        hits = 0
        for p in primerange(3, bound):
            if any(v.numerator % p == 0 or v.denominator % p == 0
                   for v, _ in spec.generators):
                continue
            considered += 1
            if (p - 1) % spec.n:
                continue
            ok = all(
                pow(b.numerator * pow(b.denominator, -1, p) % p, (p - 1) // m, p) == 1
                for b, m in spec.generators
            )
            if ok:
                hits += 1
        target = 1 / deg
        sigma = math.sqrt(target * (1 - target) / considered)
        assert abs(hits / considered - target) < 4 * sigma


# --- uniformity bound and abelian radicands -----------------------------------


def test_uniformity_examples():
    assert uniformity_bound([2]) == 8
    assert uniformity_bound([5]) == 40
    assert uniformity_bound([3]) == 24


def test_uniformity_rejects_dependent():
    with pytest.raises(ValueError):
        uniformity_bound([2, 4])


def test_maximal_abelian_radicands():
    assert maximal_abelian_radicands([Fraction(12, 5)]) == [2, 3, 5]
    assert maximal_abelian_radicands([2, 3]) == [2, 3]
    assert maximal_abelian_radicands([8]) == [2]
