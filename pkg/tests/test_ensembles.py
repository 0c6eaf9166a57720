"""Input laws, orthonormal ensembles (exact Gram-Schmidt with truncation),
multilinear polynomials, Gaussian substitution, and influence peeling."""

import random
from fractions import Fraction

import pytest

from chaoscalc import (
    ChaosPoly,
    InputLaw,
    MultilinearPoly,
    ParseError,
    PreconditionError,
    build_ensemble,
    gaussian,
    hermite_monomial,
    inner_product,
    substitute_gaussian,
    truncate_by_influence,
)

from _oracles import gaussian_raw_moment

THREE_POINT = InputLaw.discrete(
    points=[Fraction(-1), Fraction(0), Fraction(2)],
    probabilities=[Fraction(1, 3), Fraction(1, 2), Fraction(1, 6)],
)


def test_law_moments_are_exact():
    gauss = InputLaw.gaussian()
    for k in range(9):
        assert gauss.moment(k) == gaussian_raw_moment(k)
    rad = InputLaw.rademacher()
    assert [rad.moment(k) for k in range(5)] == [1, 0, 1, 0, 1]
    uni = InputLaw.uniform()
    assert uni.moment(2) == 1
    assert uni.moment(4) == Fraction(9, 5)  # 3**2 / 5
    assert uni.moment(6) == Fraction(27, 7)
    assert THREE_POINT.moment(1) == 0 and THREE_POINT.moment(2) == 1


def test_discrete_law_validation():
    with pytest.raises(PreconditionError, match="centered"):
        InputLaw.discrete([0, 1], [Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(PreconditionError, match="unit variance"):
        InputLaw.discrete([-2, 2], [Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(PreconditionError, match="sum to 1"):
        InputLaw.discrete([-1, 1], [Fraction(1, 2), Fraction(1, 3)])


def test_rademacher_ensemble_truncates_at_degree_one():
    ensemble = build_ensemble(InputLaw.rademacher(), 3)
    assert ensemble.effective_degree == 1
    assert ensemble.polys[1].coeffs == (Fraction(0), Fraction(1))
    assert ensemble.polys[1].norm_sq == 1


def test_gaussian_ensemble_degree_two():
    ensemble = build_ensemble(InputLaw.gaussian(), 2)
    assert ensemble.effective_degree == 2
    assert ensemble.polys[2].coeffs == (Fraction(-1), Fraction(0), Fraction(1))
    assert ensemble.polys[2].norm_sq == 2  # T2 = (x**2 - 1)/sqrt(2)


def test_level_one_is_the_coordinate_for_every_law():
    for law in (InputLaw.gaussian(), InputLaw.rademacher(), InputLaw.uniform(), THREE_POINT):
        ensemble = build_ensemble(law, 1)
        assert ensemble.polys[1].coeffs == (Fraction(0), Fraction(1))
        assert ensemble.polys[1].norm_sq == 1


def test_ensemble_orthonormality_is_exact():
    for law, degree in ((InputLaw.gaussian(), 4), (THREE_POINT, 2), (InputLaw.uniform(), 4)):
        ensemble = build_ensemble(law, degree)
        for j in range(ensemble.effective_degree + 1):
            for k in range(ensemble.effective_degree + 1):
                assert ensemble.pairing(j, k) == (1 if j == k else 0)


def test_ensemble_rejects_uncentered_laws():
    shifted = InputLaw("discrete", points=(Fraction(1),), probabilities=(Fraction(1),))
    with pytest.raises(PreconditionError):
        build_ensemble(shifted, 2)


def test_multilinear_validation():
    law = InputLaw.rademacher()
    with pytest.raises(PreconditionError, match="repeats"):
        MultilinearPoly(InputLaw.gaussian(), {frozenset({(1, 1), (1, 2)}): 1})
    with pytest.raises(PreconditionError, match="levels"):
        MultilinearPoly(law, {frozenset({(1, 0)}): 1})
    with pytest.raises(PreconditionError, match="level 2"):
        MultilinearPoly(law, {frozenset({(1, 2)}): 1})
    # a gaussian law admits level 2
    MultilinearPoly(InputLaw.gaussian(), {frozenset({(1, 2)}): 1})


def test_multilinear_variance_and_repeated_var_merge():
    law = InputLaw.rademacher()
    p = MultilinearPoly(
        law,
        {
            frozenset(): Fraction(3),
            frozenset({(1, 1)}): Fraction(1, 2),
            frozenset({(1, 1), (2, 1)}): Fraction(1, 3),
        },
    )
    assert p.variance() == Fraction(1, 4) + Fraction(1, 9)
    assert p.second_moment() == 9 + Fraction(1, 4) + Fraction(1, 9)


def test_substitute_gaussian_examples():
    law = InputLaw.rademacher()
    p = MultilinearPoly(law, {frozenset({(1, 1)}): 1})
    assert substitute_gaussian(p) == gaussian(1)
    p = MultilinearPoly(law, {frozenset({(1, 1), (2, 1)}): 1})
    assert substitute_gaussian(p) == gaussian(1) * gaussian(2)


def test_substitute_gaussian_is_an_exact_isometry_on_level_one():
    rng = random.Random(3)
    law = InputLaw.rademacher()
    for _ in range(60):
        terms = {}
        for _ in range(rng.randint(1, 6)):
            size = rng.randint(0, 3)
            factors = frozenset((v, 1) for v in rng.sample(range(1, 7), size))
            coeff = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
            if coeff:
                terms[factors] = terms.get(factors, Fraction(0)) + coeff
        p = MultilinearPoly(law, terms)
        image = substitute_gaussian(p)
        assert inner_product(image, image) == p.second_moment()


def test_substitute_gaussian_higher_levels_are_near_isometric():
    # 1/sqrt(k!) normalizations are irrational for k >= 2, so the image is
    # exact only up to the dyadic representation of those constants
    rng = random.Random(5)
    law = InputLaw.gaussian()
    for _ in range(20):
        terms = {}
        for _ in range(rng.randint(1, 5)):
            size = rng.randint(1, 3)
            factors = frozenset((v, rng.randint(1, 3)) for v in rng.sample(range(1, 6), size))
            coeff = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
            if coeff:
                terms[factors] = terms.get(factors, Fraction(0)) + coeff
        if not terms:
            continue
        p = MultilinearPoly(law, terms)
        image = substitute_gaussian(p)
        lhs = float(inner_product(image, image))
        rhs = float(p.second_moment())
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)


def test_substitute_gaussian_level_cap():
    p = MultilinearPoly(InputLaw.gaussian(), {frozenset({(1, 3)}): 1})
    with pytest.raises(PreconditionError, match="cap"):
        substitute_gaussian(p, max_level=2)


def test_truncate_zero_count():
    law = InputLaw.rademacher()
    p = MultilinearPoly(law, {frozenset({(1, 1)}): 1})
    result = truncate_by_influence(p, 0)
    assert result.retained == () and result.remainder == p


def test_truncate_worked_example():
    law = InputLaw.rademacher()
    p = MultilinearPoly(law, {frozenset({(1, 1), (2, 1)}): 1, frozenset({(2, 1), (3, 1)}): 1})
    result = truncate_by_influence(p, 1)
    assert len(result.retained) == 1
    var, part = result.retained[0]
    assert var == 2
    assert part == MultilinearPoly(law, {frozenset({(1, 1)}): 1, frozenset({(3, 1)}): 1})
    assert result.remainder.terms == {}
    assert result.reconstruct() == p


def test_truncate_remainder_influence_bound():
    law = InputLaw.rademacher()
    n = 32
    p = MultilinearPoly(law, {frozenset({(k, 1)}): 1 for k in range(1, n + 1)})
    previous = None
    for count in (1, 2, 4, 8, 16, 32):
        result = truncate_by_influence(p, count)
        assert result.remainder_max_influence <= Fraction(1, count)
        assert result.remainder_max_influence == (Fraction(1, n) if count < n else 0)
        if previous is not None:
            assert result.remainder_max_influence <= previous
        previous = result.remainder_max_influence
        assert result.reconstruct() == p


def test_truncate_reconstructs_random_inputs():
    rng = random.Random(7)
    law = InputLaw.rademacher()
    for _ in range(25):
        terms = {}
        for _ in range(rng.randint(1, 8)):
            size = rng.randint(0, 3)
            factors = frozenset((v, 1) for v in rng.sample(range(1, 8), size))
            coeff = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
            if coeff:
                terms[factors] = terms.get(factors, Fraction(0)) + coeff
        p = MultilinearPoly(law, terms)
        if p.variance() == 0:
            continue
        count = rng.randint(0, 4)
        result = truncate_by_influence(p, count)
        assert result.reconstruct() == p


def test_truncate_rejects_mixed_levels():
    law = InputLaw.gaussian()
    p = MultilinearPoly(law, {frozenset({(1, 1)}): 1, frozenset({(1, 2)}): 1})
    with pytest.raises(PreconditionError, match="several ensemble levels"):
        truncate_by_influence(p, 1)


def test_multilinear_json_round_trip():
    p = MultilinearPoly(
        InputLaw.gaussian(),
        {frozenset({(1, 2), (3, 1)}): Fraction(1, 3), frozenset(): 2},
    )
    assert MultilinearPoly.from_json(p.to_json()) == p
    # bare variable ids default to level 1
    text = '{"law":{"kind":"rademacher"},"terms":[{"coeff":"1","vars":[1,2]}]}'
    parsed = MultilinearPoly.from_json(text)
    assert parsed == MultilinearPoly(
        InputLaw.rademacher(), {frozenset({(1, 1), (2, 1)}): 1}
    )
    with pytest.raises(ParseError, match="zero coefficient"):
        MultilinearPoly.from_json(
            '{"law":{"kind":"rademacher"},"terms":[{"coeff":"0","vars":[1]}]}'
        )


def test_discrete_law_json_round_trip():
    law = THREE_POINT
    assert InputLaw.from_json_dict(law.to_json_dict()) == law
