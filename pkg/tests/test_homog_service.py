# tests/test_homog_service.py
import json
from dataclasses import replace
from fractions import Fraction

import pytest

from conftest import random_constants
from services import homog_service
from services.catalog_service import lookup_domain, symmetric_root_constants
from services.errors import (
    DimensionMismatchError, InvalidParameterError, NonPositiveGammaError, NonPositiveScaleError,
)
from services.homog_service import RootConstants


def _disk():
    return RootConstants(rank=1, p=(0,), q=(0,), b=(0,), gamma=(2,))


def _asymmetric():
    return RootConstants(rank=2, p=(0, 3), q=(2, 0), b=(1, 1), gamma=(5, 6))


@pytest.mark.parametrize("value, expected", [
    (0.5, Fraction(1, 2)),
    ('3/4', Fraction(3, 4)),
    (2, Fraction(2)),
    (0.1, Fraction(1, 10)),
    (Fraction(5, 7), Fraction(5, 7)),
])
def test_to_fraction(value, expected):
    assert homog_service.to_fraction(value) == expected


@pytest.mark.parametrize("value", [True, 'abc', '1/0', None])
def test_to_fraction_rejects(value):
    with pytest.raises(InvalidParameterError):
        homog_service.to_fraction(value)


def test_format_fraction_always_num_den():
    assert homog_service.format_fraction(Fraction(4, 5)) == '4/5'
    assert homog_service.format_fraction(Fraction(2)) == '2/1'


def test_root_constants_validation():
    with pytest.raises(NonPositiveGammaError):
        RootConstants(rank=1, p=(0,), q=(0,), b=(0,), gamma=(0,))
    with pytest.raises(DimensionMismatchError):
        RootConstants(rank=2, p=(0,), q=(0, 0), b=(0, 0), gamma=(1, 1))
    with pytest.raises(InvalidParameterError):
        RootConstants(rank=1, p=(-1,), q=(0,), b=(0,), gamma=(1,))
    with pytest.raises(InvalidParameterError):
        RootConstants(rank=0, p=(), q=(), b=(), gamma=())


@pytest.mark.parametrize("rank, upper, half, gamma, p, q, b", [
    (1, {}, (0,), (2,), (0,), (0,), (0,)),
    (2, {(1, 2): 2}, (2, 2), (5, 5), (0, 2), (2, 0), (1, 1)),
    (3, {(1, 2): 1, (1, 3): 1, (2, 3): 1}, (0, 0, 0), (4, 4, 4), (0, 1, 2), (2, 1, 0), (0, 0, 0)),
    (2, [[0, 2], [0, 0]], (2, 2), (5, 5), (0, 2), (2, 0), (1, 1)),
])
def test_constants_from_root_dims(rank, upper, half, gamma, p, q, b):
    c = homog_service.constants_from_root_dims(rank, upper, half, gamma)
    assert (c.p, c.q, c.b, c.gamma) == (p, q, b, gamma)


def test_constants_from_root_dims_matches_symmetric_constants():
    c = homog_service.constants_from_root_dims(2, {(1, 2): 2}, (2, 2), (5, 5))
    assert c == symmetric_root_constants(lookup_domain('I', (2, 3)))


def test_constants_from_root_dims_rejects_bad_input():
    with pytest.raises(DimensionMismatchError):
        homog_service.constants_from_root_dims(2, {(2, 1): 1}, (0, 0), (1, 1))
    with pytest.raises(DimensionMismatchError):
        homog_service.constants_from_root_dims(2, {}, (0,), (1, 1))
    with pytest.raises(NonPositiveGammaError):
        homog_service.constants_from_root_dims(1, {}, (0,), (-1,))
    with pytest.raises(InvalidParameterError):
        homog_service.constants_from_root_dims(2, {(1, 2): 1.5}, (0, 0), (1, 1))


@pytest.mark.parametrize("constants, expected", [
    (symmetric_root_constants(lookup_domain('I', (2, 3))), Fraction(4, 5)),
    (_disk(), Fraction(1, 2)),
    (_asymmetric(), Fraction(5, 6)),
])
def test_entropy_homogeneous_examples(constants, expected):
    assert homog_service.entropy_homogeneous(constants) == expected
    assert homog_service.balanced_threshold(constants) == expected


def test_argmax_index_prefers_largest_k_on_ties():
    c = RootConstants(rank=3, p=(0, 0, 0), q=(0, 0, 0), b=(0, 0, 0), gamma=(2, 2, 4))
    assert homog_service.argmax_index(c) == 2
    assert homog_service.argmax_index(_asymmetric()) == 2


def test_threshold_equals_entropy_on_random_constants(rng):
    for _ in range(1000):
        c = random_constants(rng)
        ent = homog_service.entropy_homogeneous(c)
        assert homog_service.balanced_threshold(c) == ent
        assert homog_service.minimal_balanced_scale(c) == ent
        assert homog_service.is_balanced_homogeneous(c, ent) == (False, ent)
        assert homog_service.is_balanced_homogeneous(c, ent + Fraction(1, 1000))[0] is True
        assert homog_service.entropy_scaled(ent, ent) == 1


def _bumped(c, name, k, delta):
    values = list(getattr(c, name))
    values[k] += delta
    return replace(c, **{name: tuple(values)})


def test_entropy_is_monotone_in_each_constant(rng):
    for _ in range(500):
        c = random_constants(rng)
        ent = homog_service.entropy_homogeneous(c)
        k = rng.randrange(c.rank)
        delta = Fraction(rng.randint(1, 6), 2)
        for name in ('p', 'q', 'b'):
            assert homog_service.entropy_homogeneous(_bumped(c, name, k, delta)) >= ent
        assert homog_service.entropy_homogeneous(_bumped(c, 'gamma', k, delta)) <= ent


def test_is_balanced_homogeneous_strict_inequality_on_disk():
    assert homog_service.is_balanced_homogeneous(_disk(), 0.6)[0] is True
    assert homog_service.is_balanced_homogeneous(_disk(), 0.5)[0] is False
    with pytest.raises(NonPositiveScaleError):
        homog_service.is_balanced_homogeneous(_disk(), 0)


@pytest.mark.parametrize("constants, gamma, entropy", [
    (_disk(), (2,), Fraction(1, 2)),
    (symmetric_root_constants(lookup_domain('I', (2, 3))), (5, 5), Fraction(4, 5)),
    (RootConstants(rank=2, p=(0, 3), q=(2, 0), b=(1, 1), gamma=(1, 1)), (5, 6), Fraction(5, 6)),
])
def test_bergman_gamma(constants, gamma, entropy):
    assert homog_service.bergman_gamma(constants).gamma == gamma
    assert homog_service.entropy_bergman(constants) == entropy


def test_bergman_entropy_of_symmetric_constants_is_independent_of_gamma():
    for n in range(3, 8):
        d = lookup_domain('IV', (n,))
        c = homog_service.scale_constants(symmetric_root_constants(d), Fraction(1, 3))
        assert homog_service.entropy_bergman(c) == Fraction(d.genus - 1, d.genus)


def test_scaling_law(rng):
    for _ in range(200):
        c = random_constants(rng)
        mu = Fraction(rng.randint(1, 9), rng.randint(1, 9))
        scaled = homog_service.scale_constants(c, mu)
        assert homog_service.entropy_homogeneous(scaled) == \
            homog_service.entropy_scaled(homog_service.entropy_homogeneous(c), mu)


@pytest.mark.parametrize("ent, lam, expected", [
    (Fraction(1, 2), 2, Fraction(1, 4)),
    (Fraction(3, 7), 1, Fraction(3, 7)),
    (Fraction(4, 5), Fraction(4, 5), Fraction(1)),
])
def test_entropy_scaled(ent, lam, expected):
    assert homog_service.entropy_scaled(ent, lam) == expected


def test_entropy_scaled_rejects_nonpositive():
    with pytest.raises(NonPositiveScaleError):
        homog_service.entropy_scaled(Fraction(1, 2), 0)
    with pytest.raises(InvalidParameterError):
        homog_service.entropy_scaled(0, 1)
    with pytest.raises(NonPositiveScaleError):
        homog_service.scale_constants(_disk(), -1)


def test_json_file_round_trip(tmp_path):
    c = _asymmetric()
    path = tmp_path / "constants.json"
    path.write_text(json.dumps(c.to_json()))
    assert c.to_json()['gamma'] == ['5/1', '6/1']
    assert homog_service.load_constants(str(path)) == c


def test_load_constants_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(InvalidParameterError):
        homog_service.load_constants(str(broken))
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({'rank': 1, 'p': ['0/1'], 'q': ['0/1'], 'b': ['0/1']}))
    with pytest.raises(InvalidParameterError):
        homog_service.load_constants(str(missing))
    with pytest.raises(InvalidParameterError):
        homog_service.load_constants(str(tmp_path / "absent.json"))
