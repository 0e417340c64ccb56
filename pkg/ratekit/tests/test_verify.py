import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from ratekit.convgeo import Polyhedron
from ratekit.distmodel import load_fixture
from ratekit.laws import ExpPolyTail
from ratekit.utils import INF, DomainError
from ratekit.verify import (
    cramer_mc_bound, gradient_fd_check, philox, prop11_check,
    strictness_probe)


@pytest.fixture
def serial(monkeypatch):
    monkeypatch.setenv('RATEKIT_THREADS', '1')


def test_philox_streams():
    a = philox(42, 0).random(5)
    assert (a == philox(42, 0).random(5)).all()
    assert not (a == philox(42, 1).random(5)).all()


def test_probe_finds_affine_run():
    g = ExpPolyTail(F(2), F(3)).dk(1.0)
    report = strictness_probe(load_fixture('ex-nts'), [(0, g + 1), (0, g + 3)])
    assert report.verdict == 'affine_witness'
    assert report.max_deviation < 1e-6
    assert report.witness is not None
    assert all(v < INF for v in report.values)


def test_probe_strict_on_square():
    report = strictness_probe(load_fixture('square'),
                              [(F(1, 5), F(3, 10)), (F(4, 5), F(7, 10))])
    assert report.verdict == 'strict'
    assert report.witness is None
    assert report.max_deviation > 1e-4
    assert 0 < report.min_gap < report.max_deviation


coordinate = st.fractions(min_value=F(1, 20), max_value=F(19, 20),
                          max_denominator=100)


@settings(max_examples=20, deadline=None)
@given(coordinate, coordinate, coordinate, coordinate)
def test_square_segments_are_strict(x1, y1, x2, y2):
    if (x1 - x2) ** 2 + (y1 - y2) ** 2 < F(1, 100):
        return
    report = strictness_probe(load_fixture('square'), [(x1, y1), (x2, y2)])
    assert report.verdict == 'strict'


def test_probe_errors():
    square = load_fixture('square')
    with pytest.raises(DomainError):
        strictness_probe(square, [(0, 0), (0, 0)])
    with pytest.raises(DomainError):
        strictness_probe(square, [(0, 0), (1, 1)], n_points=5)
    with pytest.raises(DomainError) as e:
        strictness_probe(square, [(F(1, 2), F(1, 2)), (F(3, 2), F(1, 2))])
    assert 'leaves D(I_X)' in str(e.value)
    with pytest.raises(DomainError):
        strictness_probe(load_fixture('ex-nts'), [(1, 1), (-1, 1)])


def test_prop11_square():
    report = prop11_check(load_fixture('square'), n_samples=20, seed=3)
    assert report.passed
    assert len(report.interior) == 20
    assert len(report.outside) == 20
    assert report.zero_mass == []
    assert report.to_json()['failures'] == []


def test_prop11_cube():
    report = prop11_check(load_fixture('cube'), n_samples=10, seed=5)
    assert report.passed
    assert len(report.outside) == 10


def test_prop11_zero_mass_facets():
    report = prop11_check(load_fixture('two-exp'), n_samples=10)
    assert report.passed
    assert len(report.zero_mass) == 10
    assert all(value == INF for _, value in report.zero_mass)


@pytest.mark.slow
def test_prop11_counterexample():
    assert prop11_check(load_fixture('ex-nts'), n_samples=50).passed


def test_cramer_bernoulli(serial):
    spec = load_fixture('bernoulli')
    region = Polyhedron([(F(7, 10),), (1,)])
    report = cramer_mc_bound(spec, region, n=50, trials=20000, seed=42)
    assert report.hits > 0
    assert report.holds
    assert report.bound == pytest.approx(-(0.7 * math.log(1.4) +
                                           0.3 * math.log(0.6)), abs=1e-6)
    again = cramer_mc_bound(spec, region, n=50, trials=20000, seed=42)
    assert again.hits == report.hits


def test_cramer_square(serial):
    region = Polyhedron([(F(7, 10), 0), (1, 0), (F(7, 10), 1), (1, 1)])
    report = cramer_mc_bound(load_fixture('square'), region, n=20,
                             trials=20000, seed=1)
    assert report.holds and not report.vacuous


def test_cramer_vacuous(serial):
    region = Polyhedron([(2,), (3,)])
    report = cramer_mc_bound(load_fixture('bernoulli'), region, n=10,
                             trials=1000, seed=0)
    assert report.vacuous and report.holds
    assert report.log_probability == -INF
    assert report.slack == INF


def test_cramer_acceptance_rates(serial):
    region = Polyhedron([(0, 0)], [(1, 0), (0, 1)])
    report = cramer_mc_bound(load_fixture('ex-nts'), region, n=5,
                             trials=2000, seed=7)
    assert report.hits == 2000
    assert report.log_probability == 0
    assert report.holds
    [rate] = report.acceptance_rates.values()
    assert 0.5 < rate < 1


@pytest.mark.parametrize('name, limit', [
    ('square', 1e-7), ('bernoulli', 1e-7), ('two-exp', 1e-5),
    ('edge-atoms', 1e-5), ('ex-nts', 1e-3), ('exp-poly-23', 1e-3),
    ('cube', 1e-7), ('exp-gauss-3d', 1e-5),
])
def test_gradient_fd(name, limit):
    assert gradient_fd_check(load_fixture(name), n_points=10) < limit


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(10))
def test_cramer_bound_over_seeds(serial, seed):
    bernoulli = cramer_mc_bound(load_fixture('bernoulli'),
                                Polyhedron([(F(7, 10),), (1,)]),
                                n=50, trials=100000, seed=seed)
    assert bernoulli.holds and not bernoulli.vacuous
    tail = cramer_mc_bound(load_fixture('exp1d'), Polyhedron([(2,)], [(1,)]),
                           n=40, trials=100000, seed=seed)
    assert tail.holds


def _random_segments(dimension, count, seed):
    rng = philox(seed)
    segments = []
    while len(segments) < count:
        a, b = (tuple(F(int(x * 1000), 1000) for x in
                      rng.uniform(0.05, 0.95, size=dimension))
                for _ in range(2))
        if sum((x - y) ** 2 for x, y in zip(a, b)) >= F(1, 100):
            segments.append((a, b))
    return segments


@pytest.mark.slow
@pytest.mark.parametrize('name', ['square', 'bernoulli'])
def test_random_segments_are_strict(name):
    spec = load_fixture(name)
    for segment in _random_segments(spec.dimension, 100, seed=11):
        report = strictness_probe(spec, segment)
        assert report.verdict == 'strict', segment
