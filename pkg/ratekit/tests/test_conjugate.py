import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratekit.conjugate import (
    CONVERGED, DIVERGED, GridTransform1D, RateOptions, llt_1d, rate_eval,
    rate_eval_batch, rate_eval_oracle, rate_infimum, restricted_conjugate,
    restriction_identity_check)
from ratekit.convgeo import Hyperplane, Polyhedron
from ratekit.distmodel import load_fixture
from ratekit.laws import ExpPolyTail
from ratekit.utils import INF, GeometryError
from ratekit.verify import philox


def bernoulli_rate(p):
    return sum(x * math.log(2 * x) for x in (p, 1 - p) if x > 0)


def exp_rate(v):
    return v - 1 - math.log(v)


@pytest.mark.parametrize('p', [0.1, 0.5, 0.7, 0.93])
def test_bernoulli(p):
    result = rate_eval(load_fixture('bernoulli'), (p,))
    assert result.value == pytest.approx(bernoulli_rate(p), abs=1e-9)
    assert result.status == CONVERGED


def test_bernoulli_boundary():
    spec = load_fixture('bernoulli')
    assert rate_eval(spec, (0,)).value == pytest.approx(math.log(2))
    assert rate_eval(spec, (1,)).maximizer is None
    outside = rate_eval(spec, (F(-1, 10),))
    assert outside.value == INF
    assert outside.status == DIVERGED
    assert outside.certificate == (-1,)


@pytest.mark.parametrize('v', [0.5, 1.0, 2.0, 5.0])
def test_exponential(v):
    result = rate_eval(load_fixture('exp1d'), (v,))
    assert result.value == pytest.approx(exp_rate(v), rel=1e-7, abs=1e-10)


def test_exponential_zero_mass_facet():
    spec = load_fixture('exp1d')
    assert rate_eval(spec, (0,)).value == INF
    assert not rate_eval(spec, (F(-1, 2),)).is_finite
    assert rate_eval(spec, (1,)).is_finite
    assert rate_eval(spec, (-1,)).value == INF


def test_square():
    square = load_fixture('square')
    v = (0.3, 0.6)
    assert rate_eval(square, v).value == pytest.approx(
        bernoulli_rate(0.3) + bernoulli_rate(0.6), abs=1e-9)
    vertex = rate_eval(square, (1, 1))
    assert vertex.value == pytest.approx(math.log(4))
    assert len(vertex.route) == 2
    edge = rate_eval(square, (F(1, 2), 0))
    assert edge.value == pytest.approx(math.log(2))
    assert edge.route == (Hyperplane((0, 1), 0),)
    assert rate_eval(square, (F(3, 2), F(1, 2))).value == INF


def test_two_exp_axes():
    spec = load_fixture('two-exp')
    assert rate_eval(spec, (0, 1)).value == INF
    assert rate_eval(spec, (1, 1)).value == pytest.approx(0, abs=1e-10)
    assert rate_eval(spec, (2, 3)).value == pytest.approx(
        exp_rate(2) + exp_rate(3), rel=1e-7)


def test_counterexample_ordinate():
    ex_nts = load_fixture('ex-nts')
    k3 = ExpPolyTail(F(2), F(3))
    g = k3.dk(1.0)
    for step in [1, 2, 5]:
        v2 = g + step
        result = rate_eval(ex_nts, (0, v2))
        assert result.value == pytest.approx(
            v2 - k3.k(1.0) + math.log(2), rel=1e-6)
        assert result.maximizer is None
        assert result.route == (Hyperplane((1, 0), 0),)


def test_restricted_conjugate():
    square = load_fixture('square')
    value = restricted_conjugate(square, Hyperplane((1, 0), 0), (0, 0.25)).value
    assert value == pytest.approx(bernoulli_rate(0.25) + math.log(2), abs=1e-9)
    with pytest.raises(GeometryError):
        restricted_conjugate(load_fixture('ex-nts'), Hyperplane((0, 1), 0),
                             (1, 0))


def test_dimension_mismatch():
    with pytest.raises(GeometryError):
        rate_eval(load_fixture('square'), (0.5,))


def test_options():
    opts = RateOptions(max_iter=1)
    result = rate_eval(load_fixture('exp1d'), (5,), opts)
    assert result.status in (CONVERGED, 'hit_iteration_cap')
    assert rate_eval(load_fixture('exp1d'), (5,), {'tol': 1e-10}).value == \
        pytest.approx(exp_rate(5), rel=1e-8)


def test_batch_matches_sequential():
    square = load_fixture('square')
    points = [(0.2, 0.4), (0.9, 0.1), (1, F(1, 3)), (0, 0)]
    batch = rate_eval_batch(square, points)
    assert [r.value for r in batch] == [rate_eval(square, v).value for v in points]


def test_result_json():
    data = rate_eval(load_fixture('exp1d'), (2,)).to_json()
    assert data['status'] == CONVERGED
    assert data['maximizer'][0] == pytest.approx(0.5, abs=1e-6)
    data = rate_eval(load_fixture('exp1d'), (-1,)).to_json()
    assert data['value'] == INF
    assert data['certificate'] == ['-1']


def test_rate_infimum():
    exp1d = load_fixture('exp1d')
    tail = Polyhedron([(2,)], [(1,)])
    assert rate_infimum(exp1d, tail) == pytest.approx(1 - math.log(2), abs=1e-6)
    bernoulli = load_fixture('bernoulli')
    upper = Polyhedron([(F(7, 10),), (1,)])
    assert rate_infimum(bernoulli, upper) == pytest.approx(
        bernoulli_rate(0.7), abs=1e-6)
    # a region holding the mean costs nothing
    assert rate_infimum(bernoulli, Polyhedron([(0,), (1,)])) == pytest.approx(
        0, abs=1e-9)


def test_rate_infimum_square():
    square = load_fixture('square')
    region = Polyhedron([(F(4, 5), F(4, 5)), (1, F(4, 5)), (F(4, 5), 1), (1, 1)])
    assert rate_infimum(square, region) == pytest.approx(
        2 * bernoulli_rate(0.8), abs=1e-6)


@pytest.mark.parametrize('name, v, expected', [
    ('square', (0.3, 0.6), bernoulli_rate(0.3) + bernoulli_rate(0.6)),
    ('bernoulli', (0.7,), bernoulli_rate(0.7)),
    ('exp1d', (2.0,), exp_rate(2.0)),
])
def test_oracle(name, v, expected):
    estimate = rate_eval_oracle(load_fixture(name), v)
    assert estimate.value <= expected + 1e-9
    assert estimate.value == pytest.approx(expected, abs=1e-4)


def test_oracle_outside():
    assert rate_eval_oracle(load_fixture('exp1d'), (-1.0,)).value == INF


@pytest.mark.slow
def test_oracle_counterexample():
    ex_nts = load_fixture('ex-nts')
    v = (0.5, 0.5)
    estimate = rate_eval_oracle(ex_nts, v)
    assert estimate.value == pytest.approx(rate_eval(ex_nts, v).value, abs=1e-4)


def test_llt_exponential():
    spec = load_fixture('exp1d')
    v = np.linspace(0.5, 5, 46)
    g = llt_1d(GridTransform1D.from_spec(spec, -20, 0.99, 2001, v))
    assert g.i == pytest.approx([exp_rate(x) for x in v], abs=1e-3)


def test_llt_lower_bound():
    u = np.linspace(-3, 3, 61)
    g = llt_1d(GridTransform1D(u, u ** 2 / 2, np.array([-1.0, 0.0, 2.5])))
    assert g.i == pytest.approx([0.5, 0.0, 3.125], abs=1e-12)
    assert np.all(g.i <= np.array([0.5, 0.0, 3.125]) + 1e-12)


def test_llt_errors():
    with pytest.raises(ValueError):
        llt_1d(GridTransform1D(np.array([0.0]), np.array([0.0])))
    with pytest.raises(ValueError):
        llt_1d(GridTransform1D(np.array([0.0, 1.0]), np.array([0.0, INF])))
    with pytest.raises(ValueError):
        llt_1d(GridTransform1D(np.array([1.0, 0.0]), np.array([0.0, 0.0])))
    with pytest.raises(GeometryError):
        GridTransform1D.from_spec(load_fixture('square'), -1, 1, 11)


def test_identity_holds_on_square():
    square = load_fixture('square')
    points = [(0, F(k, 10)) for k in range(1, 10)]
    report = restriction_identity_check(square, Hyperplane((1, 0), 0), points)
    assert report.holds
    assert report.max_gap < 1e-6


def test_identity_fails_off_the_projection():
    ex_nts = load_fixture('ex-nts')
    report = restriction_identity_check(ex_nts, Hyperplane((1, 0), 0), [(0, 3)])
    assert not report.holds
    [point] = report.points
    assert point.right - point.left >= 2
    v, left, right, holds = point
    assert v == (0, 3) and not holds and right == point.right


def test_identity_input_errors():
    square = load_fixture('square')
    with pytest.raises(GeometryError):
        restriction_identity_check(square, Hyperplane((1, 0), 0), [(1, 0)])
    with pytest.raises(GeometryError):
        restriction_identity_check(square, Hyperplane((1, 0), F(1, 2)),
                                   [(F(1, 2), 0)])


@pytest.mark.parametrize('v', [(F(3, 10), F(3, 5)), (1, F(1, 4)), (0, 0)])
def test_translation_invariance(v):
    square = load_fixture('square')
    mu = (F(5, 2), -1)
    moved = square.translate(mu)
    shifted = tuple(x + m for x, m in zip(v, mu))
    assert rate_eval(moved, shifted).value == pytest.approx(
        rate_eval(square, v).value, abs=1e-9)


def test_cube():
    cube = load_fixture('cube')
    v = (0.3, 0.6, 0.5)
    assert rate_eval(cube, v).value == pytest.approx(
        bernoulli_rate(0.3) + bernoulli_rate(0.6), abs=1e-9)
    corner = rate_eval(cube, (1, 1, 1))
    assert corner.value == pytest.approx(math.log(8))
    assert len(corner.route) == 3
    edge = rate_eval(cube, (F(1, 2), 0, 1))
    assert edge.value == pytest.approx(2 * math.log(2))
    assert edge.route == (Hyperplane((0, 0, 1), 1), Hyperplane((0, 1, 0), 0))
    assert rate_eval(cube, (F(1, 2), F(1, 2), F(3, 2))).value == INF


@pytest.mark.parametrize('name', ['square', 'bernoulli', 'exp1d', 'two-exp',
                                  'ex-nts', 'edge-atoms', 'cube',
                                  'exp-gauss-3d'])
def test_zero_at_the_mean(name):
    spec = load_fixture(name)
    assert rate_eval(spec, spec.mean()).value == pytest.approx(0, abs=1e-7)


inner = st.fractions(min_value=F(1, 20), max_value=F(19, 20), max_denominator=40)


@settings(max_examples=15, deadline=None)
@given(st.tuples(inner, inner), st.tuples(inner, inner))
def test_rate_is_nonnegative_and_convex(a, b):
    for name, stretch in [('square', 1), ('two-exp', 3), ('edge-atoms', 2)]:
        spec = load_fixture(name)
        va = tuple(stretch * x for x in a)
        vb = tuple(stretch * x for x in b)
        mid = tuple((x + y) / 2 for x, y in zip(va, vb))
        ia, ib, im = (rate_eval(spec, v).value for v in (va, vb, mid))
        assert min(ia, ib, im) >= -1e-10, name
        assert im <= (ia + ib) / 2 + 1e-7, name


ORACLE_RANGES = {'square': (0.05, 0.95), 'bernoulli': (0.05, 0.95),
                 'exp1d': (0.5, 4.0), 'two-exp': (0.5, 4.0)}


@pytest.mark.slow
@pytest.mark.parametrize('name', sorted(ORACLE_RANGES))
def test_oracle_at_random_points(name):
    spec = load_fixture(name)
    lo, hi = ORACLE_RANGES[name]
    for v in philox(42, 7).uniform(lo, hi, size=(50, spec.dimension)):
        v = tuple(v)
        value = rate_eval(spec, v).value
        estimate = rate_eval_oracle(spec, v).value
        assert estimate <= value + 1e-7 * (1 + abs(value)), v
        assert abs(value - estimate) <= 1e-4 * (1 + abs(value)), v
