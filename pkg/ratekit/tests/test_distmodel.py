import json
from fractions import Fraction as F

import numpy as np
import pytest

from ratekit.convgeo import (
    Hyperplane, Polyhedron, convex_support, positive_mass_faces)
from ratekit.distmodel import (
    Component, DistributionSpec, atom_mass_at, condition_on_face,
    load_fixture, mass_in_hyperplane, supporting_orientation, validate)
from ratekit.laws import Atom, ExpPolyTail
from ratekit.utils import GeometryError, SpecError


FIXTURES = ['bernoulli', 'square', 'ex-nts', 'two-exp', 'exp1d',
            'exp-poly-23', 'two-exp-atom', 'edge-atoms', 'cube',
            'exp-gauss-3d']


@pytest.mark.parametrize('name', FIXTURES)
def test_fixtures_valid(name):
    spec = validate(load_fixture(name))
    assert sum(c.weight for c in spec.components) == 1
    assert DistributionSpec.loads(spec.dumps()) == spec


def test_weights_must_sum_to_one():
    with pytest.raises(SpecError) as e:
        DistributionSpec.loads(json.dumps({'dimension': 1, 'components': [
            {'weight': '1/2', 'laws': [{'kind': 'atom', 'a': '0'}]},
            {'weight': '1/3', 'laws': [{'kind': 'atom', 'a': '1'}]}]}))
    assert 'weights sum to 5/6' in str(e.value)


@pytest.mark.parametrize('data', [
    '{"dimension": 4, "components": []}',
    '{"dimension": 1}',
    '{"dimension": 1, "components": [{"weight": "1", "laws": []}]}',
    '{"dimension": 1, "components": [{"weight": "0.5", "laws": '
    '[{"kind": "atom", "a": "0"}]}]}',
    '{"dimension": 1, "components": [{"weight": "1", "laws": '
    '[{"kind": "uniform", "a": "1", "b": "0"}]}]}',
    'not json',
])
def test_invalid_specs(data):
    with pytest.raises(SpecError):
        DistributionSpec.loads(data)


def test_load_missing_file(tmpdir):
    with pytest.raises(SpecError):
        DistributionSpec.load(str(tmpdir.join('nowhere.json')))


def test_load_falls_back_to_fixture():
    assert DistributionSpec.load('fixtures/square.json') == load_fixture('square')


def test_mass_in_hyperplane():
    square = load_fixture('square')
    assert mass_in_hyperplane(square, Hyperplane((1, 0), 0)) == F(1, 2)
    assert mass_in_hyperplane(square, Hyperplane((1, 1), 1)) == F(1, 2)
    assert mass_in_hyperplane(square, Hyperplane((1, 1), 2)) == F(1, 4)
    ex_nts = load_fixture('ex-nts')
    assert mass_in_hyperplane(ex_nts, Hyperplane((1, 0), 0)) == F(1, 2)
    assert mass_in_hyperplane(ex_nts, Hyperplane((0, 1), 0)) == 0


def test_condition_on_ordinate_axis():
    ex_nts = load_fixture('ex-nts')
    conditional = ex_nts.condition_on_hyperplane(Hyperplane((1, 0), 0))
    assert conditional == DistributionSpec(2, (
        Component(F(1), (0, 0), (Atom(F(0)), ExpPolyTail(F(2), F(3)))),))
    with pytest.raises(GeometryError):
        ex_nts.condition_on_hyperplane(Hyperplane((0, 1), 0))


def test_condition_on_face():
    square = load_fixture('square')
    face = next(f for f in positive_mass_faces(square)
                if f.hyperplane == Hyperplane((0, 1), 1))
    top = condition_on_face(square, face)
    assert [c.atom_point() for c in top.components] == [(0, 1), (1, 1)]
    assert [c.weight for c in top.components] == [F(1, 2), F(1, 2)]


def test_condition_on_face_chains():
    cube = load_fixture('cube')
    for first in positive_mass_faces(cube):
        once = condition_on_face(cube, first)
        assert condition_on_face(once, first) == once
        assert convex_support(once).same_set(first.geometry)
        edges = positive_mass_faces(once)
        assert len(edges) == 4
        for second in edges:
            twice = condition_on_face(once, second)
            assert len(twice.components) == 2
            assert condition_on_face(twice, first) == twice
            assert condition_on_face(twice, second) == twice
            # conditioning along a chain does not depend on its order
            assert cube.condition_on_hyperplane(second.hyperplane) \
                .condition_on_hyperplane(first.hyperplane) == twice


def test_atom_mass():
    square = load_fixture('square')
    assert atom_mass_at(square, (1, 0)) == F(1, 4)
    assert atom_mass_at(square, (F(1, 2), 0)) == 0
    assert atom_mass_at(load_fixture('ex-nts'), (0, 0)) == 0


def test_convex_support():
    assert convex_support(load_fixture('ex-nts')).same_set(
        Polyhedron([(0, 0)], [(1, 0), (0, 1)]))
    assert convex_support(load_fixture('bernoulli')).same_set(
        Polyhedron([(0,), (1,)]))
    assert convex_support(load_fixture('edge-atoms')).same_set(
        Polyhedron([(0, 0), (2, 0), (0, 2), (2, 2)]))


def test_supporting_orientation():
    ex_nts = load_fixture('ex-nts')
    assert supporting_orientation(ex_nts, Hyperplane((1, 0), 0)) == (-1, 0)
    assert supporting_orientation(ex_nts, Hyperplane((1, 0), 1)) is None
    square = load_fixture('square')
    assert supporting_orientation(square, Hyperplane((1, 1), 2)) == (1, 1)


def test_translate():
    square = load_fixture('square')
    moved = square.translate((1, -1))
    assert convex_support(moved).same_set(
        Polyhedron([(1, -1), (2, -1), (1, 0), (2, 0)]))
    assert moved.mean() == pytest.approx((1.5, -0.5))


def test_sample():
    spec = load_fixture('ex-nts')
    rng = np.random.Generator(np.random.Philox(1))
    x = spec.sample(rng, 100000)
    assert x.shape == (100000, 2)
    assert np.all(x >= 0)
    assert x.mean(axis=0) == pytest.approx(spec.mean(), abs=0.02)
    again = spec.sample(np.random.Generator(np.random.Philox(1)), 100000)
    assert np.array_equal(x, again)


def test_digest():
    square = load_fixture('square')
    assert square.digest() == load_fixture('square').digest()
    assert square.digest() != load_fixture('bernoulli').digest()
    assert len(square.digest()) == 64
