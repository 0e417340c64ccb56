""" The representable distribution class: finite mixtures of axis-aligned
product components whose coordinates are independent 1-D laws.
"""
import os.path
import json
import hashlib
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .convgeo import BoxRegion, convex_support
from .laws import law_from_json
from .utils import (
    FIXTURES_ROOT, GeometryError, SpecError, exact_vector, parse_rational)


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Component:
    weight: Fraction
    shift: tuple
    laws: tuple

    def __post_init__(self):
        object.__setattr__(self, 'weight', Fraction(self.weight))
        object.__setattr__(self, 'shift', exact_vector(self.shift))
        object.__setattr__(self, 'laws', tuple(self.laws))

    @property
    def dimension(self):
        return len(self.laws)

    def support_box(self):
        return BoxRegion(tuple(law.support.shifted(t)
                               for law, t in zip(self.laws, self.shift)))

    def domain(self):
        return BoxRegion(tuple(law.domain for law in self.laws))

    @property
    def is_atom(self):
        return all(law.is_atom for law in self.laws)

    def atom_point(self):
        if not self.is_atom:
            return None
        return tuple(t + law.a for t, law in zip(self.shift, self.laws))

    def in_hyperplane(self, hyperplane):
        ''' Closed support contained in the hyperplane. '''
        n = hyperplane.normal
        if any(a != 0 and not law.is_atom for a, law in zip(n, self.laws)):
            return False
        return sum((a * (t + law.a) for a, t, law in zip(n, self.shift, self.laws)
                    if a != 0), Fraction(0)) == hyperplane.offset

    def translated(self, mu):
        return Component(self.weight,
                         tuple(t + m for t, m in zip(self.shift, mu)),
                         self.laws)

    def sample(self, rng, size):
        cols = [float(t) + law.sample(rng, size)
                for t, law in zip(self.shift, self.laws)]
        return np.column_stack(cols) if size else np.empty((0, len(cols)))

    def to_json(self):
        return {'weight': str(self.weight),
                'shift': [str(t) for t in self.shift],
                'laws': [law.to_json() for law in self.laws]}

    def describe(self):
        text = ' x '.join(law.describe() for law in self.laws)
        if any(self.shift):
            text += ' + (%s)' % ', '.join(str(t) for t in self.shift)
        return '%s: %s' % (self.weight, text)


@dataclass(frozen=True)
class DistributionSpec:
    """ The random vector X: components with rational weights summing to 1.
    """
    dimension: int
    components: tuple

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise SpecError('dimension must be 1, 2 or 3, got %r' % (
                self.dimension,))
        if not self.components:
            raise SpecError('spec needs at least one component')
        for i, comp in enumerate(self.components):
            if not 0 < comp.weight <= 1:
                raise SpecError('component %d: weight %s not in (0, 1]' % (
                    i, comp.weight))
            if len(comp.laws) != self.dimension or len(comp.shift) != self.dimension:
                raise SpecError('component %d: expected %d coordinates' % (
                    i, self.dimension))
        total = sum((c.weight for c in self.components), Fraction(0))
        if total != 1:
            raise SpecError('weights sum to %s' % total)

    @cached_property
    def weights(self):
        return np.array([float(c.weight) for c in self.components])

    def mass_in_hyperplane(self, hyperplane):
        return sum((c.weight for c in self.components
                    if c.in_hyperplane(hyperplane)), Fraction(0))

    def atom_mass_at(self, v):
        v = exact_vector(v)
        return sum((c.weight for c in self.components if c.atom_point() == v),
                   Fraction(0))

    def condition_on_hyperplane(self, hyperplane):
        kept = [c for c in self.components if c.in_hyperplane(hyperplane)]
        mass = sum((c.weight for c in kept), Fraction(0))
        if mass == 0:
            raise GeometryError('%s carries no mass' % hyperplane.describe())
        return DistributionSpec(self.dimension, tuple(
            Component(c.weight / mass, c.shift, c.laws) for c in kept))

    def condition_on_face(self, face):
        return self.condition_on_hyperplane(face.hyperplane)

    def translate(self, mu):
        mu = exact_vector(mu)
        return DistributionSpec(self.dimension, tuple(
            c.translated(mu) for c in self.components))

    def mean(self):
        return tuple(
            sum(float(c.weight) * (float(c.shift[j]) + c.laws[j].dk(0.0))
                for c in self.components)
            for j in range(self.dimension))

    def sample(self, rng, size):
        which = rng.choice(len(self.components), size=size, p=self.weights)
        out = np.empty((size, self.dimension))
        for i, comp in enumerate(self.components):
            idx = np.flatnonzero(which == i)
            if len(idx):
                out[idx] = comp.sample(rng, len(idx))
        return out

    def to_json(self):
        return {'dimension': self.dimension,
                'components': [c.to_json() for c in self.components]}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    def digest(self):
        canonical = json.dumps(self.to_json(), sort_keys=True,
                               separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf8')).hexdigest()

    def describe(self):
        return '; '.join(c.describe() for c in self.components)

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise SpecError('spec must be a JSON object')
        try:
            d = data['dimension']
            raw_components = data['components']
        except KeyError as e:
            raise SpecError('spec is missing %s' % e)
        if not isinstance(d, int) or isinstance(d, bool):
            raise SpecError('dimension must be an integer, got %r' % (d,))
        if not isinstance(raw_components, list):
            raise SpecError('components must be a list')
        components = []
        for i, raw in enumerate(raw_components):
            if not isinstance(raw, dict) or 'weight' not in raw or 'laws' not in raw:
                raise SpecError('component %d needs "weight" and "laws"' % i)
            shift = raw.get('shift', ['0'] * d)
            if not isinstance(shift, list) or not isinstance(raw['laws'], list):
                raise SpecError('component %d: shift and laws must be lists' % i)
            components.append(Component(
                parse_rational(raw['weight']),
                tuple(parse_rational(t) for t in shift),
                tuple(law_from_json(law) for law in raw['laws'])))
        return cls(d, tuple(components))

    @classmethod
    def loads(cls, text):
        try:
            data = json.loads(text)
        except ValueError as e:
            raise SpecError('malformed spec JSON: %s' % e)
        return cls.from_json(data)

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            fixture = os.path.join(FIXTURES_ROOT, os.path.basename(path))
            if os.path.exists(fixture):
                path = fixture
        try:
            with open(path, 'r') as f:
                text = f.read()
        except OSError as e:
            raise SpecError('cannot read spec %s: %s' % (path, e))
        return cls.loads(text)


def load_fixture(name):
    if not name.endswith('.json'):
        name += '.json'
    return DistributionSpec.load(os.path.join(FIXTURES_ROOT, name))


def validate(spec):
    ''' Check a spec (or its parsed JSON) and warm the derived caches.
    '''
    if isinstance(spec, dict):
        spec = DistributionSpec.from_json(spec)
    elif not isinstance(spec, DistributionSpec):
        raise SpecError('cannot validate %r' % (spec,))
    for comp in spec.components:
        comp.support_box()
        for law in comp.laws:
            law.domain
            for side in ('lower', 'upper'):
                law.endpoint_profile(side)
    spec.weights
    return spec


def mass_in_hyperplane(spec, hyperplane):
    return spec.mass_in_hyperplane(hyperplane)


def condition_on_face(spec, face):
    return spec.condition_on_face(face)


def atom_mass_at(spec, v):
    return spec.atom_mass_at(v)


def supporting_orientation(spec, hyperplane):
    ''' Outward normal of a hyperplane supporting C_X, or None.
    '''
    poly = convex_support(spec)
    n, c = hyperplane.normal, hyperplane.offset
    if poly.support(n) == c:
        return n
    neg = tuple(-x for x in n)
    if poly.support(neg) == -c:
        return neg
    return None
