""" Exact rational polyhedral geometry in R^d, d <= 3.

Sets are kept in V-representation (points + rays); the H-representation
(affine hull equalities and facet inequalities) is derived on construction
with cddlib in fraction mode.
"""
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import reduce
from math import gcd

import cdd

from .utils import INF, GeometryError, exact_vector, memoize


logger = logging.getLogger(__name__)

NUMBER_TYPE = 'fraction'


def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def scale(a, s):
    return tuple(s * x for x in a)


def _reject(v, basis):
    ''' Component of v orthogonal to the span of an orthogonal basis. '''
    for q in basis:
        v = sub(v, scale(q, dot(v, q) / dot(q, q)))
    return v


def _orthogonalize(vectors):
    basis = []
    for v in vectors:
        v = _reject(tuple(Fraction(x) for x in v), basis)
        if any(v):
            basis.append(v)
    return basis


def _cdd_rows(matrix):
    ''' (row, linear) pairs of a cdd matrix, entries as Fractions. '''
    return [(tuple(Fraction(x) for x in matrix[i]), i in matrix.lin_set)
            for i in range(matrix.row_size)]


def _generator_matrix(points, rays):
    mat = cdd.Matrix([(1,) + tuple(p) for p in points] +
                     [(0,) + tuple(r) for r in rays], number_type=NUMBER_TYPE)
    mat.rep_type = cdd.RepType.GENERATOR
    return mat


def _generators(mat):
    ''' Points and rays of the polyhedron an H-representation describes,
    lines split into both orientations. Empty lists when infeasible.
    '''
    points, rays = [], []
    for row, linear in _cdd_rows(cdd.Polyhedron(mat).get_generators()):
        t, x = row[0], row[1:]
        if t == 0:
            rays.append(x)
            if linear:
                rays.append(scale(x, -1))
        else:
            points.append(scale(x, 1 / t))
    return points, rays


def primitive(vec):
    ''' Positive multiple of vec with coprime integer coordinates.
    '''
    vec = [Fraction(x) for x in vec]
    lcm = reduce(lambda a, b: a * b // gcd(a, b),
                 (x.denominator for x in vec), 1)
    ints = [int(x * lcm) for x in vec]
    g = reduce(gcd, (abs(i) for i in ints), 0)
    if g == 0:
        raise GeometryError('zero vector has no direction')
    return tuple(Fraction(i // g) for i in ints)


def _coord_name(j):
    return 'x%d' % (j + 1)


@dataclass(frozen=True, order=True)
class Hyperplane:
    """ L = {v : normal . v = offset}, canonical: primitive integer normal
    whose first nonzero coordinate is positive.
    """
    normal: tuple
    offset: Fraction

    def __post_init__(self):
        normal = tuple(Fraction(x) for x in self.normal)
        if not any(normal):
            raise GeometryError('hyperplane normal must be nonzero')
        prim = primitive(normal)
        j = next(i for i, x in enumerate(normal) if x != 0)
        ratio = prim[j] / normal[j]
        offset = Fraction(self.offset) * ratio
        if prim[j] < 0:
            prim = tuple(-x for x in prim)
            offset = -offset
        object.__setattr__(self, 'normal', prim)
        object.__setattr__(self, 'offset', offset)

    @property
    def dimension(self):
        return len(self.normal)

    def contains(self, v):
        return dot(self.normal, exact_vector(v)) == self.offset

    def is_parallel(self, w):
        ''' w lies in the direction space L0. '''
        return dot(self.normal, exact_vector(w)) == 0

    def project(self, x):
        x = exact_vector(x)
        t = (dot(self.normal, x) - self.offset) / dot(self.normal, self.normal)
        return sub(x, scale(self.normal, t))

    def describe(self):
        terms = []
        for j, a in enumerate(self.normal):
            if a == 0:
                continue
            name = _coord_name(j)
            if a == 1:
                term = name
            elif a == -1:
                term = '-' + name
            else:
                term = '%s*%s' % (a, name)
            if terms and not term.startswith('-'):
                term = '+ ' + term
            elif terms:
                term = '- ' + term[1:]
            terms.append(term)
        return '%s = %s' % (' '.join(terms), self.offset)

    def to_json(self):
        return {'normal': [str(x) for x in self.normal],
                'offset': str(self.offset)}

    @classmethod
    def from_json(cls, data):
        from .utils import parse_rational
        return cls(tuple(parse_rational(x) for x in data['normal']),
                   parse_rational(data['offset']))


@dataclass(frozen=True)
class Interval:
    """ Interval of the extended real line; None marks an infinite end.
    """
    lo: object = None
    hi: object = None
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if self.lo is None and self.lo_closed or self.hi is None and self.hi_closed:
            raise GeometryError('infinite endpoints are never closed')
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise GeometryError('empty interval %s' % (self,))

    @classmethod
    def point(cls, a):
        return cls(Fraction(a), Fraction(a), True, True)

    @classmethod
    def real_line(cls):
        return cls()

    def contains(self, x):
        if self.lo is not None:
            if x < self.lo or (x == self.lo and not self.lo_closed):
                return False
        if self.hi is not None:
            if x > self.hi or (x == self.hi and not self.hi_closed):
                return False
        return True

    def interior_contains(self, x):
        return ((self.lo is None or x > self.lo) and
                (self.hi is None or x < self.hi))

    @property
    def has_interior(self):
        return self.lo is None or self.hi is None or self.lo < self.hi

    def endpoint(self, side):
        return self.lo if side == 'lower' else self.hi

    def is_closed_at(self, side):
        return self.lo_closed if side == 'lower' else self.hi_closed

    def __and__(self, other):
        if self.lo is None:
            lo, lo_closed = other.lo, other.lo_closed
        elif other.lo is None or self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif self.lo < other.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi is None:
            hi, hi_closed = other.hi, other.hi_closed
        elif other.hi is None or self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif self.hi > other.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    def shifted(self, t):
        return Interval(None if self.lo is None else self.lo + t,
                        None if self.hi is None else self.hi + t,
                        self.lo_closed, self.hi_closed)

    def describe(self):
        if self.lo is not None and self.lo == self.hi:
            return '{%s}' % self.lo
        left = '(-inf' if self.lo is None else (
            ('[' if self.lo_closed else '(') + str(self.lo))
        right = 'inf)' if self.hi is None else (
            str(self.hi) + (']' if self.hi_closed else ')'))
        return '%s, %s' % (left, right)


@dataclass(frozen=True)
class BoxRegion:
    """ Product of intervals, one per coordinate.
    """
    intervals: tuple

    @property
    def dimension(self):
        return len(self.intervals)

    def contains(self, u):
        u = exact_vector(u)
        return all(iv.contains(x) for iv, x in zip(self.intervals, u))

    def interior_contains(self, u):
        u = exact_vector(u)
        return all(iv.interior_contains(x) for iv, x in zip(self.intervals, u))

    @property
    def has_interior(self):
        return all(iv.has_interior for iv in self.intervals)

    @property
    def is_everything(self):
        return all(iv.lo is None and iv.hi is None for iv in self.intervals)

    def interior(self):
        return BoxRegion(tuple(replace(iv, lo_closed=False, hi_closed=False)
                               for iv in self.intervals))

    def support(self, w):
        w = exact_vector(w)
        total = Fraction(0)
        for iv, x in zip(self.intervals, w):
            if x > 0:
                if iv.hi is None:
                    return INF
                total += x * iv.hi
            elif x < 0:
                if iv.lo is None:
                    return INF
                total += x * iv.lo
        return total

    def generators(self):
        ''' Points and rays whose hull is the closure of the box.
        '''
        coords, rays = [], []
        d = self.dimension
        for j, iv in enumerate(self.intervals):
            finite = sorted({x for x in (iv.lo, iv.hi) if x is not None})
            coords.append(finite or [Fraction(0)])
            for end, sign in ((iv.hi, 1), (iv.lo, -1)):
                if end is None:
                    rays.append(tuple(Fraction(sign if i == j else 0)
                                      for i in range(d)))
        return list(itertools.product(*coords)), rays

    def closure_polyhedron(self):
        points, rays = self.generators()
        return Polyhedron(points, rays)

    def describe(self):
        return ' x '.join(iv.describe() for iv in self.intervals)

    def to_json(self):
        return [{'lo': None if iv.lo is None else str(iv.lo),
                 'hi': None if iv.hi is None else str(iv.hi),
                 'lo_closed': iv.lo_closed, 'hi_closed': iv.hi_closed}
                for iv in self.intervals]


Facet = namedtuple('Facet', 'hyperplane outward offset points rays')


class Polyhedron(object):
    """ conv(points) + cone(rays) with exact derived H-representation.
    """
    def __init__(self, points, rays=()):
        points = _unique(exact_vector(p) for p in points)
        if not points:
            raise GeometryError('polyhedron needs at least one point')
        self.ambient = len(points[0])
        rays = _unique(primitive(exact_vector(r)) for r in rays
                       if any(exact_vector(r)))
        self.points = tuple(sorted(points))
        self.rays = tuple(sorted(rays))
        self._build()

    def _build(self):
        gens = _generator_matrix(self.points, self.rays)
        hrep = cdd.Polyhedron(gens).get_inequalities()
        if hrep.row_size:
            hrep.canonicalize()
        equalities, halfspaces = [], []
        # rows (b, a) read b + a.x >= 0, or = 0 on the linearity rows
        for row, linear in _cdd_rows(hrep):
            b, a = row[0], row[1:]
            if not any(a):
                continue
            if linear:
                equalities.append(Hyperplane(a, -b))
            else:
                halfspaces.append(scale(a, -1))
        self.affine_hull = tuple(sorted(set(equalities)))
        self.dim = self.ambient - len(self.affine_hull)
        self.facets = tuple(self._facets(halfspaces))
        self.vertices = tuple(self._vertices(gens))

    def _facets(self, halfspaces):
        # outward normals are taken inside the direction space of aff(P),
        # which makes them unique up to scale
        basis = _orthogonalize(h.normal for h in self.affine_hull)
        found = {}
        for a in halfspaces:
            n = _reject(a, basis)
            if not any(n):
                continue
            n = primitive(n)
            c = max(dot(n, p) for p in self.points)
            key = Hyperplane(n, c)
            if key not in found:
                found[key] = Facet(
                    hyperplane=key, outward=n, offset=c,
                    points=tuple(p for p in self.points if dot(n, p) == c),
                    rays=tuple(r for r in self.rays if dot(n, r) == 0))
        return [found[k] for k in sorted(found)]

    def _vertices(self, gens):
        gens.canonicalize()
        if gens.lin_set:
            return []
        return sorted(scale(row[1:], 1 / row[0])
                      for row, _ in _cdd_rows(gens) if row[0] != 0)

    @property
    def inequalities(self):
        return [(f.outward, f.offset) for f in self.facets]

    @property
    def is_bounded(self):
        return not self.rays

    def contains(self, v):
        v = exact_vector(v)
        return (all(h.contains(v) for h in self.affine_hull) and
                all(dot(f.outward, v) <= f.offset for f in self.facets))

    def rint_contains(self, v):
        v = exact_vector(v)
        return (all(h.contains(v) for h in self.affine_hull) and
                all(dot(f.outward, v) < f.offset for f in self.facets))

    def recedes(self, r):
        ''' r belongs to the recession cone. '''
        r = exact_vector(r)
        return (all(dot(h.normal, r) == 0 for h in self.affine_hull) and
                all(dot(f.outward, r) <= 0 for f in self.facets))

    def support(self, w):
        w = exact_vector(w)
        if any(dot(w, r) > 0 for r in self.rays):
            return INF
        return max(dot(w, p) for p in self.points)

    def same_set(self, other):
        return (all(other.contains(p) for p in self.points) and
                all(other.recedes(r) for r in self.rays) and
                all(self.contains(p) for p in other.points) and
                all(self.recedes(r) for r in other.rays))

    def subset_of(self, other):
        return (all(other.contains(p) for p in self.points) and
                all(other.recedes(r) for r in self.rays))

    def facets_containing(self, v):
        v = exact_vector(v)
        return [f for f in self.facets if dot(f.outward, v) == f.offset]

    def is_box_shaped(self):
        normals = [h.normal for h in self.affine_hull] + [
            f.outward for f in self.facets]
        return all(sum(1 for x in n if x != 0) == 1 for n in normals)

    def coordinate_range(self, j, open_facets=()):
        e = tuple(Fraction(int(i == j)) for i in range(self.ambient))
        hi = self.support(e)
        lo = self.support(scale(e, -1))
        lo = None if lo == INF else -lo
        hi = None if hi == INF else hi
        closed = {1: True, -1: True}
        for f in self.facets:
            if f.hyperplane in open_facets and f.outward[j] != 0:
                closed[1 if f.outward[j] > 0 else -1] = False
        return Interval(lo, hi, lo is not None and closed[-1],
                        hi is not None and closed[1])

    def describe(self, open_facets=()):
        if self.is_box_shaped():
            return ' x '.join(self.coordinate_range(j, open_facets).describe()
                              for j in range(self.ambient))
        pts = ', '.join('(%s)' % ', '.join(str(x) for x in p)
                        for p in self.vertices or self.points)
        text = 'conv{%s}' % pts
        if self.rays:
            text += ' + cone{%s}' % ', '.join(
                '(%s)' % ', '.join(str(x) for x in r) for r in self.rays)
        return text

    def to_json(self):
        return {'dim': self.dim,
                'vertices': [[str(x) for x in p] for p in self.vertices],
                'points': [[str(x) for x in p] for p in self.points],
                'rays': [[str(x) for x in r] for r in self.rays]}

    def __repr__(self):
        return 'Polyhedron(%s)' % self.describe()


def _unique(items):
    out, seen = [], set()
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


@dataclass(frozen=True)
class Face:
    geometry: Polyhedron = field(compare=False)
    hyperplane: Hyperplane
    outward: tuple
    mass: object = None

    def describe(self):
        return self.geometry.describe()


class PlaneRegion(object):
    """ Convex polyhedral subset of a hyperplane: its closure plus the
    facets (of the closure, relative to the hyperplane) it does not contain.
    """
    def __init__(self, closure, open_facets, hyperplane):
        self.closure = closure
        self.open_facets = frozenset(open_facets)
        self.hyperplane = hyperplane

    def same_as(self, other):
        return (self.closure.same_set(other.closure) and
                self.open_facets == other.open_facets)

    def support(self, w):
        return self.closure.support(w)

    def describe(self):
        return self.closure.describe(self.open_facets)

    def to_json(self):
        data = self.closure.to_json()
        data['open_facets'] = [h.to_json() for h in sorted(self.open_facets)]
        data['text'] = self.describe()
        return data


def _box_face_open(box, outward):
    ''' Whether the box misses the face of its closure exposed by outward.
    '''
    for iv, a in zip(box.intervals, outward):
        if a > 0 and iv.hi is not None and not iv.hi_closed:
            return True
        if a < 0 and iv.lo is not None and not iv.lo_closed:
            return True
    return False


def support_function(region, w):
    return region.support(w)


def project_polyhedron(poly, hyperplane):
    n = hyperplane.normal
    nn = dot(n, n)
    rays = [sub(r, scale(n, dot(n, r) / nn)) for r in poly.rays]
    return Polyhedron([hyperplane.project(p) for p in poly.points],
                      [r for r in rays if any(r)])


def extend_along(poly, direction):
    ''' poly + R * direction '''
    direction = exact_vector(direction)
    return Polyhedron(poly.points,
                      list(poly.rays) + [direction, scale(direction, -1)])


def projection_region(box, hyperplane):
    ''' pr_L(box) with openness flags inherited from the box. '''
    closure = project_polyhedron(box.closure_polyhedron(), hyperplane)
    open_facets = [f.hyperplane for f in closure.facets
                   if _box_face_open(box, f.outward)]
    return PlaneRegion(closure, open_facets, hyperplane)


def project_region_support(box, hyperplane, w):
    if not hyperplane.is_parallel(w):
        raise GeometryError('direction %s is not parallel to %s' % (
            list(map(str, exact_vector(w))), hyperplane.describe()))
    return box.support(w)


def _box_inequalities(box):
    ''' cdd rows (b, a), b + a.x >= 0, for the finite ends of the box. '''
    d = box.dimension
    rows = []
    for j, iv in enumerate(box.intervals):
        e = tuple(Fraction(int(i == j)) for i in range(d))
        if iv.lo is not None:
            rows.append((-iv.lo,) + e)
        if iv.hi is not None:
            rows.append((iv.hi,) + scale(e, -1))
    return rows


def slice_region(box, hyperplane):
    ''' L ∩ box as a PlaneRegion; raises GeometryError when empty.
    '''
    mat = cdd.Matrix([(-hyperplane.offset,) + hyperplane.normal],
                     linear=True, number_type=NUMBER_TYPE)
    bounds = _box_inequalities(box)
    if bounds:
        mat.extend(bounds)
    mat.rep_type = cdd.RepType.INEQUALITY
    points, rays = _generators(mat)
    if not points:
        raise GeometryError('%s does not meet %s' % (
            hyperplane.describe(), box.describe()))
    closure = Polyhedron(points, rays)
    for j, iv in enumerate(box.intervals):
        for end, closed in ((iv.lo, iv.lo_closed), (iv.hi, iv.hi_closed)):
            if end is not None and not closed and all(
                    p[j] == end for p in closure.points) and all(
                    r[j] == 0 for r in closure.rays):
                raise GeometryError('%s only touches the open boundary of %s' % (
                    hyperplane.describe(), box.describe()))
    open_facets = []
    for f in closure.facets:
        for j, iv in enumerate(box.intervals):
            for end, closed in ((iv.lo, iv.lo_closed), (iv.hi, iv.hi_closed)):
                if (end is not None and not closed and
                        all(p[j] == end for p in f.points) and
                        all(r[j] == 0 for r in f.rays)):
                    open_facets.append(f.hyperplane)
    return PlaneRegion(closure, open_facets, hyperplane)


def rint_contains(poly, v):
    return poly.rint_contains(v)


def maximal_proper_faces(poly):
    return [Face(geometry=Polyhedron(f.points, f.rays), hyperplane=f.hyperplane,
                 outward=f.outward)
            for f in poly.facets]


@memoize
def convex_support(spec):
    points, rays = [], []
    for comp in spec.components:
        p, r = comp.support_box().generators()
        points.extend(p)
        rays.extend(r)
    return Polyhedron(points, rays)


@memoize
def positive_mass_faces(spec):
    faces = []
    for face in maximal_proper_faces(convex_support(spec)):
        mass = spec.mass_in_hyperplane(face.hyperplane)
        if mass > 0:
            faces.append(replace(face, mass=mass))
    return faces


def normal_cone_generators(poly, points, rays=()):
    ''' Generators of the normal cone of poly at the face spanned by the
    given generators: outward normals of facets holding all of them, plus
    both orientations of the affine hull normals.
    '''
    gens = []
    for f in poly.facets:
        if (all(dot(f.outward, p) == f.offset for p in points) and
                all(dot(f.outward, r) == 0 for r in rays)):
            gens.append(f.outward)
    for h in poly.affine_hull:
        gens.append(h.normal)
        gens.append(scale(h.normal, -1))
    return gens


def support_domain_interior_contains(poly, w):
    ''' w ∈ int D(h_poly), D(h_poly) being the polar of the recession cone.
    '''
    w = exact_vector(w)
    return all(dot(w, r) < 0 for r in poly.rays)


def support_domain_boundary_directions(poly, generators):
    ''' Directions of the cone spanned by generators that lie on the
    boundary of D(h_poly): generators orthogonal to some ray, and sums of
    pairs of them.
    '''
    found = []
    for r in poly.rays:
        orth = [g for g in generators if dot(g, r) == 0 and any(g)]
        cands = list(orth) + [add(a, b) for a, b in
                              itertools.combinations(orth, 2)]
        for g in cands:
            if any(g):
                g = primitive(g)
                if g not in found:
                    found.append(g)
    return found
