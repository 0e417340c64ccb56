""" Decision procedures for strict convexity of I_X: the projection
property, total steepness, the decomposition of D(I_X) along face chains,
extreme points and the face correspondence.
"""
import math
import itertools
import logging
from collections import namedtuple
from dataclasses import dataclass, field

from .convgeo import (
    Hyperplane, Polyhedron, convex_support, dot, normal_cone_generators,
    positive_mass_faces, primitive, projection_region, slice_region,
    support_domain_boundary_directions, support_domain_interior_contains)
from .distmodel import supporting_orientation
from .logmgf import conditional_domain, is_steep, k_domain, steepness_report
from .utils import INF, GeometryError, RefusalError, debug_exec, memoize


logger = logging.getLogger(__name__)


def _face_of(poly, hyperplane):
    ''' The face of poly exposed by a supporting hyperplane. '''
    points = [p for p in poly.points if hyperplane.contains(p)]
    rays = [r for r in poly.rays if hyperplane.is_parallel(r)]
    return Polyhedron(points, rays)


def _chain_json(chain):
    return [{'face': face.describe(), 'hyperplane': face.hyperplane.to_json(),
             'mass': str(face.mass)} for face in chain]


@dataclass
class Witness:
    """ Where a condition fails: the chain of faces conditioned on from
    the root, and at that node the failing hyperplane or facet.
    """
    condition: str
    chain: tuple
    face: Polyhedron = None
    hyperplane: Hyperplane = None
    detail: object = None

    def describe(self):
        parts = [self.condition]
        if self.chain:
            parts.append('after conditioning on %s' % ' > '.join(
                f.describe() for f in self.chain))
        if self.hyperplane is not None:
            parts.append('at %s' % self.hyperplane.describe())
        if self.face is not None:
            parts.append('face %s' % self.face.describe())
        return ', '.join(parts)

    def to_json(self):
        detail = self.detail
        if hasattr(detail, 'to_json'):
            detail = detail.to_json()
        elif isinstance(detail, list):
            detail = [x.to_json() for x in detail]
        return {
            'condition': self.condition,
            'chain': _chain_json(self.chain),
            'face': None if self.face is None else self.face.describe(),
            'hyperplane': None if self.hyperplane is None else
            self.hyperplane.to_json(),
            'detail': detail,
            'text': self.describe(),
        }


@dataclass
class Finding:
    holds: bool
    witness: Witness = None

    def __bool__(self):
        return self.holds

    def to_json(self):
        return {'holds': self.holds,
                'witness': None if self.witness is None else
                self.witness.to_json()}


@dataclass
class ProjectionCheck:
    """ pr_L(rint D(K_X)) against L intersected with rint D(K_{X|L}).
    """
    hyperplane: Hyperplane
    mass: object
    holds: bool
    projected: object = None
    sliced: object = None
    shortcut: bool = False

    def describe(self):
        if self.shortcut:
            return '%s: normal in int D(h_C), holds' % self.hyperplane.describe()
        return '%s: %s vs %s' % (self.hyperplane.describe(),
                                 self.projected.describe(),
                                 self.sliced.describe())

    def to_json(self):
        return {
            'hyperplane': self.hyperplane.to_json(),
            'mass': str(self.mass),
            'holds': self.holds,
            'shortcut': self.shortcut,
            'projected': None if self.projected is None else
            self.projected.to_json(),
            'sliced': None if self.sliced is None else self.sliced.to_json(),
            'text': self.describe(),
        }


def projection_condition(spec, hyperplane):
    ell = supporting_orientation(spec, hyperplane)
    if ell is None:
        raise GeometryError('%s does not support C_X' % hyperplane.describe())
    mass = spec.mass_in_hyperplane(hyperplane)
    if not 0 < mass < 1:
        raise GeometryError('%s has mass %s, need 0 < mass < 1' % (
            hyperplane.describe(), mass))
    support = convex_support(spec)
    if support_domain_interior_contains(support, ell):
        return ProjectionCheck(hyperplane, mass, True, shortcut=True)
    projected = projection_region(k_domain(spec).interior(), hyperplane)
    sliced = slice_region(conditional_domain(spec, hyperplane).interior(),
                          hyperplane)
    holds = projected.same_as(sliced)
    return ProjectionCheck(hyperplane, mass, holds, projected, sliced)


def projection_condition_holds(spec, hyperplane):
    return projection_condition(spec, hyperplane).holds


def _face_subsets(poly):
    ''' Nonempty faces cut out by up to d facets, as (points, rays). '''
    seen = []
    for size in range(1, poly.ambient + 1):
        for combo in itertools.combinations(poly.facets, size):
            points = tuple(p for p in poly.points
                           if all(dot(f.outward, p) == f.offset for f in combo))
            if not points:
                continue
            rays = tuple(r for r in poly.rays
                         if all(dot(f.outward, r) == 0 for f in combo))
            if (points, rays) not in seen:
                seen.append((points, rays))
    return seen


@memoize
def splitting_hyperplanes(spec):
    """ Supporting hyperplanes of C_X carrying mass in (0, 1) on which
    condition (a) is checked: the facet hyperplanes, plus the hyperplanes
    whose normal lies on the boundary of D(h_C) within the normal cone of
    some face.
    """
    support = convex_support(spec)
    candidates = [f.outward for f in support.facets]
    for points, rays in _face_subsets(support):
        gens = normal_cone_generators(support, points, rays)
        candidates += support_domain_boundary_directions(support, gens)
    found = set()
    for ell in candidates:
        if not any(ell):
            continue
        ell = primitive(ell)
        h = support.support(ell)
        if h == INF:
            continue
        hyperplane = Hyperplane(ell, h)
        if 0 < spec.mass_in_hyperplane(hyperplane) < 1:
            found.add(hyperplane)
    return sorted(found)


def has_splitting_hyperplane(spec):
    ''' False iff F*_+(C_X) is empty. '''
    return bool(splitting_hyperplanes(spec))


def _projection_failure(spec, chain):
    if spec.dimension == 1 or convex_support(spec).dim <= 1:
        return None
    for hyperplane in splitting_hyperplanes(spec):
        check = projection_condition(spec, hyperplane)
        logger.debug('projection condition %s -> %s', check.describe(),
                     check.holds)
        if not check.holds:
            return Witness('projection condition fails', chain,
                           _face_of(convex_support(spec), hyperplane),
                           hyperplane, check)
    for face in positive_mass_faces(spec):
        witness = _projection_failure(spec.condition_on_face(face),
                                      chain + (face,))
        if witness is not None:
            return witness
    return None


@memoize
@debug_exec
def has_projection_property(spec):
    witness = _projection_failure(spec, ())
    return Finding(witness is None, witness)


def condition_a_holds(spec):
    ''' Condition (a) at the root only. '''
    if spec.dimension == 1 or convex_support(spec).dim <= 1:
        return True
    return all(projection_condition_holds(spec, h)
               for h in splitting_hyperplanes(spec))


def _steepness_failure(spec, chain):
    if not is_steep(spec):
        failing = [c for c in steepness_report(spec) if not c.analytic]
        return Witness('not steep', chain,
                       chain[-1].geometry if chain else convex_support(spec),
                       chain[-1].hyperplane if chain else None, failing)
    for face in positive_mass_faces(spec):
        witness = _steepness_failure(spec.condition_on_face(face),
                                     chain + (face,))
        if witness is not None:
            return witness
    return None


@memoize
@debug_exec
def is_totally_steep(spec):
    if not k_domain(spec).has_interior:
        raise GeometryError('int D(K_X) is empty')
    witness = _steepness_failure(spec, ())
    return Finding(witness is None, witness)


def interior_strict_convexity(spec):
    ''' I_X strictly convex on rint D(I_X). '''
    return k_domain(spec).has_interior and is_steep(spec)


@dataclass
class Verdict:
    strictly_convex: bool
    cond_interior: bool
    cond_projection: bool
    cond_totally_steep: bool
    interior_strict: bool
    witness: Witness = None
    witnesses: dict = field(default_factory=dict)

    def to_json(self):
        return {
            'strictly_convex': self.strictly_convex,
            'cond_interior': self.cond_interior,
            'cond_projection': self.cond_projection,
            'cond_totally_steep': self.cond_totally_steep,
            'interior_strict': self.interior_strict,
            'witness': None if self.witness is None else self.witness.to_json(),
            'witnesses': {k: w.to_json() for k, w in self.witnesses.items()},
        }


def strict_convexity_verdict(spec):
    """ I_X is strictly convex iff int D(K_X) is nonempty, K_X has the
    projection property and K_X is totally steep. The witness comes from
    the first failing condition in that order.
    """
    box = k_domain(spec)
    interior = box.has_interior
    witnesses = {}
    if not interior:
        witnesses['interior'] = Witness('int D(K_X) is empty', (),
                                        box.closure_polyhedron())
    projection = has_projection_property(spec)
    if not projection:
        witnesses['projection'] = projection.witness
    steep = is_totally_steep(spec) if interior else Finding(False)
    if not steep and steep.witness is not None:
        witnesses['totally_steep'] = steep.witness
    first = next((witnesses[k] for k in ('interior', 'projection',
                                         'totally_steep')
                  if k in witnesses), None)
    return Verdict(
        strictly_convex=interior and projection.holds and steep.holds,
        cond_interior=interior,
        cond_projection=projection.holds,
        cond_totally_steep=steep.holds,
        interior_strict=interior_strict_convexity(spec),
        witness=first,
        witnesses=witnesses)


@dataclass
class Cell:
    """ rint of the convex support of the spec reached along a face chain.
    """
    chain: tuple
    spec: object
    piece: Polyhedron

    def contains(self, v):
        return self.piece.rint_contains(v)

    def describe(self):
        return 'rint %s' % self.piece.describe()

    def to_json(self):
        return {'chain': _chain_json(self.chain),
                'piece': self.piece.to_json(),
                'dim': self.piece.dim,
                'text': self.describe()}


@dataclass
class DomainDecomposition:
    cells: list

    def contains(self, v):
        return any(cell.contains(v) for cell in self.cells)

    def __len__(self):
        return len(self.cells)

    def to_json(self):
        return {'cells': [c.to_json() for c in self.cells]}


def _collect_cells(spec, chain, cells):
    piece = convex_support(spec)
    if not any(c.piece.same_set(piece) for c in cells):
        cells.append(Cell(chain, spec, piece))
    for face in positive_mass_faces(spec):
        _collect_cells(spec.condition_on_face(face), chain + (face,), cells)
    return cells


def _decompose(spec):
    return DomainDecomposition(_collect_cells(spec, (), []))


def _require_projection(spec, what):
    finding = has_projection_property(spec)
    if not finding:
        raise RefusalError('%s: projection property fails (%s)' % (
            what, finding.witness.describe()))


@debug_exec
def domain_decomposition(spec):
    """ D(I_X) as the disjoint union of the cells rint C_{X|C_k} over face
    chains C_1 > ... > C_k with positive masses.
    """
    _require_projection(spec, 'domain decomposition')
    return _decompose(spec)


def domain_contains(decomp, v):
    return decomp.contains(v)


ExtremePoint = namedtuple('ExtremePoint', 'point mass value')


def extreme_points(spec):
    ''' Vertices of C_X carrying an atom, with I_X = -log P(X = v) there.
    '''
    _require_projection(spec, 'extreme points')
    out = []
    for p in convex_support(spec).vertices:
        mass = spec.atom_mass_at(p)
        if mass > 0:
            out.append(ExtremePoint(p, mass, -math.log(float(mass))))
    return out


@dataclass
class FaceEvidence:
    face: object
    domain: DomainDecomposition
    contained: bool
    exposed: bool
    proper: bool
    equals_geometric_face: bool

    def to_json(self):
        return {'face': self.face.describe(),
                'hyperplane': self.face.hyperplane.to_json(),
                'mass': str(self.face.mass),
                'cells': [c.describe() for c in self.domain.cells],
                'contained': self.contained,
                'exposed': self.exposed,
                'proper': self.proper,
                'equals_geometric_face': self.equals_geometric_face}


@dataclass
class FaceCorrespondence:
    """ Evidence that every D(I_{X|C}), C in F*_+(C_X), is a proper face
    of D(I_X) (second inclusion), and whether each is as large as its
    geometric face (which makes the first inclusion tight).
    """
    faces: list
    exact: bool

    @property
    def second_inclusion(self):
        return all(f.contained and f.exposed and f.proper for f in self.faces)

    @property
    def first_inclusion_tight(self):
        return all(f.equals_geometric_face for f in self.faces)

    def to_json(self):
        return {'exact': self.exact,
                'second_inclusion': self.second_inclusion,
                'first_inclusion_tight': self.first_inclusion_tight,
                'faces': [f.to_json() for f in self.faces]}


def _in_hyperplane(poly, hyperplane):
    return (all(hyperplane.contains(p) for p in poly.points) and
            all(hyperplane.is_parallel(r) for r in poly.rays))


def _matches(cells, others):
    return (all(any(c.piece.same_set(o.piece) for o in others) for c in cells)
            and all(any(o.piece.same_set(c.piece) for c in cells)
                    for o in others))


@debug_exec
def face_correspondence(spec):
    if not condition_a_holds(spec):
        raise RefusalError('face correspondence: condition (a) fails at %s' % (
            convex_support(spec).describe()))
    root = _decompose(spec)
    evidence = []
    for face in positive_mass_faces(spec):
        sub = _decompose(spec.condition_on_face(face))
        contained = all(any(c.piece.same_set(r.piece) for r in root.cells)
                        for c in sub.cells)
        on_plane = [r for r in root.cells
                    if _in_hyperplane(r.piece, face.hyperplane)]
        evidence.append(FaceEvidence(
            face=face, domain=sub, contained=contained,
            exposed=_matches(sub.cells, on_plane),
            proper=len(on_plane) < len(root.cells),
            equals_geometric_face=sub.cells[0].piece.same_set(face.geometry)))
    return FaceCorrespondence(evidence, bool(has_projection_property(spec)))
