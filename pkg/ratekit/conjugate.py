""" Numerical convex conjugation: the rate function
I_X(v) = sup_u (u . v - K_X(u)), a grid oracle and a linear-time 1-D
discrete transform to cross-check it.
"""
import math
import logging
from collections import namedtuple
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.optimize import minimize
from scipy.special import logsumexp
import joblib

from .convgeo import convex_support, dot, extend_along
from .distmodel import supporting_orientation
from .logmgf import k_derivatives, k_domain, k_eval
from .utils import (
    INF, GeometryError, debug_exec, exact_vector, float_vector, memoize,
    n_jobs)


logger = logging.getLogger(__name__)


RateOptions = namedtuple(
    'RateOptions', 'tol max_iter infinity_threshold ray_doublings')
RateOptions.__new__.__defaults__ = (1e-8, 200, 1e6, 64)

DEFAULT_OPTIONS = RateOptions()

CONVERGED = 'converged'
DIVERGED = 'diverged_to_infinity'
ITERATION_CAP = 'hit_iteration_cap'

ARMIJO = 1e-4
MAX_HALVINGS = 60
# a constraint with slack below this (relative) is treated as active
ACTIVE_SLACK = 1e-9
# stay this far (relative) inside a blocking facet
CLIP_MARGIN = 1e-14

ORACLE_ZOOMS = 6
ORACLE_EDGE_DECADES = 9


@dataclass
class RateResult:
    """ Outcome of one conjugate evaluation. A result reached through
    hyperplane conditioning has no maximizer and lists its route.
    """
    value: float
    maximizer: object
    status: str
    iterations: int = 0
    route: tuple = ()
    certificate: object = None

    @property
    def is_finite(self):
        return self.value != INF

    def to_json(self):
        maximizer = self.maximizer
        if maximizer is not None and not isinstance(maximizer, str):
            maximizer = [float(x) for x in maximizer]
        return {
            'value': self.value,
            'maximizer': maximizer,
            'status': self.status,
            'iterations': self.iterations,
            'route': [h.to_json() for h in self.route],
            'certificate': None if self.certificate is None else [
                str(x) for x in self.certificate],
        }


@memoize
def _closed_domain(spec):
    return k_domain(spec).closure_polyhedron()


def _options(opts):
    if opts is None:
        return DEFAULT_OPTIONS
    if isinstance(opts, dict):
        return DEFAULT_OPTIONS._replace(**opts)
    return opts


def _log_mass(mass):
    return math.log(float(mass))


class _Ascent(object):
    """ Damped Newton ascent of phi(z) = (Bz) . v - K(Bz) over the
    polyhedron {z : A z <= b}, with an active set on the facets met.
    """
    def __init__(self, spec, basis, constraints, v, opts):
        self.spec = spec
        self.basis = basis
        self.v = np.array(float_vector(v))
        self.w = basis.T @ self.v
        self.opts = opts
        if constraints:
            self.A = np.array([basis.T @ np.array(float_vector(a))
                               for a, _ in constraints])
            self.b = np.array([float(c) for _, c in constraints])
        else:
            self.A = np.empty((0, basis.shape[1]))
            self.b = np.empty(0)
        self.slack_tol = ACTIVE_SLACK * np.maximum(1.0, np.abs(self.b))

    def point(self, z):
        return self.basis @ z

    def value(self, z):
        k = k_derivatives(self.spec, self.point(z), order=0)[0]
        if k == INF:
            return -INF
        return float(z @ self.w) - k

    def derivatives(self, z):
        k, g, h = k_derivatives(self.spec, self.point(z), order=2)
        phi = float(z @ self.w) - k
        grad = self.w - self.basis.T @ g
        curvature = self.basis.T @ h @ self.basis
        return phi, grad, curvature

    def _working_set(self, z, grad):
        ''' Active facets with nonnegative multipliers; the released ones
        are those the direction may leave.
        '''
        slack = self.b - self.A @ z
        active = [i for i in range(len(self.b)) if slack[i] <= self.slack_tol[i]]
        working = list(active)
        while working:
            lam = np.linalg.lstsq(self.A[working].T, grad, rcond=None)[0]
            worst = int(np.argmin(lam))
            if lam[worst] >= -self.opts.tol:
                break
            del working[worst]
        released = [i for i in active if i not in working]
        return working, released

    def _direction(self, grad, curvature, working):
        n = len(grad)
        if working:
            Z = scipy.linalg.null_space(self.A[working])
        else:
            Z = np.eye(n)
        if Z.shape[1] == 0:
            return Z, np.zeros(0), np.zeros(n)
        rg = Z.T @ grad
        reduced = Z.T @ curvature @ Z
        reg = 1e-12 * max(1.0, float(np.trace(reduced)))
        try:
            p = scipy.linalg.solve(reduced + reg * np.eye(Z.shape[1]), rg,
                                   assume_a='sym')
            d = Z @ p
        except (scipy.linalg.LinAlgError, ValueError):
            d = Z @ rg
        if not np.all(np.isfinite(d)) or d @ grad <= 0:
            d = Z @ rg
        return Z, rg, d

    def _max_step(self, z, d, skip):
        t_max = INF
        slack = self.b - self.A @ z
        rates = self.A @ d
        for i in range(len(self.b)):
            if i in skip or rates[i] <= 0:
                continue
            t_max = min(t_max, max(slack[i], 0.0) / rates[i])
        return t_max

    def _ray_diverges(self, z, d, phi):
        prev = phi
        for k in range(1, self.opts.ray_doublings + 1):
            val = self.value(z + 2.0 ** k * d)
            if val > self.opts.infinity_threshold:
                return True
            if not val > prev:
                return False
            prev = val
        return False

    def run(self, z):
        opts = self.opts
        phi, grad, curvature = self.derivatives(z)
        for it in range(1, opts.max_iter + 1):
            working, released = self._working_set(z, grad)
            while True:
                Z, rg, d = self._direction(grad, curvature, working)
                back = [i for i in released if self.A[i] @ d > 0]
                if not back:
                    break
                working += back
                released = [i for i in released if i not in back]
            if len(rg) == 0 or np.linalg.norm(rg) <= opts.tol:
                return phi, z, CONVERGED, it
            t_max = self._max_step(z, d, set(working))
            if t_max == INF and d @ curvature @ d <= 1e-12 * (d @ d):
                if self._ray_diverges(z, d, phi):
                    return INF, z + d, DIVERGED, it
            t = 1.0 if t_max > 1 else t_max * (1 - CLIP_MARGIN)
            slope = float(grad @ d)
            for _ in range(MAX_HALVINGS):
                new_phi = self.value(z + t * d)
                if new_phi >= phi + ARMIJO * t * slope:
                    break
                t /= 2
            else:
                logger.debug('line search stalled at |Z^T g| = %.3g',
                             np.linalg.norm(rg))
                return phi, z, CONVERGED, it
            assert new_phi >= phi, (new_phi, phi)
            z = z + t * d
            phi, grad, curvature = self.derivatives(z)
            if phi > opts.infinity_threshold:
                return INF, z, DIVERGED, it
        return phi, z, ITERATION_CAP, opts.max_iter


def _affine_basis(poly):
    ''' Orthonormal basis of the direction space of aff(poly). '''
    d = poly.ambient
    normals = [float_vector(h.normal) for h in poly.affine_hull]
    if not normals:
        return np.eye(d)
    return scipy.linalg.null_space(np.array(normals))


def _generic_ascent(spec, domain, support, v, opts, route):
    normals = [h.normal for h in support.affine_hull]
    feasible = domain
    for n in normals:
        feasible = extend_along(feasible, n)
    basis = _affine_basis(support)
    problem = _Ascent(spec, basis, feasible.inequalities, v, opts)
    phi, z, status, iterations = problem.run(np.zeros(basis.shape[1]))
    logger.debug('ascent at %s: %s after %d iterations',
                 [str(x) for x in v], status, iterations)
    if status == DIVERGED:
        return RateResult(INF, 'diverged', status, iterations, route)
    return RateResult(phi, tuple(problem.point(z)), status, iterations, route)


def _escape_directions(support, v):
    ''' Outward normals of the support constraints violated at v, or of the
    facets containing v, with the value of h_C on each.
    '''
    out = []
    for h in support.affine_hull:
        gap = dot(h.normal, v) - h.offset
        if gap > 0:
            out.append((h.normal, h.offset))
        elif gap < 0:
            out.append((tuple(-x for x in h.normal), -h.offset))
    for f in support.facets:
        if dot(f.outward, v) > f.offset:
            out.append((f.outward, f.offset))
    return out


def _conjugate(spec, domain, v, opts, route=()):
    ''' sup over u in domain of u . v - K(u), domain being a closed
    polyhedron that K is finite on (up to its boundary).
    '''
    support = convex_support(spec)
    if not support.contains(v):
        for ell, h in _escape_directions(support, v):
            if domain.recedes(ell):
                return RateResult(INF, 'diverged', DIVERGED, 0, route,
                                  certificate=ell)
        return _generic_ascent(spec, domain, support, v, opts, route)
    if support.dim == 0:
        return RateResult(0.0, None if route else (0.0,) * spec.dimension,
                          CONVERGED, 0, route)
    if support.rint_contains(v):
        return _generic_ascent(spec, domain, support, v, opts, route)
    facets = [(spec.mass_in_hyperplane(f.hyperplane), f)
              for f in support.facets_containing(v)]
    facets.sort(key=lambda mf: (mf[0] > 0, mf[1].hyperplane))
    for mass, f in facets:
        if not domain.recedes(f.outward):
            continue
        if mass == 0:
            return RateResult(INF, 'diverged', DIVERGED, 0,
                              route + (f.hyperplane,), certificate=f.outward)
        sub = _conjugate(spec.condition_on_hyperplane(f.hyperplane),
                         extend_along(domain, f.outward), v, opts,
                         route + (f.hyperplane,))
        return replace(sub, value=sub.value - _log_mass(mass), maximizer=None)
    return _generic_ascent(spec, domain, support, v, opts, route)


def rate_eval(spec, v, opts=None):
    """ I_X(v).

    Points outside C_X, and points on supporting hyperplanes carrying no
    mass, are resolved from the exact geometry. Points on a face with
    positive mass go through the conditional law on that face
    (I_X(v) = (K~_{X|L})*(v) - log P(X in L)). Interior points use the
    Newton ascent over the closure of D(K_X).
    """
    opts = _options(opts)
    v = exact_vector(v)
    if len(v) != spec.dimension:
        raise GeometryError('expected a point of R^%d, got %d coordinates' % (
            spec.dimension, len(v)))
    domain = _closed_domain(spec)
    result = _conjugate(spec, domain, v, opts)
    logger.debug('rate at %s = %s (%s)', [str(x) for x in v],
                 result.value, result.status)
    return result


def restricted_conjugate(spec, hyperplane, v, opts=None):
    ''' (K~_{X|L})*(v) - log P(X in L) for a supporting hyperplane L.
    '''
    opts = _options(opts)
    ell = supporting_orientation(spec, hyperplane)
    if ell is None:
        raise GeometryError('%s does not support C_X' % hyperplane.describe())
    mass = spec.mass_in_hyperplane(hyperplane)
    if mass == 0:
        raise GeometryError('%s carries no mass' % hyperplane.describe())
    domain = extend_along(_closed_domain(spec), ell)
    sub = _conjugate(spec.condition_on_hyperplane(hyperplane), domain,
                     exact_vector(v), opts, (hyperplane,))
    return replace(sub, value=sub.value - _log_mass(mass), maximizer=None)


def rate_eval_batch(spec, points, opts=None):
    return joblib.Parallel(n_jobs=n_jobs(), prefer='threads')(
        joblib.delayed(rate_eval)(spec, v, opts) for v in points)


OracleEstimate = namedtuple('OracleEstimate', 'value maximizer half_width')


def _axis_grid(iv, lo, hi, n):
    a = lo if iv.lo is None else max(lo, float(iv.lo))
    b = hi if iv.hi is None else min(hi, float(iv.hi))
    if a > b:
        return np.empty(0)
    pts = [np.linspace(a, b, n)]
    for end, closed, sign in ((iv.lo, iv.lo_closed, 1),
                              (iv.hi, iv.hi_closed, -1)):
        if end is not None and lo <= end <= hi:
            e = float(end)
            pts.append(e + sign * max(b - a, 1e-300) *
                       10.0 ** -np.arange(1, ORACLE_EDGE_DECADES + 1))
            if closed:
                pts.append([e])
    grid = np.unique(np.concatenate(pts))
    return grid[[iv.contains(x) for x in grid]]


def _grid_max(spec, v, box, centre, half, n):
    ''' max of u . v - K(u) on a tensor grid around centre. '''
    axes = [_axis_grid(iv, c - h, c + h, n)
            for iv, c, h in zip(box.intervals, centre, half)]
    if any(len(a) == 0 for a in axes):
        return -INF, None, axes
    d = spec.dimension
    ks = []
    for comp in spec.components:
        total = 0.0
        for j, (t, law, grid) in enumerate(zip(comp.shift, comp.laws, axes)):
            shape = [1] * d
            shape[j] = len(grid)
            kj = law.k_values(grid) + float(t) * grid
            total = total + kj.reshape(shape)
        ks.append(np.broadcast_to(total, [len(a) for a in axes]))
    ks = np.array(ks)
    weights = spec.weights.reshape([-1] + [1] * d)
    with np.errstate(invalid='ignore'):
        k = logsumexp(ks, axis=0, b=weights)
    objective = -k
    for j, grid in enumerate(axes):
        shape = [1] * d
        shape[j] = len(grid)
        objective = objective + float(v[j]) * grid.reshape(shape)
    objective = np.where(np.isnan(objective), -INF, objective)
    idx = np.unravel_index(int(np.argmax(objective)), objective.shape)
    best = tuple(float(axes[j][i]) for j, i in enumerate(idx))
    return float(objective[idx]), best, axes


def _zoomed_max(spec, v, box, half_width, n):
    d = spec.dimension
    value, best, axes = _grid_max(spec, v, box, (0.0,) * d,
                                  (half_width,) * d, n)
    if best is None:
        return value, best
    for _ in range(ORACLE_ZOOMS):
        half = []
        for j, grid in enumerate(axes):
            i = int(np.searchsorted(grid, best[j]))
            lo = grid[max(i - 2, 0)]
            hi = grid[min(i + 2, len(grid) - 1)]
            half.append(max(hi - best[j], best[j] - lo, 1e-12))
        z_value, z_best, axes = _grid_max(spec, v, box, best, half, n)
        if z_value > value:
            value, best = z_value, z_best
    return value, best


def rate_eval_oracle(spec, v, box_half_width=20.0, n_per_axis=201,
                     opts=None):
    """ Brute-force lower bound for I_X(v): grid search of u . v - K(u) on
    [-W, W]^d intersected with D(K_X), refined near the domain boundary and
    around the best point, doubling W until the value settles. A value
    past the infinity threshold is reported as +inf.
    """
    opts = _options(opts)
    box = k_domain(spec)
    half_width = float(box_half_width)
    value, best = _zoomed_max(spec, v, box, half_width, n_per_axis)
    for _ in range(opts.ray_doublings):
        if value > opts.infinity_threshold:
            return OracleEstimate(INF, best, half_width)
        half_width *= 2
        wider, wider_best = _zoomed_max(spec, v, box, half_width,
                                         n_per_axis)
        settled = wider - value <= 1e-10 * (1 + abs(value))
        if wider > value:
            value, best = wider, wider_best
        if settled:
            break
    return OracleEstimate(value, best, half_width)


@dataclass
class GridTransform1D:
    """ Samples of a convex function K on a uniform u-grid and, once
    transformed, of its discrete conjugate I on a v-grid.
    """
    u: np.ndarray
    k: np.ndarray
    v: np.ndarray = None
    i: np.ndarray = None

    @classmethod
    def from_spec(cls, spec, lo, hi, n, v=None):
        if spec.dimension != 1:
            raise GeometryError('1-D transform needs a 1-D spec')
        u = np.linspace(lo, hi, n)
        return cls(u, np.array([k_eval(spec, (x,)) for x in u]), v)

    def to_json(self):
        return {'u': self.u.tolist(), 'k': self.k.tolist(),
                'v': None if self.v is None else self.v.tolist(),
                'i': None if self.i is None else self.i.tolist()}


def _lower_hull(u, k):
    hull = []
    for idx in range(len(u)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (u[b] - u[a]) * (k[idx] - k[a]) - (k[b] - k[a]) * (u[idx] - u[a])
            if cross > 0:
                break
            hull.pop()
        hull.append(idx)
    return hull


def llt_1d(g):
    ''' Discrete Legendre transform in linear time: lower convex hull by a
    monotone chain, then a merge of hull slopes with the sorted v-grid.
    '''
    u = np.asarray(g.u, dtype=float)
    k = np.asarray(g.k, dtype=float)
    if len(u) < 2:
        raise ValueError('need at least 2 grid points, got %d' % len(u))
    if len(k) != len(u):
        raise ValueError('u and K grids differ in length')
    if not np.all(np.isfinite(k)):
        raise ValueError('K samples must be finite on the u-grid')
    if not np.all(np.diff(u) > 0):
        raise ValueError('u-grid must be increasing')
    hull = _lower_hull(u, k)
    slopes = np.diff(k[hull]) / np.diff(u[hull])
    v = g.v
    if v is None:
        v = np.linspace(slopes[0], slopes[-1], len(u))
    v = np.asarray(v, dtype=float)
    order = np.argsort(v)
    out = np.empty(len(v))
    h = 0
    for idx in order:
        while h < len(slopes) and slopes[h] < v[idx]:
            h += 1
        p = hull[h]
        out[idx] = v[idx] * u[p] - k[p]
    return replace(g, u=u, k=k, v=v, i=out)


class IdentityPoint(namedtuple('IdentityPoint', 'v left right holds')):

    def to_json(self):
        return {'v': [str(x) for x in self.v], 'left': self.left,
                'right': self.right, 'holds': self.holds}


@dataclass
class IdentityReport:
    """ Per-point comparison of I_X(v), computed through K~_{X|L}, with
    I_{X|L}(v) - log P(X in L).
    """
    hyperplane: object
    mass: object
    tol: float
    points: list = field(default_factory=list)

    @property
    def holds(self):
        return all(p.holds for p in self.points)

    @property
    def max_gap(self):
        gaps = [abs(p.left - p.right) for p in self.points
                if p.left != INF and p.right != INF]
        return max(gaps) if gaps else 0.0

    def to_json(self):
        return {'hyperplane': self.hyperplane.to_json(),
                'mass': str(self.mass), 'tol': self.tol,
                'holds': self.holds,
                'points': [p.to_json() for p in self.points]}


@debug_exec
def restriction_identity_check(spec, hyperplane, test_points, tol=1e-6,
                               opts=None):
    mass = spec.mass_in_hyperplane(hyperplane)
    if not 0 < mass < 1:
        raise GeometryError('%s has mass %s, need 0 < mass < 1' % (
            hyperplane.describe(), mass))
    if supporting_orientation(spec, hyperplane) is None:
        raise GeometryError('%s does not support C_X' % hyperplane.describe())
    conditional = spec.condition_on_hyperplane(hyperplane)
    report = IdentityReport(hyperplane, mass, tol)
    for v in test_points:
        v = exact_vector(v)
        if not hyperplane.contains(v):
            raise GeometryError('test point %s is not on %s' % (
                [str(x) for x in v], hyperplane.describe()))
        left = restricted_conjugate(spec, hyperplane, v, opts).value
        right = rate_eval(conditional, v, opts).value - _log_mass(mass)
        if left == INF or right == INF:
            holds = left == right
        else:
            holds = abs(left - right) <= tol
        report.points.append(IdentityPoint(v, left, right, holds))
    logger.debug('identity on %s holds: %s', hyperplane.describe(),
                 report.holds)
    return report


def rate_infimum(spec, region, opts=None):
    """ inf of I_X over a closed polyhedron B, through the dual problem
    max t - K(u) s.t. t <= u . p for the points p of B and u . r >= 0 for
    its rays. Every feasible dual value is a lower bound, u = 0 gives 0.
    """
    opts = _options(opts)
    d = spec.dimension
    points = [np.array(float_vector(p)) for p in region.points]
    rays = [np.array(float_vector(r)) for r in region.rays]
    box = k_domain(spec)
    bounds = []
    for iv in box.intervals:
        lo = None if iv.lo is None else float(iv.lo) + (
            0.0 if iv.lo_closed else 1e-9)
        hi = None if iv.hi is None else float(iv.hi) - (
            0.0 if iv.hi_closed else 1e-9)
        bounds.append((lo, hi))
    bounds.append((None, None))

    def objective(x):
        k, g, _ = k_derivatives(spec, x[:d], order=1)
        if k == INF:
            return 1e300, np.zeros(d + 1)
        return k - x[d], np.append(g, -1.0)

    constraints = [{'type': 'ineq', 'fun': lambda x, p=p: x[:d] @ p - x[d],
                    'jac': lambda x, p=p: np.append(p, -1.0)}
                   for p in points]
    constraints += [{'type': 'ineq', 'fun': lambda x, r=r: x[:d] @ r,
                     'jac': lambda x, r=r: np.append(r, 0.0)}
                    for r in rays]
    res = minimize(objective, np.zeros(d + 1), jac=True, method='SLSQP',
                   bounds=bounds, constraints=constraints,
                   options={'maxiter': opts.max_iter, 'ftol': 1e-12})
    u = res.x[:d]
    k = k_eval(spec, u)
    # re-derive t from u so the bound stays feasible
    value = min(float(u @ p) for p in points) - k
    if any(u @ r < 0 for r in rays) or not np.isfinite(value):
        value = 0.0
    value = max(value, 0.0)
    if value > opts.infinity_threshold:
        return INF
    logger.debug('rate infimum over %s: %s (%s)', region.describe(), value,
                 res.message)
    return value
