""" The log-Laplace transform K_X(u) = log E exp(u . X) of a spec:
values, derivatives, the effective domain D(K_X) and steepness.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from .convgeo import BoxRegion, Interval
from .distmodel import supporting_orientation
from .utils import (
    INF, DomainError, GeometryError, debug_exec, exact_vector, memoize)


logger = logging.getLogger(__name__)


# stands in for +inf curvature at a closed endpoint with infinite slope
HESSIAN_CAP = 1e12

STEEP_PROBES = 8
STEEP_DECADES = 7
STEEP_GROWTH = 0.5


def _component_terms(comp, u, order):
    k = 0.0
    g = np.empty(len(u))
    h = np.empty(len(u))
    for j, (t, law, s) in enumerate(zip(comp.shift, comp.laws, u)):
        kv = law.k(s)
        if kv == INF:
            return INF, None, None
        k += float(t) * float(s) + kv
        if order >= 1:
            g[j] = float(t) + law.dk(s)
        if order >= 2:
            h[j] = law.d2k(s)
    return k, g, h


def k_derivatives(spec, u, order=2):
    ''' K_X(u) with its gradient (order >= 1) and Hessian (order 2),
    allowed anywhere on the closed domain. Outside D(K_X) the value is inf
    and the derivatives are None. Infinite curvature is capped at
    HESSIAN_CAP.
    '''
    terms = [_component_terms(c, u, order) for c in spec.components]
    ks = np.array([t[0] for t in terms])
    if np.isinf(ks).any():
        return INF, None, None
    value = float(logsumexp(ks, b=spec.weights))
    if order == 0:
        return value, None, None
    w = spec.weights * np.exp(ks - value)
    w /= w.sum()
    grads = np.array([t[1] for t in terms])
    with np.errstate(invalid='ignore'):
        grad = w @ grads
    if order == 1:
        return value, grad, None
    with np.errstate(invalid='ignore'):
        centered = grads - grad
        hess = np.diag(w @ np.array([t[2] for t in terms]))
        hess += (centered.T * w) @ centered
    bad = ~np.isfinite(hess)
    if bad.any():
        rows = bad.any(axis=1)
        hess[rows, :] = 0
        hess[:, rows] = 0
        hess[rows, rows] = HESSIAN_CAP
    return value, grad, hess


def k_eval(spec, u):
    """ K_X(u) as a float, +inf outside D(K_X). Membership is decided
    exactly, open endpoints included.
    """
    if len(u) != spec.dimension:
        raise DomainError('expected a point of R^%d, got %r' % (
            spec.dimension, u))
    if not any(u):
        return 0.0
    return k_derivatives(spec, u, order=0)[0]


@memoize
def k_domain(spec):
    box = None
    for comp in spec.components:
        dom = comp.domain()
        if box is None:
            box = dom
        else:
            box = BoxRegion(tuple(
                a & b for a, b in zip(box.intervals, dom.intervals)))
    return box


def k_grad(spec, u):
    if not k_domain(spec).interior_contains(u):
        raise DomainError('k_grad needs a point of int D(K_X), got %s' % (
            list(u),))
    return k_derivatives(spec, u, order=1)[1]


def k_hessian(spec, u):
    if not k_domain(spec).interior_contains(u):
        raise DomainError('k_hessian needs a point of int D(K_X), got %s' % (
            list(u),))
    return k_derivatives(spec, u, order=2)[2]


def endpoint_profile(law, side):
    return law.endpoint_profile(side)


@dataclass
class EndpointCheck:
    """ Steepness evidence for one finite endpoint of the box D(K_X).
    """
    coordinate: int
    side: str
    endpoint: Fraction
    closed: bool
    binding: list
    analytic: bool
    probe_norms: list
    probe_divergent: bool

    @property
    def agrees(self):
        return self.analytic == self.probe_divergent

    def describe(self):
        return 'x%d %s endpoint %s (%s): binding %s' % (
            self.coordinate + 1, self.side, self.endpoint,
            'closed' if self.closed else 'open',
            ', '.join('#%d %s' % (i, law.describe()) for i, law in self.binding))

    def to_json(self):
        return {
            'coordinate': self.coordinate,
            'side': self.side,
            'endpoint': str(self.endpoint),
            'closed': self.closed,
            'binding': [{'component': i, 'law': law.to_json(),
                         'profile': law.endpoint_profile(self.side)._asdict()}
                        for i, law in self.binding],
            'steep': self.analytic,
            'probe_norms': self.probe_norms,
            'probe_divergent': self.probe_divergent,
        }


def _binding_laws(spec, j, side, endpoint):
    return [(i, comp.laws[j]) for i, comp in enumerate(spec.components)
            if comp.laws[j].domain.endpoint(side) == endpoint]


def _inner_point(iv):
    if iv.lo is not None and iv.hi is not None:
        return float(iv.lo + iv.hi) / 2, float(iv.hi - iv.lo) / 4
    if iv.hi is not None:
        return min(0.0, float(iv.hi) - 1), 0.5
    if iv.lo is not None:
        return max(0.0, float(iv.lo) + 1), 0.5
    return 0.0, 0.5


def _probe_endpoint(spec, box, j, side):
    ''' Gradient norms along sequences approaching the facet u_j = endpoint
    from inside, one per base point, at distances 10^-1 .. 10^-STEEP_DECADES
    (scaled to the interval width).
    '''
    d = spec.dimension
    iv = box.intervals[j]
    endpoint = float(iv.endpoint(side))
    sign = 1 if side == 'upper' else -1
    width = 1.0
    if iv.lo is not None and iv.hi is not None:
        width = min(1.0, float(iv.hi - iv.lo))
    rng = np.random.default_rng([j, int(side == 'upper')])
    centers = [_inner_point(other) for other in box.intervals]
    n_bases = 1 if d == 1 else STEEP_PROBES
    norms = []
    for _ in range(n_bases):
        base = [c + r * rng.uniform(-1, 1) for c, r in centers]
        seq = []
        for k in range(1, STEEP_DECADES + 1):
            u = list(base)
            u[j] = endpoint - sign * width * 10.0 ** -k
            _, grad, _ = k_derivatives(spec, u, order=1)
            seq.append(float(np.linalg.norm(grad)))
        norms.append(seq)
    return norms


@debug_exec
def steepness_report(spec):
    """ One EndpointCheck per finite endpoint of D(K_X).

    The analytic rule: an endpoint is steep iff it is open (some binding law
    has K -> inf there, which forces the gradient to diverge) or some binding
    law keeps a finite K but has an infinite derivative there. Each verdict
    is cross-checked by probing |grad K_X| on sequences approaching the
    facet; a disagreement is logged.
    """
    box = k_domain(spec)
    if not box.has_interior:
        raise DomainError('int D(K_X) is empty: %s' % box.describe())
    checks = []
    for j, iv in enumerate(box.intervals):
        for side in ('lower', 'upper'):
            endpoint = iv.endpoint(side)
            if endpoint is None:
                continue
            binding = _binding_laws(spec, j, side, endpoint)
            closed = iv.is_closed_at(side)
            analytic = not closed or any(
                law.endpoint_profile(side).grad_finite is False
                for _, law in binding)
            norms = _probe_endpoint(spec, box, j, side)
            divergent = all(seq[-1] - seq[-2] > STEEP_GROWTH for seq in norms)
            check = EndpointCheck(j, side, endpoint, closed, binding,
                                  analytic, norms, divergent)
            if not check.agrees:
                logger.warning('steepness rule and probe disagree at %s '
                               '(rule: %s, last norms: %s)', check.describe(),
                               analytic, [seq[-1] for seq in norms])
            logger.debug('steepness: %s -> %s', check.describe(), analytic)
            checks.append(check)
    return checks


@memoize
def is_steep(spec):
    ''' Vacuously true when D(K_X) = R^d. '''
    return all(check.analytic for check in steepness_report(spec))


def conditional_domain(spec, hyperplane):
    ''' D(K_{X|L}): a right cylinder along the normal of L containing
    D(K_X).
    '''
    return k_domain(spec.condition_on_hyperplane(hyperplane))


def _cylinder_contains(box, normal, u):
    ''' Some t has u - t * normal in the box. '''
    t_range = Interval.real_line()
    for iv, n, x in zip(box.intervals, normal, u):
        if n == 0:
            if not iv.contains(x):
                return False
            continue
        lo = None if iv.hi is None else (x - iv.hi) / n
        hi = None if iv.lo is None else (x - iv.lo) / n
        lo_closed, hi_closed = iv.hi_closed, iv.lo_closed
        if n < 0:
            lo, hi = hi, lo
            lo_closed, hi_closed = hi_closed, lo_closed
        try:
            t_range = t_range & Interval(lo, hi, lo_closed, hi_closed)
        except GeometryError:
            return False
    if t_range.lo is not None and t_range.lo == t_range.hi:
        return t_range.lo_closed and t_range.hi_closed
    return True


def k_tilde_eval(spec, hyperplane, u):
    """ K_{X|L}(u) truncated to pr_L^-1(pr_L D(K_X)).
    """
    if supporting_orientation(spec, hyperplane) is None:
        raise GeometryError('%s does not support C_X' % hyperplane.describe())
    conditional = spec.condition_on_hyperplane(hyperplane)
    if not _cylinder_contains(k_domain(spec), hyperplane.normal,
                              exact_vector(u)):
        return INF
    return k_eval(conditional, u)
