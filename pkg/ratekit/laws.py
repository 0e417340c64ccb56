""" One-dimensional coordinate laws with their log-Laplace transforms.
"""
import math
import logging
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad

from .convgeo import Interval
from .utils import INF, QuadratureError, SpecError, memoize, parse_rational


logger = logging.getLogger(__name__)


QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
QUAD_SPLIT = 1.0
QUAD_LIMIT = 200
# e^-TAIL_CUTOFF is negligible against QUAD_EPSREL
TAIL_CUTOFF = 60.0
TILT_CACHE_SIZE = 4096


EndpointProfile = namedtuple(
    'EndpointProfile', 'in_domain k_finite grad_finite')

NOT_APPLICABLE = EndpointProfile(None, None, None)


def _quad(f, lo, hi):
    result = quad(f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                  limit=QUAD_LIMIT, full_output=1)
    if len(result) > 3:
        raise QuadratureError(
            'quadrature on [%g, %g] did not converge: %s' % (lo, hi, result[3]))
    value = result[0]
    if not np.isfinite(value):
        raise QuadratureError('quadrature on [%g, %g] returned %r' % (
            lo, hi, value))
    return value


@lru_cache(maxsize=TILT_CACHE_SIZE)
def tilted_moment(rate, exponent, k, s):
    ''' ∫_0^∞ y^k e^{(s - rate) y} / (1 + y^exponent) dy, +inf when divergent.
    '''
    a = rate - s
    if a < 0:
        return INF
    if a == 0:
        if exponent - k <= 1:
            return INF
        head = _quad(lambda y: y ** k / (1 + y ** exponent), 0, QUAD_SPLIT)
        tail = _quad(lambda t: math.exp(
            (k + 1) * t - np.logaddexp(0, exponent * t)), 0, np.inf)
        return head + tail
    if a >= 1:
        # y = x / a
        return _quad(lambda x: math.exp(-x) * (x / a) ** k / (
            1 + (x / a) ** exponent), 0, TAIL_CUTOFF) / a
    head = _quad(lambda y: math.exp(-a * y) * y ** k / (1 + y ** exponent),
                 0, QUAD_SPLIT)
    # tail in t = log y
    tail = _quad(lambda t: math.exp(
        (k + 1) * t - a * math.exp(t) - np.logaddexp(0, exponent * t)),
        0, math.log(TAIL_CUTOFF / a))
    return head + tail


@memoize
def tail_diverges(exponent, k):
    ''' Numerical check that ∫_1^∞ y^k / (1 + y^exponent) dy diverges:
    increments over successive decades of y stop shrinking.
    '''
    f = lambda t: math.exp((k + 1) * t - np.logaddexp(0, exponent * t))
    first = _quad(f, math.log(1e2), math.log(1e4))
    second = _quad(f, math.log(1e4), math.log(1e6))
    return second >= first * (1 - 1e-9)


def _phi(t):
    ''' log((e^t - 1) / t) '''
    if abs(t) < 1e-6:
        return t / 2 + t * t / 24
    if t > 0:
        return t + math.log(-math.expm1(-t)) - math.log(t)
    return math.log(math.expm1(t) / t)


def _dphi(t):
    if abs(t) < 1e-4:
        return 0.5 + t / 12
    if t > 0:
        return 1 / -math.expm1(-t) - 1 / t
    return 1 - _dphi(-t)


def _d2phi(t):
    u = abs(t)
    if u < 1e-2:
        return 1 / 12 - u * u / 240 + u ** 4 / 6048
    return 1 / (u * u) - math.exp(-u) / math.expm1(-u) ** 2


class Law1D(object):
    """ Base for coordinate laws. Subclasses are frozen dataclasses
    with rational parameters.
    """
    kind = None
    fields = ()

    is_atom = False

    @cached_property
    def support(self):
        raise NotImplementedError

    @cached_property
    def domain(self):
        raise NotImplementedError

    def _k(self, s):
        raise NotImplementedError

    def _dk(self, s):
        raise NotImplementedError

    def _d2k(self, s):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    def in_domain(self, s):
        if not math.isfinite(s):
            return False
        return self.domain.contains(Fraction(s))

    def k(self, s):
        if s == 0:
            return 0.0
        if not self.in_domain(s):
            return INF
        return self._k(float(s))

    def dk(self, s):
        if not self.in_domain(s):
            return INF
        return self._dk(float(s))

    def d2k(self, s):
        if not self.in_domain(s):
            return INF
        return self._d2k(float(s))

    def k_values(self, grid):
        return np.array([self.k(s) for s in grid], dtype=float)

    def endpoint_profile(self, side):
        if self.domain.endpoint(side) is None:
            return NOT_APPLICABLE
        return self._endpoint_profile(side)

    def _endpoint_profile(self, side):
        raise NotImplementedError

    def to_json(self):
        data = {'kind': self.kind}
        for name in self.fields:
            data[name] = str(getattr(self, name))
        return data

    def describe(self):
        return '%s(%s)' % (type(self).__name__, ', '.join(
            str(getattr(self, name)) for name in self.fields))


def _rational(name, value):
    try:
        return parse_rational(value)
    except SpecError as e:
        raise SpecError('%s: %s' % (name, e))


def _orientation(value):
    o = _rational('orientation', value)
    if o not in (1, -1):
        raise SpecError('orientation must be 1 or -1, got %s' % o)
    return int(o)


@dataclass(frozen=True)
class Atom(Law1D):
    a: Fraction
    kind = 'atom'
    fields = ('a',)
    is_atom = True

    def __post_init__(self):
        object.__setattr__(self, 'a', _rational('a', self.a))

    @cached_property
    def support(self):
        return Interval.point(self.a)

    @cached_property
    def domain(self):
        return Interval.real_line()

    def _k(self, s):
        return float(self.a) * s

    def _dk(self, s):
        return float(self.a)

    def _d2k(self, s):
        return 0.0

    def sample(self, rng, size):
        return np.full(size, float(self.a))


@dataclass(frozen=True)
class Exponential(Law1D):
    """ shift + orientation * E, E exponential with the given rate.
    """
    rate: Fraction
    orientation: int = 1
    shift: Fraction = Fraction(0)
    kind = 'exponential'
    fields = ('rate', 'orientation', 'shift')

    def __post_init__(self):
        object.__setattr__(self, 'rate', _rational('rate', self.rate))
        object.__setattr__(self, 'orientation', _orientation(self.orientation))
        object.__setattr__(self, 'shift', _rational('shift', self.shift))
        if self.rate <= 0:
            raise SpecError('exponential rate must be positive, got %s' % self.rate)

    @cached_property
    def support(self):
        if self.orientation > 0:
            return Interval(self.shift, None, True, False)
        return Interval(None, self.shift, False, True)

    @cached_property
    def domain(self):
        if self.orientation > 0:
            return Interval(None, self.rate)
        return Interval(-self.rate, None)

    def _k(self, s):
        o = self.orientation
        return float(self.shift) * s - math.log1p(-o * s / float(self.rate))

    def _dk(self, s):
        o = self.orientation
        return float(self.shift) + o / (float(self.rate) - o * s)

    def _d2k(self, s):
        return 1 / (float(self.rate) - self.orientation * s) ** 2

    def _endpoint_profile(self, side):
        return EndpointProfile(False, False, False)

    def sample(self, rng, size):
        e = -np.log1p(-rng.random(size)) / float(self.rate)
        return float(self.shift) + self.orientation * e


@dataclass(frozen=True)
class Gaussian(Law1D):
    mean: Fraction
    variance: Fraction
    kind = 'gaussian'
    fields = ('mean', 'variance')

    def __post_init__(self):
        object.__setattr__(self, 'mean', _rational('mean', self.mean))
        object.__setattr__(self, 'variance', _rational('variance', self.variance))
        if self.variance <= 0:
            raise SpecError('variance must be positive, got %s' % self.variance)

    @cached_property
    def support(self):
        return Interval.real_line()

    @cached_property
    def domain(self):
        return Interval.real_line()

    def _k(self, s):
        return float(self.mean) * s + float(self.variance) * s * s / 2

    def _dk(self, s):
        return float(self.mean) + float(self.variance) * s

    def _d2k(self, s):
        return float(self.variance)

    def sample(self, rng, size):
        # Box-Muller
        u1 = 1 - rng.random(size)
        u2 = rng.random(size)
        z = np.sqrt(-2 * np.log(u1)) * np.cos(2 * np.pi * u2)
        return float(self.mean) + math.sqrt(float(self.variance)) * z


@dataclass(frozen=True)
class Uniform(Law1D):
    a: Fraction
    b: Fraction
    kind = 'uniform'
    fields = ('a', 'b')

    def __post_init__(self):
        object.__setattr__(self, 'a', _rational('a', self.a))
        object.__setattr__(self, 'b', _rational('b', self.b))
        if self.a >= self.b:
            raise SpecError('uniform needs a < b, got a=%s b=%s' % (self.a, self.b))

    @cached_property
    def support(self):
        return Interval(self.a, self.b, True, True)

    @cached_property
    def domain(self):
        return Interval.real_line()

    @property
    def _width(self):
        return float(self.b - self.a)

    def _k(self, s):
        return float(self.a) * s + _phi(s * self._width)

    def _dk(self, s):
        return float(self.a) + self._width * _dphi(s * self._width)

    def _d2k(self, s):
        return self._width ** 2 * _d2phi(s * self._width)

    def sample(self, rng, size):
        return float(self.a) + self._width * rng.random(size)


@dataclass(frozen=True)
class ExpPolyTail(Law1D):
    """ shift + orientation * Y, Y with density proportional to
    e^{-rate y} / (1 + y^exponent) on (0, inf).
    """
    rate: Fraction
    exponent: Fraction
    orientation: int = 1
    shift: Fraction = Fraction(0)
    kind = 'exp-poly-tail'
    fields = ('rate', 'exponent', 'orientation', 'shift')

    def __post_init__(self):
        object.__setattr__(self, 'rate', _rational('rate', self.rate))
        object.__setattr__(self, 'exponent', _rational('exponent', self.exponent))
        object.__setattr__(self, 'orientation', _orientation(self.orientation))
        object.__setattr__(self, 'shift', _rational('shift', self.shift))
        if self.rate <= 0:
            raise SpecError('rate must be positive, got %s' % self.rate)
        if self.exponent <= 0:
            raise SpecError('exponent must be positive, got %s' % self.exponent)

    @cached_property
    def support(self):
        if self.orientation > 0:
            return Interval(self.shift, None, True, False)
        return Interval(None, self.shift, False, True)

    @cached_property
    def domain(self):
        closed = self.exponent > 1
        if self.orientation > 0:
            return Interval(None, self.rate, False, closed)
        return Interval(-self.rate, None, closed, False)

    def _moment(self, k, s):
        return tilted_moment(float(self.rate), float(self.exponent), k,
                             self.orientation * s)

    def _k(self, s):
        return (float(self.shift) * s +
                math.log(self._moment(0, s)) - math.log(self._moment(0, 0.0)))

    def _dk(self, s):
        return float(self.shift) + self.orientation * (
            self._moment(1, s) / self._moment(0, s))

    def _d2k(self, s):
        m0 = self._moment(0, s)
        m1 = self._moment(1, s)
        m2 = self._moment(2, s)
        if m2 == INF:
            return INF
        return m2 / m0 - (m1 / m0) ** 2

    def _endpoint_profile(self, side):
        profile = EndpointProfile(
            self.exponent > 1, self.exponent > 1, self.exponent > 2)
        beta = float(self.exponent)
        confirmed = (profile.k_finite != tail_diverges(beta, 0) and
                     profile.grad_finite != tail_diverges(beta, 1))
        if not confirmed:
            logger.warning('endpoint profile of %s not confirmed by quadrature',
                           self.describe())
        return profile

    @property
    def acceptance_rate(self):
        ''' Acceptance probability of the exponential-envelope sampler.
        '''
        return float(self.rate) * tilted_moment(
            float(self.rate), float(self.exponent), 0, 0.0)

    def sample(self, rng, size):
        rate, beta = float(self.rate), float(self.exponent)
        out = np.empty(size)
        filled = 0
        while filled < size:
            n = max(2 * (size - filled), 16)
            y = -np.log1p(-rng.random(n)) / rate
            keep = y[rng.random(n) * (1 + y ** beta) < 1]
            take = min(len(keep), size - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return float(self.shift) + self.orientation * out


LAW_KINDS = {cls.kind: cls for cls in
             (Atom, Exponential, Gaussian, Uniform, ExpPolyTail)}


def law_from_json(data):
    if not isinstance(data, dict) or 'kind' not in data:
        raise SpecError('law must be an object with a "kind", got %r' % (data,))
    cls = LAW_KINDS.get(data['kind'])
    if cls is None:
        raise SpecError('unknown law kind %r (expected one of %s)' % (
            data['kind'], ', '.join(sorted(LAW_KINDS))))
    unknown = set(data) - set(cls.fields) - {'kind'}
    if unknown:
        raise SpecError('unknown %s parameters: %s' % (
            data['kind'], ', '.join(sorted(unknown))))
    kwargs = {name: data[name] for name in cls.fields if name in data}
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise SpecError('%s: %s' % (data['kind'], e))
