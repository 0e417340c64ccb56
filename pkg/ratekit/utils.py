import os.path
import math
import time
import json
import logging
import numbers
from fractions import Fraction
from functools import wraps


FIXTURES_ROOT = os.path.join(os.path.dirname(__file__), 'fixtures')

INF = math.inf


logger = logging.getLogger(__name__)


class RatekitError(Exception):
    pass


class SpecError(RatekitError, ValueError):
    """ Malformed or invalid distribution spec, or bad user input.
    """


class GeometryError(RatekitError, ValueError):
    pass


class DomainError(RatekitError, ValueError):
    pass


class QuadratureError(RatekitError, ArithmeticError):
    pass


class RefusalError(RatekitError):
    """ The hypothesis an analysis relies on does not hold for this spec.
    """


def parse_rational(x):
    ''' Parse "num/den", an integer string or an int into a Fraction.
    Floats are rejected: spec files carry exact values only.
    '''
    if isinstance(x, bool):
        raise SpecError('expected a rational, got %r' % (x,))
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, Fraction):
        return x
    if not isinstance(x, str):
        raise SpecError('expected a rational string "num/den", got %r' % (x,))
    try:
        return Fraction(x.strip())
    except (ValueError, ZeroDivisionError):
        raise SpecError('malformed rational %r' % x)


def exact_vector(v):
    ''' Exact rational copy of a point given as floats, ints, strings
    or Fractions (floats are converted by their binary value).
    '''
    out = []
    for x in v:
        if isinstance(x, str):
            out.append(parse_rational(x))
        else:
            out.append(Fraction(x))
    return tuple(out)


def float_vector(v):
    return tuple(float(x) for x in v)


def memoize(func):
    cache = {}
    @wraps(func)
    def wrapper(*args):
        if args in cache:
            return cache[args]
        result = func(*args)
        cache[args] = result
        return result
    wrapper.cache = cache
    return wrapper


def debug_exec(fn):
    ''' Log wall time of the call at DEBUG level.
    '''
    fn_logger = logging.getLogger(fn.__module__)
    @wraps(fn)
    def inner(*args, **kwargs):
        fn_logger.debug('starting %s', fn.__name__)
        start = time.time()
        try:
            return fn(*args, **kwargs)
        finally:
            fn_logger.debug(
                'finished %s in %.3f s', fn.__name__, time.time() - start)
    return inner


def n_jobs():
    ''' joblib n_jobs from RATEKIT_THREADS (0 or unset means all cores).
    '''
    value = os.environ.get('RATEKIT_THREADS', '0')
    try:
        threads = int(value)
    except ValueError:
        raise SpecError('RATEKIT_THREADS must be an integer, got %r' % value)
    if threads < 0:
        raise SpecError('RATEKIT_THREADS must be >= 0, got %d' % threads)
    return -1 if threads == 0 else threads


def dumps_json(x, indent=2):
    return json.dumps(x, sort_keys=True, indent=indent,
                      separators=(',', ': '), ensure_ascii=False)


def _cc(code):
    tpl = ('\x1b[%sm' % code) + '%s\x1b[0m'
    return lambda x: tpl % x

red = _cc(31)
green = _cc(32)
bool_color = lambda x: green(x) if x else red(x)
bold = _cc(1)
