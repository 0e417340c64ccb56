""" Command line front end: ratekit <command> SPEC [options].
"""
import argparse
import logging
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .conjugate import (
    RateOptions, rate_eval, rate_infimum, restriction_identity_check)
from .convgeo import (
    BoxRegion, Hyperplane, Interval, Polyhedron, convex_support, add, scale,
    positive_mass_faces)
from .criteria import (
    domain_decomposition, extreme_points, face_correspondence,
    has_projection_property, is_totally_steep, splitting_hyperplanes,
    strict_convexity_verdict)
from .distmodel import DistributionSpec
from .logmgf import is_steep, k_domain, steepness_report
from .utils import (
    INF, DomainError, GeometryError, QuadratureError, RefusalError, SpecError,
    bold, bool_color, dumps_json, parse_rational)
from .verify import cramer_mc_bound, prop11_check, strictness_probe


logger = logging.getLogger(__name__)


SCHEMA = 'ratekit-report/1'

EXIT_OK, EXIT_REFUSED, EXIT_INPUT = 0, 1, 2


def tagged(x, tol=None):
    ''' Report value with exactness tags on every number.
    '''
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return {'exact': str(x)}
    if isinstance(x, float):
        if x == INF:
            return 'inf'
        if x == -INF:
            return '-inf'
        return {'approx': '%.17g' % x, 'tol': tol}
    if isinstance(x, dict):
        return {k: tagged(v, tol) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [tagged(v, tol) for v in x]
    return tagged(float(x), tol)


def _point(text, d=None):
    values = [parse_rational(x) for x in text.split(',') if x.strip()]
    if d is not None and len(values) != d:
        raise SpecError('expected %d coordinates in %r' % (d, text))
    return tuple(values)


def _hyperplane(text, d):
    if ':' not in text:
        raise SpecError('malformed hyperplane %r, expected N1,N2:C' % text)
    normal, offset = text.split(':', 1)
    try:
        return Hyperplane(_point(normal, d), parse_rational(offset))
    except GeometryError as e:
        raise SpecError(str(e))


def _region(specs, d):
    ''' Closed box from LO:HI strings, one per coordinate, an empty side
    meaning unbounded.
    '''
    if len(specs) != d:
        raise SpecError('--region needs %d intervals, got %d' % (d, len(specs)))
    intervals = []
    for text in specs:
        if ':' not in text:
            raise SpecError('malformed interval %r, expected LO:HI' % text)
        lo, hi = (x.strip() for x in text.split(':', 1))
        lo = parse_rational(lo) if lo else None
        hi = parse_rational(hi) if hi else None
        try:
            intervals.append(Interval(lo, hi, lo is not None, hi is not None))
        except GeometryError as e:
            raise SpecError(str(e))
    return BoxRegion(tuple(intervals)).closure_polyhedron()


def _line_points(spec, hyperplane, n=20):
    ''' n points of C_X on the hyperplane, away from its relative boundary.
    '''
    support = convex_support(spec)
    points = [p for p in support.points if hyperplane.contains(p)]
    rays = [r for r in support.rays if hyperplane.is_parallel(r)]
    if not points:
        raise GeometryError('%s misses C_X' % hyperplane.describe())
    face = Polyhedron(points, rays)
    base = face.points[0]
    if face.rays:
        return [add(base, scale(face.rays[0], Fraction(k, 4)))
                for k in range(1, n + 1)]
    far = face.points[-1]
    return [add(base, scale(tuple(b - a for a, b in zip(base, far)),
                            Fraction(k, n + 1)))
            for k in range(1, n + 1)]


def do_domain(spec, args, opts):
    box = k_domain(spec)
    support = convex_support(spec)
    return {'k_domain': box.to_json(),
            'k_domain_text': box.describe(),
            'interior': box.has_interior,
            'convex_support': support.to_json(),
            'convex_support_text': support.describe()}


def do_faces(spec, args, opts):
    return {'faces': [{'face': f.describe(), 'hyperplane': f.hyperplane.to_json(),
                       'mass': f.mass, 'dim': f.geometry.dim}
                      for f in positive_mass_faces(spec)]}


def do_rate(spec, args, opts):
    if not args.at:
        raise SpecError('rate needs --at')
    v = _point(args.at, spec.dimension)
    return {'at': [str(x) for x in v], 'rate': rate_eval(spec, v, opts).to_json()}


def do_check(spec, args, opts):
    if args.what == 'steep':
        return {'steep': is_steep(spec),
                'endpoints': [c.to_json() for c in steepness_report(spec)]}
    if args.what == 'projection':
        data = has_projection_property(spec).to_json()
        data['splitting_hyperplanes'] = [
            h.to_json() for h in splitting_hyperplanes(spec)]
        return data
    if args.what == 'totally-steep':
        return is_totally_steep(spec).to_json()
    return strict_convexity_verdict(spec).to_json()


def do_decompose(spec, args, opts):
    decomp = domain_decomposition(spec)
    data = decomp.to_json()
    data['faces'] = face_correspondence(spec).to_json()
    return data


def do_extremes(spec, args, opts):
    return {'extreme_points': [
        {'point': [str(x) for x in e.point], 'mass': e.mass, 'value': e.value}
        for e in extreme_points(spec)]}


def do_verify(spec, args, opts):
    if args.what == 'prop11':
        return prop11_check(spec, args.samples, args.seed, opts,
                            progress=args.verbose).to_json()
    if args.what == 'eq12':
        if not args.hyperplane:
            raise SpecError('eq12 needs --hyperplane')
        hyperplane = _hyperplane(args.hyperplane, spec.dimension)
        points = ([_point(p, spec.dimension) for p in args.point]
                  if args.point else _line_points(spec, hyperplane))
        return restriction_identity_check(
            spec, hyperplane, points, args.probe_tol, opts).to_json()
    if args.what == 'cramer':
        if not args.region:
            raise SpecError('cramer needs --region')
        region = _region(args.region, spec.dimension)
        report = cramer_mc_bound(spec, region, args.n, args.trials, args.seed,
                                 opts)
        data = report.to_json()
        data['region'] = region.to_json()
        data['infimum'] = rate_infimum(spec, region, opts)
        return data
    if not args.segment:
        raise SpecError('probe needs --segment')
    segment = [_point(p, spec.dimension) for p in args.segment]
    return strictness_probe(spec, segment, args.points, args.probe_tol,
                            opts).to_json()


HANDLERS = {
    'domain': do_domain,
    'faces': do_faces,
    'rate': do_rate,
    'check': do_check,
    'decompose': do_decompose,
    'extremes': do_extremes,
    'verify': do_verify,
}


def _flatten(prefix, x, rows):
    if isinstance(x, dict) and not set(x) <= {'exact', 'approx', 'tol'}:
        for k in sorted(x):
            _flatten('%s.%s' % (prefix, k) if prefix else k, x[k], rows)
    elif isinstance(x, list) and x and any(isinstance(v, (dict, list)) for v in x):
        for i, v in enumerate(x):
            _flatten('%s[%d]' % (prefix, i), v, rows)
    else:
        rows.append((prefix, x))


def _cell(x):
    if isinstance(x, bool):
        return bool_color(x)
    if isinstance(x, dict):
        return x.get('exact') or x['approx']
    if isinstance(x, list):
        return ', '.join(str(_cell(v)) for v in x)
    return '' if x is None else str(x)


def render_text(report):
    lines = [bold('%s %s' % (report['command'][0], ' '.join(report['command'][1:]))),
             'spec\t%s' % report['spec']['digest']]
    if 'refusal' in report:
        lines.append('refused\t%s' % bool_color(False))
        lines.append('reason\t%s' % report['refusal'])
    if 'error' in report:
        lines.append('error\t%s' % report['error'])
    rows = []
    _flatten('', report.get('results', {}), rows)
    lines.extend('%s\t%s' % (key, _cell(value)) for key, value in rows)
    return '\n'.join(lines)


def _with_spec(parser):
    parser.add_argument(
        'spec', help='spec JSON file (or the name of a shipped fixture)')
    return parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog='ratekit',
        description='Rate functions and their strict convexity.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    common = argparse.ArgumentParser(add_help=False)
    arg = common.add_argument
    arg('--format', choices=['json', 'text'], default='text')
    arg('-v', '--verbose', action='store_true')
    arg('--tol', type=float, default=1e-8, help='optimiser tolerance')
    arg('--max-iter', type=int, default=200)
    arg('--threshold', type=float, default=1e6,
        help='rates above this are reported as +inf')
    sub = parser.add_subparsers(dest='command')
    sub.required = True
    _with_spec(sub.add_parser('domain', parents=[common], help='D(K_X) and C_X'))
    _with_spec(sub.add_parser('faces', parents=[common],
                              help='maximal proper faces of C_X with positive mass'))
    rate = _with_spec(sub.add_parser('rate', parents=[common], help='I_X at a point'))
    rate.add_argument('--at', metavar='X,Y', help='comma separated point')
    check = sub.add_parser('check', parents=[common],
                           help='strict convexity criteria')
    check.add_argument('what', choices=[
        'steep', 'projection', 'totally-steep', 'strict'])
    _with_spec(check)
    _with_spec(sub.add_parser('decompose', parents=[common],
                              help='cells of D(I_X) and face correspondence'))
    _with_spec(sub.add_parser('extremes', parents=[common],
                              help='extreme points of D(I_X) carrying atoms'))
    verify = sub.add_parser('verify', parents=[common],
                            help='numerical verification')
    arg = verify.add_argument
    arg('what', choices=['prop11', 'eq12', 'cramer', 'probe'])
    _with_spec(verify)
    arg('--hyperplane', metavar='N1,N2:C',
        help='(eq12) normal coordinates and offset')
    arg('--point', action='append', metavar='X,Y',
        help='(eq12) test point on the hyperplane, repeatable')
    arg('--region', action='append', metavar='LO:HI',
        help='(cramer) closed interval per coordinate, repeatable')
    arg('--segment', nargs=2, metavar='X,Y', help='(probe) segment ends')
    arg('--points', type=int, default=21, help='(probe) samples')
    arg('--probe-tol', type=float, default=1e-6)
    arg('--samples', type=int, default=200, help='(prop11) per region')
    arg('--n', type=int, default=50, help='(cramer) walk length')
    arg('--trials', type=int, default=100000)
    arg('--seed', type=int, default=42)
    return parser


def run(argv=None):
    """ Run one command, return (exit code, rendered report).
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    opts = RateOptions(args.tol, args.max_iter, args.threshold)
    command = [args.command] + ([args.what] if hasattr(args, 'what') else [])
    report = {'schema': SCHEMA, 'command': command + [args.spec],
              'spec': {'path': args.spec, 'digest': None}}
    code = EXIT_OK
    try:
        spec = DistributionSpec.load(args.spec)
        report['spec']['digest'] = spec.digest()
        report['results'] = tagged(
            HANDLERS[args.command](spec, args, opts), args.tol)
    except RefusalError as e:
        code = EXIT_REFUSED
        report['refusal'] = str(e)
    except QuadratureError as e:
        code = EXIT_REFUSED
        report['error'] = str(e)
    except (SpecError, GeometryError, DomainError) as e:
        code = EXIT_INPUT
        report['error'] = str(e)
    if code != EXIT_OK:
        logger.warning('%s: %s', ' '.join(command),
                       report.get('refusal') or report.get('error'))
    if args.format == 'json':
        return code, dumps_json(report)
    return code, render_text(report)


def main():
    code, text = run(sys.argv[1:])
    print(text)
    sys.exit(code)


if __name__ == '__main__':
    main()
