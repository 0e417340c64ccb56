""" Runnable numerical checks: strictness probes along segments, the
inclusions rint C_X in D(I_X) in cl C_X, the Cramer upper bound by Monte
Carlo and finite-difference gradients.
"""
import math
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import joblib
import tqdm

from .conjugate import rate_eval, rate_infimum
from .convgeo import convex_support, scale, sub, add
from .criteria import _decompose, has_projection_property
from .logmgf import k_domain, k_eval, k_grad
from .utils import INF, DomainError, debug_exec, exact_vector, n_jobs


logger = logging.getLogger(__name__)


AFFINE_TOL = 1e-6
AFFINE_RUN = 5

MC_CHUNK = 10000


def philox(seed, *stream):
    ''' Counter-based generator for (seed, stream...). '''
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed] + list(stream))))


@dataclass
class ProbeReport:
    start: tuple
    end: tuple
    samples: list
    values: list
    verdict: str
    witness: tuple = None
    max_deviation: float = 0.0
    min_gap: float = 0.0

    def to_json(self):
        return {
            'start': [str(x) for x in self.start],
            'end': [str(x) for x in self.end],
            'samples': [[str(x) for x in v] for v in self.samples],
            'values': self.values,
            'verdict': self.verdict,
            'witness': None if self.witness is None else [
                [str(x) for x in v] for v in self.witness],
            'max_deviation': self.max_deviation,
            'min_gap': self.min_gap,
        }


def _segment_points(a, b, n_points):
    return [add(a, scale(sub(b, a), Fraction(i, n_points - 1)))
            for i in range(n_points)]


@debug_exec
def strictness_probe(spec, segment, n_points=21, tol=AFFINE_TOL, opts=None):
    """ Samples I_X at equispaced points of a segment inside D(I_X) and
    looks for AFFINE_RUN consecutive local midpoint deviations below tol.
    """
    a, b = (exact_vector(x) for x in segment)
    if a == b:
        raise DomainError('segment has no length')
    if n_points < AFFINE_RUN + 2:
        raise DomainError('need at least %d points' % (AFFINE_RUN + 2))
    points = _segment_points(a, b, n_points)
    exact_membership = has_projection_property(spec).holds
    if exact_membership:
        decomp = _decompose(spec)
        outside = [v for v in points if not decomp.contains(v)]
        if outside:
            raise DomainError('segment leaves D(I_X) at %s' % (
                [str(x) for x in outside[0]],))
    values = [rate_eval(spec, v, opts).value for v in points]
    if not exact_membership and INF in values:
        raise DomainError('segment leaves D(I_X) at %s' % (
            [str(x) for x in points[values.index(INF)]],))
    dev = [(values[i - 1] + values[i + 1]) / 2 - values[i]
           for i in range(1, n_points - 1)]
    run_start, best = None, None
    for i, m in enumerate(dev + [INF]):
        if m <= tol:
            if run_start is None:
                run_start = i
        else:
            if run_start is not None and i - run_start >= AFFINE_RUN:
                if best is None or i - run_start > best[1] - best[0]:
                    best = (run_start, i)
            run_start = None
    if best is None:
        lo, hi = 0, n_points - 1
    else:
        lo, hi = best[0], best[1] + 1
    chord = np.linspace(values[lo], values[hi], hi - lo + 1)
    deviation = float(np.max(np.abs(np.array(values[lo:hi + 1]) - chord)))
    if best is None:
        logger.debug('probe %s -> strict, min gap %.3g', [
            str(x) for x in a], min(dev))
        return ProbeReport(a, b, points, values, 'strict',
                           max_deviation=deviation, min_gap=min(dev))
    return ProbeReport(a, b, points, values, 'affine_witness',
                       (points[lo], points[hi]), deviation, min(dev))


def _exact_weights(raw):
    weights = [Fraction(float(x)) for x in raw]
    total = sum(weights)
    return [w / total for w in weights]


def _combination(points, rays, rng):
    ''' Random point of rint(conv(points) + cone(rays)), exact. '''
    lam = _exact_weights(rng.dirichlet(np.ones(len(points))))
    v = tuple(sum(l * p[j] for l, p in zip(lam, points))
              for j in range(len(points[0])))
    for r in rays:
        v = add(v, scale(r, Fraction(float(rng.exponential()))))
    return v


@dataclass
class Prop11Report:
    interior: list = field(default_factory=list)
    outside: list = field(default_factory=list)
    zero_mass: list = field(default_factory=list)

    def failures(self):
        bad = [(v, x) for v, x in self.interior if x == INF]
        bad += [(v, x) for v, x in self.outside + self.zero_mass if x != INF]
        return bad

    @property
    def passed(self):
        return not self.failures()

    def to_json(self):
        def rows(items):
            return [{'v': [str(x) for x in v], 'rate': value}
                    for v, value in items]
        return {'passed': self.passed,
                'interior': rows(self.interior),
                'outside': rows(self.outside),
                'zero_mass': rows(self.zero_mass),
                'failures': rows(self.failures())}


def _rates(spec, points, opts, progress, label):
    return [(v, rate_eval(spec, v, opts).value)
            for v in tqdm.tqdm(points, desc=label, disable=not progress)]


@debug_exec
def prop11_check(spec, n_samples=200, seed=42, opts=None, progress=False):
    """ Finite rates on rint C_X, +inf outside cl C_X and on the
    supporting hyperplanes of C_X that carry no mass.
    """
    rng = philox(seed)
    support = convex_support(spec)
    interior = []
    while len(interior) < n_samples:
        v = _combination(support.points, support.rays, rng)
        if support.rint_contains(v):
            interior.append(v)
    spread = max([1.0] + [float(abs(x)) for p in support.points for x in p])
    outside = []
    for attempt in range(100 * n_samples):
        if len(outside) >= n_samples:
            break
        base = interior[attempt % len(interior)]
        noise = rng.normal(scale=spread, size=spec.dimension)
        v = exact_vector(np.array([float(x) for x in base]) + noise)
        if not support.contains(v):
            outside.append(v)
    zero_mass = []
    empty = [f for f in support.facets
             if spec.mass_in_hyperplane(f.hyperplane) == 0]
    for i in range(n_samples if empty else 0):
        f = empty[i % len(empty)]
        zero_mass.append(_combination(f.points, f.rays, rng))
    report = Prop11Report(
        _rates(spec, interior, opts, progress, 'interior'),
        _rates(spec, outside, opts, progress, 'outside'),
        _rates(spec, zero_mass, opts, progress, 'zero-mass facets'))
    if not report.passed:
        logger.warning('inclusion check failed at %d points',
                       len(report.failures()))
    return report


@dataclass
class McReport:
    n: int
    trials: int
    seed: int
    hits: int
    log_probability: float
    bound: float
    slack: float
    acceptance_rates: dict = field(default_factory=dict)

    @property
    def vacuous(self):
        return self.hits == 0

    @property
    def holds(self):
        return self.vacuous or self.log_probability <= self.bound + self.slack

    def to_json(self):
        return {'n': self.n, 'trials': self.trials, 'seed': self.seed,
                'hits': self.hits, 'log_probability': self.log_probability,
                'bound': self.bound, 'slack': self.slack,
                'vacuous': self.vacuous, 'holds': self.holds,
                'acceptance_rates': self.acceptance_rates}


def _hits_in_chunk(spec, region_rows, n, count, seed, chunk):
    A, b = region_rows
    rng = philox(seed, chunk)
    means = spec.sample(rng, count * n).reshape(count, n, -1).mean(axis=1)
    if len(A) == 0:
        return count
    inside = np.all(means @ A.T <= b + 1e-12 * np.maximum(1, np.abs(b)),
                    axis=1)
    return int(inside.sum())


def _region_rows(region):
    rows = [(f.outward, f.offset) for f in region.facets]
    for h in region.affine_hull:
        rows += [(h.normal, h.offset),
                 (tuple(-x for x in h.normal), -h.offset)]
    if not rows:
        return np.empty((0, region.ambient)), np.empty(0)
    A = np.array([[float(x) for x in a] for a, _ in rows])
    b = np.array([float(c) for _, c in rows])
    return A, b


@debug_exec
def cramer_mc_bound(spec, region, n, trials, seed, opts=None):
    """ Estimates P(S_n / n in B) and checks
    (1/n) log P <= -inf_{cl B} I_X + slack, with slack three binomial
    standard errors on the log scale plus 1e-2. Each chunk of trials draws
    from its own (seed, chunk) stream.
    """
    rows = _region_rows(region)
    counts = [min(MC_CHUNK, trials - start)
              for start in range(0, trials, MC_CHUNK)]
    hits = sum(joblib.Parallel(n_jobs=n_jobs())(
        joblib.delayed(_hits_in_chunk)(spec, rows, n, count, seed, chunk)
        for chunk, count in enumerate(counts)))
    bound = -rate_infimum(spec, region, opts)
    rates = {law.describe(): law.acceptance_rate
             for comp in spec.components for law in comp.laws
             if hasattr(law, 'acceptance_rate')}
    if hits == 0:
        logger.info('no hits in %d trials, bound is vacuous', trials)
        return McReport(n, trials, seed, 0, -INF, bound, INF, rates)
    p = hits / trials
    se = math.sqrt(p * (1 - p) / trials)
    slack = 3 * (se / p) / n + 1e-2
    report = McReport(n, trials, seed, hits, math.log(p) / n, bound, slack,
                      rates)
    logger.debug('cramer: (1/n) log p = %.6g, bound %.6g + %.3g',
                 report.log_probability, bound, slack)
    return report


def _interior_sample(box, rng, margin):
    u = []
    for iv in box.intervals:
        lo = -2.0 if iv.lo is None else float(iv.lo) + margin
        hi = 2.0 if iv.hi is None else float(iv.hi) - margin
        if iv.lo is None and iv.hi is not None:
            lo = min(lo, hi - 2.0)
        if iv.hi is None and iv.lo is not None:
            hi = max(hi, lo + 2.0)
        u.append(rng.uniform(lo, hi))
    return np.array(u)


def gradient_fd_check(spec, n_points=20, h=1e-5, seed=0, margin=1e-2):
    ''' Worst relative error of central differences against k_grad at
    random points at least margin inside D(K_X).
    '''
    rng = philox(seed)
    box = k_domain(spec)
    worst = 0.0
    for _ in range(n_points):
        u = _interior_sample(box, rng, margin)
        g = k_grad(spec, u)
        for j in range(spec.dimension):
            e = np.zeros(spec.dimension)
            e[j] = h
            fd = (k_eval(spec, u + e) - k_eval(spec, u - e)) / (2 * h)
            worst = max(worst, abs(fd - g[j]) / max(1.0, abs(g[j])))
    return worst
