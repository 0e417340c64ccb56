import json
import math
from fractions import Fraction

import numpy as np
import pytest

from ratekit.cli import (
    EXIT_INPUT, EXIT_OK, EXIT_REFUSED, SCHEMA, build_parser, run, tagged)
from ratekit.utils import INF


def run_json(*argv):
    code, text = run(list(argv) + ['--format', 'json'])
    return code, json.loads(text)


def approx(tagged_value):
    return float(tagged_value['approx'])


def test_tagged():
    assert tagged(Fraction(1, 3)) == {'exact': '1/3'}
    assert tagged(INF) == 'inf'
    assert tagged(-INF) == '-inf'
    assert tagged(0.5, 1e-8) == {'approx': '0.5', 'tol': 1e-8}
    assert tagged(np.float64(0.25)) == {'approx': '0.25', 'tol': None}
    assert tagged({'a': [True, 3, 'x', None]}) == {'a': [True, 3, 'x', None]}


def test_domain():
    code, report = run_json('domain', 'ex-nts.json')
    assert code == EXIT_OK
    assert report['schema'] == SCHEMA
    assert report['command'] == ['domain', 'ex-nts.json']
    assert len(report['spec']['digest']) == 64
    assert report['results']['k_domain_text'] == '(-inf, 1) x (-inf, 1)'
    assert report['results']['interior'] is True


def test_faces():
    code, report = run_json('faces', 'ex-nts.json')
    assert code == EXIT_OK
    [face] = report['results']['faces']
    assert face['face'] == '{0} x [0, inf)'
    assert face['mass'] == {'exact': '1/2'}


def test_rate():
    code, report = run_json('rate', 'exp1d.json', '--at', '2')
    assert code == EXIT_OK
    rate = report['results']['rate']
    assert approx(rate['value']) == pytest.approx(1 - math.log(2), rel=1e-7)
    assert rate['value']['tol'] == 1e-8
    assert rate['status'] == 'converged'
    code, report = run_json('rate', 'exp1d.json', '--at', '-1')
    assert report['results']['rate']['value'] == 'inf'


def test_rate_input_errors():
    code, report = run_json('rate', 'square.json', '--at', '1,2,3')
    assert code == EXIT_INPUT
    assert 'expected 2 coordinates' in report['error']
    code, report = run_json('rate', 'square.json')
    assert code == EXIT_INPUT
    code, report = run_json('rate', 'nowhere.json', '--at', '0')
    assert code == EXIT_INPUT
    assert report['spec']['digest'] is None


def test_check():
    code, report = run_json('check', 'strict', 'ex-nts.json')
    assert code == EXIT_OK
    results = report['results']
    assert results['strictly_convex'] is False
    assert results['witness']['condition'] == 'projection condition fails'
    code, report = run_json('check', 'projection', 'two-exp-atom.json')
    assert report['results']['holds'] is False
    assert len(report['results']['splitting_hyperplanes']) == 2
    code, report = run_json('check', 'steep', 'exp-poly-23.json')
    assert report['results']['steep'] is False
    code, report = run_json('check', 'totally-steep', 'square.json')
    assert report['results']['holds'] is True


def test_decompose():
    code, report = run_json('decompose', 'square.json')
    assert code == EXIT_OK
    assert len(report['results']['cells']) == 9
    assert report['results']['faces']['second_inclusion'] is True
    code, report = run_json('decompose', 'ex-nts.json')
    assert code == EXIT_REFUSED
    assert 'projection property fails' in report['refusal']
    assert 'results' not in report


def test_extremes():
    code, report = run_json('extremes', 'bernoulli.json')
    assert code == EXIT_OK
    points = report['results']['extreme_points']
    assert [p['point'] for p in points] == [['0'], ['1']]
    assert approx(points[0]['value']) == pytest.approx(math.log(2))


def test_verify_eq12():
    code, report = run_json('verify', 'eq12', 'square.json',
                            '--hyperplane', '1,0:0')
    assert code == EXIT_OK
    assert report['results']['holds'] is True
    assert len(report['results']['points']) == 20
    code, report = run_json('verify', 'eq12', 'ex-nts.json',
                            '--hyperplane', '1,0:0', '--point', '0,3')
    assert report['results']['holds'] is False


def test_verify_probe():
    code, report = run_json('verify', 'probe', 'square.json',
                            '--segment', '1/5,3/10', '4/5,7/10')
    assert code == EXIT_OK
    assert report['results']['verdict'] == 'strict'
    code, report = run_json('verify', 'probe', 'square.json',
                            '--segment', '1/2,1/2', '3/2,1/2')
    assert code == EXIT_INPUT


def test_verify_cramer(monkeypatch):
    monkeypatch.setenv('RATEKIT_THREADS', '1')
    code, report = run_json('verify', 'cramer', 'bernoulli.json',
                            '--region', '7/10:1', '--n', '20',
                            '--trials', '5000')
    assert code == EXIT_OK
    results = report['results']
    assert results['holds'] is True
    assert approx(results['infimum']) == pytest.approx(
        0.7 * math.log(1.4) + 0.3 * math.log(0.6), abs=1e-6)
    code, report = run_json('verify', 'cramer', 'bernoulli.json',
                            '--region', '7/10')
    assert code == EXIT_INPUT


def test_verify_prop11():
    code, report = run_json('verify', 'prop11', 'square.json',
                            '--samples', '5')
    assert code == EXIT_OK
    assert report['results']['passed'] is True


def test_text_output():
    code, text = run(['check', 'strict', 'square.json'])
    assert code == EXIT_OK
    assert 'strictly_convex' in text
    assert text.splitlines()[1].startswith('spec\t')
    code, text = run(['decompose', 'ex-nts.json'])
    assert code == EXIT_REFUSED
    assert 'reason\t' in text


def test_deterministic():
    argv = ['rate', 'square.json', '--at', '3/10,3/5', '--format', 'json']
    assert run(argv) == run(argv)


def test_bad_arguments():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['rate'])
    with pytest.raises(SystemExit):
        run(['check', 'convex', 'square.json'])
    with pytest.raises(SystemExit):
        run(['domain', 'square.json', '--format', 'yaml'])
