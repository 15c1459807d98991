'''clause evaluation, verdicts and report merging'''
import math

import pytest

from patchdyn.model import ModelParams
from patchdyn.registry import get_clauses, theorem_clause
from patchdyn.report import (ConditionReport, all_of, any_of, at_most,
                             clause_entry, evaluate_theorem, greater, less,
                             verdict)

TOY = 'toy-theorem'


@theorem_clause(TOY, 'k-ordered')
def _k_ordered(params, i, j):
    return [less('K_i', params.patch(i).K, 'K_j', params.patch(j).K)]


@theorem_clause(TOY, 'slow-growth', ordered=False)
def _slow_growth(params, i, j):
    return [less('r', params.r, '2', 2.0)]


PARAMS = ModelParams(r=1.5, K1=5, K2=3, a1=0.25, a2=0.15, d1=0.2, d2=0.1)


def test_comparisons():
    '''margins are positive iff the relation holds'''
    assert less('a', 1.0, 'b', 2.0).margin == 1.0
    assert greater('a', 1.0, 'b', 2.0).margin == -1.0
    assert at_most('a', 2.0, 'b', 2.0).relation == 'a <= b'
    assert less('mu', math.inf, 'K', 5.0).margin == -math.inf
    assert less('mu', math.inf, 'mu', math.inf).margin == 0.0


def test_verdict_band():
    '''margins inside the indeterminacy band are boundary cases'''
    assert verdict(1e-3) is True
    assert verdict(-1e-3) is False
    assert verdict(1e-13) == 'boundary'
    assert verdict(math.nan) is False


def test_clause_entry_conjunction():
    '''a failing comparison beats a boundary one'''
    entry = clause_entry(TOY, 'c', (1, 2), [
        less('a', 1.0, 'b', 2.0),
        less('c', 1.0, 'd', 1.0 + 1e-14),
    ])
    assert entry.fired == 'boundary'
    assert not entry.holds
    entry = clause_entry(TOY, 'c', None,
                         [less('a', 1.0, 'b', 2.0),
                          less('c', 3.0, 'd', 1.0)])
    assert entry.fired is False
    assert entry.margin == -2.0
    assert entry.values == {'a': 1.0, 'b': 2.0, 'c': 3.0, 'd': 1.0}


def test_combinators():
    '''disjunction and conjunction of evaluated entries'''
    yes = clause_entry(TOY, 'yes', None, [less('a', 1.0, 'b', 2.0)])
    no = clause_entry(TOY, 'no', None, [less('a', 3.0, 'b', 2.0)])
    assert any_of(TOY, 'either', None, [yes, no]).holds
    assert not any_of(TOY, 'either', None, [no]).holds
    both = all_of(TOY, 'both', None, [yes, no])
    assert both.fired is False
    assert both.relations == ['yes', 'no']
    assert all_of(TOY, 'both', None, [yes]).holds


def test_evaluate_theorem():
    '''ordered clauses once per order, unordered once'''
    assert list(get_clauses(TOY)) == ['k-ordered', 'slow-growth']
    entries = evaluate_theorem(TOY, PARAMS)
    assert [(e.clause, e.order) for e in entries] == [
        ('k-ordered', (1, 2)), ('k-ordered', (2, 1)), ('slow-growth', None)
    ]
    report = ConditionReport(entries=entries, flags={'x': True})
    assert report.find(TOY, 'k-ordered', (2, 1)).holds
    assert not report.find(TOY, 'k-ordered', (1, 2)).holds
    assert report.fired(TOY, 'slow-growth')
    with pytest.raises(KeyError):
        report.find(TOY, 'missing')
    unordered = evaluate_theorem(TOY, PARAMS, orders=())
    assert [e.clause for e in unordered] == ['slow-growth']


def test_merge_and_table():
    '''merging concatenates entries and unites flags'''
    left = ConditionReport(entries=evaluate_theorem(TOY, PARAMS),
                           flags={'a': True})
    merged = left.merge(ConditionReport(flags={'b': False}))
    assert len(merged.entries) == 3
    assert merged.flags == {'a': True, 'b': False}
    table = merged.as_table()
    assert 'k-ordered' in table
    assert 'b: False' in table


def test_clause_ids_are_unique():
    '''a clause id names one function per theorem'''

    def _other(*_):
        return []

    with pytest.raises(ValueError):
        theorem_clause(TOY, 'k-ordered')(_other)
    theorem_clause(TOY, 'k-ordered')(_k_ordered)
    assert list(get_clauses(TOY)) == ['k-ordered', 'slow-growth']
    assert get_clauses('no-such-theorem') == {}

# EOF
