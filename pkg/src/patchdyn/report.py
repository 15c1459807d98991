'''Condition reports: evaluated theorem clauses with margins'''
import math
from typing import Literal, NamedTuple

from pydantic import Field

from patchdyn.base_data_class import BaseDataClass
from patchdyn.model import INDETERMINACY_BAND, ModelParams
from patchdyn.registry import get_clauses

Fired = bool | Literal['boundary']
BOTH_ORDERS = ((1, 2), (2, 1))


class Check(NamedTuple):
    '''One strict comparison; `margin` is positive iff it holds'''
    relation: str
    margin: float
    values: dict[str, float]


def less(lhs_name: str, lhs: float, rhs_name: str, rhs: float) -> Check:
    '''lhs < rhs'''
    return Check(f'{lhs_name} < {rhs_name}', _difference(rhs, lhs), {
        lhs_name: lhs,
        rhs_name: rhs
    })


def greater(lhs_name: str, lhs: float, rhs_name: str, rhs: float) -> Check:
    '''lhs > rhs'''
    return Check(f'{lhs_name} > {rhs_name}', _difference(lhs, rhs), {
        lhs_name: lhs,
        rhs_name: rhs
    })


def at_most(lhs_name: str, lhs: float, rhs_name: str, rhs: float) -> Check:
    '''lhs <= rhs; equality falls into the indeterminacy band anyway'''
    check = less(lhs_name, lhs, rhs_name, rhs)
    return check._replace(relation=f'{lhs_name} <= {rhs_name}')


def _difference(big: float, small: float) -> float:
    if big == small:
        return 0.0
    return big - small


def verdict(margin: float) -> Fired:
    '''maps a margin to True, False or 'boundary' '''
    if math.isnan(margin):
        return False
    if abs(margin) < INDETERMINACY_BAND:
        return 'boundary'
    return margin > 0


class ClauseEntry(BaseDataClass):
    '''A single evaluated clause'''
    theorem: str = Field(..., description='theorem label')
    clause: str = Field(..., description='clause label within the theorem')
    order: tuple[int, int] | None = Field(
        None, description='patch order (i, j) the clause was evaluated for')
    fired: Fired
    margin: float = Field(...,
                          description='smallest margin of all comparisons')
    relations: list[str] = []
    values: dict[str, float] = {}

    @property
    def holds(self) -> bool:
        '''fired outside the indeterminacy band'''
        return self.fired is True


def clause_entry(theorem: str, clause: str, order: tuple[int, int] | None,
                 checks: list[Check]) -> ClauseEntry:
    '''Conjunction of `checks`: fires if all hold, is a boundary case if
    none fails and some lies inside the band.'''
    verdicts = [verdict(c.margin) for c in checks]
    if any(v is False for v in verdicts):
        fired: Fired = False
    elif any(v == 'boundary' for v in verdicts):
        fired = 'boundary'
    else:
        fired = True
    margins = [-math.inf if math.isnan(c.margin) else c.margin
               for c in checks]
    values: dict[str, float] = {}
    for check in checks:
        values.update(check.values)
    return ClauseEntry(theorem=theorem,
                       clause=clause,
                       order=order,
                       fired=fired,
                       margin=min(margins) if margins else math.inf,
                       relations=[c.relation for c in checks],
                       values=values)


def any_of(theorem: str, clause: str, order: tuple[int, int] | None,
           entries: list[ClauseEntry]) -> ClauseEntry:
    '''Disjunction of already evaluated entries'''
    if any(e.fired is True for e in entries):
        fired: Fired = True
    elif any(e.fired == 'boundary' for e in entries):
        fired = 'boundary'
    else:
        fired = False
    values: dict[str, float] = {}
    for entry in entries:
        values.update(entry.values)
    return ClauseEntry(
        theorem=theorem,
        clause=clause,
        order=order,
        fired=fired,
        margin=max((e.margin for e in entries), default=-math.inf),
        relations=[' and '.join(e.relations) for e in entries],
        values=values)


def all_of(theorem: str, clause: str, order: tuple[int, int] | None,
           entries: list[ClauseEntry]) -> ClauseEntry:
    '''Conjunction of already evaluated entries'''
    if any(e.fired is False for e in entries):
        fired: Fired = False
    elif any(e.fired == 'boundary' for e in entries):
        fired = 'boundary'
    else:
        fired = True
    values: dict[str, float] = {}
    for entry in entries:
        values.update(entry.values)
    return ClauseEntry(
        theorem=theorem,
        clause=clause,
        order=order,
        fired=fired,
        margin=min((e.margin for e in entries), default=math.inf),
        relations=[e.clause for e in entries],
        values=values)


def evaluate_theorem(theorem: str,
                     params: ModelParams,
                     orders=BOTH_ORDERS,
                     **context) -> list[ClauseEntry]:
    '''Evaluates every clause registered for `theorem`; ordered clauses are
    evaluated once per patch order in `orders`.'''
    entries = []
    for clause, spec in get_clauses(theorem).items():
        if spec.ordered:
            for i, j in orders:
                checks = spec.func(params, i, j, **context)
                entries.append(clause_entry(theorem, clause, (i, j), checks))
        else:
            checks = spec.func(params, None, None, **context)
            entries.append(clause_entry(theorem, clause, None, checks))
    return entries


class ConditionReport(BaseDataClass):
    '''Evaluated clauses of one or more theorems plus summary flags'''
    entries: list[ClauseEntry] = []
    flags: dict[str, bool] = {}

    def find(self,
             theorem: str,
             clause: str,
             order: tuple[int, int] | None = None) -> ClauseEntry:
        '''the entry for `theorem`/`clause` (and `order` if given)'''
        for entry in self.entries:
            if (entry.theorem == theorem and entry.clause == clause
                    and (order is None or entry.order == tuple(order))):
                return entry
        raise KeyError(f'no clause {theorem}/{clause} for order {order}')

    def fired(self, theorem: str, clause: str | None = None) -> bool:
        '''True if any matching entry fired outside the band'''
        return any(e.holds for e in self.entries
                   if e.theorem == theorem and clause in (None, e.clause))

    def merge(self, other: 'ConditionReport') -> 'ConditionReport':
        '''concatenates entries and unites flags'''
        return ConditionReport(entries=self.entries + other.entries,
                               flags=self.flags | other.flags)

    def as_table(self) -> str:
        '''human readable rendering'''
        rows = [('theorem', 'clause', 'order', 'fired', 'margin')]
        for e in self.entries:
            order = '' if e.order is None else f'{e.order[0]},{e.order[1]}'
            rows.append((e.theorem, e.clause, order, str(e.fired),
                         f'{e.margin:.6g}'))
        widths = [max(len(r[c]) for r in rows) for c in range(5)]
        lines = ['  '.join(v.ljust(w) for v, w in zip(r, widths))
                 for r in rows]
        lines += [f'{k}: {v}' for k, v in sorted(self.flags.items())]
        return '\n'.join(lines)

# EOF
