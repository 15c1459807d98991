'''Registries of model conditions and theorem clauses.

Both live in one table keyed by (kind, path). A condition is filed under the
fully qualified name of the class defining it, a clause under the id of its
theorem. Within a path entries keep their registration order, which is the
order reports list them in.
'''
from collections import defaultdict
from typing import Any, Callable, NamedTuple

CONDITION = 'condition'
CLAUSE = 'clause'

_REGISTRY: defaultdict[tuple[str, str], dict[str, Any]] = defaultdict(dict)


class ConditionViolationError(ValueError):
    '''Exception thrown on violation of a constraint'''


class ClauseSpec(NamedTuple):
    '''A registered theorem clause.

    `ordered` clauses are evaluated once per patch order (i, j); unordered
    clauses receive `(None, None)` and are evaluated once.
    '''
    func: Callable
    ordered: bool


def _qualified(func: Callable) -> str:
    return '.'.join([func.__module__ or '', func.__qualname__])


def _register(kind: str, path: str, name: str, entry: Any,
              func: Callable) -> None:
    entries = _REGISTRY[(kind, path)]
    previous = entries.get(name)
    if previous is not None:
        previous_func = previous.func if kind == CLAUSE else previous
        if _qualified(previous_func) != _qualified(func):
            raise ValueError(f'{kind} {name!r} of {path!r} is already '
                             f'registered by {_qualified(previous_func)}')
    entries[name] = entry


def _entries(kind: str, path: str) -> dict[str, Any]:
    return dict(_REGISTRY.get((kind, path), {}))


def patchdyn_condition(condition):
    '''Registers a validation method of a model class; `validate_model`
    runs it for the class and its subclasses.'''
    path_components = condition.__qualname__.split('.')
    path = '.'.join([condition.__module__ or ''] + path_components[:-1])
    _register(CONDITION, path, path_components[-1], condition, condition)
    return condition


def theorem_clause(theorem: str, clause: str, ordered: bool = True):
    '''Registers a clause function under `theorem` with id `clause`. The
    function receives `(params, i, j)` and returns a list of comparisons.
    A clause id names one function per theorem.'''

    def decorator(func):
        _register(CLAUSE, theorem, clause, ClauseSpec(func, ordered), func)
        return func

    return decorator


def get_clauses(theorem: str) -> dict[str, ClauseSpec]:
    '''returns the clauses registered for a theorem in registration order'''
    return _entries(CLAUSE, theorem)


def get_conditions(cls, base_class) -> list:
    '''conditions of `cls` and its bases up to `base_class`, base first'''
    res = []
    index = cls.__mro__.index(base_class)
    for c in reversed(cls.__mro__[:index]):
        fqcn = '.'.join([c.__module__ or '', c.__qualname__])
        res += [('.'.join([fqcn, k]), v)
                for k, v in _entries(CONDITION, fqcn).items()]
    return res

# EOF
