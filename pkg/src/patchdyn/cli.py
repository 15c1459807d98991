'''Command line entry point `patchdyn`.

Every subcommand reads one flat JSON parameter file whose `variant` key
selects the dispersal model. `conditions` prints a table unless `--json` is
given. JSON documents carry `@type`/`@version` tags, CSV files a
`# patchdyn-schema:` header together with the parameters and the seed.
Numbers are written with 17 significant digits so that reruns
are byte-identical. Exit codes: 0 success, 2 usage or input errors,
3 numerical failures.
'''
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Literal

from pydantic import Field, ValidationError

from patchdyn import __version__
from patchdyn.base_data_class import (CSV_SCHEMA_TAG, SCHEMA_VERSION,
                                      BaseDataClass)
from patchdyn.bifurcation import AxisSpec, sweep1d, sweep2d
from patchdyn.classic import (classic_boundary_equilibria,
                              classic_condition_report,
                              classic_interior_equilibria, compare_models)
from patchdyn.conditions import condition_report
from patchdyn.dynamics import Horizon, Tolerances, integrate
from patchdyn.equilibria import (Equilibrium, boundary_equilibria,
                                 interior_equilibria,
                                 interior_existence_report)
from patchdyn.model import (ModelParams, NotApplicableError,
                            NumericalFailureError, State4, Variant)
from patchdyn.registry import ConditionViolationError
from patchdyn.report import ConditionReport
from patchdyn.stability import (BoundaryPredicateReport, CharQuartic,
                                HurwitzReport, PointStability,
                                boundary_stability_predicates,
                                equal_death_quartic, equal_death_rho_threshold,
                                hurwitz_report, point_stability)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
SLOTS = 3
COMMANDS = ('simulate', 'equilibria', 'stability', 'conditions', 'sweep1d',
            'sweep2d', 'compare')


class RunConfig(BaseDataClass):
    '''Everything a run depends on; printed by `--show-defaults`'''
    command: str | None = None
    params: str | None = None
    out: str | None = None
    format: Literal['csv', 'json'] | None = None
    tolerances: Tolerances = Tolerances()
    horizon: Horizon = Horizon()
    init: list[float] | None = None
    state: State4 | None = None
    at: int | None = Field(None, ge=0)
    t_end: float = 5000.0
    sample_dt: float | None = None
    axes: list[AxisSpec] = []
    seed: int = 0
    probes: int = 3
    threads: int | None = None


class EquilibriumInventory(BaseDataClass):
    params: ModelParams
    boundary: list[Equilibrium]
    interior: list[Equilibrium]


class StabilityDocument(BaseDataClass):
    '''boundary predicates and, for equal death rates, the quartic test'''
    params: ModelParams
    boundary: list[Equilibrium]
    boundary_predicates: list[BoundaryPredicateReport] = []
    quartic: CharQuartic | None = None
    hurwitz: HurwitzReport | None = None
    rho_thresholds: list[float] | None = None


class PointDocument(BaseDataClass):
    '''linearization at a state given on the command line'''
    params: ModelParams
    point: PointStability


class ConditionsDocument(BaseDataClass):
    params: ModelParams
    report: ConditionReport


def _number(value) -> str:
    return format(float(value), '.17g')


def _csv_header(params: ModelParams, seed: int | None) -> list[str]:
    lines = [
        f'{CSV_SCHEMA_TAG} {SCHEMA_VERSION}',
        f'# params: {params.model_dump_json()}',
    ]
    if seed is not None:
        lines.append(f'# seed: {seed}')
    return lines


def _state_list(text: str) -> list[float]:
    values = [float(v) for v in text.split(',')]
    if len(values) != 4:
        raise argparse.ArgumentTypeError(
            f'expected x1,y1,x2,y2, got {text!r}')
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='patchdyn',
        description='Two-patch predator-prey models with predator dispersal')
    parser.add_argument('--version',
                        action='version',
                        version=f'%(prog)s {__version__}')
    parser.add_argument('--show-defaults',
                        action='store_true',
                        help='print the default run configuration and exit')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--params', required=True, help='parameter JSON')
    common.add_argument('--out', help='output file (default: stdout)')
    common.add_argument('--format', choices=('csv', 'json'))
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--threads',
                        type=int,
                        help='worker cap (default: $PATCHDYN_THREADS)')
    common.add_argument('--abs-tol', type=float, default=1e-9)
    common.add_argument('--rel-tol', type=float, default=1e-7)
    common.add_argument('--max-step', type=float, default=2.0)
    common.add_argument('--transient', type=float, default=2000.0)
    common.add_argument('--window', type=float, default=3000.0)
    common.add_argument('-v',
                        '--verbose',
                        action='count',
                        default=0,
                        help='-v info, -vv debug')
    commands = parser.add_subparsers(dest='command')

    simulate = commands.add_parser('simulate',
                                   parents=[common],
                                   help='integrate one trajectory')
    simulate.add_argument('--init', type=_state_list, required=True)
    simulate.add_argument('--t-end', type=float, default=5000.0)
    simulate.add_argument('--sample-dt', type=float)

    commands.add_parser('equilibria',
                        parents=[common],
                        help='boundary and interior equilibria')
    conditions = commands.add_parser(
        'conditions',
        parents=[common],
        help='persistence and extinction clauses')
    conditions.add_argument('--json',
                            action='store_true',
                            help='write the report as JSON instead of a table')

    stability = commands.add_parser('stability',
                                    parents=[common],
                                    help='boundary stability predicates')
    where = stability.add_mutually_exclusive_group()
    where.add_argument('--state',
                       type=_state_list,
                       help='linearize at x1,y1,x2,y2')
    where.add_argument('--at',
                       type=int,
                       help='linearize at the interior equilibrium with '
                       'this index')

    one = commands.add_parser('sweep1d',
                              parents=[common],
                              help='sweep one parameter')
    one.add_argument('--vary',
                     choices=('rho1', 'rho2', 'a1', 'a2'),
                     required=True)
    one.add_argument('--range', required=True, help='lo:hi:steps')
    one.add_argument('--probes', type=int, default=0)

    two = commands.add_parser('sweep2d',
                              parents=[common],
                              help='sweep both dispersal rates')
    two.add_argument('--rho1', required=True, help='lo:hi:steps')
    two.add_argument('--rho2', required=True, help='lo:hi:steps')
    two.add_argument('--probes', type=int, default=3)

    compare = commands.add_parser('compare',
                                  parents=[common],
                                  help='strength versus density dispersal')
    compare.add_argument('--probes', type=int, default=3)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    axes = []
    if args.command == 'sweep1d':
        axes = [AxisSpec.parse(args.vary, args.range)]
    elif args.command == 'sweep2d':
        axes = [AxisSpec.parse('rho1', args.rho1),
                AxisSpec.parse('rho2', args.rho2)]
    state = getattr(args, 'state', None)
    if state is not None:
        state = State4(**dict(zip(State4.model_fields, state)))
    output_format = 'json' if getattr(args, 'json', False) else args.format
    return RunConfig(command=args.command,
                     params=args.params,
                     out=args.out,
                     format=output_format,
                     tolerances=Tolerances(abs_tol=args.abs_tol,
                                           rel_tol=args.rel_tol,
                                           max_step=args.max_step),
                     horizon=Horizon(transient=args.transient,
                                     window=args.window),
                     init=getattr(args, 'init', None),
                     state=state,
                     at=getattr(args, 'at', None),
                     t_end=getattr(args, 't_end', 5000.0),
                     sample_dt=getattr(args, 'sample_dt', None),
                     axes=axes,
                     seed=args.seed,
                     probes=getattr(args, 'probes', 0),
                     threads=args.threads)


def load_params(path: str) -> ModelParams:
    '''reads and validates a flat parameter file'''
    params = ModelParams.model_validate_json(Path(path).read_text())
    params.validate_model()
    return params


def _simulate(config: RunConfig, params: ModelParams) -> str:
    traj = integrate(params, config.init, config.t_end, config.tolerances,
                     config.sample_dt)
    lines = _csv_header(params, None) + ['t,x1,y1,x2,y2']
    for t, state in zip(traj.t, traj.states):
        lines.append(','.join(_number(v) for v in (t, *state)))
    return '\n'.join(lines) + '\n'


def _equilibria(config: RunConfig, params: ModelParams) -> str:
    if params.variant is Variant.STRENGTH:
        boundary = boundary_equilibria(params)
        interior = interior_equilibria(params)
    else:
        boundary = classic_boundary_equilibria(params)
        interior = classic_interior_equilibria(params)
    doc = EquilibriumInventory(params=params,
                               boundary=boundary,
                               interior=interior)
    return doc.patchdyn_serialize(indent=2) + '\n'


def _point(config: RunConfig, params: ModelParams) -> str:
    state = config.state
    if state is None:
        if params.variant is Variant.STRENGTH:
            interior = interior_equilibria(params)
        else:
            interior = classic_interior_equilibria(params)
        if config.at >= len(interior):
            raise ValueError(f'--at {config.at}: only {len(interior)} '
                             'interior equilibria')
        state = interior[config.at].state
    doc = PointDocument(params=params, point=point_stability(params, state))
    return doc.patchdyn_serialize(indent=2) + '\n'


def _stability(config: RunConfig, params: ModelParams) -> str:
    if config.state is not None or config.at is not None:
        return _point(config, params)
    if params.variant is Variant.DENSITY:
        doc = StabilityDocument(params=params,
                                boundary=classic_boundary_equilibria(params))
        return doc.patchdyn_serialize(indent=2) + '\n'
    predicates = [boundary_stability_predicates(params, i) for i in (1, 2)]
    quartic = hurwitz = thresholds = None
    try:
        quartic = equal_death_quartic(params)
        hurwitz = hurwitz_report(quartic)
        thresholds = [equal_death_rho_threshold(params, i) for i in (1, 2)]
    except NotApplicableError as exc:
        logging.info('equal-death quartic skipped: %s', exc)
    doc = StabilityDocument(params=params,
                            boundary=boundary_equilibria(params),
                            boundary_predicates=predicates,
                            quartic=quartic,
                            hurwitz=hurwitz,
                            rho_thresholds=thresholds)
    return doc.patchdyn_serialize(indent=2) + '\n'


def _conditions(config: RunConfig, params: ModelParams) -> str:
    if params.variant is Variant.STRENGTH:
        report = condition_report(params).merge(
            interior_existence_report(params))
    else:
        report = classic_condition_report(params)
    if config.format != 'json':
        return report.as_table() + '\n'
    doc = ConditionsDocument(params=params, report=report)
    return doc.patchdyn_serialize(indent=2) + '\n'


def _slot(eq: Equilibrium | None) -> list[str]:
    if eq is None:
        return [''] * 5
    return [_number(v) for v in eq.state.as_array()] + [eq.stability.value]


def _sweep1d(config: RunConfig, params: ModelParams) -> str:
    axis = config.axes[0]
    records = sweep1d(params, axis, config.probes, config.seed,
                      config.horizon, config.tolerances)
    slots = max([SLOTS] + [r.n_interior for r in records])
    columns = [axis.name, 'n_interior']
    for k in range(1, slots + 1):
        columns += [f'x1_{k}', f'y1_{k}', f'x2_{k}', f'y2_{k}', f'class_{k}']
    columns.append('outcome_code')
    lines = _csv_header(params, config.seed) + [','.join(columns)]
    for record in records:
        row = [_number(record.values[axis.name]), str(record.n_interior)]
        for k in range(slots):
            row += _slot(record.interior[k] if k < record.n_interior else None)
        row.append('' if record.outcome is None else str(record.outcome.code))
        lines.append(','.join(row))
    return '\n'.join(lines) + '\n'


def _sweep2d(config: RunConfig, params: ModelParams) -> str:
    rows, cols = config.axes
    grid = sweep2d(params, rows, cols, config.probes, config.seed,
                   config.threads, config.horizon, config.tolerances)
    if config.format == 'json':
        return grid.patchdyn_serialize() + '\n'
    lines = _csv_header(params, config.seed) + [
        'rho1,rho2,n_interior,region_code,outcome_code'
    ]
    for record in grid.records:
        outcome = record.outcome
        lines.append(','.join([
            _number(record.values['rho1']),
            _number(record.values['rho2']),
            str(record.n_interior),
            str(record.region.value),
            '' if outcome is None else str(outcome.code)
        ]))
    return '\n'.join(lines) + '\n'


def _compare(config: RunConfig, params: ModelParams) -> str:
    record = compare_models(params, config.probes, config.seed,
                            config.threads, config.horizon, config.tolerances)
    return record.patchdyn_serialize(indent=2) + '\n'


_HANDLERS = {
    'simulate': _simulate,
    'equilibria': _equilibria,
    'stability': _stability,
    'conditions': _conditions,
    'sweep1d': _sweep1d,
    'sweep2d': _sweep2d,
    'compare': _compare,
}


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text)


def main(argv: list[str] | None = None) -> int:
    '''runs one subcommand and returns the process exit code'''
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.show_defaults:
        sys.stdout.write(RunConfig().model_dump_json(indent=2) + '\n')
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        logging.error('a subcommand is required: %s', ', '.join(COMMANDS))
        return EXIT_USAGE
    logging.basicConfig(stream=sys.stderr,
                        level=(logging.WARNING, logging.INFO,
                               logging.DEBUG)[min(args.verbose, 2)],
                        format='%(levelname)s: %(message)s')
    try:
        config = _config(args)
        config.validate_model()
        params = load_params(config.params)
    except OSError as exc:
        logging.error('cannot read parameter file: %s', exc)
        return EXIT_USAGE
    except (json.JSONDecodeError, ValidationError) as exc:
        logging.error('malformed input: %s', exc)
        return EXIT_USAGE
    except (ValueError, ConditionViolationError) as exc:
        logging.error('invalid arguments: %s', exc)
        return EXIT_USAGE
    try:
        text = _HANDLERS[config.command](config, params)
    except NumericalFailureError as exc:
        logging.error('numerical failure: %s', exc)
        return EXIT_NUMERICAL
    except NotApplicableError as exc:
        logging.error('not applicable: %s', exc)
        return EXIT_USAGE
    except ValueError as exc:
        logging.error('invalid input: %s', exc)
        return EXIT_USAGE
    try:
        _emit(text, config.out)
    except OSError as exc:
        logging.error('cannot write output: %s', exc)
        return EXIT_USAGE
    return EXIT_OK

# EOF
