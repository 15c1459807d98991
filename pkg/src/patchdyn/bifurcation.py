'''One- and two-parameter sweeps of the strength-driven model.

Every grid point records its interior equilibria and a region code derived
from their number. Points without interior equilibria are refined by probe
simulations from random interior starts, drawn from a counter-based
generator keyed by the seed and the grid coordinates so that the result
does not depend on scheduling.
'''
import logging
import math
import os
from collections import Counter
from enum import Enum
from multiprocessing import Pool
from typing import Callable, Hashable, Iterable

import numpy as np
from pydantic import Field

from patchdyn.base_data_class import BaseDataClass
from patchdyn.dynamics import (AttractorLabel, Horizon, Tolerances,
                               classify_attractor, integrate,
                               random_interior_states)
from patchdyn.equilibria import Equilibrium, interior_equilibria
from patchdyn.model import ModelParams, mu, nu, uptake
from patchdyn.registry import ConditionViolationError, patchdyn_condition
from patchdyn.stability import Stability, classify, eigenvalues

SWEEP_VARIABLES = ('rho1', 'rho2', 'a1', 'a2')
BRANCH_RADIUS = 0.05
TRANSITION_TOLERANCE = 1e-6
THREADS_ENV = 'PATCHDYN_THREADS'


class RegionCode(int, Enum):
    '''Region of a grid point; positive codes count interior equilibria.

    The integers are the `region_code` column of `sweep2d` output. Region
    maps colour them black (3), red (2) and blue (1); the empty cells split
    into yellow (0, predator 2 dies out) and white (-1, both predators die
    out). -2 marks empty cells whose simulations end elsewhere and 4 collects
    the rare cells with four or more interior equilibria.
    '''
    THREE_INTERIOR = 3
    TWO_INTERIOR = 2
    ONE_INTERIOR = 1
    NONE_Y2_EXTINCT = 0
    NONE_BOTH_EXTINCT = -1
    NONE_OTHER = -2
    FOUR_OR_MORE_INTERIOR = 4

    @classmethod
    def from_count(cls, count: int) -> 'RegionCode':
        if count >= 4:
            return cls.FOUR_OR_MORE_INTERIOR
        if count == 0:
            return cls.NONE_OTHER
        return cls(count)


def refine_empty_region(outcomes: list[AttractorLabel]) -> RegionCode:
    '''region of a point without interior equilibria from its probe
    outcomes'''
    labels = set(outcomes)
    if labels == {AttractorLabel.BOTH_PREDATORS_EXTINCT}:
        return RegionCode.NONE_BOTH_EXTINCT
    if labels and labels <= {
            AttractorLabel.BOUNDARY_Y2_EXTINCT,
            AttractorLabel.BOTH_PREDATORS_EXTINCT
    }:
        return RegionCode.NONE_Y2_EXTINCT
    return RegionCode.NONE_OTHER


class AxisSpec(BaseDataClass):
    '''A sampled parameter range; `lo == hi` samples the single value.'''
    name: str
    lo: float = Field(..., allow_inf_nan=False)
    hi: float = Field(..., allow_inf_nan=False)
    steps: int = Field(..., ge=1)

    @patchdyn_condition
    def condition_0_known_variable(self):
        '''only dispersal and predation rates are swept'''
        return self.name in SWEEP_VARIABLES

    @patchdyn_condition
    def condition_1_increasing(self):
        '''lo <= hi, and at least two steps for a proper range'''
        return (self.lo < self.hi and self.steps >= 2) or self.lo == self.hi

    @classmethod
    def parse(cls, name: str, text: str) -> 'AxisSpec':
        '''parses `lo:hi:steps`'''
        try:
            lo, hi, steps = text.split(':')
            spec = cls(name=name, lo=float(lo), hi=float(hi), steps=int(steps))
        except ValueError as exc:
            raise ValueError(
                f'axis {name} expects lo:hi:steps, got {text!r}') from exc
        spec.validate_model()
        return spec

    def values(self) -> np.ndarray:
        if self.lo == self.hi:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.steps)


class SweepRecord(BaseDataClass):
    '''interior equilibria and outcomes at one grid point'''
    values: dict[str, float]
    interior: list[Equilibrium]
    region: RegionCode
    outcomes: list[AttractorLabel] = []
    branches: list[int] = []
    degenerate: bool = False

    @patchdyn_condition
    def condition_0_region_matches_count(self):
        '''the region code agrees with the number of interior equilibria'''
        if self.region.value > 0:
            return RegionCode.from_count(len(self.interior)) is self.region
        return not self.interior

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def outcome(self) -> AttractorLabel | None:
        '''most frequent probe outcome, ties resolved by probe order'''
        if not self.outcomes:
            return None
        return Counter(self.outcomes).most_common(1)[0][0]


class Sweep2DGrid(BaseDataClass):
    '''Row-major grid; rows follow the first axis, columns the second'''
    params: ModelParams
    rows: AxisSpec
    cols: AxisSpec
    seed: int
    probes: int
    records: list[SweepRecord]

    @patchdyn_condition
    def condition_0_proper_axes(self):
        '''both axes strictly increasing with at least two steps'''
        return all(axis.lo < axis.hi and axis.steps >= 2
                   for axis in (self.rows, self.cols))

    @patchdyn_condition
    def condition_1_complete(self):
        return len(self.records) == self.rows.steps * self.cols.steps

    def cell(self, row: int, col: int) -> SweepRecord:
        return self.records[row * self.cols.steps + col]

    def region_counts(self) -> dict[RegionCode, int]:
        return dict(Counter(record.region for record in self.records))


def _cell_rng(seed: int, row: int, col: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(row, col))))


def probe_outcomes(params: ModelParams,
                   count: int,
                   rng: np.random.Generator,
                   horizon: Horizon | None = None,
                   tolerances: Tolerances | None = None
                   ) -> list[AttractorLabel]:
    '''simulates `count` random interior starts and labels their
    attractors'''
    horizon = horizon or Horizon()
    labels = []
    for s0 in random_interior_states(params, count, rng):
        traj = integrate(params, s0, horizon.t_end, tolerances)
        labels.append(classify_attractor(params, traj, horizon).label)
    return labels


def sweep_point(params: ModelParams,
                values: dict[str, float],
                probes: int,
                rng: np.random.Generator,
                horizon: Horizon | None = None,
                tolerances: Tolerances | None = None,
                probe_all: bool = False) -> SweepRecord:
    '''equilibria, region code and probe outcomes at one grid point'''
    point = params.replace(**values)
    found = interior_equilibria(point)
    region = RegionCode.from_count(len(found))
    outcomes = []
    if probes and (probe_all or not found):
        outcomes = probe_outcomes(point, probes, rng, horizon, tolerances)
    if not found:
        region = refine_empty_region(outcomes)
    return SweepRecord(values=values,
                       interior=found,
                       region=region,
                       outcomes=outcomes,
                       degenerate=any(e.fold for e in found))


def _match_branches(previous: list[Equilibrium], previous_ids: list[int],
                    current: list[Equilibrium], radius: float,
                    next_id: int) -> tuple[list[int], int]:
    '''assigns each current equilibrium the id of the nearest unclaimed
    previous one within `radius`, or a fresh id'''
    pairs = sorted(
        (float(np.linalg.norm(c.state.as_array() - p.state.as_array())), ci,
         pi) for ci, c in enumerate(current)
        for pi, p in enumerate(previous))
    ids: list[int | None] = [None] * len(current)
    claimed = set()
    for dist, ci, pi in pairs:
        if dist > radius:
            break
        if ids[ci] is None and pi not in claimed:
            ids[ci] = previous_ids[pi]
            claimed.add(pi)
    for ci, value in enumerate(ids):
        if value is None:
            ids[ci] = next_id
            next_id += 1
    return ids, next_id


def sweep1d(params: ModelParams,
            axis: AxisSpec,
            probes: int = 0,
            seed: int = 0,
            horizon: Horizon | None = None,
            tolerances: Tolerances | None = None) -> list[SweepRecord]:
    '''Sweeps one parameter. Equilibria at consecutive points are joined
    into branches when they lie within 0.05 |(K1, K2)| of each other; every
    point gets `probes` simulations from random interior starts.'''
    axis.validate_model()
    radius = BRANCH_RADIUS * math.hypot(params.K1, params.K2)
    records = []
    previous, previous_ids, next_id = [], [], 0
    for k, value in enumerate(axis.values()):
        record = sweep_point(params, {axis.name: float(value)},
                             probes,
                             _cell_rng(seed, k, 0),
                             horizon,
                             tolerances,
                             probe_all=True)
        ids, next_id = _match_branches(previous, previous_ids,
                                       record.interior, radius, next_id)
        records.append(record.replace(branches=ids))
        previous, previous_ids = record.interior, ids
    logging.info('sweep of %s over %d points found %d branches', axis.name,
                 len(records), next_id)
    return records


def _sweep_row(task) -> list[SweepRecord]:
    params, rows, cols, row, probes, seed, horizon, tolerances = task
    row_value = float(rows.values()[row])
    return [
        sweep_point(params, {
            rows.name: row_value,
            cols.name: float(col_value)
        }, probes, _cell_rng(seed, row, col), horizon, tolerances)
        for col, col_value in enumerate(cols.values())
    ]


def resolve_threads(threads: int | None) -> int:
    '''explicit count, else $PATCHDYN_THREADS, else the cpu count'''
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, 0)) or os.cpu_count() or 1
    return max(1, threads)


def sweep2d(params: ModelParams,
            rows: AxisSpec,
            cols: AxisSpec,
            probes: int = 3,
            seed: int = 0,
            threads: int | None = None,
            horizon: Horizon | None = None,
            tolerances: Tolerances | None = None) -> Sweep2DGrid:
    '''Region codes over a two-parameter grid. Rows are computed
    independently, in a process pool when more than one thread is
    allowed; records are always stored in (row, col) order.'''
    for axis in (rows, cols):
        axis.validate_model()
        if axis.lo == axis.hi:
            raise ConditionViolationError(
                f'grid axis {axis.name} needs a proper range')
    tasks = [(params, rows, cols, row, probes, seed, horizon, tolerances)
             for row in range(rows.steps)]
    workers = min(resolve_threads(threads), len(tasks))
    logging.info('sweeping %d x %d grid with %d worker(s)', rows.steps,
                 cols.steps, workers)
    if workers == 1:
        results = [_sweep_row(task) for task in tasks]
    else:
        with Pool(workers) as pool:
            results = list(pool.imap(_sweep_row, tasks))
    grid = Sweep2DGrid(params=params,
                       rows=rows,
                       cols=cols,
                       seed=seed,
                       probes=probes,
                       records=[r for row in results for r in row])
    grid.validate_model()
    return grid


class SinglePatchRegime(str, Enum):
    '''global behavior of an isolated Rosenzweig-MacArthur patch'''
    EXTINCTION = 'extinction'
    EQUILIBRIUM = 'equilibrium'
    CYCLE = 'cycle'


def single_patch_jacobian(r: float, K: float, a: float, d: float, x: float,
                          y: float) -> np.ndarray:
    '''Jacobian of `single_patch_rhs` at (x, y)'''
    p = uptake(a, x)
    slope = a / (1 + x)**2
    return np.array([[r * (1 - 2 * x / K) - slope * y, -p],
                     [slope * y, p - d]])


def single_patch_regime(K: float,
                        a: float,
                        d: float,
                        r: float = 1.0) -> SinglePatchRegime:
    '''Global behavior of an isolated patch. The predator dies out for
    mu >= K; otherwise (mu, nu) is classified from the eigenvalues of its
    Jacobian. An unstable focus is surrounded by an attracting limit cycle,
    a sink or a neutral focus attracts every interior orbit.'''
    mu_ = mu(a, d)
    if mu_ >= K:
        return SinglePatchRegime.EXTINCTION
    jac = single_patch_jacobian(r, K, a, d, mu_, nu(r, K, a, mu_))
    if classify(eigenvalues(jac)) is Stability.SOURCE:
        return SinglePatchRegime.CYCLE
    return SinglePatchRegime.EQUILIBRIUM


def locate_transition(label: Callable[[float], Hashable],
                      lo: float,
                      hi: float,
                      tol: float = TRANSITION_TOLERANCE) -> float:
    '''bisection for the point where `label` changes between `lo` and
    `hi`'''
    left = label(lo)
    if label(hi) == left:
        raise ValueError(f'no label change between {lo} and {hi}')
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if label(mid) == left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def regime_transitions(labels: Iterable[tuple[float, Hashable]],
                       label: Callable[[float], Hashable],
                       tol: float = TRANSITION_TOLERANCE) -> list[float]:
    '''refines every label change of a sampled sequence by bisection'''
    points = list(labels)
    return [
        locate_transition(label, x0, x1, tol)
        for (x0, l0), (x1, l1) in zip(points, points[1:]) if l0 != l1
    ]

# EOF
