'''Adaptive integration, attractor classification and Lyapunov descent
checks'''
import logging
import math
from enum import Enum
from typing import Callable

import numpy as np
from pydantic import Field

from patchdyn.base_data_class import BaseDataClass
from patchdyn.conditions import check_global_extinction
from patchdyn.model import (INDETERMINACY_BAND, InvalidInputError,
                            ModelParams, NumericalFailureError, State4,
                            Variant, derived, hat_quantities, rhs, uptake)

NEGATIVITY_SLACK = 1e-12
EXTINCTION_LEVEL = 1e-6
EQUILIBRIUM_RATE = 1e-6
CYCLE_AMPLITUDE = 1e-4
CYCLE_SIGN_CHANGES = 3
DESCENT_SLACK = 1e-9

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5, ),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_B_LOW = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)
_ERR = tuple(b - bl for b, bl in zip(_B + (0.0, ), _B_LOW))


class StiffnessError(NumericalFailureError):
    '''Exception thrown when the step size underflows'''

    def __init__(self, t: float, state):
        super().__init__(f'step size underflow at t={t!r}, state={state}')
        self.t = t
        self.state = list(state)


class DivergenceError(NumericalFailureError):
    '''Exception thrown when the state becomes non-finite'''

    def __init__(self, t: float):
        super().__init__(f'non-finite state at t={t!r}')
        self.t = t


class Tolerances(BaseDataClass):
    '''step control of the adaptive integrator'''
    abs_tol: float = Field(1e-9, gt=0)
    rel_tol: float = Field(1e-7, gt=0)
    max_step: float = Field(2.0, gt=0)
    min_step: float = Field(1e-14, gt=0)
    max_steps: int = Field(5_000_000, gt=0)


class Horizon(BaseDataClass):
    '''transient followed by the observation window'''
    transient: float = Field(2000.0, ge=0)
    window: float = Field(3000.0, gt=0)

    @property
    def t_end(self) -> float:
        return self.transient + self.window


class Trajectory(BaseDataClass):
    '''sampled solution; `states` has one row per sample time'''
    t: np.ndarray
    states: np.ndarray
    accepted: int
    rejected: int
    status: str = 'completed'

    def final(self) -> np.ndarray:
        return self.states[-1]

    def final_state(self) -> State4:
        return State4.from_array(self.states[-1])

    def window(self, start: float) -> tuple[np.ndarray, np.ndarray]:
        '''samples with t >= start'''
        mask = self.t >= start
        return self.t[mask], self.states[mask]


def _initial_state(y0) -> np.ndarray:
    if isinstance(y0, State4):
        return y0.as_array()
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise InvalidInputError(f'non-finite initial state {y0}')
    if np.any(y < 0):
        raise InvalidInputError(f'negative initial state {y0}')
    return y


def integrate_system(fun: Callable[[np.ndarray], np.ndarray],
                     y0,
                     t_end: float,
                     tolerances: Tolerances | None = None,
                     sample_dt: float | None = None,
                     fixed_step: float | None = None) -> Trajectory:
    '''Dormand-Prince 5(4) integration of the autonomous system y' = fun(y).

    Steps are accepted when every component of the embedded error is below
    abs_tol + rel_tol * |y|; a step that would drive a component below
    -1e-12 is rejected and halved, smaller negatives are clamped to zero.
    Without `sample_dt` every accepted step is recorded; with it, steps are
    shortened to land on the multiples of `sample_dt` and only those are
    recorded. `fixed_step` disables error control.
    '''
    tol = tolerances or Tolerances()
    if not t_end > 0:
        raise InvalidInputError(f't_end must be positive, got {t_end}')
    y = _initial_state(y0)
    f = fun(y)
    t = 0.0
    h = fixed_step or min(tol.max_step, 1e-2 * t_end, 1e-2)
    times, states = [0.0], [y.copy()]
    accepted = rejected = 0
    sample_index = 1
    while t < t_end:
        if accepted + rejected >= tol.max_steps:
            raise NumericalFailureError(
                f'step budget of {tol.max_steps} exhausted at t={t!r}')
        target = t_end
        if sample_dt:
            target = min(sample_index * sample_dt, t_end)
        h = min(fixed_step or h, tol.max_step, target - t)
        if h < tol.min_step:
            if target - t < tol.min_step:
                t = target
                times.append(t)
                states.append(y.copy())
                sample_index += 1
                continue
            logging.error('step size underflow at t=%r', t)
            raise StiffnessError(t, y)

        try:
            stages = [f]
            for row in _A[1:]:
                stages.append(
                    fun(y + h * sum(c * k for c, k in zip(row, stages))))
            y_new = y + h * sum(b * k for b, k in zip(_B, stages))
            if not np.all(np.isfinite(y_new)):
                raise InvalidInputError(f'non-finite state {y_new}')
            f_new = fun(y_new)
        except InvalidInputError as exc:
            logging.error('integration diverged at t=%r', t)
            raise DivergenceError(t) from exc
        stages.append(f_new)

        if fixed_step:
            ratio = 0.0
        else:
            err = h * sum(e * k for e, k in zip(_ERR, stages))
            scale = tol.abs_tol + tol.rel_tol * np.maximum(
                np.abs(y), np.abs(y_new))
            ratio = float(np.max(np.abs(err) / scale))
        if np.min(y_new) < -NEGATIVITY_SLACK:
            rejected += 1
            h *= 0.5
            continue
        if ratio > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * ratio**-0.2)
            continue

        accepted += 1
        t = target if target - t == h else t + h
        if np.min(y_new) < 0:
            y_new = np.maximum(y_new, 0.0)
            f_new = fun(y_new)
        y, f = y_new, f_new
        if not sample_dt or t == target:
            times.append(t)
            states.append(y.copy())
            if sample_dt:
                sample_index += 1
        if not fixed_step:
            h *= 5.0 if ratio == 0 else min(5.0, max(0.2,
                                                     0.9 * ratio**-0.2))
    return Trajectory(t=np.array(times),
                      states=np.array(states),
                      accepted=accepted,
                      rejected=rejected)


def integrate(params: ModelParams,
              s0,
              t_end: float,
              tolerances: Tolerances | None = None,
              sample_dt: float | None = None) -> Trajectory:
    '''integrates the selected model variant from `s0` up to `t_end`'''
    return integrate_system(lambda y: rhs(params, y),
                            s0,
                            t_end,
                            tolerances=tolerances,
                            sample_dt=sample_dt)


class AttractorLabel(str, Enum):
    '''long-run outcome of a trajectory; ordinals are the outcome codes'''
    INTERIOR_EQUILIBRIUM = 'InteriorEquilibrium'
    INTERIOR_CYCLE = 'InteriorCycle'
    BOUNDARY_Y1_EXTINCT = 'BoundaryY1Extinct'
    BOUNDARY_Y2_EXTINCT = 'BoundaryY2Extinct'
    BOTH_PREDATORS_EXTINCT = 'BothPredatorsExtinct'
    UNDETERMINED = 'Undetermined'
    BOUNDARY_X1_EXTINCT = 'BoundaryX1Extinct'
    BOUNDARY_X2_EXTINCT = 'BoundaryX2Extinct'

    @property
    def code(self) -> int:
        return list(AttractorLabel).index(self)

    @property
    def predator_extinct(self) -> bool:
        return self in (AttractorLabel.BOUNDARY_Y1_EXTINCT,
                        AttractorLabel.BOUNDARY_Y2_EXTINCT,
                        AttractorLabel.BOTH_PREDATORS_EXTINCT)


class AttractorWitness(BaseDataClass):
    '''final window statistics backing a label'''
    minimum: list[float]
    maximum: list[float]
    rhs_norm: float
    derivative_sign_changes: list[int]


class AttractorClass(BaseDataClass):
    label: AttractorLabel
    witness: AttractorWitness


def _sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def classify_attractor(params: ModelParams,
                       traj: Trajectory,
                       horizon: Horizon | None = None) -> AttractorClass:
    '''Labels the final window of `traj`: extinction by the 1e-6 levels,
    equilibrium if the vector field stays below 1e-6, cycle if some
    component oscillates with peak-to-peak above 1e-4.'''
    horizon = horizon or Horizon()
    t_end = float(traj.t[-1])
    if t_end < horizon.t_end:
        logging.warning('trajectory ends at %g before transient + window %g',
                        t_end, horizon.t_end)
    _, window = traj.window(max(0.0, t_end - horizon.window))
    rates = np.array([rhs(params, s) for s in window])
    lo, hi = window.min(axis=0), window.max(axis=0)
    rhs_norm = float(np.max(np.abs(rates)))
    changes = [_sign_changes(rates[:, k]) for k in range(window.shape[1])]
    witness = AttractorWitness(minimum=lo.tolist(),
                               maximum=hi.tolist(),
                               rhs_norm=rhs_norm,
                               derivative_sign_changes=changes)
    if max(hi[1], hi[3]) < EXTINCTION_LEVEL:
        label = AttractorLabel.BOTH_PREDATORS_EXTINCT
    elif hi[3] < EXTINCTION_LEVEL:
        label = AttractorLabel.BOUNDARY_Y2_EXTINCT
    elif hi[1] < EXTINCTION_LEVEL:
        label = AttractorLabel.BOUNDARY_Y1_EXTINCT
    elif hi[0] < EXTINCTION_LEVEL:
        label = AttractorLabel.BOUNDARY_X1_EXTINCT
    elif hi[2] < EXTINCTION_LEVEL:
        label = AttractorLabel.BOUNDARY_X2_EXTINCT
    elif rhs_norm < EQUILIBRIUM_RATE:
        label = AttractorLabel.INTERIOR_EQUILIBRIUM
    elif any(hi[k] - lo[k] > CYCLE_AMPLITUDE
             and changes[k] >= CYCLE_SIGN_CHANGES for k in range(4)):
        label = AttractorLabel.INTERIOR_CYCLE
    else:
        label = AttractorLabel.UNDETERMINED
    return AttractorClass(label=label, witness=witness)


class LyapunovKind(str, Enum):
    '''Lyapunov functions from the global stability arguments'''
    EXTINCTION = 'extinction'
    SUBSYSTEM = 'subsystem'
    PREY_EXTINCTION = 'prey-extinction'
    SYMMETRIC = 'symmetric'


class LyapunovReport(BaseDataClass):
    '''descent statistics of a Lyapunov function along a trajectory'''
    kind: LyapunovKind
    patch: int | None = None
    applicable: bool
    samples: int = 0
    skipped: int = 0
    max_dvdt: float = -math.inf
    max_increase: float = -math.inf
    violations: int = 0
    initial_value: float | None = None
    final_value: float | None = None

    @property
    def descending(self) -> bool:
        return (self.applicable and self.violations == 0
                and self.max_dvdt <= DESCENT_SLACK)


def _prey_term(x: float, star: float, a: float) -> tuple[float, float]:
    '''integral from star to x of 1 - p(star)/p(s) ds and its derivative'''
    if x <= 0:
        raise ValueError('prey term undefined at zero prey')
    p_star = uptake(a, star)
    value = (x - star) - (p_star / a) * (math.log(x / star) + (x - star))
    return value, 1 - p_star / uptake(a, x)


def _log_term(y: float, star: float) -> tuple[float, float]:
    '''integral from star to y of 1 - star/s ds and its derivative'''
    if star == 0:
        return y, 1.0
    if y <= 0:
        raise ValueError('logarithmic term undefined at zero density')
    return (y - star) - star * math.log(y / star), 1 - star / y


_X, _Y = {1: 0, 2: 2}, {1: 1, 2: 3}


def _extinction_function(params: ModelParams, patch: int | None):
    weights = ((params.rho2, params.rho1) if not params.uncoupled else
               (1.0, 1.0))

    def function(s):
        value, grad = 0.0, np.zeros(4)
        for i, w in zip((1, 2), weights):
            pt = params.patch(i)
            v, g = _prey_term(s[_X[i]], pt.K, pt.a)
            value += w * (v + s[_Y[i]])
            grad[_X[i]], grad[_Y[i]] = w * g, w
        return value, grad

    return function


def _subsystem_function(params: ModelParams, i: int):
    j = 3 - i
    hq = hat_quantities(params)
    pi, pj = params.patch(i), params.patch(j)
    outer = pj.rho + pj.d

    def function(s):
        vx, gx = _prey_term(s[_X[i]], hq.muhat(i), pi.a)
        vy, gy = _log_term(s[_Y[i]], hq.nuhat(i))
        vo, go = _log_term(s[_Y[j]], hq.cross(i, j))
        grad = np.zeros(4)
        grad[_X[i]], grad[_Y[i]], grad[_Y[j]] = (outer * gx, outer * gy,
                                                 pi.rho * go)
        return outer * (vx + vy) + pi.rho * vo, grad

    return function


def _prey_extinction_function(params: ModelParams, i: int):
    j = 3 - i
    hq = hat_quantities(params)
    pi, pj = params.patch(i), params.patch(j)
    outer = pi.rho + pi.d

    def function(s):
        vx, gx = _prey_term(s[_X[j]], hq.muhat(j), pj.a)
        vy, gy = _log_term(s[_Y[j]], hq.nuhat(j))
        vo, go = _log_term(s[_Y[i]], hq.cross(j, i))
        grad = np.zeros(4)
        grad[_X[j]], grad[_Y[j]] = outer * gx, outer * gy
        grad[_X[i]], grad[_Y[i]] = pj.rho, pj.rho * go
        return (outer * (vx + vy) + pj.rho * (s[_X[i]] + vo)), grad

    return function


def _symmetric_function(params: ModelParams, patch: int | None):
    dq = derived(params)
    weights = ((params.rho2, params.rho1) if not params.uncoupled else
               (1.0, 1.0))

    def function(s):
        value, grad = 0.0, np.zeros(4)
        for i, w in zip((1, 2), weights):
            vx, gx = _prey_term(s[_X[i]], dq.mu(i), params.patch(i).a)
            vy, gy = _log_term(s[_Y[i]], dq.nu(i))
            value += w * (vx + vy)
            grad[_X[i]], grad[_Y[i]] = w * gx, w * gy
        return value, grad

    return function


def symmetric(params: ModelParams) -> bool:
    '''r = 1 and equal constants in both patches'''
    pairs = ((params.r, 1.0), (params.a1, params.a2), (params.d1, params.d2),
             (params.K1, params.K2))
    return all(abs(u - v) < INDETERMINACY_BAND for u, v in pairs)


def _applicable(params: ModelParams, kind: LyapunovKind,
                patch: int | None) -> bool:
    if kind is LyapunovKind.EXTINCTION:
        return (params.variant is Variant.STRENGTH
                and check_global_extinction(params).flags[
                    'global_BothK_sufficient'])
    if params.variant is not Variant.DENSITY:
        return False
    hq = hat_quantities(params)
    if kind is LyapunovKind.SYMMETRIC:
        dq = derived(params)
        return symmetric(params) and dq.hopf1 < dq.mu1 < params.K1
    i = patch or 1
    if kind is LyapunovKind.SUBSYSTEM:
        return (params.patch(i).K - 1) / 2 < hq.muhat(i) < params.patch(i).K
    j = 3 - i
    pi, pj = params.patch(i), params.patch(j)
    return ((pj.K - 1) / 2 < hq.muhat(j) < pj.K
            and pi.r * (pi.K + 1)**2 / (4 * pi.a * pi.K) < hq.cross(j, i))


_FUNCTIONS = {
    LyapunovKind.EXTINCTION: _extinction_function,
    LyapunovKind.SUBSYSTEM: _subsystem_function,
    LyapunovKind.PREY_EXTINCTION: _prey_extinction_function,
    LyapunovKind.SYMMETRIC: _symmetric_function,
}


def lyapunov_function(params: ModelParams,
                      kind: LyapunovKind,
                      patch: int | None = None):
    '''callable s -> (V(s), grad V(s)); raises ValueError where undefined'''
    if kind in (LyapunovKind.SUBSYSTEM, LyapunovKind.PREY_EXTINCTION):
        return _FUNCTIONS[kind](params, patch or 1)
    return _FUNCTIONS[kind](params, patch)


def lyapunov_check(params: ModelParams,
                   kind: LyapunovKind,
                   traj: Trajectory,
                   patch: int | None = None) -> LyapunovReport:
    '''Evaluates V and dV/dt = grad V . f along the samples of `traj`.
    `patch` selects the surviving predator for the subsystem function and
    the vanishing prey for the prey-extinction function.'''
    kind = LyapunovKind(kind)
    if not _applicable(params, kind, patch):
        return LyapunovReport(kind=kind, patch=patch, applicable=False)
    function = lyapunov_function(params, kind, patch)
    values, skipped, max_dvdt = [], 0, -math.inf
    for s in traj.states:
        try:
            value, grad = function(s)
        except (ValueError, ZeroDivisionError):
            skipped += 1
            continue
        values.append(value)
        max_dvdt = max(max_dvdt, float(grad @ rhs(params, s)))
    increases = np.diff(values) if len(values) > 1 else np.zeros(0)
    report = LyapunovReport(
        kind=kind,
        patch=patch,
        applicable=True,
        samples=len(values),
        skipped=skipped,
        max_dvdt=max_dvdt,
        max_increase=float(increases.max()) if increases.size else -math.inf,
        violations=int(np.count_nonzero(increases > DESCENT_SLACK)),
        initial_value=values[0] if values else None,
        final_value=values[-1] if values else None)
    if report.violations or max_dvdt > DESCENT_SLACK:
        logging.info('%s Lyapunov function increases along trajectory '
                     '(max dV/dt %g, %d violations)', kind.value, max_dvdt,
                     report.violations)
    return report


def random_interior_states(params: ModelParams, count: int,
                           rng: np.random.Generator) -> list[np.ndarray]:
    '''uniform starts in (0, K1] x (0, 2 nu_max] x (0, K2] x (0, 2 nu_max]'''
    dq = derived(params)
    y_cap = max([2 * v for v in (dq.nu1, dq.nu2) if math.isfinite(v)] +
                [1.0])
    low = np.full(4, 1e-3)
    high = np.array([params.K1, y_cap, params.K2, y_cap])
    return [rng.uniform(low, high) for _ in range(count)]

# EOF
