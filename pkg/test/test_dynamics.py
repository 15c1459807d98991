'''integrator, attractor labels and Lyapunov descent'''
# pylint: disable=invalid-name
import math

import numpy as np
import pytest

from patchdyn.dynamics import (AttractorLabel, DivergenceError, Horizon,
                               LyapunovKind, StiffnessError, Tolerances,
                               classify_attractor, integrate,
                               integrate_system, lyapunov_check,
                               random_interior_states)
from patchdyn.model import (InvalidInputError, ModelParams,
                            NumericalFailureError, hat_quantities, rhs,
                            single_patch_rhs)
from oracles import random_params

STABLE_STABLE = ModelParams(r=1.5, K1=5, K2=3, a1=0.25, a2=0.15, d1=0.2,
                            d2=0.1)
CYCLE_CYCLE = STABLE_STABLE.replace(a1=0.35, a2=0.25)
STARVING = ModelParams(r=1.5, K1=2, K2=1.5, a1=0.25, a2=0.15, d1=0.3,
                       d2=0.25, rho1=0.1, rho2=0.05)
TIGHT = Tolerances(abs_tol=1e-12, rel_tol=1e-10)


def _logistic(x0, r, K, t):
    return K / (1 + (K / x0 - 1) * math.exp(-r * t))


def test_zero_predators_stay_zero():
    '''without predators both prey grow logistically'''
    params = STABLE_STABLE.replace(rho1=0.3, rho2=0.2)
    traj = integrate(params, (1.0, 0.0, 0.5, 0.0), 20.0, sample_dt=1.0)
    assert np.array_equal(traj.t, np.arange(21.0))
    assert np.all(traj.states[:, [1, 3]] == 0)
    x1, _, x2, _ = traj.final()
    assert x1 == pytest.approx(_logistic(1.0, 1.0, 5.0, 20.0), abs=1e-6)
    assert x2 == pytest.approx(_logistic(0.5, 1.5, 3.0, 20.0), abs=1e-6)


def test_states_stay_non_negative():
    '''trajectories never leave the closed positive orthant'''
    rng = np.random.default_rng(41)
    for variant in ('strength', 'density'):
        for _ in range(10):
            params = random_params(rng, variant=variant)
            s0 = rng.uniform(0.0, 3.0, size=4)
            traj = integrate(params, s0, 50.0)
            assert traj.states.min() >= 0
            assert traj.accepted > 0


def test_fifth_order_convergence():
    '''halving a fixed step cuts the error by far more than 8'''

    def fun(y):
        return rhs(CYCLE_CYCLE, y)

    y0 = (1.0, 1.0, 1.0, 1.0)
    reference = integrate_system(fun, y0, 10.0, fixed_step=0.0125).final()
    coarse = integrate_system(fun, y0, 10.0, fixed_step=0.1).final()
    fine = integrate_system(fun, y0, 10.0, fixed_step=0.05).final()
    err_coarse = np.max(np.abs(coarse - reference))
    err_fine = np.max(np.abs(fine - reference))
    assert err_coarse / err_fine >= 8


def test_adaptive_accuracy():
    '''default tolerances against a fine fixed-step reference'''
    y0 = (1.0, 1.0, 1.0, 1.0)
    adaptive = integrate(CYCLE_CYCLE, y0, 10.0).final()
    reference = integrate_system(lambda y: rhs(CYCLE_CYCLE, y),
                                 y0,
                                 10.0,
                                 fixed_step=0.005).final()
    assert np.max(np.abs(adaptive - reference)) < 1e-5


def test_single_patch_limit_cycle():
    '''a strongly predated patch keeps oscillating'''

    def fun(y):
        return np.array(single_patch_rhs(1.0, 5.0, 0.35, 0.2, y[0], y[1]))

    traj = integrate_system(fun, (1.0, 1.0), 2000.0)
    _, window = traj.window(1600.0)
    assert window[:, 0].max() - window[:, 0].min() > 1e-2


def test_invalid_inputs():
    '''negative starts and empty horizons are rejected'''
    with pytest.raises(InvalidInputError):
        integrate(STABLE_STABLE, (-1.0, 1.0, 1.0, 1.0), 10.0)
    with pytest.raises(InvalidInputError):
        integrate(STABLE_STABLE, (1.0, math.nan, 1.0, 1.0), 10.0)
    with pytest.raises(InvalidInputError):
        integrate(STABLE_STABLE, (1.0, 1.0, 1.0, 1.0), 0.0)


def test_step_underflow():
    '''a stiff system exhausts the step size'''
    with pytest.raises(StiffnessError) as info:
        integrate_system(lambda y: -1e6 * (y - 1.0), [0.5],
                         10.0,
                         tolerances=Tolerances(min_step=1e-3))
    assert info.value.t == 0.0
    assert isinstance(info.value, NumericalFailureError)


def test_divergence():
    '''non-finite states abort the integration'''
    with pytest.raises(DivergenceError):
        integrate_system(lambda y: np.full_like(y, np.inf), [1.0], 1.0)


def test_step_budget():
    '''the step budget is enforced'''
    with pytest.raises(NumericalFailureError):
        integrate(STABLE_STABLE, (1.0, 1.0, 1.0, 1.0), 100.0,
                  Tolerances(max_steps=5))


def test_classify_extinction():
    '''predators that cannot grow die out'''
    horizon = Horizon(transient=500.0, window=100.0)
    traj = integrate(STARVING, (1.0, 1.0, 1.0, 1.0), horizon.t_end)
    result = classify_attractor(STARVING, traj, horizon)
    assert result.label is AttractorLabel.BOTH_PREDATORS_EXTINCT
    assert result.label.code == 4
    assert result.label.predator_extinct


def test_classify_equilibrium():
    '''uncoupled stable patches settle'''
    horizon = Horizon()
    traj = integrate(STABLE_STABLE, (3.0, 3.0, 1.5, 8.0), horizon.t_end)
    result = classify_attractor(STABLE_STABLE, traj, horizon)
    assert result.label is AttractorLabel.INTERIOR_EQUILIBRIUM
    assert result.label.code == 0
    assert result.witness.rhs_norm < 1e-6
    assert traj.final() == pytest.approx([4.0, 4.0, 2.0, 10.0], abs=1e-5)


def test_classify_cycle():
    '''uncoupled oscillating patches keep cycling'''
    horizon = Horizon(transient=1500.0, window=500.0)
    traj = integrate(CYCLE_CYCLE, (1.0, 1.0, 1.0, 1.0), horizon.t_end)
    result = classify_attractor(CYCLE_CYCLE, traj, horizon)
    assert result.label is AttractorLabel.INTERIOR_CYCLE
    assert max(result.witness.derivative_sign_changes) >= 3


def test_extinction_lyapunov_descends():
    '''V decreases along trajectories of starving predators'''
    rng = np.random.default_rng(43)
    for s0 in random_interior_states(STARVING, 5, rng):
        traj = integrate(STARVING, s0, 200.0, TIGHT)
        report = lyapunov_check(STARVING, LyapunovKind.EXTINCTION, traj)
        assert report.applicable
        assert report.descending, report
        assert report.final_value < report.initial_value


def test_subsystem_lyapunov_descends():
    '''predator 1 alone with prey 1 and no prey in patch 2'''
    params = ModelParams(r=1.0, K1=2.0, K2=3.0, a1=0.5, a2=0.4, d1=0.22,
                         d2=0.3, rho1=0.05, rho2=0.1, variant='density')
    rng = np.random.default_rng(47)
    for _ in range(3):
        x1, y1, y2 = rng.uniform(0.1, 2.0, size=3)
        traj = integrate(params, (x1, y1, 0.0, y2), 200.0, TIGHT)
        report = lyapunov_check(params, LyapunovKind.SUBSYSTEM, traj, 1)
        assert report.applicable
        assert report.descending, report


def test_prey_extinction():
    '''prey 2 vanishes under the predators supplied from patch 1'''
    params = ModelParams(r=0.1, K1=2.2, K2=1.0, a1=0.5, a2=1.0, d1=0.3,
                         d2=0.1, rho1=0.01, rho2=1.0, variant='density')
    hq = hat_quantities(params)
    target = np.array([hq.muhat1, hq.nuhat1, 0.0, hq.cross(1, 2)])
    rng = np.random.default_rng(53)
    for s0 in random_interior_states(params, 3, rng):
        traj = integrate(params, s0, 500.0, TIGHT)
        assert traj.final()[2] < 1e-5
        assert np.max(np.abs(traj.final() - target)) < 1e-3
        report = lyapunov_check(params, LyapunovKind.PREY_EXTINCTION, traj,
                                2)
        assert report.applicable
        assert report.descending, report


def test_lyapunov_not_applicable():
    '''each function belongs to one variant'''
    traj = integrate(STARVING, (1.0, 1.0, 1.0, 1.0), 1.0)
    density = STARVING.replace(variant='density')
    assert not lyapunov_check(density, LyapunovKind.EXTINCTION,
                              traj).applicable
    assert not lyapunov_check(STARVING, LyapunovKind.SUBSYSTEM,
                              traj).applicable
    assert not lyapunov_check(STARVING, 'symmetric', traj).descending


def test_random_interior_states():
    '''starts fill the box below the carrying capacities'''
    rng = np.random.default_rng(59)
    states = random_interior_states(STABLE_STABLE, 100, rng)
    assert len(states) == 100
    stacked = np.array(states)
    assert stacked.min() >= 1e-3
    assert stacked[:, 0].max() <= 5.0 and stacked[:, 2].max() <= 3.0
    assert stacked[:, [1, 3]].max() <= 20.0

# EOF
