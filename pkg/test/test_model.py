'''model parameters, right-hand sides and derived quantities'''
# pylint: disable=invalid-name
import math

import numpy as np
import pytest
from pydantic import ValidationError

from patchdyn.model import (BoundUndefinedError, InvalidInputError,
                            ModelParams, NotApplicableError, State4, Variant,
                            bound_functional, derived, dhat,
                            dissipativity_bound, hat_quantities, mu,
                            prey_nullcline, reduced_rhs, rhs, uptake)
from oracles import random_params

BASE = {
    'r': 1.5,
    'K1': 5.0,
    'K2': 3.0,
    'a1': 0.25,
    'a2': 0.15,
    'd1': 0.2,
    'd2': 0.1,
}


def test_derived_quantities():
    '''mu and nu of the stable/stable regime'''
    dq = derived(ModelParams(**BASE))
    assert dq.mu1 == pytest.approx(4.0)
    assert dq.nu1 == pytest.approx(4.0)
    assert dq.mu2 == pytest.approx(2.0)
    assert dq.nu2 == pytest.approx(10.0)
    assert dq.hopf1 == pytest.approx(2.0)
    assert dq.hopf2 == pytest.approx(1.0)


def test_mu_sentinel():
    '''a predator that cannot grow has mu = +inf and nu = -inf'''
    assert math.isinf(mu(0.2, 0.2))
    dq = derived(ModelParams(**(BASE | {'a1': 0.1})))
    assert dq.mu1 == math.inf
    assert dq.nu1 == -math.inf


def test_uptake_and_nullcline():
    '''closed forms at simple points'''
    assert uptake(0.5, 1.0) == pytest.approx(0.25)
    assert prey_nullcline(1.0, 5.0, 0.25, 5.0) == 0
    assert prey_nullcline(1.0, 5.0, 0.25, 0.0) == pytest.approx(4.0)
    assert prey_nullcline(1.0, 5.0, 0.25, 2.0) == pytest.approx(7.2)


def test_rhs_vanishes_at_single_patch_equilibria():
    '''uncoupled patches rest at (mu1, nu1, mu2, nu2)'''
    params = ModelParams(**BASE)
    assert np.max(np.abs(rhs(params, (4.0, 4.0, 2.0, 10.0)))) < 1e-12


def test_strength_dispersal_is_conservative():
    '''rho2 * dy1 + rho1 * dy2 gains nothing from dispersal'''
    rng = np.random.default_rng(7)
    for _ in range(50):
        params = random_params(rng)
        still = params.replace(rho1=0.0, rho2=0.0)
        s = rng.uniform(0.01, 3.0, size=4)
        diff = rhs(params, s) - rhs(still, s)
        assert diff[0] == 0 and diff[2] == 0
        assert params.rho2 * diff[1] + params.rho1 * diff[3] == pytest.approx(
            0.0, abs=1e-12)


def test_density_dispersal_flux():
    '''density coupling moves predators along the density gradient'''
    params = ModelParams(**BASE, rho1=0.1, rho2=0.05, variant='density')
    still = params.replace(rho1=0.0, rho2=0.0)
    s = (1.0, 2.0, 1.0, 1.0)
    diff = rhs(params, s) - rhs(still, s)
    assert diff[1] == pytest.approx(0.1 * (1.0 - 2.0))
    assert diff[3] == pytest.approx(0.05 * (2.0 - 1.0))


def test_rhs_rejects_non_finite_state():
    '''nan and inf inputs raise'''
    params = ModelParams(**BASE)
    with pytest.raises(InvalidInputError):
        rhs(params, (1.0, math.nan, 1.0, 1.0))
    with pytest.raises(InvalidInputError):
        rhs(params, (1.0, 1.0, math.inf, 1.0))


def test_zero_predator_is_invariant():
    '''strength dispersal never creates predators'''
    params = ModelParams(**BASE, rho1=0.3, rho2=0.2)
    dy = rhs(params, (1.0, 2.0, 1.5, 0.0))
    assert dy[3] == 0


def test_reduced_rhs_matches_full():
    '''the reduced system is the full one restricted to y_j = 0'''
    params = ModelParams(**BASE, rho1=0.3, rho2=0.2)
    full = rhs(params, (1.0, 2.0, 1.5, 0.0))
    assert np.allclose(reduced_rhs(params, 2, (1.0, 2.0, 1.5)),
                       full[[0, 1, 2]])
    full = rhs(params, (1.5, 0.0, 1.0, 2.0))
    assert np.allclose(reduced_rhs(params, 1, (1.0, 2.0, 1.5)),
                       full[[2, 3, 0]])
    with pytest.raises(NotApplicableError):
        reduced_rhs(params.replace(variant=Variant.DENSITY), 2,
                    (1.0, 2.0, 1.5))


def test_hat_quantities():
    '''effective death rates and the boundary cross densities'''
    params = ModelParams(**BASE, rho1=0.1, rho2=0.05, variant='density')
    hq = hat_quantities(params)
    assert hq.dhat1 == pytest.approx(0.2 + 0.1 * 0.1 / 0.15)
    assert hq.dhat2 == pytest.approx(0.1 + 0.05 * 0.2 / 0.3)
    assert hq.dhat(1) == dhat(params, 1)
    assert hq.muhat1 == pytest.approx(mu(0.25, hq.dhat1))
    assert hq.cross(1, 2) == pytest.approx(0.05 * hq.nuhat1 / 0.15)
    assert hq.cross(2, 1) == pytest.approx(0.1 * hq.nuhat2 / 0.3)
    with pytest.raises(ValueError):
        hq.cross(1, 1)


def test_hat_quantities_without_dispersal():
    '''without dispersal the hat quantities are the plain ones'''
    params = ModelParams(**BASE, variant='density')
    hq, dq = hat_quantities(params), derived(params)
    assert hq.muhat1 == dq.mu1 and hq.nuhat2 == dq.nu2
    assert hq.cross(1, 2) == 0 and hq.cross(2, 1) == 0


def test_dissipativity_bound():
    '''trajectories end up below the bound of V'''
    params = ModelParams(**BASE, rho1=0.1, rho2=0.05)
    bound = dissipativity_bound(params)
    vertex1 = 5.0 * 1.2 / 2
    vertex2 = 3.0 * 1.6 / 3.0
    expected = (0.05 * vertex1 * (1 - vertex1 / 5 + 0.2) + 0.1 * vertex2 *
                (1.5 * (1 - vertex2 / 3) + 0.1)) / 0.1
    assert bound == pytest.approx(expected)
    assert bound_functional(params, (5.0, 0.0, 3.0, 0.0)) == pytest.approx(
        0.05 * 5 + 0.1 * 3)
    with pytest.raises(BoundUndefinedError):
        dissipativity_bound(ModelParams(**BASE))


def test_params_validation():
    '''unknown keys, negative and non-finite rates are rejected'''
    with pytest.raises(ValidationError):
        ModelParams(**BASE, rho1=-0.1)
    with pytest.raises(ValidationError):
        ModelParams(**(BASE | {'K1': math.inf}))
    with pytest.raises(ValidationError):
        ModelParams(**BASE, gamma=1.0)
    with pytest.raises(ValidationError):
        ModelParams(**BASE, variant='diffusive')
    with pytest.raises(ValueError):
        ModelParams(**BASE).patch(3)
    assert not ModelParams(**BASE).validate_model(raise_exc=False)


def test_state_from_array_clamps():
    '''round-off negatives become zero'''
    s = State4.from_array([1.0, -1e-15, 2.0, 3.0])
    assert s.y1 == 0
    assert np.array_equal(s.as_array(), [1.0, 0.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        State4(x1=-1.0, y1=0.0, x2=0.0, y2=0.0)

# EOF
