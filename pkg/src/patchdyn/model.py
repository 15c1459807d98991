'''Parameters, states, right-hand sides and closed-form derived quantities
of the two-patch predator-prey models.

Patch 1 has prey growth rate 1, patch 2 has prey growth rate `r`. The
`variant` tag selects how predators disperse between the patches:
`strength` (attraction proportional to the predation term of the target
patch) or `density` (classical flux proportional to density differences).
'''
import math
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from pydantic import Field

from patchdyn.base_data_class import BaseDataClass
from patchdyn.registry import patchdyn_condition

INDETERMINACY_BAND = 1e-12


class InvalidInputError(ValueError):
    '''Exception thrown on non-finite model input'''


class BoundUndefinedError(ValueError):
    '''Exception thrown when the dissipativity bound degenerates'''


class NotApplicableError(ValueError):
    '''Exception thrown when an analysis does not apply to the parameters'''


class NumericalFailureError(ArithmeticError):
    '''Base of all numerical failures (non-convergence, step underflow, ...)'''


class Variant(str, Enum):
    '''Dispersal coupling of the predators'''
    STRENGTH = 'strength'
    DENSITY = 'density'


class Patch(NamedTuple):
    '''rate constants of a single patch'''
    r: float
    K: float
    a: float
    d: float
    rho: float


def _positive(description: str):
    return Field(..., gt=0, allow_inf_nan=False, description=description)


class ModelParams(BaseDataClass):
    '''All rate constants of either model plus the variant tag'''
    r: float = _positive('prey growth rate of patch 2 (patch 1 fixed at 1)')
    K1: float = _positive('carrying capacity of patch 1')
    K2: float = _positive('carrying capacity of patch 2')
    a1: float = _positive('predation rate in patch 1')
    a2: float = _positive('predation rate in patch 2')
    d1: float = _positive('death rate of predator 1')
    d2: float = _positive('death rate of predator 2')
    rho1: float = Field(0.0, ge=0, allow_inf_nan=False,
                        description='dispersal rate of predator 1')
    rho2: float = Field(0.0, ge=0, allow_inf_nan=False,
                        description='dispersal rate of predator 2')
    variant: Variant = Variant.STRENGTH

    @patchdyn_condition
    def condition_0_finite_rates(self):
        '''all rate constants are finite numbers'''
        return all(
            math.isfinite(v) for v in (self.r, self.K1, self.K2, self.a1,
                                       self.a2, self.d1, self.d2, self.rho1,
                                       self.rho2))

    def patch(self, i: int) -> Patch:
        '''rate constants of patch `i` (1 or 2)'''
        if i == 1:
            return Patch(1.0, self.K1, self.a1, self.d1, self.rho1)
        if i == 2:
            return Patch(self.r, self.K2, self.a2, self.d2, self.rho2)
        raise ValueError(f'patch index must be 1 or 2, got {i}')

    @property
    def uncoupled(self) -> bool:
        '''True if no predator disperses'''
        return self.rho1 == 0 and self.rho2 == 0


class State4(BaseDataClass):
    '''Population densities (x1, y1, x2, y2)'''
    x1: float = Field(..., ge=0, allow_inf_nan=False, description='prey 1')
    y1: float = Field(..., ge=0, allow_inf_nan=False,
                      description='predator 1')
    x2: float = Field(..., ge=0, allow_inf_nan=False, description='prey 2')
    y2: float = Field(..., ge=0, allow_inf_nan=False,
                      description='predator 2')

    def as_array(self) -> np.ndarray:
        '''state as a numpy vector in row order (x1, y1, x2, y2)'''
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> 'State4':
        '''builds a state from four numbers; tiny negatives are clamped'''
        x1, y1, x2, y2 = (max(float(v), 0.0) for v in values)
        return cls(x1=x1, y1=y1, x2=x2, y2=y2)


class DerivedQuantities(BaseDataClass):
    '''Single-patch equilibrium coordinates and Hopf thresholds'''
    mu1: float
    mu2: float
    nu1: float
    nu2: float
    hopf1: float
    hopf2: float

    def mu(self, i: int) -> float:
        return self.mu1 if i == 1 else self.mu2

    def nu(self, i: int) -> float:
        return self.nu1 if i == 1 else self.nu2

    def hopf(self, i: int) -> float:
        return self.hopf1 if i == 1 else self.hopf2


class HatQuantities(BaseDataClass):
    '''Effective death rates and boundary coordinates of the density model.

    `nuhat_cross12` is the predator-2 density at the boundary equilibrium
    carried by predator 1, i.e. rho2 * nuhat1 / (d2 + rho2);
    `nuhat_cross21` is the mirror image.
    '''
    dhat1: float
    dhat2: float
    muhat1: float
    muhat2: float
    nuhat1: float
    nuhat2: float
    nuhat_cross12: float
    nuhat_cross21: float

    def dhat(self, i: int) -> float:
        return self.dhat1 if i == 1 else self.dhat2

    def muhat(self, i: int) -> float:
        return self.muhat1 if i == 1 else self.muhat2

    def nuhat(self, i: int) -> float:
        return self.nuhat1 if i == 1 else self.nuhat2

    def cross(self, i: int, j: int) -> float:
        '''predator density in patch j at the boundary state of predator i'''
        if (i, j) == (1, 2):
            return self.nuhat_cross12
        if (i, j) == (2, 1):
            return self.nuhat_cross21
        raise ValueError(f'invalid patch order ({i}, {j})')


def uptake(a, x):
    '''Holling type II uptake a x / (1 + x)'''
    return a * x / (1 + x)


def prey_nullcline(r, K, a, x):
    '''prey nullcline q(x) = r (K - x)(1 + x) / (a K)'''
    return r * (K - x) * (1 + x) / (a * K)


def mu(a: float, d: float) -> float:
    '''equilibrium prey density d / (a - d); +inf when a <= d'''
    return d / (a - d) if a > d else math.inf


def nu(r: float, K: float, a: float, mu_: float) -> float:
    '''predator density on the prey nullcline at `mu_`; -inf for mu_ = inf'''
    if math.isinf(mu_):
        return -math.inf
    return prey_nullcline(r, K, a, mu_)


def q_max(r: float, K: float, a: float) -> float:
    '''maximum of the prey nullcline over [0, K]'''
    if K <= 1:
        return prey_nullcline(r, K, a, 0.0)
    return r * (K + 1)**2 / (4 * a * K)


def derived(params: ModelParams) -> DerivedQuantities:
    '''mu, nu and the Hopf thresholds (K - 1) / 2 of both patches'''
    values = {}
    for i in (1, 2):
        pt = params.patch(i)
        mu_i = mu(pt.a, pt.d)
        values[f'mu{i}'] = mu_i
        values[f'nu{i}'] = nu(pt.r, pt.K, pt.a, mu_i)
        values[f'hopf{i}'] = (pt.K - 1) / 2
    return DerivedQuantities(**values)


def dhat(params: ModelParams, i: int) -> float:
    '''effective death rate d_i + rho_i d_j / (d_j + rho_j)'''
    pi, pj = params.patch(i), params.patch(3 - i)
    return pi.d + pi.rho * pj.d / (pj.d + pj.rho)


def hat_quantities(params: ModelParams) -> HatQuantities:
    '''death rates, equilibrium coordinates of the density model'''
    values = {}
    for i in (1, 2):
        pt = params.patch(i)
        dh = dhat(params, i)
        mh = mu(pt.a, dh)
        values[f'dhat{i}'] = dh
        values[f'muhat{i}'] = mh
        values[f'nuhat{i}'] = nu(pt.r, pt.K, pt.a, mh)
    for i, j in ((1, 2), (2, 1)):
        pj = params.patch(j)
        nuhat_i = values[f'nuhat{i}']
        values[f'nuhat_cross{i}{j}'] = (0.0 if pj.rho == 0 else
                                        pj.rho * nuhat_i / (pj.d + pj.rho))
    return HatQuantities(**values)


def _components(s) -> tuple[float, float, float, float]:
    if isinstance(s, State4):
        return s.x1, s.y1, s.x2, s.y2
    x1, y1, x2, y2 = (float(v) for v in s)
    if not all(math.isfinite(v) for v in (x1, y1, x2, y2)):
        raise InvalidInputError(f'non-finite state {(x1, y1, x2, y2)}')
    return x1, y1, x2, y2


def single_patch_rhs(r: float, K: float, a: float, d: float, x: float,
                     y: float) -> tuple[float, float]:
    '''logistic prey with Holling II predation in one isolated patch'''
    p = uptake(a, x)
    return r * x * (1 - x / K) - p * y, p * y - d * y


def rhs(params: ModelParams, s) -> np.ndarray:
    '''time derivatives (dx1, dy1, dx2, dy2) of the selected variant'''
    x1, y1, x2, y2 = _components(s)
    dx1, dy1 = single_patch_rhs(1.0, params.K1, params.a1, params.d1, x1, y1)
    dx2, dy2 = single_patch_rhs(params.r, params.K2, params.a2, params.d2,
                                x2, y2)
    if params.variant is Variant.STRENGTH:
        p1y1 = uptake(params.a1, x1) * y1
        p2y2 = uptake(params.a2, x2) * y2
        dy1 += params.rho1 * (p1y1 * y2 - p2y2 * y1)
        dy2 += params.rho2 * (p2y2 * y1 - p1y1 * y2)
    else:
        dy1 += params.rho1 * (y2 - y1)
        dy2 += params.rho2 * (y1 - y2)
    return np.array([dx1, dy1, dx2, dy2])


def reduced_rhs(params: ModelParams, extinct: int, s3) -> np.ndarray:
    '''Right-hand side with predator `extinct` identically zero.

    The state is (x_i, y_i, x_j) for the surviving predator i and the
    predator-free patch j; the prey in patch j grows logistically.
    '''
    if params.variant is not Variant.STRENGTH:
        raise NotApplicableError(
            'a zero predator is only invariant under strength dispersal')
    xi, yi, xj = (float(v) for v in s3)
    if extinct == 2:
        full = rhs(params, (xi, yi, xj, 0.0))
        return full[[0, 1, 2]]
    full = rhs(params, (xj, 0.0, xi, yi))
    return full[[2, 3, 0]]


def dissipativity_bound(params: ModelParams) -> float:
    '''Ultimate bound of V = rho2 (x1 + y1) + rho1 (x2 + y2).

    V satisfies dV/dt <= M - d V with d = min(d1, d2), where M is the sum of
    the maxima of w_i x (r_i (1 - x / K_i) + d_i) over [0, K_i] with weights
    w_1 = rho2, w_2 = rho1.
    '''
    if params.uncoupled:
        raise BoundUndefinedError('V degenerates for rho1 = rho2 = 0')
    total = 0.0
    for i, weight in ((1, params.rho2), (2, params.rho1)):
        pt = params.patch(i)
        vertex = min(pt.K * (pt.r + pt.d) / (2 * pt.r), pt.K)
        total += weight * vertex * (pt.r * (1 - vertex / pt.K) + pt.d)
    return total / min(params.d1, params.d2)


def bound_functional(params: ModelParams, s) -> float:
    '''V = rho2 (x1 + y1) + rho1 (x2 + y2)'''
    x1, y1, x2, y2 = _components(s)
    return params.rho2 * (x1 + y1) + params.rho1 * (x2 + y2)

# EOF
