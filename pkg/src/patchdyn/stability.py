'''Jacobians, eigenvalues and classification of equilibria'''
import itertools
import logging
import math
from enum import Enum

import numpy as np
from pydantic import Field, field_serializer, field_validator

from patchdyn.base_data_class import BaseDataClass
from patchdyn.model import (INDETERMINACY_BAND, ModelParams, NotApplicableError,
                            NumericalFailureError, State4, Variant,
                            _components, derived, mu, rhs, uptake)
from patchdyn.registry import theorem_clause
from patchdyn.report import (ConditionReport, at_most, evaluate_theorem,
                             greater, less)

MARGINAL_BAND = 1e-9
MAX_ITERATIONS = 200
ROOT_TOLERANCE = 1e-12
BOUNDARY_STABILITY = 'boundary-stability'

_ROWS = {1: (0, 1), 2: (2, 3)}


class EigenvalueConvergenceError(NumericalFailureError):
    '''Exception thrown when the polynomial root iteration fails'''


class Stability(str, Enum):
    '''hyperbolic classification of an equilibrium'''
    SINK = 'sink'
    SADDLE = 'saddle'
    SOURCE = 'source'
    MARGINAL = 'marginal'


def jacobian(params: ModelParams, s) -> np.ndarray:
    '''4x4 Jacobian of `rhs`, row order (x1, y1, x2, y2)'''
    state = _components(s)
    jac = np.zeros((4, 4))
    for i, j in ((1, 2), (2, 1)):
        pt = params.patch(i)
        a_j = params.patch(j).a
        xi, yi = _ROWS[i]
        xj, yj = _ROWS[j]
        x, y = state[xi], state[yi]
        x_o, y_o = state[xj], state[yj]
        p, dp = uptake(pt.a, x), pt.a / (1 + x)**2
        p_o, dp_o = uptake(a_j, x_o), a_j / (1 + x_o)**2
        jac[xi, xi] = pt.r * (1 - 2 * x / pt.K) - dp * y
        jac[xi, yi] = -p
        if params.variant is Variant.STRENGTH:
            jac[yi, xi] = y * dp * (1 + pt.rho * y_o)
            jac[yi, yi] = p - pt.d + pt.rho * y_o * (p - p_o)
            jac[yi, xj] = -pt.rho * y * y_o * dp_o
            jac[yi, yj] = pt.rho * y * (p - p_o)
        else:
            jac[yi, xi] = y * dp
            jac[yi, yi] = p - pt.d - pt.rho
            jac[yi, yj] = pt.rho
    return jac


def characteristic_polynomial(jac: np.ndarray) -> np.ndarray:
    '''Coefficients [1, c3, c2, c1, c0] of det(lambda I - J), highest
    power first, from sums of principal minors.'''
    n = jac.shape[0]
    coeffs = [1.0]
    for k in range(1, n + 1):
        minors = sum(
            np.linalg.det(jac[np.ix_(idx, idx)])
            for idx in itertools.combinations(range(n), k))
        coeffs.append((-1)**k * minors)
    return np.array(coeffs)


def polynomial_roots(coeffs) -> np.ndarray:
    '''Roots of a monic polynomial (highest power first) by simultaneous
    Durand-Kerner iteration.'''
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    n = len(coeffs) - 1
    scale = 1 + float(np.max(np.abs(coeffs[1:]))) if n else 1.0
    roots = scale * (0.4 + 0.9j)**np.arange(n)
    for _ in range(MAX_ITERATIONS):
        largest = 0.0
        for k in range(n):
            others = np.delete(roots, k)
            denominator = np.prod(roots[k] - others)
            if denominator == 0:
                roots[k] += ROOT_TOLERANCE * scale
                largest = math.inf
                continue
            delta = np.polyval(coeffs, roots[k]) / denominator
            roots[k] -= delta
            largest = max(largest,
                          abs(delta) / max(1.0, abs(roots[k])))
        if largest <= ROOT_TOLERANCE:
            break
    else:
        _check_residuals(coeffs, roots)
    return _tidy(roots, scale)


def _check_residuals(coeffs: np.ndarray, roots: np.ndarray) -> None:
    magnitudes = np.abs(coeffs)
    for root in roots:
        size = np.polyval(magnitudes, abs(root))
        if abs(np.polyval(coeffs, root)) > 1e-8 * size:
            msg = (f'root iteration did not converge after {MAX_ITERATIONS} '
                   f'iterations (coefficients {coeffs.tolist()})')
            logging.error(msg)
            raise EigenvalueConvergenceError(msg)


def _tidy(roots: np.ndarray, scale: float) -> np.ndarray:
    '''snaps round-off imaginary parts and sorts'''
    tidy = np.array([
        complex(z.real, 0.0) if abs(z.imag) < 1e-12 * max(1.0, abs(z)) else z
        for z in roots
    ])
    if not np.all(np.isfinite(tidy)):
        raise EigenvalueConvergenceError(
            f'non-finite roots for polynomial of scale {scale}')
    order = np.lexsort((tidy.imag, tidy.real))
    return tidy[order]


def eigenvalues(jac: np.ndarray) -> np.ndarray:
    '''eigenvalues of a small real matrix via its characteristic polynomial'''
    if not np.all(np.isfinite(jac)):
        raise EigenvalueConvergenceError('non-finite Jacobian entries')
    return polynomial_roots(characteristic_polynomial(jac))


def classify(eigs) -> Stability:
    '''Sink if every real part is below -1e-9, Source if every real part is
    above +1e-9, Saddle if real parts of both signs lie outside that band.
    Anything else, a neutral direction beside unstable ones included, is
    Marginal.'''
    real = [complex(z).real for z in eigs]
    if all(v < -MARGINAL_BAND for v in real):
        return Stability.SINK
    if all(v > MARGINAL_BAND for v in real):
        return Stability.SOURCE
    positive = any(v > MARGINAL_BAND for v in real)
    negative = any(v < -MARGINAL_BAND for v in real)
    if positive and negative:
        return Stability.SADDLE
    return Stability.MARGINAL


class PointStability(BaseDataClass):
    '''linearization of the vector field at one state'''
    state: State4
    jacobian: list[list[float]]
    eigenvalues: list[complex]
    stability: Stability
    residual: float

    @field_serializer('eigenvalues', when_used='json')
    def _eigenvalue_pairs(self, eigs: list[complex]) -> list[list[float]]:
        return [[z.real, z.imag] for z in eigs]

    @field_validator('eigenvalues', mode='before')
    @classmethod
    def _eigenvalues_from_pairs(cls, value):
        return [
            complex(*z) if isinstance(z, (list, tuple)) else z for z in value
        ]


def point_stability(params: ModelParams, state: State4) -> PointStability:
    '''Jacobian, eigenvalues and class of `params` at an arbitrary state.
    `residual` is the largest component of the vector field there, so a
    state that is no equilibrium shows up as such.'''
    jac = jacobian(params, state)
    eigs = eigenvalues(jac)
    return PointStability(state=state,
                          jacobian=jac.tolist(),
                          eigenvalues=[complex(z) for z in eigs],
                          stability=classify(eigs),
                          residual=float(np.max(np.abs(rhs(params, state)))))


def boundary_state(params: ModelParams, i: int) -> tuple:
    '''(x1, y1, x2, y2) of the equilibrium with predator i at (mu_i, nu_i)
    and the other patch at its prey carrying capacity'''
    dq = derived(params)
    j = 3 - i
    state = [0.0] * 4
    state[_ROWS[i][0]] = dq.mu(i)
    state[_ROWS[i][1]] = dq.nu(i)
    state[_ROWS[j][0]] = params.patch(j).K
    return tuple(state)


def _boundary_terms(params: ModelParams, i: int, j: int) -> dict:
    pi, pj = params.patch(i), params.patch(j)
    dq = derived(params)
    nu_i = dq.nu(i)
    gain = pj.K * (pj.a - pi.d) - pi.d
    own = pj.K * (pj.a - pj.d) - pj.d
    return {
        'mu_i': dq.mu(i),
        'K_i': pi.K,
        'hopf_i': dq.hopf(i),
        'mu_j': dq.mu(j),
        'K_j': pj.K,
        'cross': mu(pj.a, pi.d),
        'a_j': pj.a,
        'd_i': pi.d,
        'rho_j': pj.rho,
        'small_bound': _ratio(-own, nu_i * gain),
        'large_bound': _ratio(own, -nu_i * gain),
    }


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.copysign(math.inf, num) if num else math.nan
    return num / den


def _exists(t: dict) -> list:
    return [less('mu_i', t['mu_i'], 'K_i', t['K_i'])]


def _stable_base(t: dict) -> list:
    return [
        greater('mu_i', t['mu_i'], '(K_i-1)/2', t['hopf_i']),
        less('mu_i', t['mu_i'], 'K_i', t['K_i'])
    ]


@theorem_clause(BOUNDARY_STABILITY, 'stable-no-uptake')
def _stable_no_uptake(params, i, j):
    t = _boundary_terms(params, i, j)
    return _stable_base(t) + [
        at_most('a_j', t['a_j'], 'd_i', t['d_i']),
        less('K_j', t['K_j'], 'mu_j', t['mu_j'])
    ]


@theorem_clause(BOUNDARY_STABILITY, 'stable-below-both')
def _stable_below_both(params, i, j):
    t = _boundary_terms(params, i, j)
    return _stable_base(t) + [
        less('K_j', t['K_j'], 'min(mu_j,d_i/(a_j-d_i))',
             min(t['mu_j'], t['cross']))
    ]


@theorem_clause(BOUNDARY_STABILITY, 'stable-small-dispersal')
def _stable_small_dispersal(params, i, j):
    t = _boundary_terms(params, i, j)
    return _stable_base(t) + [
        less('d_i/(a_j-d_i)', t['cross'], 'K_j', t['K_j']),
        less('K_j', t['K_j'], 'mu_j', t['mu_j']),
        less('rho_j', t['rho_j'], 'rho_bound', t['small_bound'])
    ]


@theorem_clause(BOUNDARY_STABILITY, 'stable-large-dispersal')
def _stable_large_dispersal(params, i, j):
    t = _boundary_terms(params, i, j)
    return _stable_base(t) + [
        less('mu_j', t['mu_j'], 'K_j', t['K_j']),
        less('K_j', t['K_j'], 'd_i/(a_j-d_i)', t['cross']),
        greater('rho_j', t['rho_j'], 'rho_bound', t['large_bound'])
    ]


@theorem_clause(BOUNDARY_STABILITY, 'saddle-oscillating')
def _saddle_oscillating(params, i, j):
    t = _boundary_terms(params, i, j)
    return _exists(t) + [less('mu_i', t['mu_i'], '(K_i-1)/2', t['hopf_i'])]


@theorem_clause(BOUNDARY_STABILITY, 'saddle-above-both')
def _saddle_above_both(params, i, j):
    t = _boundary_terms(params, i, j)
    return _exists(t) + [
        greater('K_j', t['K_j'], 'max(mu_j,d_i/(a_j-d_i))',
                max(t['mu_j'], t['cross']))
    ]


@theorem_clause(BOUNDARY_STABILITY, 'saddle-large-dispersal')
def _saddle_large_dispersal(params, i, j):
    t = _boundary_terms(params, i, j)
    return _exists(t) + [
        less('d_i/(a_j-d_i)', t['cross'], 'K_j', t['K_j']),
        less('K_j', t['K_j'], 'mu_j', t['mu_j']),
        greater('rho_j', t['rho_j'], 'rho_bound', t['small_bound'])
    ]


@theorem_clause(BOUNDARY_STABILITY, 'saddle-small-dispersal')
def _saddle_small_dispersal(params, i, j):
    t = _boundary_terms(params, i, j)
    return _exists(t) + [
        less('mu_j', t['mu_j'], 'K_j', t['K_j']),
        less('K_j', t['K_j'], 'd_i/(a_j-d_i)', t['cross']),
        less('rho_j', t['rho_j'], 'rho_bound', t['large_bound'])
    ]


class BoundaryPredicateReport(ConditionReport):
    '''Clauses for the equilibrium carried by predator `which` with the other
    patch prey-only, next to its eigenvalue classification'''
    which: int = Field(..., ge=1, le=2)
    stability: Stability
    agrees: bool


def boundary_stability_predicates(params: ModelParams,
                                  which: int) -> BoundaryPredicateReport:
    '''Evaluates the stability and saddle clauses of the boundary
    equilibrium (mu_i, nu_i, K_j, 0) for i = `which` and cross-checks them
    against the eigenvalues of the same equilibrium.'''
    i, j = which, 3 - which
    entries = evaluate_theorem(BOUNDARY_STABILITY, params, orders=((i, j), ))
    stable = any(e.holds for e in entries if e.clause.startswith('stable'))
    saddle = any(e.holds for e in entries if e.clause.startswith('saddle'))
    state = boundary_state(params, i)
    if all(math.isfinite(v) and v >= 0 for v in state):
        stability = classify(eigenvalues(jacobian(params, state)))
    else:
        stability = Stability.MARGINAL
    agrees = not ((stable and stability is not Stability.SINK) or
                  (saddle and stability is not Stability.SADDLE))
    if not agrees:
        logging.warning(
            'boundary predicates for predator %d disagree with eigenvalues '
            '(%s) for %s', which, stability.value, params)
    return BoundaryPredicateReport(entries=entries,
                                   flags={
                                       'stable_predicted': stable,
                                       'saddle_predicted': saddle
                                   },
                                   which=which,
                                   stability=stability,
                                   agrees=agrees)


class CharQuartic(BaseDataClass):
    '''Characteristic quartic at the equal-death interior equilibrium
    lambda^4 + c3 lambda^3 + c2 lambda^2 + c1 lambda + c0'''
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    gamma1: float
    gamma2: float
    c3: float
    c2: float
    c1: float
    c0: float

    def coefficients(self) -> np.ndarray:
        '''[1, c3, c2, c1, c0]'''
        return np.array([1.0, self.c3, self.c2, self.c1, self.c0])

    def roots(self) -> np.ndarray:
        return polynomial_roots(self.coefficients())


def _equal_death_patches(params: ModelParams):
    if params.variant is not Variant.STRENGTH:
        raise NotApplicableError('equal-death quartic needs strength variant')
    if abs(params.d1 - params.d2) >= INDETERMINACY_BAND:
        raise NotApplicableError(
            f'death rates differ (d1={params.d1}, d2={params.d2})')
    dq = derived(params)
    for i in (1, 2):
        if not 0 < dq.mu(i) < params.patch(i).K:
            raise NotApplicableError(
                f'patch {i} has no predator equilibrium (mu={dq.mu(i)})')
    return dq


def _excess(pt, d: float) -> float:
    '''K a - K d - a - d; positive iff mu < (K - 1) / 2'''
    return pt.K * pt.a - pt.K * d - pt.a - d


def equal_death_quartic(params: ModelParams) -> CharQuartic:
    '''Quartic of the Jacobian at (mu1, nu1, mu2, nu2) when d1 = d2'''
    dq = _equal_death_patches(params)
    d = params.d1
    values = {}
    for i, j in ((1, 2), (2, 1)):
        pi, pj = params.patch(i), params.patch(j)
        values[f'alpha{i}'] = -pi.r * dq.mu(i) * _excess(pi, d) / (pi.K *
                                                                    pi.a)
        values[f'beta{i}'] = (dq.nu(i) * (dq.nu(j) * pi.rho + 1) *
                              (pi.a - d)**2 / pi.a)
        values[f'gamma{i}'] = (pi.rho * dq.nu(i) * dq.nu(j) *
                               (pj.a - d)**2 / pj.a)
    a1, a2 = params.a1, params.a2
    alpha1, alpha2 = values['alpha1'], values['alpha2']
    beta1, beta2 = values['beta1'], values['beta2']
    values['c3'] = alpha1 + alpha2
    values['c2'] = alpha1 * alpha2 + d * (beta1 + beta2)
    values['c1'] = d * (alpha1 * beta2 + alpha2 * beta1)
    values['c0'] = d**2 * (dq.nu1 * dq.nu2 * (a1 - d)**2 * (a2 - d)**2 *
                           (dq.nu1 * params.rho2 + dq.nu2 * params.rho1 + 1)
                           / (a1 * a2))
    return CharQuartic(**values)


def equal_death_rho_threshold(params: ModelParams, i: int) -> float:
    '''Larger of the two displayed lower bounds on rho_i above which the
    equal-death interior equilibrium is claimed stable. Informational; use
    `hurwitz_report` for the decision.'''
    dq = _equal_death_patches(params)
    j = 3 - i
    d = params.d1
    pi, pj = params.patch(i), params.patch(j)
    mu_i, mu_j, nu_i, nu_j = dq.mu(i), dq.mu(j), dq.nu(i), dq.nu(j)
    ex_i, ex_j = _excess(pi, d), _excess(pj, d)
    first = _ratio(-nu_j - pj.r * mu_i * mu_j * ex_i * ex_j,
                   pi.K * pj.K * pj.a * nu_j * d * nu_i * (pi.a - d)**2)
    inner = _ratio(
        mu_i * nu_j * pj.K * (nu_i * pj.rho + 1) * (pj.a - d)**2 * ex_i,
        pj.r * mu_j * nu_i * pi.K * (pi.a - d)**2 * ex_j)
    second = (-inner - 1) / nu_j
    return max(first, second)


class HurwitzReport(BaseDataClass):
    '''Routh-Hurwitz conditions of a quartic'''
    c3_positive: bool
    c1_positive: bool
    c2_positive: bool
    c0_positive: bool
    second_minor: float
    third_minor: float
    stable: bool


def hurwitz_report(quartic: CharQuartic) -> HurwitzReport:
    '''All roots have negative real part iff c3, c0 and the second and third
    Hurwitz minors are positive.'''
    c3, c2, c1, c0 = quartic.c3, quartic.c2, quartic.c1, quartic.c0
    second = c3 * c2 - c1
    third = c3 * c2 * c1 - c1**2 - c3**2 * c0
    return HurwitzReport(c3_positive=c3 > 0,
                         c1_positive=c1 > 0,
                         c2_positive=c2 > 0,
                         c0_positive=c0 > 0,
                         second_minor=second,
                         third_minor=third,
                         stable=c3 > 0 and c0 > 0 and second > 0
                         and third > 0)

# EOF
