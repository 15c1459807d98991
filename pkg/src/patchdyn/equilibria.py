'''Boundary and interior equilibria of the strength-driven model.

Interior equilibria lie on the prey nullclines y_i = q_i(x_i); substituting
into the predator equations leaves x1 = F(x2), x2 = G(x1) with F, G ratios
of quadratics. Clearing denominators of x1 = F(G(x1)) yields a polynomial
of degree at most five whose roots in (0, K1) are isolated by a dense sign
scan, bisection and a Newton polish.
'''
import logging
import math
from enum import Enum

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import field_serializer, field_validator

from patchdyn.base_data_class import BaseDataClass
from patchdyn.conditions import check_global_extinction
from patchdyn.model import (INDETERMINACY_BAND, ModelParams, NotApplicableError,
                            State4, Variant, derived, prey_nullcline, rhs)
from patchdyn.registry import theorem_clause
from patchdyn.report import (Check, ClauseEntry, ConditionReport, at_most,
                             evaluate_theorem, greater, less)
from patchdyn.stability import (Stability, boundary_stability_predicates,
                                classify, eigenvalues, jacobian)

SCAN_POINTS = 20_000
SCAN_EPSILON = 1e-9
RESIDUAL_LIMIT = 1e-9
POSITIVITY_FLOOR = 1e-9
MERGE_RADIUS = 1e-8
FOLD_SLOPE = 1e-6
INTERIOR_EXISTENCE = 'interior-existence'

Quadratic = tuple[float, float, float]


class PoleError(ZeroDivisionError):
    '''Exception thrown when a nullcline is evaluated at a pole'''

    def __init__(self, location: float):
        super().__init__(f'nullcline denominator vanishes at {location!r}')
        self.location = location


class EquilibriumKind(str, Enum):
    '''which populations are present at an equilibrium'''
    ORIGIN = 'Origin'
    K1_ONLY = 'K1Only'
    K2_ONLY = 'K2Only'
    BOTH_K = 'BothK'
    PREDATOR_IN_1 = 'PredatorIn1'
    PREDATOR_IN_1_PREY_IN_2 = 'PredatorIn1PreyIn2'
    PREDATOR_IN_2 = 'PredatorIn2'
    PREY_IN_1_PREDATOR_IN_2 = 'PreyIn1PredatorIn2'
    INTERIOR = 'Interior'
    CLASSIC_BOUNDARY = 'ClassicBoundary'


class Equilibrium(BaseDataClass):
    '''A located steady state with its linearization'''
    state: State4
    kind: EquilibriumKind
    eigenvalues: list[complex]
    stability: Stability
    residual: float
    near_degenerate: bool = False
    fold: bool = False
    predicates: list[ClauseEntry] = []
    patch: int | None = None
    predicates_agree: bool | None = None

    @field_serializer('eigenvalues', when_used='json')
    def _eigenvalue_pairs(self, eigs: list[complex]) -> list[list[float]]:
        return [[z.real, z.imag] for z in eigs]

    @field_validator('eigenvalues', mode='before')
    @classmethod
    def _eigenvalues_from_pairs(cls, value):
        return [
            complex(*z) if isinstance(z, (list, tuple)) else z for z in value
        ]


def make_equilibrium(params: ModelParams, state, kind: EquilibriumKind,
                     **extra) -> Equilibrium:
    '''linearizes `params` at `state` and packs the result'''
    s4 = State4.from_array(state)
    eigs = eigenvalues(jacobian(params, s4))
    residual = float(np.max(np.abs(rhs(params, s4))))
    return Equilibrium(state=s4,
                       kind=kind,
                       eigenvalues=[complex(z) for z in eigs],
                       stability=classify(eigs),
                       residual=residual,
                       **extra)


def _require_strength(params: ModelParams) -> None:
    if params.variant is not Variant.STRENGTH:
        raise NotApplicableError(
            'use the classic module for density-driven dispersal')


def boundary_equilibria(params: ModelParams) -> list[Equilibrium]:
    '''The four prey-only equilibria plus, for each patch i with
    0 < mu_i < K_i, predator i alone (other patch empty) and predator i with
    the other patch at its carrying capacity.'''
    _require_strength(params)
    K1, K2 = params.K1, params.K2
    extinction = check_global_extinction(params).entries
    found = [
        make_equilibrium(params, (0, 0, 0, 0), EquilibriumKind.ORIGIN),
        make_equilibrium(params, (K1, 0, 0, 0), EquilibriumKind.K1_ONLY),
        make_equilibrium(params, (0, 0, K2, 0), EquilibriumKind.K2_ONLY),
        make_equilibrium(params, (K1, 0, K2, 0),
                         EquilibriumKind.BOTH_K,
                         predicates=extinction),
    ]
    dq = derived(params)
    kinds = {
        1: (EquilibriumKind.PREDATOR_IN_1,
            EquilibriumKind.PREDATOR_IN_1_PREY_IN_2),
        2: (EquilibriumKind.PREDATOR_IN_2,
            EquilibriumKind.PREY_IN_1_PREDATOR_IN_2),
    }
    for i in (1, 2):
        if not 0 < dq.mu(i) < params.patch(i).K:
            continue
        alone, with_prey = kinds[i]
        pair = (dq.mu(i), dq.nu(i))
        if i == 1:
            empty, full = pair + (0, 0), pair + (K2, 0)
        else:
            empty, full = (0, 0) + pair, (K1, 0) + pair
        found.append(make_equilibrium(params, empty, alone, patch=i))
        report = boundary_stability_predicates(params, i)
        found.append(
            make_equilibrium(params,
                             full,
                             with_prey,
                             predicates=report.entries,
                             patch=i,
                             predicates_agree=report.agrees))
    return found


class NullclineFns(BaseDataClass):
    '''Ascending coefficients of F = ft / fb (x1 as a function of x2) and
    G = gt / gb (x2 as a function of x1)'''
    ft: Quadratic
    fb: Quadratic
    gt: Quadratic
    gb: Quadratic

    def eval_f(self, x2: float) -> float:
        '''x1 on the predator-1 nullcline'''
        return _rational(self.ft, self.fb, x2)

    def eval_g(self, x1: float) -> float:
        '''x2 on the predator-2 nullcline'''
        return _rational(self.gt, self.gb, x1)


def _rational(top: Quadratic, bottom: Quadratic, x: float) -> float:
    den = bottom[0] + x * (bottom[1] + x * bottom[2])
    if abs(den) <= 1e-14 * sum(abs(c) for c in bottom) * max(1.0, x * x):
        raise PoleError(x)
    return (top[0] + x * (top[1] + x * top[2])) / den


def _nullcline_coeffs(params: ModelParams,
                      i: int) -> tuple[Quadratic, Quadratic]:
    '''numerator and denominator of x_i as a function of x_j'''
    pi, pj = params.patch(i), params.patch(3 - i)
    s = pj.r * pi.rho
    top = (pj.a * pj.K * pi.d, pj.a * s * pj.K, -pj.a * s)
    bottom = (pj.K * (pi.a * s + pi.a * pj.a - pj.a * pi.d),
              s * (pj.K * pi.a - pj.K * pj.a - pi.a), -s * (pi.a - pj.a))
    return top, bottom


def nullclines(params: ModelParams) -> NullclineFns:
    '''coefficients of F and G with r1 = 1 and r2 = r substituted'''
    ft, fb = _nullcline_coeffs(params, 1)
    gt, gb = _nullcline_coeffs(params, 2)
    return NullclineFns(ft=ft, fb=fb, gt=gt, gb=gb)


def _real_roots_of_quadratic(c: Quadratic) -> list[float]:
    c0, c1, c2 = c
    if c2 == 0:
        return [] if c1 == 0 else [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # numerically stable pair
    q = -0.5 * (c1 + math.copysign(sq, c1))
    roots = [q / c2]
    if q != 0:
        roots.append(c0 / q)
    return sorted(roots)


def critical_point(params: ModelParams, j: int) -> float | None:
    '''Stationary point in (0, K_j) of the nullcline defined on x_j (F for
    j = 2, G for j = 1); None if it has none, e.g. for zero dispersal.'''
    i = 3 - j
    if params.patch(i).rho == 0:
        return None
    (n0, n1, n2), (e0, e1, e2) = _nullcline_coeffs(params, i)
    stationary = (n1 * e0 - n0 * e1, 2 * (n2 * e0 - n0 * e2),
                  n2 * e1 - n1 * e2)
    K = params.patch(j).K
    inside = [x for x in _real_roots_of_quadratic(stationary) if 0 < x < K]
    if not inside:
        return None
    if len(inside) > 1:
        logging.info('nullcline on x%d has %d stationary points', j,
                     len(inside))
    return inside[0]


def displayed_critical_point(params: ModelParams, j: int) -> float | None:
    '''Closed-form critical point K_j (s + c - sqrt(c (s + c))) / s with
    s = r_j rho_i and c = a_j - d_i. It neglects the constant K_j d_i of
    the nullcline numerator and is kept for reporting.'''
    i = 3 - j
    pi, pj = params.patch(i), params.patch(j)
    s = pj.r * pi.rho
    c = pj.a - pi.d
    if s == 0 or c <= 0:
        return None
    return pj.K * (s + c - math.sqrt(c * (s + c))) / s


def nullcline_peak(params: ModelParams, j: int) -> float:
    '''largest value over [0, K_j] of the nullcline defined on x_j'''
    nf = nullclines(params)
    evaluate = nf.eval_f if j == 2 else nf.eval_g
    points = [0.0, params.patch(j).K]
    xc = critical_point(params, j)
    if xc is not None:
        points.append(xc)
    try:
        return max(evaluate(x) for x in points)
    except PoleError:
        return math.inf


def interior_polynomial(nf: NullclineFns) -> Polynomial:
    '''x1 fb(G) gb^2 - ft(G) gb^2 with G = gt / gb, in x1'''
    u, v = Polynomial(nf.gt), Polynomial(nf.gb)

    def cleared(coeffs: Quadratic) -> Polynomial:
        return coeffs[0] * v**2 + coeffs[1] * u * v + coeffs[2] * u**2

    x = Polynomial([0.0, 1.0])
    return x * cleared(nf.fb) - cleared(nf.ft)


def _bisect(poly: Polynomial, lo: float, hi: float) -> float:
    f_lo = poly(lo)
    if f_lo == 0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = poly(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _polish(poly: Polynomial, slope: Polynomial, x: float, lo: float,
            hi: float) -> float:
    for _ in range(5):
        d = slope(x)
        if d == 0:
            break
        step = poly(x) / d
        candidate = x - step
        if not lo <= candidate <= hi or abs(poly(candidate)) > abs(poly(x)):
            break
        x = candidate
        if step == 0:
            break
    return x


def polynomial_roots_in(poly: Polynomial, lo: float, hi: float,
                        skip=None) -> list[float]:
    '''Real roots of `poly` in (lo, hi) by a dense sign scan, bisection and
    Newton polish. Intervals for which `skip(a, b)` is true are ignored.'''
    xs = np.linspace(lo, hi, SCAN_POINTS)
    signs = np.sign(poly(xs))
    changes = np.nonzero(signs[:-1] * signs[1:] <= 0)[0]
    slope = poly.deriv()
    roots = []
    for k in changes:
        a, b = float(xs[k]), float(xs[k + 1])
        if skip is not None and skip(a, b):
            continue
        root = _bisect(poly, a, b)
        roots.append(_polish(poly, slope, root, a, b))
    return sorted(roots)


def interior_equilibria(params: ModelParams) -> list[Equilibrium]:
    '''All interior equilibria of the strength-driven model'''
    _require_strength(params)
    nf = nullclines(params)
    poly = interior_polynomial(nf)
    scale = float(np.max(np.abs(poly.coef))) if poly.coef.size else 0.0
    if scale == 0:
        logging.warning('interior polynomial vanishes identically for %s',
                        params)
        return []
    poly = poly / scale
    slope = poly.deriv()
    gb = Polynomial(nf.gb)
    K1, K2 = params.K1, params.K2

    def pole_between(a: float, b: float) -> bool:
        return gb(a) * gb(b) <= 0

    candidates = polynomial_roots_in(poly, SCAN_EPSILON * K1,
                                     (1 - SCAN_EPSILON) * K1, pole_between)
    clusters: list[list[float]] = []
    for root in candidates:
        if clusters and root - clusters[-1][-1] < MERGE_RADIUS * K1:
            clusters[-1].append(root)
        else:
            clusters.append([root])

    found = []
    for cluster in clusters:
        x1 = float(np.mean(cluster))
        try:
            x2 = nf.eval_g(x1)
        except PoleError:
            logging.debug('discarding root %r at a pole of G', x1)
            continue
        if not 0 < x2 < K2:
            continue
        y1 = prey_nullcline(1.0, K1, params.a1, x1)
        y2 = prey_nullcline(params.r, K2, params.a2, x2)
        if y1 < POSITIVITY_FLOOR or y2 < POSITIVITY_FLOOR:
            continue
        eq = make_equilibrium(params, (x1, y1, x2, y2),
                              EquilibriumKind.INTERIOR,
                              near_degenerate=len(set(cluster)) > 1,
                              fold=abs(slope(x1)) < FOLD_SLOPE)
        if eq.residual >= RESIDUAL_LIMIT:
            logging.info('discarding spurious root x1=%r (residual %g)', x1,
                         eq.residual)
            continue
        if eq.fold:
            logging.info('interior root x1=%r sits near a fold', x1)
        found.append(eq)
    return found


def interior_lower_bound(params: ModelParams, j: int) -> float:
    '''value at x_i = 0 of the nullcline giving x_j, a_i d_j / (a_j r_i
    rho_j + a_i a_j - a_i d_j)'''
    top, bottom = _nullcline_coeffs(params, j)
    return top[0] / bottom[0] if bottom[0] else math.inf


def _fact(name: str, holds: bool) -> Check:
    return Check(name, 1.0 if holds else -1.0, {})


def _predation_equal(params: ModelParams) -> bool:
    return abs(params.a1 - params.a2) < INDETERMINACY_BAND


def _peaks(params: ModelParams) -> list[Check]:
    return [
        less('F(x^c_2)', nullcline_peak(params, 2), 'K1', params.K1),
        less('G(x^c_1)', nullcline_peak(params, 1), 'K2', params.K2)
    ]


@theorem_clause(INTERIOR_EXISTENCE, 'none-without-predators', ordered=False)
def _none_without_predators(params, i, j):
    dq = derived(params)
    return [
        greater('mu1', dq.mu1, 'K1', params.K1),
        greater('mu2', dq.mu2, 'K2', params.K2)
    ]


@theorem_clause(INTERIOR_EXISTENCE, 'none-dominant-predation')
def _none_dominant_predation(params, i, j):
    pi, pj = params.patch(i), params.patch(j)
    bound = (4 * pj.K * pj.a * (pi.a - pj.a) * (pi.d - pi.a) /
             (pj.r * (pj.K * pi.a - pj.K * pj.a + pi.a)**2))
    return [
        greater('a_i', pi.a, 'a_j', pj.a),
        less('rho_i', pi.rho, 'rho_bound', bound)
    ]


@theorem_clause(INTERIOR_EXISTENCE, 'exists-dominant-predation')
def _exists_dominant_predation(params, i, j):
    pi, pj = params.patch(i), params.patch(j)
    top_death = max(params.d1, params.d2)
    bound = (4 * pi.K * pi.a * (pj.a - pi.a) * (pj.d - pj.a) /
             (pi.r * (pi.K * pj.a - pi.K * pi.a + pj.a)**2))
    return [
        greater('a_i', pi.a, 'max(a_j,d1,d2)', max(pj.a, top_death)),
        greater('a_j', pj.a, 'max(d1,d2)', top_death),
        less('rho_j', pj.rho, 'rho_bound', bound),
    ] + _peaks(params)


@theorem_clause(INTERIOR_EXISTENCE, 'peak-f-sufficient')
def _peak_f_sufficient(params, i, j):
    pi, pj = params.patch(i), params.patch(j)
    bound = 4 * (pi.K * pi.a - pi.K * pi.d - pi.d) / (pj.K * pj.r)
    return [at_most('rho_i', pi.rho, 'rho_bound', bound)]


@theorem_clause(INTERIOR_EXISTENCE, 'peak-g-sufficient')
def _peak_g_sufficient(params, i, j):
    pi, pj = params.patch(i), params.patch(j)
    bound = (4 * pj.K * pj.a * (pi.K * pi.a - pi.K * pi.d - pi.d) /
             (pj.a * pj.r * pj.K**2 + pj.r * pi.K *
              (pj.K * pj.a - pj.K * pi.a - pi.a)**2))
    return [less('rho_j', pj.rho, 'rho_bound', bound)]


@theorem_clause(INTERIOR_EXISTENCE, 'none-equal-predation')
def _none_equal_predation(params, i, j):
    pi, pj = params.patch(i), params.patch(j)
    return [
        _fact('a1 = a2', _predation_equal(params)),
        greater('d_i', pi.d, 'a + r_j rho_i', pi.a + pj.r * pi.rho)
    ]


@theorem_clause(INTERIOR_EXISTENCE, 'exists-equal-predation', ordered=False)
def _exists_equal_predation(params, i, j):
    return [
        _fact('a1 = a2', _predation_equal(params)),
        greater('a', params.a1, 'max(d1,d2)', max(params.d1, params.d2)),
    ] + _peaks(params)


@theorem_clause(INTERIOR_EXISTENCE, 'equal-predation-sufficient')
def _equal_predation_sufficient(params, i, j):
    pi, pj = params.patch(i), params.patch(j)
    bound = 4 * (pi.K * pi.a - pi.K * pi.d - pi.d) / (pj.K * pj.r)
    return [
        _fact('a1 = a2', _predation_equal(params)),
        less('rho_i', pi.rho, 'rho_bound', bound)
    ]


def interior_existence_report(params: ModelParams) -> ConditionReport:
    '''Every displayed existence / nonexistence condition for interior
    equilibria, each with its margin'''
    entries = evaluate_theorem(INTERIOR_EXISTENCE, params)
    none = any(e.holds for e in entries if e.clause.startswith('none'))
    exists = any(e.holds for e in entries if e.clause.startswith('exists'))
    return ConditionReport(entries=entries,
                           flags={
                               'no_interior_sufficient': none,
                               'interior_exists_sufficient': exists
                           })

# EOF
