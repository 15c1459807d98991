'''The classic two-patch model with density-driven predator dispersal.

Dispersal losses shift the effective predator death rate to
d^_i = d_i + rho_i d_j / (d_j + rho_j); the hat quantities of
`patchdyn.model` derive from it. This module locates the equilibria of the
model, evaluates its persistence and extinction clauses and compares both
dispersal variants on one parameter set.
'''
import itertools
import logging
from multiprocessing import Pool

import numpy as np

from patchdyn.base_data_class import BaseDataClass
from patchdyn.bifurcation import probe_outcomes, resolve_threads
from patchdyn.conditions import condition_report
from patchdyn.dynamics import (AttractorLabel, Horizon, LyapunovKind,
                               LyapunovReport, Tolerances, integrate,
                               lyapunov_check, random_interior_states,
                               symmetric)
from patchdyn.equilibria import (POSITIVITY_FLOOR, RESIDUAL_LIMIT,
                                 Equilibrium, EquilibriumKind,
                                 boundary_equilibria, interior_equilibria,
                                 make_equilibrium)
from patchdyn.model import (ModelParams, NotApplicableError, Variant, derived,
                            hat_quantities, prey_nullcline, rhs, uptake)
from patchdyn.registry import theorem_clause
from patchdyn.report import (ClauseEntry, ConditionReport, all_of, any_of,
                             evaluate_theorem, greater, less)
from patchdyn.stability import Stability

CLASSIC = 'classic'
CLASSIC_BOUNDARY = 'classic-boundary'
NEWTON_GRID = 20
NEWTON_ITERATIONS = 60
NEWTON_TOLERANCE = 1e-13
DEDUP_RADIUS = 1e-6
CONVERGENCE_RADIUS = 1e-6

_X, _Y = {1: 0, 2: 2}, {1: 1, 2: 3}


def _require_density(params: ModelParams) -> None:
    if params.variant is not Variant.DENSITY:
        raise NotApplicableError('density-driven dispersal required')


def subsystem_rhs(params: ModelParams, i: int, s3) -> np.ndarray:
    '''right-hand side of (x_i, y_i, y_j) with the prey of patch j absent'''
    _require_density(params)
    j = 3 - i
    state = [0.0] * 4
    state[_X[i]], state[_Y[i]], state[_Y[j]] = (float(v) for v in s3)
    return rhs(params, state)[[_X[i], _Y[i], _Y[j]]]


def _hat_terms(params: ModelParams, i: int, j: int) -> dict:
    hq = hat_quantities(params)
    pi, pj = params.patch(i), params.patch(j)
    return {
        'muhat_i': hq.muhat(i),
        'muhat_j': hq.muhat(j),
        'K_i': pi.K,
        'K_j': pj.K,
        'hopf_i': (pi.K - 1) / 2,
        'hopf_j': (pj.K - 1) / 2,
        'r_i': pi.r,
        'r_j': pj.r,
        # predator j at the boundary state carried by predator i
        'a_j*nuhat_j^i': pj.a * hq.cross(i, j),
        'a_i*nuhat_i^j': pi.a * hq.cross(j, i),
        'nuhat_j^i': hq.cross(i, j),
        'nuhat_i^j': hq.cross(j, i),
        'peak_i': pi.r * (pi.K + 1)**2 / (4 * pi.a * pi.K),
    }


def _hat_oscillation_free(t: dict, k: str, suffix: str = '') -> list:
    '''(K_k - 1) / 2 < muhat_k < K_k'''
    name = f'muhat_{k}{suffix}'
    return [
        greater(name, t[f'muhat_{k}'], f'(K_{k}-1)/2{suffix}',
                t[f'hopf_{k}']),
        less(name, t[f'muhat_{k}'], f'K_{k}{suffix}', t[f'K_{k}'])
    ]


@theorem_clause(CLASSIC_BOUNDARY, 'both-k-stable', ordered=False)
def _both_k_stable(params, i, j):
    p1, p2 = uptake(params.a1, params.K1), uptake(params.a2, params.K2)
    outflow = params.d2 + params.rho2
    factored = ((params.d1 - p1) * (1 - p2 / outflow) + params.rho1 /
                outflow * (params.d2 - p2))
    return [
        greater('d1+d2+rho1+rho2',
                params.d1 + params.d2 + params.rho1 + params.rho2,
                'p1(K1)+p2(K2)', p1 + p2),
        greater('[d1-p1(K1)][1-p2(K2)/(d2+rho2)]+rho1/(d2+rho2)[d2-p2(K2)]',
                factored, '0', 0.0)
    ]


@theorem_clause(CLASSIC_BOUNDARY, 'predator-stable')
def _predator_stable(params, i, j):
    t = _hat_terms(params, i, j)
    return _hat_oscillation_free(t, 'i') + [
        less('r_j', t['r_j'], 'a_j*nuhat_j^i', t['a_j*nuhat_j^i'])
    ]


@theorem_clause(CLASSIC, 'subsystem-prey-only')
def _subsystem_prey_only(params, i, j):
    t = _hat_terms(params, i, j)
    return [greater('muhat_i', t['muhat_i'], 'K_i', t['K_i'])]


@theorem_clause(CLASSIC, 'subsystem-coexistence')
def _subsystem_coexistence(params, i, j):
    return _hat_oscillation_free(_hat_terms(params, i, j), 'i')


# a_j <= d^_j is carried as muhat_j = +inf and so covered by muhat_j > K_j
@theorem_clause(CLASSIC, 'prey-persists-unsupported')
def _prey_persists_unsupported(params, i, j):
    t = _hat_terms(params, i, j)
    return [greater('muhat_j', t['muhat_j'], 'K_j', t['K_j'])]


@theorem_clause(CLASSIC, 'prey-persists-invasion')
def _prey_persists_invasion(params, i, j):
    t = _hat_terms(params, i, j)
    return _hat_oscillation_free(t, 'j') + [
        greater('r_i', t['r_i'], 'a_i*nuhat_i^j', t['a_i*nuhat_i^j'])
    ]


@theorem_clause(CLASSIC, 'both-prey-unsupported', ordered=False)
def _both_prey_unsupported(params, i, j):
    hq = hat_quantities(params)
    return [
        greater('muhat_1', hq.muhat1, 'K1', params.K1),
        greater('muhat_2', hq.muhat2, 'K2', params.K2)
    ]


@theorem_clause(CLASSIC, 'both-prey-mutual', ordered=False)
def _both_prey_mutual(params, i, j):
    checks = []
    for i_, j_ in ((1, 2), (2, 1)):
        t = _hat_terms(params, i_, j_)
        suffix = f'[{i_}{j_}]'
        checks += _hat_oscillation_free(t, 'i', suffix)
        checks.append(
            greater(f'r_j{suffix}', t['r_j'], f'a_j*nuhat_j^i{suffix}',
                    t['a_j*nuhat_j^i']))
    return checks


@theorem_clause(CLASSIC, 'both-prey-one-sided')
def _both_prey_one_sided(params, i, j):
    t = _hat_terms(params, i, j)
    return [greater('muhat_i', t['muhat_i'], 'K_i', t['K_i'])
            ] + _hat_oscillation_free(t, 'j') + [
                greater('r_i', t['r_i'], 'a_i*nuhat_i^j', t['a_i*nuhat_i^j'])
            ]


@theorem_clause(CLASSIC, 'prey-extinction-stated')
def _prey_extinction_stated(params, i, j):
    t = _hat_terms(params, i, j)
    return _hat_oscillation_free(t, 'j') + [
        less('r_i(K_i+1)^2/(4a_iK_i)', t['peak_i'], 'nuhat_j^i',
             t['nuhat_j^i'])
    ]


@theorem_clause(CLASSIC, 'prey-extinction-proof')
def _prey_extinction_proof(params, i, j):
    t = _hat_terms(params, i, j)
    return _hat_oscillation_free(t, 'j') + [
        less('r_i(K_i+1)^2/(4a_iK_i)', t['peak_i'], 'nuhat_i^j',
             t['nuhat_i^j'])
    ]


@theorem_clause(CLASSIC, 'predators-persist', ordered=False)
def _predators_persist(params, i, j):
    dq = derived(params)
    return [
        less('mu1', dq.mu1, 'K1', params.K1),
        less('mu2', dq.mu2, 'K2', params.K2)
    ]


@theorem_clause(CLASSIC, 'predators-extinct', ordered=False)
def _predators_extinct(params, i, j):
    dq = derived(params)
    return [
        greater('mu1', dq.mu1, 'K1', params.K1),
        greater('mu2', dq.mu2, 'K2', params.K2)
    ]


def classic_condition_report(params: ModelParams) -> ConditionReport:
    '''Subsystem, prey persistence, prey extinction, predator persistence
    and permanence clauses of the density-driven model.

    The prey extinction threshold is evaluated twice: against the predator
    density of the other patch at the surviving boundary state (as stated)
    and against the predator density of the extinct prey's own patch (as
    used in the descent argument). Disagreements are flagged.
    '''
    _require_density(params)
    report = ConditionReport(entries=evaluate_theorem(CLASSIC, params))

    def find(clause, order=None) -> ClauseEntry:
        return report.find(CLASSIC, clause, order)

    prey = {
        i: any_of(CLASSIC, 'prey-persists', (i, j), [
            find('prey-persists-unsupported', (i, j)),
            find('prey-persists-invasion', (i, j))
        ])
        for i, j in ((1, 2), (2, 1))
    }
    both = any_of(CLASSIC, 'both-prey-persist', None, [
        find('both-prey-unsupported'),
        find('both-prey-mutual'),
        find('both-prey-one-sided', (1, 2)),
        find('both-prey-one-sided', (2, 1))
    ])
    permanent = all_of(CLASSIC, 'permanent', None,
                       [find('predators-persist'), both])
    flags = {
        'predators_persistent_sufficient': find('predators-persist').holds,
        'global_BothK_sufficient': find('predators-extinct').holds,
        'both_prey_persistent_sufficient': both.holds,
        'permanent_sufficient': permanent.holds,
    }
    disagree = False
    for i, j in ((1, 2), (2, 1)):
        stated = find('prey-extinction-stated', (i, j)).holds
        proof = find('prey-extinction-proof', (i, j)).holds
        disagree = disagree or stated != proof
        flags[f'prey{i}_persistent_sufficient'] = prey[i].holds or both.holds
        flags[f'prey{i}_extinct_stated'] = stated
        flags[f'prey{i}_extinct_proof'] = proof
        flags[f'subsystem{i}_prey_only'] = find('subsystem-prey-only',
                                                (i, j)).holds
        flags[f'subsystem{i}_coexistence'] = find('subsystem-coexistence',
                                                  (i, j)).holds
    flags['prey_extinction_subscripts_disagree'] = disagree
    if disagree:
        logging.info('prey extinction thresholds disagree for %s', params)
    return ConditionReport(entries=report.entries +
                           [prey[1], prey[2], both, permanent],
                           flags=flags)


def _cross_checked(eq: Equilibrium,
                   entry: ClauseEntry,
                   exact: bool = False) -> Equilibrium:
    '''Attaches a stability clause and compares it with the eigenvalues.
    A sufficient clause that does not fire makes no claim; an `exact` one
    also predicts instability.'''
    if entry.fired == 'boundary':
        agrees = None
    elif entry.fired:
        agrees = eq.stability is Stability.SINK
    elif exact:
        agrees = eq.stability is not Stability.SINK
    else:
        agrees = None
    if agrees is False:
        logging.warning('%s predicates disagree with eigenvalues (%s)',
                        eq.kind.value, eq.stability.value)
    return eq.replace(predicates=[entry], predicates_agree=agrees)


def classic_boundary_equilibria(params: ModelParams) -> list[Equilibrium]:
    '''The four prey-only equilibria and, for 0 < muhat_i < K_i, the state
    carried by predator i with the prey of the other patch absent. If the
    other predator does not disperse, predator i may also coexist with the
    other prey at its carrying capacity.'''
    _require_density(params)
    K1, K2 = params.K1, params.K2
    both_k = make_equilibrium(params, (K1, 0, K2, 0), EquilibriumKind.BOTH_K)
    found = [
        make_equilibrium(params, (0, 0, 0, 0), EquilibriumKind.ORIGIN),
        make_equilibrium(params, (K1, 0, 0, 0), EquilibriumKind.K1_ONLY),
        make_equilibrium(params, (0, 0, K2, 0), EquilibriumKind.K2_ONLY),
        _cross_checked(
            both_k,
            evaluate_theorem(CLASSIC_BOUNDARY, params, orders=())[0],
            exact=True),
    ]
    hq = hat_quantities(params)
    kinds = {
        1: (EquilibriumKind.PREDATOR_IN_1,
            EquilibriumKind.PREDATOR_IN_1_PREY_IN_2),
        2: (EquilibriumKind.PREDATOR_IN_2,
            EquilibriumKind.PREY_IN_1_PREDATOR_IN_2),
    }
    for i, j in ((1, 2), (2, 1)):
        pi, pj = params.patch(i), params.patch(j)
        if not 0 < hq.muhat(i) < pi.K:
            continue
        state = [0.0] * 4
        state[_X[i]], state[_Y[i]] = hq.muhat(i), hq.nuhat(i)
        state[_Y[j]] = hq.cross(i, j)
        alone, with_prey = kinds[i]
        kind = alone if pj.rho == 0 else EquilibriumKind.CLASSIC_BOUNDARY
        entry = [
            e for e in evaluate_theorem(CLASSIC_BOUNDARY, params, ((i, j), ))
            if e.clause == 'predator-stable'
        ][0]
        found.append(
            _cross_checked(make_equilibrium(params, state, kind, patch=i),
                           entry))
        if pj.rho == 0:
            state[_X[j]] = pj.K
            found.append(
                make_equilibrium(params, state, with_prey, patch=i))
    for eq in found:
        if eq.residual >= RESIDUAL_LIMIT:
            logging.warning('%s residual %g exceeds the limit', eq.kind.value,
                            eq.residual)
    return found


def _interior_system(params: ModelParams, x: np.ndarray):
    '''predator equations along the prey nullclines and their Jacobian'''
    q, dq, g_own = [], [], []
    for i in (1, 2):
        pt = params.patch(i)
        xi = x[i - 1]
        q.append(prey_nullcline(pt.r, pt.K, pt.a, xi))
        dq.append(pt.r * (pt.K - 1 - 2 * xi) / (pt.a * pt.K))
        g_own.append(uptake(pt.a, xi) - pt.d - pt.rho)
    slopes = [params.a1 / (1 + x[0])**2, params.a2 / (1 + x[1])**2]
    value = np.array([
        g_own[0] * q[0] + params.rho1 * q[1],
        g_own[1] * q[1] + params.rho2 * q[0],
    ])
    jac = np.array([
        [slopes[0] * q[0] + g_own[0] * dq[0], params.rho1 * dq[1]],
        [params.rho2 * dq[0], slopes[1] * q[1] + g_own[1] * dq[1]],
    ])
    return value, jac


def _newton(params: ModelParams, x0: np.ndarray) -> np.ndarray | None:
    upper = np.array([params.K1, params.K2])
    x = x0.copy()
    for _ in range(NEWTON_ITERATIONS):
        value, jac = _interior_system(params, x)
        try:
            step = np.linalg.solve(jac, value)
        except np.linalg.LinAlgError:
            return None
        damping = 1.0
        while np.any(x - damping * step <= 0) or np.any(
                x - damping * step >= upper):
            damping *= 0.5
            if damping < 1e-8:
                return None
        x = x - damping * step
        if np.max(np.abs(damping * step) / upper) < NEWTON_TOLERANCE:
            return x
    converged = np.max(np.abs(_interior_system(params, x)[0])) < 1e-12
    return x if converged else None


def _strictly_interior(params: ModelParams, x: np.ndarray, y) -> bool:
    upper = (params.K1, params.K2)
    return all(POSITIVITY_FLOOR < xi < k and yi > POSITIVITY_FLOOR
               for xi, k, yi in zip(x, upper, y))


def classic_interior_equilibria(params: ModelParams) -> list[Equilibrium]:
    '''Interior equilibria by Newton iterations on the two predator
    equations along the prey nullclines, started from a 20 x 20 grid of the
    open rectangle (0, K1) x (0, K2). End points on the boundary of the
    positive orthant (a prey at its carrying capacity, a predator at zero)
    are dropped before duplicates within 1e-6 are merged.'''
    _require_density(params)
    found: list[Equilibrium] = []
    centers = [(np.arange(NEWTON_GRID) + 0.5) / NEWTON_GRID * k
               for k in (params.K1, params.K2)]
    for x1, x2 in itertools.product(*centers):
        x = _newton(params, np.array([x1, x2]))
        if x is None:
            continue
        y1 = prey_nullcline(1.0, params.K1, params.a1, x[0])
        y2 = prey_nullcline(params.r, params.K2, params.a2, x[1])
        if not _strictly_interior(params, x, (y1, y2)):
            logging.debug('discarding boundary end point %s', x)
            continue
        state = np.array([x[0], y1, x[1], y2])
        if any(
                np.max(np.abs(state - eq.state.as_array())) < DEDUP_RADIUS
                for eq in found):
            continue
        eq = make_equilibrium(params, state, EquilibriumKind.INTERIOR)
        if eq.residual >= RESIDUAL_LIMIT:
            logging.debug('discarding Newton end point %s (residual %g)',
                          state, eq.residual)
            continue
        found.append(eq)
    return sorted(found, key=lambda eq: eq.state.x1)


class SymmetricReport(BaseDataClass):
    '''global convergence evidence for the symmetric interior equilibrium'''
    equilibrium: Equilibrium
    regime_holds: bool
    distances: list[float]
    converged: int
    lyapunov: list[LyapunovReport]

    @property
    def all_converged(self) -> bool:
        return self.converged == len(self.distances)

    @property
    def descending(self) -> bool:
        return all(report.descending for report in self.lyapunov)


def symmetric_global_check(params: ModelParams,
                           starts: int = 20,
                           seed: int = 0,
                           horizon: Horizon | None = None,
                           tolerances: Tolerances | None = None
                           ) -> SymmetricReport:
    '''Checks the symmetric equilibrium (mu, nu, mu, nu): its residual and
    eigenvalues, Lyapunov descent and convergence of `starts` random
    interior trajectories.'''
    _require_density(params)
    if not symmetric(params):
        raise NotApplicableError(
            'symmetric check needs r = 1, a1 = a2, d1 = d2 and K1 = K2')
    horizon = horizon or Horizon()
    dq = derived(params)
    if not 0 < dq.mu1 < params.K1:
        raise NotApplicableError('no positive symmetric equilibrium')
    target = np.array([dq.mu1, dq.nu1, dq.mu2, dq.nu2])
    equilibrium = make_equilibrium(params, target, EquilibriumKind.INTERIOR)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    distances, lyapunov = [], []
    for s0 in random_interior_states(params, starts, rng):
        traj = integrate(params, s0, horizon.t_end, tolerances)
        distances.append(float(np.max(np.abs(traj.final() - target))))
        lyapunov.append(lyapunov_check(params, LyapunovKind.SYMMETRIC, traj))
    converged = sum(d < CONVERGENCE_RADIUS for d in distances)
    logging.info('%d of %d symmetric trajectories converged', converged,
                 len(distances))
    return SymmetricReport(equilibrium=equilibrium,
                           regime_holds=dq.hopf1 < dq.mu1 < params.K1,
                           distances=distances,
                           converged=converged,
                           lyapunov=lyapunov)


class InventoryItem(BaseDataClass):
    '''variant independent view of an equilibrium'''
    kind: EquilibriumKind
    state: list[float]
    stability: Stability

    @classmethod
    def of(cls, eq: Equilibrium) -> 'InventoryItem':
        '''states rounded to ten significant digits'''
        return cls(kind=eq.kind,
                   state=[
                       float(f'{v:.10g}') + 0.0
                       for v in eq.state.as_array()
                   ],
                   stability=eq.stability)


class VariantSummary(BaseDataClass):
    variant: Variant
    boundary: list[InventoryItem]
    interior: list[InventoryItem]
    flags: dict[str, bool]
    outcomes: list[AttractorLabel]

    @property
    def n_interior(self) -> int:
        return len(self.interior)


class ComparisonRecord(BaseDataClass):
    '''both dispersal variants side by side for one parameter set'''
    params: ModelParams
    seed: int
    strength: VariantSummary
    density: VariantSummary


def _summarize_variant(task) -> VariantSummary:
    params, probes, seed, horizon, tolerances = task
    if params.variant is Variant.STRENGTH:
        boundary = boundary_equilibria(params)
        interior = interior_equilibria(params)
        flags = condition_report(params).flags
    else:
        boundary = classic_boundary_equilibria(params)
        interior = classic_interior_equilibria(params)
        flags = classic_condition_report(params).flags
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    outcomes = probe_outcomes(params, probes, rng, horizon,
                              tolerances) if probes else []
    return VariantSummary(variant=params.variant,
                          boundary=[InventoryItem.of(e) for e in boundary],
                          interior=[InventoryItem.of(e) for e in interior],
                          flags=flags,
                          outcomes=outcomes)


def compare_models(params: ModelParams,
                   probes: int = 3,
                   seed: int = 0,
                   threads: int | None = 1,
                   horizon: Horizon | None = None,
                   tolerances: Tolerances | None = None) -> ComparisonRecord:
    '''Equilibrium inventories, condition flags and probe outcomes of both
    variants. Probes of both variants start from the same random states.'''
    tasks = [(params.replace(variant=variant), probes, seed, horizon,
              tolerances) for variant in (Variant.STRENGTH, Variant.DENSITY)]
    if resolve_threads(threads) > 1:
        with Pool(2) as pool:
            strength, density = pool.map(_summarize_variant, tasks)
    else:
        strength, density = (_summarize_variant(task) for task in tasks)
    return ComparisonRecord(params=params,
                            seed=seed,
                            strength=strength,
                            density=density)

# EOF
