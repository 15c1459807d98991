'''Sufficient conditions for extinction, predator persistence and permanence
of the strength-driven model.

Each clause is registered with `theorem_clause`; clauses stated "for i = 1,
j = 2 or i = 2, j = 1" are evaluated for both patch orders and reported
separately.
'''
from patchdyn.model import ModelParams, derived, mu
from patchdyn.registry import theorem_clause
from patchdyn.report import (BOTH_ORDERS, ConditionReport, evaluate_theorem,
                             greater, less)

GLOBAL_EXTINCTION = 'global-extinction'
PREDATOR_PERSISTENCE = 'predator-persistence'
PERMANENCE = 'permanence'


def _terms(params: ModelParams, i: int, j: int) -> dict:
    dq = derived(params)
    pi, pj = params.patch(i), params.patch(j)
    return {
        'mu_i': dq.mu(i),
        'mu_j': dq.mu(j),
        'nu_i': dq.nu(i),
        'nu_j': dq.nu(j),
        'hopf_i': dq.hopf(i),
        'hopf_j': dq.hopf(j),
        'K_i': pi.K,
        'K_j': pj.K,
        'rho_i': pi.rho,
        'rho_j': pj.rho,
        # d_i / (a_j - d_i) and d_j / (a_i - d_j), +inf when not positive
        'cross_ji': mu(pj.a, pi.d),
        'cross_ij': mu(pi.a, pj.d),
        'pi': pi,
        'pj': pj,
    }


def _oscillation_free(t: dict, k: str) -> list:
    '''(K_k - 1) / 2 < mu_k < K_k'''
    return [
        greater(f'mu_{k}', t[f'mu_{k}'], f'(K_{k}-1)/2', t[f'hopf_{k}']),
        less(f'mu_{k}', t[f'mu_{k}'], f'K_{k}', t[f'K_{k}'])
    ]


def _weak_invasion_bound(t: dict) -> float:
    '''(K_j (a_j - d_j) - d_j) / (nu_i (d_i - K_j (a_j - d_i)))'''
    pi, pj = t['pi'], t['pj']
    den = t['nu_i'] * (pi.d - pj.K * (pj.a - pi.d))
    num = pj.K * (pj.a - pj.d) - pj.d
    return num / den if den else float('inf')


@theorem_clause(GLOBAL_EXTINCTION, 'both-predators-starve', ordered=False)
def _both_predators_starve(params, i, j):
    dq = derived(params)
    return [
        greater('mu1', dq.mu1, 'K1', params.K1),
        greater('mu2', dq.mu2, 'K2', params.K2)
    ]


@theorem_clause(PREDATOR_PERSISTENCE, 'other-starves')
def _other_starves(params, i, j):
    t = _terms(params, i, j)
    return [
        less('mu_j', t['mu_j'], 'K_j', t['K_j']),
        greater('mu_i', t['mu_i'], 'K_i', t['K_i'])
    ]


@theorem_clause(PREDATOR_PERSISTENCE, 'invades-boundary')
def _invades_boundary(params, i, j):
    t = _terms(params, i, j)
    return _oscillation_free(t, 'i') + [
        greater('K_j', t['K_j'], 'max(mu_j,d_i/(a_j-d_i))',
                max(t['mu_j'], t['cross_ji']))
    ]


@theorem_clause(PREDATOR_PERSISTENCE, 'invades-slow-dispersal')
def _invades_slow_dispersal(params, i, j):
    t = _terms(params, i, j)
    return _oscillation_free(t, 'i') + [
        less('mu_j', t['mu_j'], 'K_j', t['K_j']),
        less('K_j', t['K_j'], 'd_i/(a_j-d_i)', t['cross_ji']),
        less('rho_j', t['rho_j'], 'rho_bound', _weak_invasion_bound(t))
    ]


@theorem_clause(PERMANENCE, 'fast-dispersal-rescue')
def _fast_dispersal_rescue(params, i, j):
    t = _terms(params, i, j)
    pi, pj = t['pi'], t['pj']
    den = t['nu_j'] * (pi.K * (pi.a - pj.d) - pj.d)
    bound = (pi.d - pi.K * (pi.a - pi.d)) / den if den else float('inf')
    return _oscillation_free(t, 'j') + [
        greater('d_j/(a_i-d_j)', t['cross_ij'], '0', 0.0),
        less('d_j/(a_i-d_j)', t['cross_ij'], 'K_i', t['K_i']),
        less('K_i', t['K_i'], 'mu_i', t['mu_i']),
        greater('rho_i', t['rho_i'], 'rho_bound', bound)
    ]


def _mutual_invasion_half(params, i, j) -> list:
    t = _terms(params, i, j)
    suffix = f'[{i}{j}]'
    return [
        greater(f'mu_j{suffix}', t['mu_j'], f'(K_j-1)/2{suffix}', t['hopf_j']),
        less(f'mu_j{suffix}', t['mu_j'], f'K_j{suffix}', t['K_j']),
        greater(f'mu_i{suffix}', t['mu_i'], f'(K_i-1)/2{suffix}', t['hopf_i']),
        greater(f'K_i{suffix}', t['K_i'], f'max(mu_i,d_j/(a_i-d_j)){suffix}',
                max(t['mu_i'], t['cross_ij']))
    ]


@theorem_clause(PERMANENCE, 'mutual-invasion', ordered=False)
def _mutual_invasion(params, i, j):
    return _mutual_invasion_half(params, 1, 2) + _mutual_invasion_half(
        params, 2, 1)


@theorem_clause(PERMANENCE, 'one-sided-invasion')
def _one_sided_invasion(params, i, j):
    t = _terms(params, i, j)
    return _oscillation_free(t, 'i') + [
        greater('K_i', t['K_i'], 'max(mu_i,d_j/(a_i-d_j))',
                max(t['mu_i'], t['cross_ij'])),
        greater('mu_j', t['mu_j'], '(K_j-1)/2', t['hopf_j']),
        less('mu_j', t['mu_j'], 'K_j', t['K_j']),
        less('K_j', t['K_j'], 'd_i/(a_j-d_i)', t['cross_ji']),
        less('rho_j', t['rho_j'], 'rho_bound', _weak_invasion_bound(t))
    ]


def check_global_extinction(params: ModelParams) -> ConditionReport:
    '''both predators die out and (K1, 0, K2, 0) attracts everything if
    mu_i > K_i for both patches'''
    entries = evaluate_theorem(GLOBAL_EXTINCTION, params)
    return ConditionReport(
        entries=entries,
        flags={'global_BothK_sufficient': any(e.holds for e in entries)})


def check_predator_persistence(params: ModelParams) -> ConditionReport:
    '''Predator j persists if one of its clauses holds for the order (i, j);
    both prey always persist.'''
    entries = evaluate_theorem(PREDATOR_PERSISTENCE, params, BOTH_ORDERS)
    flags = {'prey1_persistent': True, 'prey2_persistent': True}
    for j in (1, 2):
        flags[f'predator{j}_persistent_sufficient'] = any(
            e.holds for e in entries if e.order[1] == j)
    return ConditionReport(entries=entries, flags=flags)


def check_permanence(params: ModelParams) -> ConditionReport:
    '''the model is permanent if any clause family holds'''
    entries = evaluate_theorem(PERMANENCE, params, BOTH_ORDERS)
    return ConditionReport(
        entries=entries,
        flags={'permanent_sufficient': any(e.holds for e in entries)})


def condition_report(params: ModelParams) -> ConditionReport:
    '''extinction, persistence and permanence clauses in one report'''
    return check_global_extinction(params).merge(
        check_predator_persistence(params)).merge(check_permanence(params))

# EOF
