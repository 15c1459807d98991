'''Brute-force reference computations for the tests'''
import math

import numpy as np
from numpy.polynomial import Polynomial

from patchdyn.equilibria import nullclines
from patchdyn.model import ModelParams, prey_nullcline, rhs

SCAN = 200_001


def _composition(params: ModelParams):
    nf = nullclines(params)
    ft, fb = Polynomial(nf.ft), Polynomial(nf.fb)
    gt, gb = Polynomial(nf.gt), Polynomial(nf.gb)

    def h(x):
        x2 = gt(x) / gb(x)
        return ft(x2) / fb(x2) - x, x2, gb(x), fb(x2)

    return h


def scan_interior(params: ModelParams, points: int = SCAN) -> list[np.ndarray]:
    '''interior equilibria from sign changes of F(G(x1)) - x1 on a dense
    grid, refined by plain bisection; intervals containing a pole of either
    nullcline are skipped'''
    h = _composition(params)
    xs = np.linspace(0.0, params.K1, points)[1:-1]
    with np.errstate(divide='ignore', invalid='ignore'):
        values, _, gb, fb = h(xs)
        candidates = np.nonzero(
            np.isfinite(values[:-1]) & np.isfinite(values[1:])
            & (values[:-1] * values[1:] <= 0) & (gb[:-1] * gb[1:] > 0)
            & (fb[:-1] * fb[1:] > 0))[0]
    found = []
    for k in candidates:
        lo, hi = float(xs[k]), float(xs[k + 1])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if h(lo)[0] * h(mid)[0] <= 0:
                hi = mid
            else:
                lo = mid
        x1 = 0.5 * (lo + hi)
        x2 = float(h(x1)[1])
        if not 0 < x2 < params.K2:
            continue
        y1 = prey_nullcline(1.0, params.K1, params.a1, x1)
        y2 = prey_nullcline(params.r, params.K2, params.a2, x2)
        state = np.array([x1, y1, x2, y2])
        if min(y1, y2) <= 0 or np.max(np.abs(rhs(params, state))) > 1e-8:
            continue
        found.append(state)
    return found


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    '''argmax of a unimodal function on [lo, hi]'''
    ratio = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - ratio * (b - a), a + ratio * (b - a)
    while b - a > tol:
        if f(c) > f(d):
            b, d = d, c
            c = b - ratio * (b - a)
        else:
            a, c = c, d
            d = a + ratio * (b - a)
    return 0.5 * (a + b)


def multiset_distance(u, v) -> float:
    '''largest distance after greedily pairing two equally long sets of
    complex numbers'''
    rest = [complex(z) for z in v]
    worst = 0.0
    for z in sorted((complex(w) for w in u), key=lambda w: (w.real, w.imag)):
        k = min(range(len(rest)), key=lambda n: abs(rest[n] - z))
        worst = max(worst, abs(rest.pop(k) - z))
    return worst


def random_params(rng: np.random.Generator, **fixed) -> ModelParams:
    '''parameters drawn around the magnitudes of the shipped regimes'''
    values = {
        'r': rng.uniform(0.5, 2.0),
        'K1': rng.uniform(1.0, 6.0),
        'K2': rng.uniform(1.0, 6.0),
        'a1': rng.uniform(0.1, 1.0),
        'a2': rng.uniform(0.1, 1.0),
        'd1': rng.uniform(0.05, 0.4),
        'd2': rng.uniform(0.05, 0.4),
        'rho1': rng.uniform(0.0, 0.5),
        'rho2': rng.uniform(0.0, 0.5),
    }
    values.update(fixed)
    return ModelParams(**values)

# EOF
