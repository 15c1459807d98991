'''one- and two-parameter sweeps and single-patch regime boundaries'''
# pylint: disable=invalid-name
import numpy as np
import pytest

from patchdyn.bifurcation import (THREADS_ENV, AxisSpec, RegionCode,
                                  SinglePatchRegime, SweepRecord,
                                  locate_transition, refine_empty_region,
                                  regime_transitions, resolve_threads,
                                  single_patch_jacobian, single_patch_regime,
                                  sweep1d, sweep2d)
from patchdyn.dynamics import (AttractorLabel, Horizon, classify_attractor,
                               integrate)
from patchdyn.equilibria import interior_equilibria
from patchdyn.model import ModelParams
from patchdyn.registry import ConditionViolationError

STABLE_STABLE = ModelParams(r=1.5, K1=5, K2=3, a1=0.25, a2=0.15, d1=0.2,
                            d2=0.1, rho1=0.0, rho2=0.025)
STARVING = ModelParams(r=1.5, K1=2, K2=1.5, a1=0.25, a2=0.15, d1=0.3,
                       d2=0.25, rho1=0.1, rho2=0.05)
SHORT = Horizon(transient=300.0, window=100.0)


def test_region_codes():
    '''counts map to codes, four and more share one'''
    assert RegionCode.from_count(0) is RegionCode.NONE_OTHER
    assert RegionCode.from_count(2) is RegionCode.TWO_INTERIOR
    assert RegionCode.from_count(5) is RegionCode.FOUR_OR_MORE_INTERIOR
    both = AttractorLabel.BOTH_PREDATORS_EXTINCT
    y2 = AttractorLabel.BOUNDARY_Y2_EXTINCT
    assert refine_empty_region([both, both]) is RegionCode.NONE_BOTH_EXTINCT
    assert refine_empty_region([y2, both]) is RegionCode.NONE_Y2_EXTINCT
    assert [int(code) for code in RegionCode] == [3, 2, 1, 0, -1, -2, 4]
    assert refine_empty_region(
        [AttractorLabel.BOUNDARY_Y1_EXTINCT]) is RegionCode.NONE_OTHER
    assert refine_empty_region([]) is RegionCode.NONE_OTHER


def test_single_patch_transitions():
    '''extinction and Hopf thresholds of isolated patches'''

    def patch1(a):
        return single_patch_regime(5.0, a, 0.2)

    def patch2(a):
        return single_patch_regime(3.0, a, 0.1, r=1.5)

    assert patch1(0.2) is SinglePatchRegime.EXTINCTION
    assert patch1(0.27) is SinglePatchRegime.EQUILIBRIUM
    assert patch1(0.35) is SinglePatchRegime.CYCLE
    assert locate_transition(patch1, 0.2, 0.27) == pytest.approx(0.24,
                                                                 abs=1e-4)
    assert locate_transition(patch1, 0.27, 0.5) == pytest.approx(0.30,
                                                                 abs=1e-4)
    samples = [(a / 100, patch2(a / 100)) for a in range(5, 51)]
    found = regime_transitions(samples, patch2)
    assert found == pytest.approx([0.4 / 3, 0.2], abs=1e-4)
    with pytest.raises(ValueError):
        locate_transition(patch1, 0.4, 0.5)


def test_single_patch_jacobian():
    '''trace and determinant at (mu, nu) of the first patch'''
    jac = single_patch_jacobian(1.0, 5.0, 0.25, 0.2, 4.0, 4.0)
    assert jac[1, 1] == pytest.approx(0.0)
    assert np.trace(jac) == pytest.approx(-0.64)
    assert np.linalg.det(jac) == pytest.approx(0.008)


@pytest.mark.parametrize('a, label', [
    (0.27, AttractorLabel.INTERIOR_EQUILIBRIUM),
    (0.35, AttractorLabel.INTERIOR_CYCLE),
])
def test_single_patch_regime_matches_simulation(a, label):
    '''two identical uncoupled patches end where one patch does'''
    params = ModelParams(r=1.0, K1=5, K2=5, a1=a, a2=a, d1=0.2, d2=0.2)
    horizon = Horizon()
    traj = integrate(params, (3.0, 5.0, 2.0, 6.0), horizon.t_end)
    assert classify_attractor(params, traj, horizon).label is label
    expected = {
        AttractorLabel.INTERIOR_EQUILIBRIUM: SinglePatchRegime.EQUILIBRIUM,
        AttractorLabel.INTERIOR_CYCLE: SinglePatchRegime.CYCLE,
    }[label]
    assert single_patch_regime(5.0, a, 0.2) is expected


def test_axis_spec():
    '''parsing, validation and sampling of ranges'''
    axis = AxisSpec.parse('rho1', '0:0.5:11')
    assert len(axis.values()) == 11
    assert axis.values()[-1] == 0.5
    assert list(AxisSpec.parse('a1', '0.3:0.3:7').values()) == [0.3]
    with pytest.raises(ConditionViolationError):
        AxisSpec.parse('rho1', '0.5:0:3')
    with pytest.raises(ConditionViolationError):
        AxisSpec.parse('K1', '1:2:3')
    with pytest.raises(ValueError):
        AxisSpec.parse('rho1', '0:0.5')
    with pytest.raises(ValueError):
        AxisSpec.parse('rho1', '0:x:3')


def test_sweep_record_condition():
    '''the region code has to match the equilibria'''
    record = SweepRecord(values={'rho1': 0.0},
                         interior=[],
                         region=RegionCode.ONE_INTERIOR)
    with pytest.raises(ConditionViolationError):
        record.validate_model()
    assert record.outcome is None


def test_sweep1d_matches_pointwise_search():
    '''every point records the equilibria found for its parameters'''
    axis = AxisSpec.parse('rho1', '0:0.5:11')
    records = sweep1d(STABLE_STABLE, axis)
    assert len(records) == 11
    for record in records:
        point = STABLE_STABLE.replace(rho1=record.values['rho1'])
        assert record.n_interior == len(interior_equilibria(point))
        assert len(record.branches) == record.n_interior
        assert not record.validate_model(raise_exc=False)
        assert record.outcomes == []


def test_sweep1d_branches():
    '''a single slowly moving equilibrium keeps its branch id'''
    params = STABLE_STABLE.replace(rho2=0.0)
    records = sweep1d(params, AxisSpec.parse('a1', '0.3:0.31:3'))
    assert [r.branches for r in records] == [[0], [0], [0]]


def test_sweep1d_degenerate_range():
    '''lo == hi evaluates a single point'''
    records = sweep1d(STABLE_STABLE, AxisSpec.parse('rho1', '0.2:0.2:5'))
    assert len(records) == 1


def test_sweep1d_probes():
    '''probing simulates every point'''
    records = sweep1d(STARVING,
                      AxisSpec.parse('rho1', '0:0.1:2'),
                      probes=1,
                      horizon=SHORT)
    assert all(r.outcome is AttractorLabel.BOTH_PREDATORS_EXTINCT
               for r in records)


def test_sweep2d_is_deterministic():
    '''equal seeds give equal grids, also across worker counts'''
    rows = AxisSpec.parse('rho1', '0:0.5:3')
    cols = AxisSpec.parse('rho2', '0:0.05:3')
    first = sweep2d(STABLE_STABLE, rows, cols, probes=0, threads=1)
    again = sweep2d(STABLE_STABLE, rows, cols, probes=0, threads=1)
    pooled = sweep2d(STABLE_STABLE, rows, cols, probes=0, threads=2)
    assert first == again == pooled
    assert len(first.records) == 9
    cell = first.cell(2, 1)
    assert cell.values == {'rho1': 0.5, 'rho2': 0.025}
    assert sum(first.region_counts().values()) == 9


def test_sweep2d_extinction_region():
    '''probes classify points without interior equilibria'''
    rows = AxisSpec.parse('rho1', '0:0.1:2')
    cols = AxisSpec.parse('rho2', '0:0.1:2')
    grid = sweep2d(STARVING, rows, cols, probes=1, threads=1, horizon=SHORT)
    assert grid.region_counts() == {RegionCode.NONE_BOTH_EXTINCT: 4}
    again = sweep2d(STARVING, rows, cols, probes=1, threads=1, horizon=SHORT)
    assert grid == again


def test_sweep2d_needs_proper_axes():
    '''grids need two proper ranges'''
    with pytest.raises(ConditionViolationError):
        sweep2d(STABLE_STABLE, AxisSpec.parse('rho1', '0.1:0.1:1'),
                AxisSpec.parse('rho2', '0:0.05:3'),
                probes=0)


def test_resolve_threads(monkeypatch):
    '''explicit counts beat the environment'''
    monkeypatch.setenv(THREADS_ENV, '3')
    assert resolve_threads(None) == 3
    assert resolve_threads(1) == 1
    assert resolve_threads(0) == 1
    monkeypatch.delenv(THREADS_ENV)
    assert resolve_threads(None) >= 1

# EOF
