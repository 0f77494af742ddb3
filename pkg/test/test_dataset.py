import os

import pytest

from xlstm_scaling import records
from xlstm_scaling.scaling_fit import fit_overtraining, fit_power_law, isoflop_optima

DATASET = os.environ.get('XLSTM_SCALING_RUN_DATASET')

# eta per token/parameter ratio of the released runs
OVERTRAINING_ETA = {
    'transformer': {22: 0.050, 44: 0.048, 110: 0.047, 220: 0.048, 550: 0.049},
    'xlstm': {22: 0.047, 44: 0.046, 110: 0.046, 220: 0.047, 550: 0.047, 1100: 0.047},
}

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(DATASET is None, reason='XLSTM_SCALING_RUN_DATASET is not set'),
]


@pytest.fixture(scope='module')
def runs():
    return records.load_runs(DATASET)


def test_all_runs_load(runs):
    assert len(runs) == 672


@pytest.mark.parametrize('kind', sorted(OVERTRAINING_ETA))
def test_overtraining_exponents(runs, kind):
    fits = fit_overtraining(runs, kind=kind)
    for ratio, eta in OVERTRAINING_ETA[kind].items():
        matches = [fit for M, fit in fits.items() if abs(M / ratio - 1) <= 0.02]
        assert matches, f'no runs at M={ratio}'
        assert matches[0].eta == pytest.approx(eta, abs=0.005)


def test_transformer_isoflop_minima_exponent(runs):
    # Token/Param runs share a budget only by coincidence; sweeps have many sizes
    transformer = [r for r in runs if r.kind.value == 'transformer' and r.T_ctx == 8192]
    optima = [o for o in isoflop_optima(transformer, 'N')
              if o.parabola.interior and o.n_runs >= 5]
    assert len(optima) >= 3
    fit = fit_power_law([o.H for o in optima], [o.parabola.optimum_x for o in optima])
    assert 0.56 <= fit.exponent <= 0.59
