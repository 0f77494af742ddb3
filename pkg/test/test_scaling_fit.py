import math
import os
import random
import time

import numpy as np
import pytest

from xlstm_scaling.errors import DataError, InsufficientDataError
from xlstm_scaling.scaling_fit import (
    DEFAULT_INIT_GRID,
    InitGrid,
    LossSurfaceFit,
    RunRecord,
    bucket_by_ratio,
    fit_isoflop_profile,
    fit_loss_surface,
    fit_overtraining,
    fit_power_law,
    isoflop_optima,
    pareto_frontier,
    predict_loss,
)

SIZES = (164e6, 406e6, 841e6, 1420e6, 2780e6, 6865e6)
RATIOS = (22, 44, 110, 220, 550, 1100, 2200)
SMALL_GRID = InitGrid(log_a=(15.0, 20.0), log_b=(15.0, 20.0), log_e=(0.0, 0.5),
                      alpha=(0.5, 1.0), beta=(0.5, 1.0), gamma=(0.0, 0.5))
XLSTM_SURFACE = LossSurfaceFit(log_e=0.11, log_a=16.22, log_b=17.31, alpha=0.73, beta=0.67,
                               gamma=0.24)


def run(N, D, loss, C=None, kind='xlstm'):
    return RunRecord(N=N, D=D, T_ctx=8192, C=6 * N * D if C is None else C, loss=loss,
                     kind=kind)


def surface_runs(loss_fn):
    return [run(N, M * N, loss_fn(N, M * N)) for N in SIZES for M in RATIOS]


def test_default_grid_has_8000_starts():
    assert DEFAULT_INIT_GRID.size == 8000
    assert len(DEFAULT_INIT_GRID.points()) == 8000
    assert len(DEFAULT_INIT_GRID.points(freeze_gamma=True)) == 2000


def test_predict_matches_closed_form():
    fit = LossSurfaceFit(log_e=0.01, log_a=11.99, log_b=13.35, alpha=0.53, beta=0.51,
                         gamma=0.29)
    N, D = 1.42e9, 22 * 1.42e9
    expected = math.exp(0.01) + (math.exp(11.99) * N ** -0.53
                                 + math.exp(13.35) * D ** -0.51) ** 0.29
    assert predict_loss(fit, N, D) == pytest.approx(expected, rel=1e-12)


def test_pure_power_law_halves_with_scaled_size():
    fit = LossSurfaceFit(log_e=0.5, log_a=10.0, log_b=-700.0, alpha=0.5, beta=1.0, gamma=1.0)
    N = 1e8
    excess = fit.predict(N, 1e10) - fit.E
    assert fit.predict(N * 2 ** (1 / 0.5), 1e10) - fit.E == pytest.approx(excess / 2, rel=1e-9)


def test_noiseless_surface_is_recovered():
    runs = surface_runs(XLSTM_SURFACE.predict)
    fit = fit_loss_surface(runs, init_grid=SMALL_GRID)
    for r in runs:
        assert fit.predict(r.N, r.D) == pytest.approx(r.loss, rel=5e-3)
    assert fit.n_runs == len(runs)
    assert 0 < fit.converged_starts <= SMALL_GRID.size


def test_noisy_surface_stays_close():
    rng = np.random.default_rng(0)
    clean = surface_runs(XLSTM_SURFACE.predict)
    noisy = [run(r.N, r.D, r.loss * math.exp(rng.normal(0, 0.005))) for r in clean]
    fit = fit_loss_surface(noisy, init_grid=SMALL_GRID)
    for r in clean:
        assert fit.predict(r.N, r.D) == pytest.approx(r.loss, rel=2e-2)


def test_surface_without_data_term():
    def loss(N, D):
        return 1.1 + (math.exp(16.0) * N ** -0.7) ** 0.3
    fit = fit_loss_surface(surface_runs(loss), init_grid=SMALL_GRID)
    for N in SIZES:
        short, long = fit.predict(N, 22 * N), fit.predict(N, 2200 * N)
        assert abs(short - long) < 1e-3 * long


def test_constant_losses_fit_the_irreducible_term():
    fit = fit_loss_surface(surface_runs(lambda N, D: 2.5), init_grid=SMALL_GRID)
    for N in SIZES:
        assert fit.predict(N, 110 * N) == pytest.approx(2.5, rel=1e-3)


def test_frozen_gamma():
    runs = surface_runs(XLSTM_SURFACE.predict)
    fit = fit_loss_surface(runs, init_grid=SMALL_GRID, freeze_gamma=True)
    assert fit.gamma == 1.0
    assert fit.gamma_frozen


def test_parallel_fit_selects_the_same_start():
    runs = surface_runs(XLSTM_SURFACE.predict)
    serial = fit_loss_surface(runs, init_grid=SMALL_GRID)
    parallel = fit_loss_surface(runs, init_grid=SMALL_GRID, parallel=True, workers=2)
    assert parallel == serial


def test_surface_needs_enough_runs():
    with pytest.raises(InsufficientDataError):
        fit_loss_surface([run(1e8, 1e9 * i, 3.0) for i in range(1, 6)], init_grid=SMALL_GRID)
    with pytest.raises(InsufficientDataError):
        fit_loss_surface([run(1e8, 1e9 * i, 3.0) for i in range(1, 11)],
                         init_grid=SMALL_GRID)


def test_surface_dict_round_trip():
    assert LossSurfaceFit.from_dict(XLSTM_SURFACE.to_dict()) == XLSTM_SURFACE


def test_power_law_through_exact_points():
    fit = fit_power_law([1e18, 1e20, 1e22], [1e8, 1e9, 1e10])
    assert fit.exponent == pytest.approx(0.5, rel=1e-9)
    assert fit.coefficient == pytest.approx(0.1, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.predict(1e24) == pytest.approx(1e11, rel=1e-9)


@pytest.mark.parametrize('xs,ys,error', [
    ([1e18, 1e18], [1.0, 2.0], InsufficientDataError),
    ([1e18, -1.0], [1.0, 2.0], DataError),
    ([1e18, 1e19], [1.0, 0.0], DataError),
    ([1e18, 1e19, 1e20], [1.0, 2.0], DataError),
])
def test_power_law_rejects_bad_points(xs, ys, error):
    with pytest.raises(error):
        fit_power_law(xs, ys)


def test_parabola_optimum():
    us = [8.0, 8.5, 9.0, 9.5, 10.0]
    fit = fit_isoflop_profile([(10 ** u, (u - 9) ** 2 + 2) for u in us])
    assert fit.interior
    assert fit.optimum_x == pytest.approx(1e9, rel=1e-9)
    assert fit.optimum_loss == pytest.approx(2.0, abs=1e-9)
    assert fit.c2 == pytest.approx(1.0, rel=1e-9)
    assert fit.predict(1e8) == pytest.approx(3.0, rel=1e-9)


def test_parabola_optimum_outside_the_sweep():
    fit = fit_isoflop_profile([(10 ** u, (u - 12) ** 2) for u in (8.0, 9.0, 10.0)])
    assert fit.optimum_x == pytest.approx(1e12, rel=1e-6)
    assert not fit.interior


def test_concave_profile_has_no_optimum():
    fit = fit_isoflop_profile([(10 ** u, -(u - 9) ** 2) for u in (8.0, 9.0, 10.0)])
    assert not fit.interior
    assert fit.optimum_x is None and fit.optimum_loss is None


def test_parabola_needs_three_distinct_sizes():
    with pytest.raises(InsufficientDataError):
        fit_isoflop_profile([(1e8, 3.0), (1e8, 2.9), (1e9, 2.5)])


def test_isoflop_optima_per_budget():
    runs = []
    for H, best in ((1e20, 1e9), (1e21, 3e9)):
        for N in (best / 4, best / 2, best, best * 2, best * 4):
            loss = 2 + (math.log10(N) - math.log10(best)) ** 2
            runs.append(run(N, H / (6 * N), loss, C=H))
    optima = isoflop_optima(runs, 'N')
    assert [o.H for o in optima] == [1e20, 1e21]
    assert optima[0].parabola.optimum_x == pytest.approx(1e9, rel=1e-6)
    assert optima[1].parabola.optimum_x == pytest.approx(3e9, rel=1e-6)
    tokens = isoflop_optima(runs, 'D')
    assert tokens[0].parabola.optimum_x == pytest.approx(1e20 / 6e9, rel=1e-6)
    with pytest.raises(DataError):
        isoflop_optima(runs, 'T')


def test_ratio_buckets():
    runs = [run(1e8, M * 1e8, 3.0) for M in (22, 22.3, 23, 44)]
    buckets = bucket_by_ratio(runs)
    assert [len(members) for _, members in buckets] == [2, 1, 1]


def test_overtraining_exponents():
    runs = []
    for M, eta in ((22, 0.047), (220, 0.049)):
        for C in (1e18, 1e19, 1e20, 1e21):
            N = math.sqrt(C / (6 * M))
            runs.append(run(N, M * N, 30 * C ** -eta, C=C))
    runs.append(run(1e8, 1100 * 1e8, 3.0))
    fits = fit_overtraining(runs)
    ratios = sorted(fits)
    assert ratios == pytest.approx([22, 220])
    assert fits[ratios[0]].eta == pytest.approx(0.047, rel=1e-9)
    assert fits[ratios[1]].eta == pytest.approx(0.049, rel=1e-9)
    assert fit_overtraining(runs, kind='transformer') == {}


def test_pareto_example():
    runs = [run(1e8, 1e9, 3.0, C=1.0), run(1e8, 1e9, 2.0, C=2.0), run(1e8, 1e9, 2.5, C=3.0)]
    assert [(r.C, r.loss) for r in pareto_frontier(runs)] == [(1.0, 3.0), (2.0, 2.0)]


def brute_force_frontier(runs):
    kept = []
    for r in runs:
        dominated = any(s.C <= r.C and s.loss <= r.loss and (s.C < r.C or s.loss < r.loss)
                        for s in runs)
        if not dominated:
            kept.append((r.C, r.loss))
    return sorted(kept)


def test_pareto_matches_brute_force():
    rng = random.Random(3)
    for case in range(200):
        n = rng.randint(1, 60) if case < 190 else rng.randint(500, 1000)
        runs = [run(1e8, 1e9, float(rng.randint(1, 20)), C=float(rng.randint(1, 20)))
                for _ in range(n)]
        frontier = pareto_frontier(runs)
        assert sorted((r.C, r.loss) for r in frontier) == brute_force_frontier(runs)
        assert [r.C for r in frontier] == sorted(r.C for r in frontier)


def test_run_record_violations():
    assert run(1e8, 1e9, 3.0).violations() == []
    assert run(1e8, 1e9, -1.0).violations()
    bad = RunRecord(N=1e8, D=1e9, T_ctx=8192, C=1e18, loss=3.0, kind='xlstm', m_reported=20)
    assert bad.violations()
    with pytest.raises(DataError):
        RunRecord(N=1e8, D=1e9, T_ctx=8192, C=1e18, loss=3.0, kind='mamba')


def test_shared_exponent_gives_parallel_lines():
    runs = []
    for M, scale in ((22, 30.0), (110, 34.0), (550, 41.0)):
        for C in (1e18, 1e19, 1e20, 1e21):
            N = math.sqrt(C / (6 * M))
            runs.append(run(N, M * N, scale * C ** -0.047, C=C))
    fits = fit_overtraining(runs)
    assert len(fits) == 3
    etas = [fit.eta for fit in fits.values()]
    assert max(etas) - min(etas) < 1e-9
    assert etas[0] == pytest.approx(0.047, rel=1e-9)


def test_noisy_parabola_optimum():
    rng = np.random.default_rng(5)
    us = np.linspace(8.0, 10.0, 9)
    for _ in range(20):
        points = [(10 ** u, (u - 9.1) ** 2 + 2.5 + rng.normal(0, 1e-3)) for u in us]
        fit = fit_isoflop_profile(points)
        assert fit.optimum_x == pytest.approx(10 ** 9.1, rel=0.02)


def test_parabola_optimum_scales_with_x():
    points = [(10 ** u, 0.3 * (u - 9.2) ** 2 + 2.0) for u in (8.0, 8.5, 9.0, 9.5, 10.0)]
    base = fit_isoflop_profile(points)
    for k in (10.0, 0.1, 3.7):
        scaled = fit_isoflop_profile([(k * x, y) for x, y in points])
        assert scaled.optimum_x == pytest.approx(k * base.optimum_x, rel=1e-9)
        assert scaled.optimum_loss == pytest.approx(base.optimum_loss, rel=1e-9)


def test_collinear_profile_is_not_convex():
    fit = fit_isoflop_profile([(10 ** u, 3.0 - 0.5 * u) for u in (8.0, 9.0, 10.0)])
    assert not fit.interior
    assert fit.optimum_x is None


def test_mixed_kinds_need_a_kind():
    runs = []
    for kind in ('xlstm', 'transformer'):
        for C in (1e18, 1e19, 1e20):
            N = math.sqrt(C / (6 * 22))
            runs.append(run(N, 22 * N, 30 * C ** -0.047, C=C, kind=kind))
    with pytest.raises(DataError):
        fit_overtraining(runs)
    with pytest.raises(DataError):
        isoflop_optima(runs, 'N')
    with pytest.raises(DataError):
        fit_loss_surface(runs * 2, init_grid=SMALL_GRID)
    assert list(fit_overtraining(runs, kind='xlstm')) == pytest.approx([22])


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get('XLSTM_SCALING_SLOW'),
                    reason='XLSTM_SCALING_SLOW is not set')
def test_default_grid_fit_in_parallel():
    runs = surface_runs(XLSTM_SURFACE.predict)
    start = time.perf_counter()
    fit = fit_loss_surface(runs, parallel=True)
    elapsed = time.perf_counter() - start
    assert fit.converged_starts > 0
    for r in runs:
        assert fit.predict(r.N, r.D) == pytest.approx(r.loss, rel=5e-3)
    assert elapsed < 60
