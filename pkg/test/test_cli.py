import io
import json
import math

import pytest

from xlstm_scaling import artifacts
from xlstm_scaling.arch_accounting import ArchConfig
from xlstm_scaling.cli import run_command
from xlstm_scaling.flop_counting import Workload, flops_model_forward
from xlstm_scaling.scaling_fit import LossSurfaceFit

CONFIG_406M = {'kind': 'xlstm', 'd_model': 1024, 'd_ff': 2752, 'd_qk': 128, 'd_hv': 256,
               'n_head_q': 4, 'n_layer': 24}


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), stdout=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv, '--json')
    assert code == 0, text
    return json.loads(text)


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / 'xlstm-406m.json'
    path.write_text(json.dumps(CONFIG_406M))
    return str(path)


def test_roofline():
    report = run_json('roofline', '--accel', 'H100', '--flops', '1e15', '--bytes', '1e12')
    assert report['intensity'] == pytest.approx(1000)
    assert report['regime'] == 'compute_bound'


def test_roofline_from_config(config_path):
    report = run_json('roofline', '--accel', 'h100', '--config', config_path, '--mode',
                      'gen-step', '--Tp', '2048')
    assert report['regime'] == 'memory_bound'


def test_count_params(config_path):
    data = run_json('count', 'params', '--config', config_path)
    assert data['params']['total'] == 406_760_640
    table = run_json('count', 'params', '--table', 'xlstm_tokenparam', '--name',
                     'xlstm-406M-L24')
    assert table['params']['total'] == 406_760_640


def test_human_output_shows_exact_and_engineering_values(config_path):
    code, text = run('count', 'params', '--config', config_path)
    assert code == 0
    assert 'total: 406,760,640 (4.0676e+08)' in text


def test_count_flops_and_memops(config_path):
    flops = run_json('count', 'flops', '--config', config_path, '--mode', 'train', '--T',
                     '8192')
    assert flops['flops']['total'] == 3 * flops['flops']['forward_total']
    memops = run_json('count', 'memops', '--config', config_path, '--mode', 'gen-step',
                      '--Tp', '1024', '--bytes', '1')
    assert memops['memops']['weights']['embeddings'] == 0
    assert memops['widths']['qkv'] == 1


def test_cache_size(config_path):
    data = run_json('cache-size', '--config', config_path, '--T', '8192')
    assert data['seq_mix'] == 'mLSTM'
    assert data['elements_per_layer'] == 4 * (128 * 256 + 128 + 1)
    assert data['bytes_total'] == 24 * data['elements_per_layer'] * 2


def test_power_laws_feed_the_planner(tmp_path):
    n_points = tmp_path / 'n.csv'
    n_points.write_text('x,y\n1e18,1e7\n1e20,1e8\n1e22,1e9\n')
    d_points = tmp_path / 'd.csv'
    d_points.write_text('x,y\n1e18,1e10\n1e20,1e11\n1e22,1e12\n')
    n_fit, d_fit = str(tmp_path / 'n.json'), str(tmp_path / 'd.json')
    run_json('fit', 'powerlaw', '--in', str(n_points), '--fit-name', 'N', '--out', n_fit)
    run_json('fit', 'powerlaw', '--in', str(d_points), '--fit-name', 'D', '--out', d_fit)
    artifact = artifacts.read_artifact(n_fit, 'power_law')
    assert str(n_points) in artifact.provenance['inputs']
    plan = run_json('plan', '--budget', '1.6e19', '--fits', n_fit, d_fit, '--table',
                    'xlstm_tokenparam')
    assert plan['plan']['N_star'] == pytest.approx(4e7, rel=1e-6)
    assert plan['plan']['config']['name'] == 'xlstm-164M-L12'


def test_plan_grid():
    data = run_json('plan', 'grid', '--N', '4.06e8', '--M', '22')
    assert data['grid'][0]['D'] == pytest.approx(8.932e9)


def test_predict_loss_in_bits(tmp_path):
    surface = LossSurfaceFit(log_e=0.11, log_a=16.22, log_b=17.31, alpha=0.73, beta=0.67,
                             gamma=0.24)
    path = str(tmp_path / 'surface.json')
    artifacts.write_artifact(path, artifacts.ArtifactFile(
        'loss_surface', {'fits': {'surface': surface.to_dict()}}))
    nats = run_json('predict', 'loss', '--surface', path, '--N', '4e8', '--D', '8.8e9')
    bits = run_json('predict', 'loss', '--surface', path, '--N', '4e8', '--D', '8.8e9',
                    '--bits')
    assert nats['loss'] == pytest.approx(surface.predict(4e8, 8.8e9))
    assert bits['loss'] == pytest.approx(nats['loss'] / math.log(2))
    assert bits['loss_unit'] == 'bits'


def test_fit_runtime_and_predict(tmp_path):
    table = tmp_path / 'table.json'
    table.write_text(json.dumps({'name': 'lat', 'kind': 'xlstm', 'configs': [
        dict(CONFIG_406M, name='a'), dict(CONFIG_406M, name='b', n_layer=48)]}))
    lines = ['config_id,metric,B,T_p,seconds']
    for name in ('a', 'b'):
        for T_p, seconds in ((1024, 0.01), (4096, 0.03)):
            seconds *= 2 if name == 'b' else 1
            lines.append(f'{name},ttft,1,{T_p},{seconds}')
    latencies = tmp_path / 'lat.csv'
    latencies.write_text('\n'.join(lines) + '\n')
    fit_path = str(tmp_path / 'ttft.json')
    data = run_json('fit', 'runtime', '--latencies', str(latencies), '--metric', 'ttft',
                    '--table', str(table), '--accel', 'H100', '--out', fit_path)
    assert data['fits']['runtime']['mode'] == 'compute_bound'
    assert data['utilization'] > 0
    predicted = run_json('predict', 'ttft', '--table', str(table), '--name', 'a', '--fit',
                         fit_path, '--Tp', '1024', '4096')
    assert [p['T_p'] for p in predicted['predictions']] == [1024, 4096]
    code, _ = run('predict', 'step-time', '--table', str(table), '--name', 'a', '--fit',
                  fit_path, '--Tp', '1024')
    assert code == 2


def test_pareto(tmp_path):
    runs = tmp_path / 'runs.csv'
    runs.write_text('kind,N,D,T_ctx,C,loss\n'
                    'xlstm,1e8,1e9,8192,1,3.0\n'
                    'xlstm,1e8,1e9,8192,2,2.0\n'
                    'xlstm,1e8,1e9,8192,3,2.5\n')
    data = run_json('pareto', '--runs', str(runs))
    assert [(r['C'], r['loss']) for r in data['frontier']] == [(1.0, 3.0), (2.0, 2.0)]


def test_usage_errors_exit_with_one(capsys):
    assert run('frobnicate')[0] == 1
    assert run('count', 'params')[0] == 1
    assert run('roofline', '--accel', 'H100', '--flops', '1e15')[0] == 1
    assert 'error:' in capsys.readouterr().err


def test_domain_errors_exit_with_two(tmp_path, capsys):
    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps(dict(CONFIG_406M, d_model=0)))
    assert run('count', 'params', '--config', str(bad))[0] == 2
    assert run('roofline', '--accel', 'TPU', '--flops', '1', '--bytes', '1')[0] == 2
    assert 'error:' in capsys.readouterr().err


def test_help_exits_cleanly():
    assert run('--help')[0] == 0


def test_human_output_prints_float_counts_exactly(tmp_path):
    config = {'kind': 'transformer', 'd_model': 768, 'd_ff': 2048, 'd_qk': 64, 'd_hv': 64,
              'n_head_q': 12, 'n_layer': 12}
    path = tmp_path / 'transformer-162m.json'
    path.write_text(json.dumps(config))
    total = flops_model_forward(ArchConfig.from_dict(config), Workload(B=1, T=1024)).total
    assert isinstance(total, float) and total.is_integer()
    code, text = run('count', 'flops', '--config', str(path), '--T', '1024')
    assert code == 0
    assert f'total: {int(total):,} ({total:.4e})' in text


def test_overtraining_fit_needs_a_kind_for_mixed_runs(tmp_path):
    runs = tmp_path / 'runs.csv'
    lines = ['kind,N,D,T_ctx,C,loss']
    for kind in ('xlstm', 'transformer'):
        for C in (1e18, 1e19, 1e20):
            N = math.sqrt(C / (6 * 22))
            lines.append(f'{kind},{N!r},{22 * N!r},8192,{C!r},{30 * C ** -0.047!r}')
    runs.write_text('\n'.join(lines) + '\n')
    assert run('fit', 'overtrain', '--runs', str(runs))[0] == 2
    data = run_json('fit', 'overtrain', '--runs', str(runs), '--kind', 'xlstm')
    assert len(data['fits']) == 1
