import json

import pandas as pd
import pytest
from typer.testing import CliRunner

from cornerUnfold import app
from python.file_manager import get_checksum

runner = CliRunner()

CORNER_MAP = {'kind': 'bcnf', 'tau_L': 2.0, 'delta_L': 0.75, 'tau_R': -0.6, 'delta_R': 1.35, 'mu': 1.0}
LOOSE = {'oracle': 1e-6, 'fit': 1e6, 'eigen': 1e6}


def write_config(tmp_path, doc, name='experiment.json'):
    path = tmp_path / name
    path.write_text(json.dumps({'version': 1, 'name': 'test', **doc}))
    return str(path)


def invoke(command, config, out, *extra, workers=1):
    return runner.invoke(app, [command, '-f', config, '-o', str(out), '-j', str(workers), *extra])


def read_manifest(out):
    return json.loads((out / 'manifest.json').read_text())


def test_iterate_writes_orbit_and_manifest(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'iterate': {'start': [0, 0], 'n': 100, 'transient': 10}})
    out = tmp_path / 'out'
    result = invoke('iterate', config, out)
    assert result.exit_code == 0, result.output
    orbit = pd.read_csv(out / 'orbit.csv')
    assert list(orbit.columns) == ['i', 'x', 'y', 'label']
    assert len(orbit) == 90
    assert orbit['i'].iloc[0] == 10
    manifest = read_manifest(out)
    assert manifest['status'] == 'ok'
    assert manifest['command'] == 'iterate'
    assert manifest['artifacts']['orbit.csv'] == get_checksum(out / 'orbit.csv')


def test_iterate_is_reproducible(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'iterate': {'start': [0.1, 0.2], 'n': 500}})
    first, second = tmp_path / 'a', tmp_path / 'b'
    assert invoke('iterate', config, first).exit_code == 0
    assert invoke('iterate', config, second).exit_code == 0
    assert (first / 'orbit.csv').read_bytes() == (second / 'orbit.csv').read_bytes()
    assert read_manifest(first)['config_hash'] == read_manifest(second)['config_hash']


def test_empty_orbit_has_header_only(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'iterate': {'n': 0}})
    out = tmp_path / 'out'
    assert invoke('iterate', config, out).exit_code == 0
    assert (out / 'orbit.csv').read_text().strip() == 'i,x,y,label'


def test_iterate_with_lyapunov_and_plot(tmp_path):
    stable = {'kind': 'bcnf', 'tau_L': 0.5, 'delta_L': 0.05, 'tau_R': -0.5, 'delta_R': 0.1, 'mu': 1.0}
    config = write_config(tmp_path, {'map': stable, 'iterate': {'start': [0.5, 0.0], 'n': 50,
                                                                 'lyapunov': {'transient': 10, 'samples': 2000}}})
    out = tmp_path / 'out'
    assert invoke('iterate', config, out, '--plot').exit_code == 0
    assert json.loads((out / 'lyapunov.json').read_text())['exponent'] < 0
    assert (out / 'orbit.svg').exists()
    assert 'orbit.svg' in read_manifest(out)['artifacts']


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('CORNER_UNFOLD_SEED', '99')
    config = write_config(tmp_path, {'map': CORNER_MAP, 'iterate': {'n': 5}})
    out = tmp_path / 'out'
    assert invoke('iterate', config, out).exit_code == 0
    assert read_manifest(out)['seed'] == 99


def test_missing_map_is_a_configuration_error(tmp_path):
    config = write_config(tmp_path, {'iterate': {'n': 5}})
    out = tmp_path / 'out'
    result = invoke('iterate', config, out)
    assert result.exit_code == 2
    assert 'map' in result.output


def test_bad_field_writes_failed_manifest(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'iterate': {'n': 'many'}})
    out = tmp_path / 'out'
    result = invoke('iterate', config, out)
    assert result.exit_code == 2
    manifest = read_manifest(out)
    assert manifest['status'] == 'failed'
    assert 'iterate.n' in manifest['notes'][0]


def test_malformed_yaml(tmp_path):
    path = tmp_path / 'broken.yaml'
    path.write_text('version: 1\nmap: [1, 2\n')
    result = invoke('iterate', str(path), tmp_path / 'out')
    assert result.exit_code == 2
    assert 'broken.yaml:' in result.output.replace('\n', '')


def test_unsupported_version(tmp_path):
    path = tmp_path / 'v2.json'
    path.write_text(json.dumps({'version': 2, 'map': CORNER_MAP, 'iterate': {}}))
    assert invoke('iterate', str(path), tmp_path / 'out').exit_code == 2


def test_manifolds_of_a_focus_are_a_numeric_failure(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'portrait': {'manifolds': {'saddle': 'R'}}})
    out = tmp_path / 'out'
    assert invoke('portrait', config, out).exit_code == 3
    assert read_manifest(out)['status'] == 'failed'


def test_portrait_artifacts(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'portrait': {
        'orbit': {'n': 200, 'transient': 100},
        'manifolds': {'saddle': 'L', 'branches': [1], 'budget': {'max_vertices': 500, 'max_generations': 4}},
        'periodic': ['LLLLLLLR', 'LLLLLLRR'],
        'limits': [-6, 4, -5, 5],
    }})
    out = tmp_path / 'out'
    result = invoke('portrait', config, out, '--plot')
    assert result.exit_code == 0, result.output
    manifolds = pd.read_csv(out / 'manifolds.csv')
    assert set(manifolds['side']) == {'stable', 'unstable'}
    assert manifolds['is_kink'].sum() > 0
    periodic = pd.read_csv(out / 'periodic.csv')
    assert len(periodic) == 16
    assert (out / 'portrait.svg').exists()
    assert len(read_manifest(out)['tasks']) == 2


def test_certificate_command(tmp_path):
    reduced = {'kind': 'bcnf', 'labels': ['X', 'Y'], 'tau_X': -4.0, 'delta_X': 0.4, 'tau_Y': 4.0, 'delta_Y': 0.4,
               'mu': -1.0}
    config = write_config(tmp_path, {'map': reduced, 'portrait': {'certificate': {'side': 'Y'}}})
    out = tmp_path / 'out'
    assert invoke('portrait', config, out).exit_code == 0
    certificate = json.loads((out / 'certificate.json').read_text())
    assert certificate['crossing'] is True
    assert certificate['t'] == pytest.approx(0.195, abs=0.005)


def test_corner_command(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'corner': {
        'bracket': [1.3, 1.4],
        'trace': [{'seed': [-0.6, 1.35], 'step': 0.05, 'span': [-0.7, -0.55]}],
    }})
    out = tmp_path / 'out'
    result = invoke('corner', config, out)
    assert result.exit_code == 0, result.output
    corner = json.loads((out / 'corner.json').read_text())
    assert corner['value'] == pytest.approx(1.35, abs=1e-10)
    assert corner['excursion_word'] == 'LR'
    assert corner['return_index'] == 1
    assert corner['extra_intersections'] == []
    curve = pd.read_csv(out / 'corner_curve_0.csv')
    assert list(curve.columns) == ['tau_R', 'delta_R', 'residual', 'return_index']
    assert len(curve) == 4


def test_stalled_curve_gives_partial_results(tmp_path):
    config = write_config(tmp_path, {'map': CORNER_MAP, 'corner': {
        'value': 1.35,
        'trace': [{'seed': [-0.6, 1.2], 'step': 0.05, 'span': [-0.7, -0.55]}],
    }})
    out = tmp_path / 'out'
    assert invoke('corner', config, out).exit_code == 4
    manifest = read_manifest(out)
    assert manifest['status'] == 'partial'
    assert manifest['tasks'][0]['status'] == 'failed'
    assert 'corner.json' in manifest['artifacts']


def test_tongues_command(tmp_path):
    config = write_config(tmp_path, {'tongues': {
        'grid': {'tau_L': 0.5, 'delta_L': 0.05, 'mu': 1.0, 'tau_R': [-1.7, -1.5, 3], 'delta_R': [0.04, 0.06, 2],
                 'period_cap': 2},
        'simulate': {'samples': 2},
    }})
    out = tmp_path / 'out'
    result = invoke('tongues', config, out, '--plot')
    assert result.exit_code == 0, result.output
    tongues = pd.read_csv(out / 'tongues.csv')
    assert len(tongues) == 6
    assert set(tongues['period']) <= {0, 2}
    simulation = json.loads((out / 'simulation.json').read_text())
    assert simulation['samples'] <= 2
    assert (out / 'tongues.svg').exists()


def test_tent_command(tmp_path):
    flat = {'kind': 'bcnf', 'tau_L': 1.5, 'delta_L': 0.0, 'tau_R': -1.5, 'delta_R': 0.0, 'mu': 1.0}
    config = write_config(tmp_path, {'map': flat, 'tent': {'x0': 0.1, 'n': 50}})
    out = tmp_path / 'out'
    assert invoke('tent', config, out).exit_code == 0
    assert json.loads((out / 'tent.json').read_text())['max_deviation'] == 0.0
    assert len(pd.read_csv(out / 'tent.csv')) == 51


def test_validate_command(tmp_path):
    params = {'lam': 0.5, 'sigma': 1.5, 'a1': 0.0, 'a2': 1.0, 'bX1': -0.5, 'bX2': -1.0, 'bY1': -0.5, 'bY2': 1.0,
              'c1': 0.0, 'c2': 1.0}
    config = write_config(tmp_path, {'seed': 5, 'validate': {
        'draws': 2, 'ks': [6, 9], 'k': 8, 'params': [params, {**params, 'bY2': -1.0}], 'tolerances': LOOSE,
    }})
    out = tmp_path / 'out'
    result = invoke('validate', config, out)
    assert result.exit_code == 0, result.output
    doc = json.loads((out / 'validate.json').read_text())
    assert len(doc['draws']) == 2
    assert doc['params'][0]['exact_xi_k'] == pytest.approx(1.5**-8 - 0.5**8)
    assert doc['params'][1]['rejected'] == ['corner']
    assert read_manifest(out)['seed'] == 5


def test_failed_validation_checks_are_a_numeric_failure(tmp_path):
    config = write_config(tmp_path, {'seed': 5, 'validate': {
        'draws': 2, 'ks': [6, 9], 'tolerances': {**LOOSE, 'eigen': 0.0},
    }})
    out = tmp_path / 'out'
    result = invoke('validate', config, out)
    assert result.exit_code == 3
    assert json.loads((out / 'validate.json').read_text())['checks']['eigenvalue_asymptotics'] is False
    manifest = read_manifest(out)
    assert manifest['status'] == 'failed'
    assert 'eigenvalue_asymptotics' in manifest['notes'][0]


@pytest.mark.parametrize('command, block', [
    ('tongues', {'grid': {'tau_L': 0.5, 'delta_L': 0.05, 'mu': 1.0, 'tau_R': [-1.8, -1.4, 9],
                          'delta_R': [0.02, 0.08, 7], 'period_cap': 6, 'rows_per_task': 2},
                 'simulate': {'samples': 5}}),
    ('validate', {'draws': 3, 'ks': [6, 9], 'tolerances': LOOSE}),
])
def test_artifacts_do_not_depend_on_workers(tmp_path, command, block):
    config = write_config(tmp_path, {'seed': 3, command: block})
    serial, parallel = tmp_path / 'serial', tmp_path / 'parallel'
    assert invoke(command, config, serial, workers=1).exit_code == 0
    assert invoke(command, config, parallel, workers=2).exit_code == 0
    artifacts = read_manifest(serial)['artifacts']
    assert artifacts
    assert artifacts == read_manifest(parallel)['artifacts']
    for name in artifacts:
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()
