import json

import pandas as pd
import pytest

from python.errors import ConfigError, NumericError, PartialResultsError
from python.file_manager import ArtifactWriter, RunManifest, get_checksum
from python.parameters import SEED_ENV, ExperimentConfig, Parameters, load_config, parse_config
from python.sweep import TaskStatus
from python.timecounter import TimeCounter, print_stats


def test_typed_getters():
    block = Parameters({'n': 3, 'x': 0.5, 'name': 'L', 'xs': [1, 2.5], 'on': True}, 'iterate')
    assert block.integer('n', minimum=1) == 3
    assert block.number('x') == 0.5
    assert block.number('missing', 2) == 2.0
    assert block.string('name', choices=['L', 'R']) == 'L'
    assert block.numbers('xs', 2) == [1.0, 2.5]
    assert block.flag('on') is True
    assert block.n == 3


@pytest.mark.parametrize('getter, args, message', [
    ('integer', ('x',), 'iterate.x: expected an integer'),
    ('integer', ('n', None, 5), 'iterate.n: expected an integer >= 5'),
    ('number', ('name',), 'iterate.name: expected a finite number'),
    ('number', ('on',), 'iterate.on: expected a finite number'),
    ('string', ('name', None, ['R']), "iterate.name: expected one of ['R']"),
    ('numbers', ('xs', 3), 'iterate.xs: expected a list of 3 numbers'),
    ('numbers', ('bad',), 'iterate.bad: expected finite numbers'),
    ('flag', ('n',), 'iterate.n: expected true or false'),
])
def test_getter_errors_name_the_field(getter, args, message):
    block = Parameters({'n': 3, 'x': 0.5, 'name': 'L', 'xs': [1, 2.5], 'on': True, 'bad': [1, 'two']}, 'iterate')
    with pytest.raises(ConfigError, match=message.replace('[', r'\[').replace(']', r'\]')):
        getattr(block, getter)(*args)


def test_nested_blocks():
    config = parse_config('{"version": 1, "corner": {"trace": 1, "inner": {"a": 1}}}')
    assert config.block('corner').block('inner').where == 'corner.inner'
    with pytest.raises(ConfigError, match='corner.trace: expected an object'):
        config.block('corner').block('trace')
    with pytest.raises(ConfigError, match='tongues: missing block'):
        config.block('tongues')
    assert config.block('tongues', required=False) == {}


def test_yaml_errors_carry_the_position():
    with pytest.raises(ConfigError, match=r'exp.yaml:\d+:\d+'):
        parse_config('version: 1\nmap: [1, 2\n', 'exp.yaml')


def test_top_level_must_be_an_object():
    with pytest.raises(ConfigError, match='top level'):
        parse_config('- 1\n- 2\n')


def test_unsupported_version():
    with pytest.raises(ConfigError, match='unsupported configuration version 3'):
        parse_config('version: 3\n')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match='nothere.yaml'):
        load_config(str(tmp_path / 'nothere.yaml'))


def test_yaml_and_json_configs_agree(tmp_path):
    (tmp_path / 'a.yaml').write_text('version: 1\nname: demo\nseed: 4\nmap: {kind: bcnf, mu: 1.0}\n')
    (tmp_path / 'b.json').write_text(json.dumps({'map': {'mu': 1.0, 'kind': 'bcnf'}, 'seed': 4, 'name': 'demo',
                                                 'version': 1}))
    a, b = load_config(str(tmp_path / 'a.yaml')), load_config(str(tmp_path / 'b.json'))
    assert a.digest() == b.digest()
    assert a.name == 'demo'
    assert parse_config(a.dump()) == a


def test_seed_and_output_directory(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    config = ExperimentConfig({'name': 'bifdiag', 'seed': 11})
    assert config.seed() == 11
    assert config.output_dir() == 'out/bifdiag'
    assert config.output_dir('elsewhere') == 'elsewhere'
    assert ExperimentConfig({}).seed() == 0
    monkeypatch.setenv(SEED_ENV, '42')
    assert config.seed() == 42
    monkeypatch.setenv(SEED_ENV, 'forty-two')
    with pytest.raises(ConfigError, match=SEED_ENV):
        config.seed()


def test_artifact_writer_records_checksums(tmp_path):
    writer = ArtifactWriter(str(tmp_path / 'run'))
    writer.csv('table.csv', pd.DataFrame({'x': [0.1, 1 / 3], 'label': ['L', 'R']}))
    writer.json('doc.json', {'b': 1, 'a': [1.5]})
    assert (tmp_path / 'run' / 'table.csv').read_text() == 'x,label\n0.10000000000000001,L\n0.33333333333333331,R\n'
    assert json.loads((tmp_path / 'run' / 'doc.json').read_text()) == {'a': [1.5], 'b': 1}
    assert writer.artifacts['table.csv'] == get_checksum(tmp_path / 'run' / 'table.csv')
    assert set(writer.artifacts) == {'table.csv', 'doc.json'}


def test_manifest_lists_failed_tasks(tmp_path):
    writer = ArtifactWriter(str(tmp_path))
    writer.json('x.json', {})
    manifest = RunManifest(command='portrait', config_hash='abc', seed=3)
    manifest.add_tasks([TaskStatus(0, 'stable+1', True), TaskStatus(1, 'unstable+1', False, 'budget')])
    assert manifest.failed_tasks == ['unstable+1']
    manifest.write(writer, 'partial')
    doc = json.loads((tmp_path / 'manifest.json').read_text())
    assert doc['status'] == 'partial'
    assert doc['artifacts'] == {'x.json': writer.artifacts['x.json']}
    assert doc['tasks'][1]['message'] == 'budget'
    assert doc['wall_time'] >= 0


def test_time_counter():
    counter = TimeCounter()
    assert not counter.started()
    counter.start()
    elapsed, per_task = counter.time_per_task(0)
    assert counter.started()
    assert per_task == elapsed >= 0


@pytest.mark.parametrize('error, code', [
    (ConfigError('bad'), 2),
    (NumericError('diverged'), 3),
    (PartialResultsError('half', ['a']), 4),
    (RuntimeError('boom'), 1),
])
def test_print_stats_maps_errors_to_exit_codes(error, code):
    @print_stats
    def command():
        raise error

    with pytest.raises(SystemExit) as exit_info:
        command()
    assert exit_info.value.code == code


def test_print_stats_passes_success(capsys):
    @print_stats
    def command():
        return 3

    command()
    assert 'command: 3 tasks' in capsys.readouterr().out
