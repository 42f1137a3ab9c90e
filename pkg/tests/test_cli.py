"""
命令列介面測試
"""

import csv
import json

import pytest

import main
from core.base.domain import WeightedPointSet
from core.base.params import derive_params
from utils.file_io import dumps_report, load_report_schema, write_point_set
from validation import BENCH_COLUMNS


@pytest.fixture
def inputs(tmp_path):
    mu_path = tmp_path / "mu.csv"
    nu_path = tmp_path / "nu.csv"
    write_point_set(str(mu_path), WeightedPointSet.uniform([[0.0], [1.0]]))
    write_point_set(str(nu_path), WeightedPointSet.uniform([[0.5], [2.0]]))
    return str(mu_path), str(nu_path)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({
        'validation': {'gradcheck_points': 5, 'max_support': 3, 'max_dim': 2},
        'logging': {'log_to_file': False},
    }), encoding='utf-8')
    return str(path)


def _run(config_file, *argv):
    return main.main(['--config', config_file, '--log-level', 'ERROR', *argv])


def test_dist_writes_report(tmp_path, config_file):
    mu = tmp_path / "a.csv"
    nu = tmp_path / "b.csv"
    write_point_set(str(mu), WeightedPointSet.uniform([[0.0]]))
    write_point_set(str(nu), WeightedPointSet.uniform([[1.0]]))
    out = tmp_path / "report.json"
    code = _run(config_file, 'dist', '--mu', str(mu), '--nu', str(nu),
                '--rho', '2', '--eps', '0.1', '--out', str(out))
    assert code == main.EXIT_OK
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['termination'] == 'converged'
    assert report['engine'] == 'exact'
    assert report['rho'] == 2.0
    assert report['estimate'] == pytest.approx(1.0, abs=0.1)
    assert {'iterations', 'alpha_updates', 'beta_updates', 'params', 'wall_time_ms'} <= set(report)


def test_dist_reports_max_iters(tmp_path, inputs, config_file):
    out = tmp_path / "report.json"
    code = _run(config_file, 'dist', '--mu', inputs[0], '--nu', inputs[1],
                '--max-iters', '3', '--out', str(out))
    assert code == main.EXIT_MAX_ITERS
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['termination'] == 'max_iters'
    assert report['iterations'] == 3


def test_baseline_emd(inputs, config_file, capsys):
    code = _run(config_file, 'baseline', '--mu', inputs[0], '--nu', inputs[1], '--algo', 'emd')
    assert code == main.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload['algo'] == 'emd'
    assert payload['value'] == pytest.approx(0.75)
    assert payload['eta'] is None
    assert (payload['n'], payload['m']) == (2, 2)


def test_baseline_sinkhorn(inputs, config_file, capsys):
    code = _run(config_file, 'baseline', '--mu', inputs[0], '--nu', inputs[1],
                '--algo', 'sinkhorn', '--eta', '0.2')
    assert code == main.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload['eta'] == 0.2
    assert payload['value'] <= 0.75 + 1e-9


def test_sinkhorn_requires_eta(inputs, config_file, capsys):
    code = _run(config_file, 'baseline', '--mu', inputs[0], '--nu', inputs[1],
                '--algo', 'sinkhorn')
    assert code == main.EXIT_ERROR
    assert '--eta' in capsys.readouterr().err


def test_missing_input_file(tmp_path, inputs, config_file, capsys):
    code = _run(config_file, 'dist', '--mu', str(tmp_path / "missing.csv"), '--nu', inputs[1])
    assert code == main.EXIT_ERROR
    assert '錯誤' in capsys.readouterr().err


def test_malformed_input_file(tmp_path, inputs, config_file):
    bad = tmp_path / "bad.csv"
    bad.write_text("w,x1\n0.5,abc\n", encoding='utf-8')
    assert _run(config_file, 'dist', '--mu', str(bad), '--nu', inputs[1]) == main.EXIT_ERROR


def test_unknown_profile(inputs, config_file):
    code = _run(config_file, '--profile', 'no-such-profile',
                'dist', '--mu', inputs[0], '--nu', inputs[1])
    assert code == main.EXIT_ERROR


def test_unknown_suite(config_file):
    assert _run(config_file, 'validate', '--suite', 'no-such-suite') == main.EXIT_ERROR


def test_validate_prints_summary(config_file, capsys):
    code = _run(config_file, 'validate', '--suite', 'gradcheck', '--count', '1')
    assert code in (main.EXIT_OK, main.EXIT_ERROR)
    out = capsys.readouterr().out
    assert out.startswith('gradcheck: ')
    assert '/5' in out.splitlines()[0]


def test_bench_writes_csv(tmp_path, config_file):
    out = tmp_path / "bench.csv"
    code = _run(config_file, 'bench', '--sizes', '2', '--rhos', '2.0',
                '--max-iters', '20', '--out', str(out))
    assert code == main.EXIT_OK
    with open(out, encoding='utf-8', newline='') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    assert tuple(rows[0]) == BENCH_COLUMNS
    assert rows[0]['termination'] in ('converged', 'max_iters')


def test_bench_to_stdout(config_file, capsys):
    code = _run(config_file, 'bench', '--sizes', '1', '--rhos', '1.5', '--max-iters', '5')
    assert code == main.EXIT_OK
    header = capsys.readouterr().out.splitlines()[0]
    assert header.split(',')[0] == 'n'


# ==========================================
# RunConfig
# ==========================================
@pytest.mark.parametrize("kwargs", [
    {'command': 'dist'},
    {'command': 'baseline', 'mu_path': 'a', 'nu_path': 'b'},
    {'command': 'baseline', 'mu_path': 'a', 'nu_path': 'b', 'algo': 'sinkhorn', 'eta': -1.0},
    {'command': 'dist', 'mu_path': 'a', 'nu_path': 'b', 'eta': 0.1},
    {'command': 'bench'},
    {'command': 'plot'},
])
def test_run_config_rejects(kwargs):
    with pytest.raises(ValueError):
        main.RunConfig(**kwargs).validate()


def test_run_config_overrides():
    cfg = main.RunConfig(command='dist', mu_path='a', nu_path='b', profile='desk', max_iters=7)
    cfg.validate()
    overrides = cfg.overrides()
    assert overrides['max_iters'] == 7
    assert overrides['lambda'] == pytest.approx(1e-4)
    assert main.RunConfig(command='validate').overrides() == {}


# ==========================================
# 報告格式與 paper 模式
# ==========================================
_JSON_TYPES = {
    'object': dict,
    'string': str,
    'integer': int,
    'number': (int, float),
}


def _schema_errors(value, schema, path='$'):
    """對照 report_schema.json 用到的關鍵字檢查報告"""
    errors = []
    expected = _JSON_TYPES[schema['type']]
    if not isinstance(value, expected) or isinstance(value, bool):
        return [f"{path}: 型別應為 {schema['type']}"]
    if 'enum' in schema and value not in schema['enum']:
        errors.append(f"{path}: {value!r} 不在 {schema['enum']}")
    if 'minimum' in schema and value < schema['minimum']:
        errors.append(f"{path}: {value} < {schema['minimum']}")
    if 'maximum' in schema and value > schema['maximum']:
        errors.append(f"{path}: {value} > {schema['maximum']}")
    if 'exclusiveMinimum' in schema and value <= schema['exclusiveMinimum']:
        errors.append(f"{path}: {value} <= {schema['exclusiveMinimum']}")
    if 'exclusiveMaximum' in schema and value >= schema['exclusiveMaximum']:
        errors.append(f"{path}: {value} >= {schema['exclusiveMaximum']}")
    if schema['type'] == 'object':
        properties = schema.get('properties', {})
        errors += [f"{path}: 缺少 {key}" for key in schema.get('required', []) if key not in value]
        if schema.get('additionalProperties') is False:
            errors += [f"{path}: 多餘的 {key}" for key in value if key not in properties]
        for key, sub in properties.items():
            if key in value:
                errors += _schema_errors(value[key], sub, f"{path}.{key}")
    return errors


@pytest.mark.parametrize("extra", [['--max-iters', '3'], ['--engine', 'sampling', '--max-iters', '5']])
def test_dist_report_matches_schema(tmp_path, inputs, config_file, extra):
    out = tmp_path / "report.json"
    _run(config_file, 'dist', '--mu', inputs[0], '--nu', inputs[1], '--out', str(out), *extra)
    text = out.read_text(encoding='utf-8')
    assert text == dumps_report(json.loads(text)) + '\n'
    schema = load_report_schema()
    assert _schema_errors(json.loads(text), schema) == []


def test_paper_mode_echoes_derived_params(tmp_path, inputs, config_file):
    out = tmp_path / "report.json"
    code = _run(config_file, 'dist', '--mu', inputs[0], '--nu', inputs[1],
                '--mode', 'paper', '--rho', '2', '--eps', '0.25',
                '--max-iters', '3', '--out', str(out))
    assert code == main.EXIT_MAX_ITERS
    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['mode'] == 'paper'
    assert report['iterations'] == 3
    assert report['params'] == derive_params(2.0, 0.25, 2, 2, mode='paper').to_dict()


def test_paper_mode_rejects_profile(inputs, config_file, capsys):
    code = _run(config_file, '--profile', 'desk', 'dist', '--mu', inputs[0], '--nu', inputs[1],
                '--mode', 'paper')
    assert code == main.EXIT_ERROR
    assert 'paper' in capsys.readouterr().err


def test_reports_identical_across_thread_counts(tmp_path, inputs, monkeypatch):
    config = tmp_path / "threads.json"
    config.write_text(json.dumps({
        'performance': {'parallel_threshold': 1},
        'logging': {'log_to_file': False},
    }), encoding='utf-8')
    texts = []
    for threads in ('1', '4', '4'):
        monkeypatch.setenv('RRHO_THREADS', threads)
        out = tmp_path / f"report-{len(texts)}.json"
        _run(str(config), 'dist', '--mu', inputs[0], '--nu', inputs[1],
             '--engine', 'sampling', '--seed', '5', '--max-iters', '40', '--out', str(out))
        report = json.loads(out.read_text(encoding='utf-8'))
        report.pop('wall_time_ms')
        texts.append(dumps_report(report))
    assert texts[0] == texts[1] == texts[2]
