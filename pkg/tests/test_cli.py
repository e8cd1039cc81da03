"""
Tests for run configs, result writing and the command-line entry point
"""

import json
import os

import numpy as np
import pandas as pd
import pytest

from cli.config import RunConfig, load_run_config, validate_config_dict
from cli.runner import RESULT_FILE, run
from cli.utils import fit_slope, to_jsonable, write_csv, write_json
from core.anyon_algebra import model_to_json, with_f_symbol
from core.errors import ConfigError, InsufficientData
from main import main


def write_config(tmp_path, payload, name='config.json'):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def invoke(tmp_path, payload, output='out'):
    config = write_config(tmp_path, payload)
    out = tmp_path / output
    code = main(['--config', config, '--output', str(out), '--quiet'])
    return code, out


def read_result(out):
    with open(out / RESULT_FILE, encoding='utf-8') as f:
        return json.load(f)


class TestFitSlope:

    def test_exact_line(self):
        table = pd.DataFrame({'x': [0, 1, 2], 'y': [0, 2, 4]})
        slope, intercept, r2 = fit_slope(table, 'x', 'y')
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(0.0, abs=1e-12)
        assert r2 == pytest.approx(1.0)

    def test_flat_line(self):
        slope, intercept, r2 = fit_slope(pd.DataFrame({'x': [0, 1], 'y': [1, 1]}), 'x', 'y')
        assert slope == pytest.approx(0.0, abs=1e-12)
        assert intercept == pytest.approx(1.0)
        assert r2 == 1.0

    def test_reads_csv(self, tmp_path):
        path = tmp_path / 'series.csv'
        write_csv(str(path), pd.DataFrame({'N': [1, 2, 3], 'v': [1.0, -1.0, -3.0]}))
        slope, _, _ = fit_slope(str(path), 'N', 'v')
        assert slope == pytest.approx(-2.0)

    @pytest.mark.parametrize('table', [
        pd.DataFrame({'x': [1.0], 'y': [2.0]}),
        pd.DataFrame({'x': [1.0, 1.0], 'y': [2.0, 3.0]}),
        pd.DataFrame({'x': [1.0, 2.0], 'y': [2.0, float('-inf')]}),
        pd.DataFrame({'x': [1.0, 2.0], 'z': [2.0, 3.0]}),
    ])
    def test_insufficient_data(self, table):
        with pytest.raises(InsufficientData):
            fit_slope(table, 'x', 'y')


class TestResultWriting:

    def test_jsonable(self):
        payload = to_jsonable({'z': 1 + 2j, 'n': np.int64(3), 'bad': float('nan'),
                               'arr': np.array([0.5, 1.5])})
        assert payload == {'z': [1.0, 2.0], 'n': 3, 'bad': None, 'arr': [0.5, 1.5]}

    def test_write_json_is_sorted(self, tmp_path):
        path = tmp_path / 'nested' / 'r.json'
        write_json(str(path), {'b': 1, 'a': 2})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert not [p for p in path.parent.iterdir() if p.name.startswith('.tmp-')]


class TestRunConfig:

    def test_defaults(self):
        config = RunConfig.from_dict({'command': 'braid', 'model': 'Fibonacci'})
        assert config.parameters == {}
        assert config.seed == 0
        assert config.param('points', 2000) == 2000

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError, match='parameters'):
            validate_config_dict({'command': 'braid', 'model': 'Ising',
                                  'parameters': {'speed': 3}})

    def test_field_anchored_message(self):
        with pytest.raises(ConfigError, match=r'parameters\.T'):
            validate_config_dict({'command': 'braid', 'model': 'Ising',
                                  'parameters': {'T': -1}})

    def test_unknown_command(self):
        with pytest.raises(ConfigError, match='command'):
            validate_config_dict({'command': 'anneal', 'model': 'Ising'})

    def test_required_parameters(self):
        with pytest.raises(ConfigError):
            validate_config_dict({'command': 'chain-scaling', 'model': 'Ising'})

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{\n  "command": "braid",\n  "model": \n}')
        with pytest.raises(ConfigError, match='line 4'):
            load_run_config(str(path))


class TestCommands:

    def test_braid(self, tmp_path, capsys):
        code, out = invoke(tmp_path, {'command': 'braid', 'model': 'Fibonacci',
                                      'parameters': {'points': 2000, 'T': 1.0}})
        assert code == 0
        payload = read_result(out)
        assert set(payload) == {'command', 'config', 'result', 'wall_time_s', 'version'}
        assert payload['result']['fidelity'] >= 1 - 1e-6
        assert payload['result']['per_step_phase_spread'] < 1e-6
        assert capsys.readouterr().out.startswith('braid fidelity=')
        assert (out / 'anyon_braid.log').exists()

    def test_reverse_braid_with_series(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'braid', 'model': 'Ising',
                                      'parameters': {'points': 2000, 'reverse': True,
                                                     'series': 11}})
        assert code == 0
        assert read_result(out)['result']['fidelity'] >= 1 - 1e-6
        series = pd.read_csv(out / 'spectrum_series.csv')
        assert len(series) == 11

    def test_results_are_reproducible(self, tmp_path):
        payload = {'command': 'braid', 'model': 'Ising', 'seed': 5,
                   'parameters': {'points': 500, 'regauge': True}}
        code_a, out_a = invoke(tmp_path, payload, 'a')
        code_b, out_b = invoke(tmp_path, payload, 'b')
        assert code_a == code_b == 0
        first, second = read_result(out_a), read_result(out_b)
        first.pop('wall_time_s')
        second.pop('wall_time_s')
        assert first == second

    def test_verify_corrupted_model(self, tmp_path, fibonacci):
        key = (1, 1, 1, 1, 0, 0)
        corrupted = with_f_symbol(fibonacci, key, -fibonacci.f_symbols[key])
        model_path = tmp_path / 'corrupted.json'
        model_path.write_text(json.dumps(model_to_json(corrupted), indent=2))
        code, out = invoke(tmp_path, {'command': 'verify-model', 'model': str(model_path)})
        assert code == 3
        result = read_result(out)['result']
        assert result['passed'] is False
        assert result['residuals']['pentagon'] > result['tol']

    def test_verify_builtin(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'verify-model', 'model': 'AbelianZ2',
                                      'parameters': {'z2_exchange': 1}})
        assert code == 0
        assert read_result(out)['result']['passed'] is True

    def test_spectrum_with_profile(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'spectrum', 'model': 'Fibonacci',
                                      'parameters': {'eps_B': 1.0, 'eps_L': 0.5, 'grid': 2},
                                      'settings': {'jobs': 1}})
        assert code == 0
        result = read_result(out)['result']
        assert result['ground_degeneracy'] == 2
        assert result['csv_files'] == ['degeneracy_profile.csv']
        assert len(pd.read_csv(out / 'degeneracy_profile.csv')) == 8

    def test_default_charges_for_su2_3(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'spectrum', 'model': 'SU2_3',
                                      'parameters': {'eps_B': 1.0}})
        assert code == 0
        assert read_result(out)['result']['ground_degeneracy'] == 2

    def test_sweep_time(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'sweep-time', 'model': 'Ising',
                                      'parameters': {'T_values': [20, 40], 'dt_ratio': 0.005}})
        assert code == 0
        table = pd.read_csv(out / 'sweep_time.csv')
        assert list(table['T']) == [20, 40]
        assert 'leakage' in table.columns

    def test_chain_scaling(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'chain-scaling', 'model': 'Fibonacci',
                                      'parameters': {'N_values': [1, 2, 3], 'eps_min': 0.1,
                                                     'eps_max': 1.0}})
        assert code == 0
        slope, _, _ = fit_slope(str(out / 'chain_scaling.csv'), 'N', 'ln_splitting')
        assert abs(slope + 2.572) < 0.15 * 2.572
        assert read_result(out)['result']['slope'] == pytest.approx(slope)

    def test_chain_braid_on_empty_layout(self, tmp_path):
        code, out = invoke(tmp_path, {'command': 'chain-braid', 'model': 'Fibonacci',
                                      'parameters': {'arm_lengths': [0, 0, 0],
                                                     'method': 'wilson', 'points': 2000}})
        assert code == 0
        result = read_result(out)['result']
        assert result['fidelity'] >= 1 - 1e-6
        assert result['layout']['site_order'] == ['l1', 'r1', 'c', 'b1']

    def test_run_returns_result(self, tmp_path):
        config = RunConfig.from_dict({'command': 'spectrum', 'model': 'Ising',
                                      'parameters': {'channel': 'psi'}})
        result = run(config, str(tmp_path))
        assert result.result['ground_degeneracy'] == 2
        assert result.summary.startswith('spectrum degeneracy=2')


class TestExitCodes:

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'config.json'
        path.write_text('{"command": ')
        assert main(['--config', str(path), '--quiet']) == 2

    def test_missing_config(self, tmp_path):
        assert main(['--config', str(tmp_path / 'absent.json'), '--quiet']) == 4

    def test_schema_violation(self, tmp_path, capsys):
        code, _ = invoke(tmp_path, {'command': 'braid', 'model': 'Fibonacci',
                                    'parameters': {'floor': -0.1}})
        assert code == 2
        assert 'parameters.floor' in capsys.readouterr().err

    def test_unknown_label(self, tmp_path):
        code, _ = invoke(tmp_path, {'command': 'braid', 'model': 'Fibonacci',
                                    'parameters': {'t': 'sigma'}})
        assert code == 2

    def test_exchange_sign_needs_abelian_model(self, tmp_path):
        code, _ = invoke(tmp_path, {'command': 'verify-model', 'model': 'Fibonacci',
                                    'parameters': {'z2_exchange': 1}})
        assert code == 2

    def test_malformed_model_file(self, tmp_path):
        model_path = tmp_path / 'bad.json'
        model_path.write_text('{"labels": ["1"], "fusion": [], "f_symbols": [], '
                              '"r_symbols": [], "qdims": [1.0]}')
        code, _ = invoke(tmp_path, {'command': 'verify-model', 'model': str(model_path)})
        assert code == 2

    def test_missing_model_file(self, tmp_path):
        code, _ = invoke(tmp_path, {'command': 'verify-model',
                                    'model': str(tmp_path / 'nowhere.json')})
        assert code == 4

    def test_dimension_cap(self, tmp_path, capsys):
        code, _ = invoke(tmp_path, {'command': 'chain-braid', 'model': 'Fibonacci',
                                    'parameters': {'arm_lengths': [3, 3, 3]}})
        assert code == 3
        assert 'DimensionCap' in capsys.readouterr().err

    def test_gap_collapse(self, tmp_path):
        code, _ = invoke(tmp_path, {'command': 'braid', 'model': 'Fibonacci',
                                    'parameters': {'points': 100},
                                    'settings': {'gap_threshold': 10.0}})
        assert code == 3


CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


@pytest.mark.parametrize('name', sorted(os.listdir(CONFIG_DIR)))
def test_shipped_configs_validate(name):
    config = load_run_config(os.path.join(CONFIG_DIR, name))
    assert config.output.startswith('out/')
