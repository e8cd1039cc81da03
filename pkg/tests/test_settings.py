"""
Tests for SimulationSettings
"""

import json

from core.settings import DEFAULTS, SimulationSettings


def test_defaults():
    settings = SimulationSettings()
    assert settings.get('consistency_tol') == 1e-10
    assert settings.get('wilson_points') == 2000
    assert settings.get('max_chain_sites') == 14
    assert 1 <= settings.get('jobs') <= 4


def test_overrides_are_coerced():
    settings = SimulationSettings({'wilson_points': '500', 'gap_threshold': '1e-4',
                                   'verbose_logging': 'yes'})
    assert settings.get('wilson_points') == 500
    assert settings.get('gap_threshold') == 1e-4
    assert settings.get('verbose_logging') is True


def test_bad_value_falls_back_to_default():
    settings = SimulationSettings({'max_leakage': 'plenty'})
    assert settings.get('max_leakage') == DEFAULTS['max_leakage']


def test_unknown_keys_are_ignored():
    settings = SimulationSettings({'colour': 'blue'})
    assert 'colour' not in settings.as_dict()


def test_clear():
    settings = SimulationSettings({'jobs': 3})
    settings.clear()
    assert settings.get('jobs') == DEFAULTS['jobs']


def test_export_import(tmp_path):
    path = tmp_path / 'settings.json'
    source = SimulationSettings({'hermiticity_tol': 1e-11, 'jobs': 2})
    assert source.export_settings(str(path))
    assert json.loads(path.read_text())['jobs'] == 2

    target = SimulationSettings()
    assert target.import_settings(str(path))
    assert target.get('hermiticity_tol') == 1e-11


def test_import_failure(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{')
    assert SimulationSettings().import_settings(str(path)) is False
    assert SimulationSettings().import_settings(str(tmp_path / 'missing.json')) is False
