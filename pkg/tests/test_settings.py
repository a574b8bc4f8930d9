"""Tests for settings loading and logging setup."""

import logging

from slu.settings import DEFAULT_SETTINGS, default_data_dir, load_settings, setup_logging


def test_repo_settings_load():
    settings = load_settings()
    assert settings['data']['dir'] == './data/prepared'
    assert settings['evaluation']['workers'] == 1


def test_missing_file_gives_defaults(tmp_path):
    assert load_settings(str(tmp_path / 'absent.yaml')) == DEFAULT_SETTINGS


def test_file_values_merge_over_defaults(tmp_path):
    path = tmp_path / 'settings.yaml'
    path.write_text('logging:\n  level: DEBUG\nextra: 3\n', encoding='utf-8')
    settings = load_settings(str(path))
    assert settings['logging'] == {'level': 'DEBUG', 'format': '%(message)s'}
    assert settings['data'] == DEFAULT_SETTINGS['data']
    assert settings['extra'] == 3


def test_defaults_are_not_mutated(tmp_path):
    path = tmp_path / 'settings.yaml'
    path.write_text('data:\n  dir: /elsewhere\n', encoding='utf-8')
    load_settings(str(path))
    assert DEFAULT_SETTINGS['data']['dir'] == './data/prepared'


def test_data_dir_env_wins(monkeypatch):
    monkeypatch.setenv('SLU_DATA_DIR', '/srv/kvret')
    assert default_data_dir() == '/srv/kvret'
    monkeypatch.delenv('SLU_DATA_DIR')
    assert default_data_dir({'data': {'dir': '/from/settings'}}) == '/from/settings'


def test_setup_logging_configures_package_logger():
    setup_logging('warning')
    logger = logging.getLogger('slu')
    assert logger.level == logging.WARNING
    assert len(logger.handlers) == 1
    assert not logger.propagate
    setup_logging()
    assert logger.level == logging.INFO


def test_settings_file_is_read_as_utf8(tmp_path):
    path = tmp_path / 'settings.yaml'
    path.write_text('data:\n  dir: /données/kvret\n', encoding='utf-8')
    assert load_settings(str(path))['data']['dir'] == '/données/kvret'
