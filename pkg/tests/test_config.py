from __future__ import annotations

import pytest

from config import DEFAULT_SEED, create_config


def test_defaults():
    config = create_config()

    assert config['DEFAULT_SEED'] == DEFAULT_SEED
    assert config['CHARACTERISTIC'] == 0
    assert config['SEARCH_BUDGET'] == 200_000
    assert config['YONEDA_LEVELS'] == [2, 3, 4]
    assert config['DATA_PATH'].endswith('data')


def test_test_config_is_applied_last(monkeypatch):
    monkeypatch.setenv('TORIC_SEARCH_BUDGET', '1000')
    config = create_config({'SEARCH_BUDGET': 10})

    assert config['SEARCH_BUDGET'] == 10


def test_environment_overrides_defaults(monkeypatch):
    monkeypatch.setenv('TORIC_SEARCH_BUDGET', '1000')
    monkeypatch.setenv('TORIC_CHECK_LIFTS', 'false')

    config = create_config()
    assert config['SEARCH_BUDGET'] == 1000
    assert config['CHECK_LIFTS'] is False


def test_negative_characteristic_is_rejected():
    with pytest.raises(ValueError):
        create_config({'CHARACTERISTIC': -3})
