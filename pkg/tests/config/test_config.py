import pytest
import json
import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../')))

from rxneural.config import DEFAULT_LEARNING_RATES, canonical_json, config_hash, load_config, load_experiment, parse_config
from rxneural.error import ConfigurationError

def test_valid_config():
    test_config = load_config('tests/config/test_config.json')
    assert test_config.get('rounds') == 3
    cfg = parse_config(test_config)
    assert cfg.half_rxd.lam == 15
    assert cfg.half_rxd.delta_r == 0x3
    assert cfg.data_format.base == 'D2'

def test_invalid_path_config():
    with pytest.raises(FileNotFoundError):
        load_config('path/to/invalid/config.json')

def test_invalid_json_config():
    with pytest.raises(json.JSONDecodeError):
        load_config('tests/config/invalid_json.json')

def test_missing_keys_config():
    cfg = load_experiment('tests/config/missing_keys.json')
    assert cfg.rounds == 6
    assert cfg.cipher == 'simon'
    assert cfg.data_format.base == 'D5'
    assert cfg.training.learning_rates == DEFAULT_LEARNING_RATES
    assert cfg.attack.c1 is None

def test_empty_config():
    with pytest.raises(ValueError):
        load_config('tests/config/empty_json.json')

def test_invalid_data_types_config():
    with pytest.raises(ConfigurationError, match='Invalid configuration'):
        load_experiment('tests/config/invalid_data_types.json')

def test_unknown_keys_config():
    with pytest.raises(ConfigurationError):
        load_experiment('tests/config/unknown_keys.json')

def test_directory_config():
    with pytest.raises(IsADirectoryError):
        load_config('tests/config')

def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv('RXNEURAL_WORKERS', '4')
    assert load_experiment('tests/config/test_config.json').workers == 4

def test_word_notation():
    cfg = parse_config({'cipher': 'SIMECK', 'half_rxd': {'lambda': 4, 'delta_r': '0x22'}})
    assert cfg.cipher == 'simeck'
    assert cfg.half_rxd.delta_r == 0x22
    with pytest.raises(ConfigurationError):
        parse_config({'half_rxd': {'delta_r': 0x10000}})

def test_unknown_values():
    for raw in ({'cipher': 'speck'}, {'data_format': {'base': 'D9'}}, {'data': {'negative_mode': 'zeros'}},
                {'training': {'learning_rates': []}}):
        with pytest.raises(ConfigurationError):
            parse_config(raw)

def test_config_hash():
    base = load_config('tests/config/test_config.json')
    digest = config_hash(parse_config(base))
    assert len(digest) == 64
    # Worker count and output paths do not change artifacts
    assert config_hash(parse_config({**base, 'workers': 8, 'paths': {'runs_dir': 'elsewhere'}})) == digest
    assert config_hash(parse_config({**base, 'rounds': 4})) != digest

def test_canonical_json():
    text = canonical_json({'b': 1, 'a': {'d': 2, 'c': 3}})
    assert text == '{"a":{"c":3,"d":2},"b":1}'
    assert '"lambda"' in canonical_json(parse_config({}))
