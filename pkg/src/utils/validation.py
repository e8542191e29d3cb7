"""Validation utilities for circuit files and experiment/locate config files."""

from pathlib import Path
from typing import Any, Dict, List

import yaml

from src.utils.config import config


class ValidationError(Exception):
    """Custom exception for validation failures."""
    pass


SEARCH_KEYS = {
    'sig', 't_power', 'sig_relaxed', 't_power_relaxed', 't_upper_p', 't_upper_p_relaxed',
    'd_lookback', 'm_unit', 'm_max', 'whole_program_confirmed', 'reset_on_return',
    'early_determination', 'finalization', 'looking_back',
}
GENERATION_KEYS = {'n_qubits', 'n_segments', 'n_gates'}
EXPERIMENT_KEYS = {
    'generation', 'corpus_size', 'seed', 'methods', 'ablations', 'search',
    'threshold_preset', 'measurement_preset', 'filter', 'filter_threshold',
    'limited_bases', 'n_bugs', 'backend', 'workers',
}
LOCATE_KEYS = {'search', 'threshold_preset', 'measurement_preset', 'seed', 'tree'}
METHOD_NAMES = ('proposed', 'binary', 'linear')
ABLATION_NAMES = ('no_cost_tree', 'no_early', 'no_finalization', 'no_lookback')
BACKEND_NAMES = ('simulator', 'perfect')
TREE_NAMES = ('cost', 'central')


def _add(errors: List[str], message: str, raise_exception: bool) -> None:
    errors.append(message)
    if raise_exception:
        raise ValidationError(message)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def load_config_file(path: Path) -> Dict[str, Any]:
    """Read a JSON or YAML config file into a dictionary.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValidationError: If it doesn't parse to a mapping
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding='utf-8'))
    except yaml.YAMLError as e:
        raise ValidationError(f"{path}: cannot parse - {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a mapping")
    return data


def validate_search_settings(search: Dict[str, Any], raise_exception: bool = False) -> list:
    """Validate the `search` block of a config file.

    Args:
        search: Threshold and budget overrides
        raise_exception: If True, raises ValidationError on first error.
                        If False, returns list of all errors.

    Returns:
        List of error messages (empty if valid)
    """
    errors = []
    if not isinstance(search, dict):
        _add(errors, "'search' must be a mapping", raise_exception)
        return errors

    unknown = sorted(set(search) - SEARCH_KEYS)
    if unknown:
        _add(errors, f"Unknown search settings: {', '.join(unknown)}", raise_exception)

    for key in ('sig', 't_power', 'sig_relaxed', 't_power_relaxed', 't_upper_p', 't_upper_p_relaxed'):
        if key in search:
            value = search[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0 <= value <= 1:
                _add(errors, f"{key} must be a number in [0, 1]", raise_exception)

    for key in ('d_lookback', 'm_unit', 'm_max'):
        if key in search and (not _is_int(search[key]) or search[key] < 1):
            _add(errors, f"{key} must be a positive integer", raise_exception)

    if _is_int(search.get('m_unit')) and _is_int(search.get('m_max')) and search['m_unit'] > search['m_max']:
        _add(errors, "m_unit must be <= m_max", raise_exception)

    if _is_int(search.get('d_lookback')) and search['d_lookback'] < 2:
        _add(errors, "d_lookback must be >= 2", raise_exception)

    for key in ('whole_program_confirmed', 'reset_on_return', 'early_determination', 'finalization', 'looking_back'):
        if key in search and not isinstance(search[key], bool):
            _add(errors, f"{key} must be true or false", raise_exception)

    return errors


def _validate_presets(data: Dict[str, Any], errors: List[str], raise_exception: bool) -> None:
    preset = data.get('threshold_preset')
    if preset is not None and not config.is_valid_threshold_preset(preset):
        _add(
            errors,
            f"Invalid threshold_preset '{preset}'. Must be one of: {', '.join(config.threshold_presets)}",
            raise_exception
        )
    preset = data.get('measurement_preset')
    if preset is not None and not config.is_valid_measurement_preset(preset):
        _add(
            errors,
            f"Invalid measurement_preset '{preset}'. Must be one of: {', '.join(config.measurement_presets)}",
            raise_exception
        )
    tree = data.get('tree')
    if tree is not None and tree not in TREE_NAMES:
        _add(errors, f"Invalid tree '{tree}'. Must be one of: {', '.join(TREE_NAMES)}", raise_exception)
    seed = data.get('seed')
    if seed is not None and (not _is_int(seed) or seed < 0):
        _add(errors, "seed must be a non-negative integer", raise_exception)


def validate_locate_config(data: Dict[str, Any], raise_exception: bool = False) -> list:
    """Validate a `locate` config file (search block, presets, seed, tree)."""
    errors = []
    unknown = sorted(set(data) - LOCATE_KEYS)
    if unknown:
        _add(errors, f"Unknown config keys: {', '.join(unknown)}", raise_exception)
    _validate_presets(data, errors, raise_exception)
    if 'search' in data:
        errors.extend(validate_search_settings(data['search'], raise_exception))
    return errors


def validate_experiment_config(data: Dict[str, Any], raise_exception: bool = False) -> list:
    """Validate an experiment config file.

    Args:
        data: Parsed config mapping
        raise_exception: If True, raises ValidationError on first error.
                        If False, returns list of all errors.

    Returns:
        List of error messages (empty if valid)

    Raises:
        ValidationError: If raise_exception=True and validation fails

    Example:
        >>> errors = validate_experiment_config({'corpus_size': 0})
        >>> errors
        ['corpus_size must be a positive integer']
    """
    errors = []

    unknown = sorted(set(data) - EXPERIMENT_KEYS)
    if unknown:
        _add(errors, f"Unknown config keys: {', '.join(unknown)}", raise_exception)

    generation = data.get('generation', {})
    if not isinstance(generation, dict):
        _add(errors, "'generation' must be a mapping", raise_exception)
    else:
        unknown = sorted(set(generation) - GENERATION_KEYS)
        if unknown:
            _add(errors, f"Unknown generation settings: {', '.join(unknown)}", raise_exception)
        for key in GENERATION_KEYS & set(generation):
            if not _is_int(generation[key]) or generation[key] < 1:
                _add(errors, f"generation.{key} must be a positive integer", raise_exception)

    for key in ('corpus_size', 'n_bugs', 'workers', 'limited_bases'):
        value = data.get(key)
        if value is not None and (not _is_int(value) or value < 1):
            _add(errors, f"{key} must be a positive integer", raise_exception)

    methods = data.get('methods', list(METHOD_NAMES))
    if not isinstance(methods, list) or not methods:
        _add(errors, "methods must be a nonempty list", raise_exception)
    else:
        bad = [m for m in methods if m not in METHOD_NAMES]
        if bad:
            _add(errors, f"Unknown methods: {', '.join(map(str, bad))}. Must be from: {', '.join(METHOD_NAMES)}", raise_exception)

    ablations = data.get('ablations', [])
    if not isinstance(ablations, list):
        _add(errors, "ablations must be a list", raise_exception)
    else:
        bad = [a for a in ablations if a not in ABLATION_NAMES]
        if bad:
            _add(errors, f"Unknown ablations: {', '.join(map(str, bad))}. Must be from: {', '.join(ABLATION_NAMES)}", raise_exception)

    backend = data.get('backend')
    if backend is not None and backend not in BACKEND_NAMES:
        _add(errors, f"Invalid backend '{backend}'. Must be one of: {', '.join(BACKEND_NAMES)}", raise_exception)

    if 'filter' in data and not isinstance(data['filter'], bool):
        _add(errors, "filter must be true or false", raise_exception)

    threshold = data.get('filter_threshold')
    if threshold is not None and (not isinstance(threshold, (int, float)) or isinstance(threshold, bool) or threshold < 0):
        _add(errors, "filter_threshold must be a non-negative number", raise_exception)

    _validate_presets(data, errors, raise_exception)

    if 'search' in data:
        errors.extend(validate_search_settings(data['search'], raise_exception))

    return errors


def validate_circuit_data(data: Any, raise_exception: bool = False) -> list:
    """Structural check of a circuit file before parsing.

    Reports every problem at once so a hand-edited file can be fixed in one pass.
    """
    errors = []
    if not isinstance(data, dict):
        _add(errors, "Circuit must be a JSON object", raise_exception)
        return errors

    missing = [f for f in ('n_qubits', 'segments') if f not in data]
    if missing:
        _add(errors, f"Missing required fields: {', '.join(missing)}", raise_exception)
        return errors

    n_qubits = data['n_qubits']
    if not _is_int(n_qubits) or not 1 <= n_qubits <= config.max_qubits:
        _add(errors, f"n_qubits must be an integer in 1..{config.max_qubits}", raise_exception)

    segments = data['segments']
    if not isinstance(segments, list) or len(segments) < 2:
        _add(errors, "segments must be a list of at least 2 segments", raise_exception)
        return errors

    for index, segment in enumerate(segments, start=1):
        if not isinstance(segment, list) or not segment:
            _add(errors, f"Segment {index} must be a nonempty list of gates", raise_exception)
            continue
        for position, gate in enumerate(segment):
            if not isinstance(gate, dict) or 'kind' not in gate or 'targets' not in gate:
                _add(errors, f"Segment {index} gate {position}: needs 'kind' and 'targets'", raise_exception)
                continue
            targets = gate['targets']
            if not isinstance(targets, list) or not all(_is_int(t) for t in targets):
                _add(errors, f"Segment {index} gate {position}: targets must be a list of integers", raise_exception)
            elif _is_int(n_qubits) and any(t < 0 or t >= n_qubits for t in targets):
                _add(errors, f"Segment {index} gate {position}: target out of range 0..{n_qubits - 1}", raise_exception)

    return errors
