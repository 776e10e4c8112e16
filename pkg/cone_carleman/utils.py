"""Utility functions used within the library."""

import dataclasses
import enum
import math
from dataclasses import Field, fields as dataclass_fields
from typing import Any, Dict, Mapping, Optional, Type

import numpy as np

from cone_carleman.errors import ConfigError


def parse_bool(value: Any) -> bool:
    """Convert a config value such as "true", "no" or 1 to a bool."""
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_float_list(value: Any) -> tuple[float, ...]:
    """Convert "5,10,20" (or a JSON list) to a tuple of floats."""
    if isinstance(value, (list, tuple)):
        return tuple(float(item) for item in value)
    return tuple(float(item) for item in str(value).split(",") if item.strip())


def parse_int_list(value: Any) -> tuple[int, ...]:
    """Convert "8,16,32" (or a JSON list) to a tuple of ints."""
    return tuple(int(item) for item in parse_float_list(value))


def parse_str_list(value: Any) -> tuple[str, ...]:
    """Convert "json,csv" (or a JSON list) to a tuple of stripped strings."""
    if isinstance(value, (list, tuple)):
        return tuple(str(item).strip() for item in value)
    return tuple(item.strip() for item in str(value).split(",") if item.strip())


def parse_optional_float(value: Any) -> Optional[float]:
    """Float, with "none"/"null"/empty mapping to None."""
    if value is None or str(value).strip().lower() in ("", "none", "null"):
        return None
    return float(value)


def config_key(field: Field) -> str:
    """Get the config key for a dataclass field.

    Checks for a 'key' metadata entry, otherwise uses the field name.

    Args:
        field: A dataclass field

    Returns:
        The config key
    """
    return field.metadata.get("key", field.name)


def normalize_key(key: str) -> str:
    """Map kebab-case or mixed-case keys to snake_case."""
    return key.strip().replace("-", "_").lower()


def extract_unknown_keys(raw: Mapping[str, Any], dataclass_type: Type) -> list[str]:
    """Keys of `raw` that match no field of the dataclass.

    Args:
        raw: Mapping of normalized keys to raw values
        dataclass_type: The dataclass type to extract field keys from

    Returns:
        The unknown keys, sorted
    """
    known_keys = {config_key(field) for field in dataclass_fields(dataclass_type)}
    return sorted(key for key in raw if key not in known_keys)


def convert_config_fields(
    raw: Mapping[str, Any],
    dataclass_type: Type,
    lines: Optional[Mapping[str, int]] = None,
) -> Dict[str, Any]:
    """Convert raw config values through each field's 'converter' metadata.

    Args:
        raw: Mapping of normalized keys to raw (string or JSON) values
        dataclass_type: The dataclass type the values are meant for
        lines: Optional line number of every key, used in error messages

    Returns:
        Field name to converted value, for the keys present in `raw`

    Raises:
        ConfigError: a key matches no field or a value fails conversion
    """
    lines = lines or {}
    unknown = extract_unknown_keys(raw, dataclass_type)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'", lines.get(unknown[0]))

    converted = {}
    for field_info in dataclass_fields(dataclass_type):
        key = config_key(field_info)
        if key not in raw:
            continue
        converter = field_info.metadata.get("converter")
        try:
            converted[field_info.name] = converter(raw[key]) if converter else raw[key]
        except (TypeError, ValueError) as error:
            raise ConfigError(f"bad value for '{key}': {error}", lines.get(key)) from error
    return converted


def map_config_fields(
    raw: Mapping[str, Any],
    dataclass_type: Type,
    base: Any = None,
    lines: Optional[Mapping[str, int]] = None,
) -> Any:
    """Build a dataclass instance from raw config values.

    Args:
        raw: Mapping of normalized keys to raw values
        dataclass_type: The dataclass type to map fields to
        base: Instance whose values are used for absent keys; defaults to the
            dataclass defaults
        lines: Optional line number of every key

    Returns:
        An instance of the dataclass with fields populated from the config
    """
    instance = base if base is not None else dataclass_type()
    return dataclasses.replace(instance, **convert_config_fields(raw, dataclass_type, lines))


def to_jsonable(value: Any) -> Any:  # pylint: disable=too-many-return-statements
    """Recursively convert dataclasses, numpy values and tuples into JSON-ready data.

    Non-finite floats become the strings "inf", "-inf" and "nan" so every report is
    strict JSON.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        data = {
            field.name: to_jsonable(getattr(value, field.name)) for field in dataclass_fields(value)
        }
        for name in type(value).__dict__:
            attribute = getattr(type(value), name)
            if isinstance(attribute, property) and name not in data:
                data[name] = to_jsonable(getattr(value, name))
        return data
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    if isinstance(value, Mapping):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    return value
