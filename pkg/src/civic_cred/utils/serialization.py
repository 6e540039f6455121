"""Canonical JSON serialization utilities.

Integers travel as lowercase hex without leading zeros, byte strings as
lowercase hex, and objects with sorted keys, so equal values always encode to
equal bytes.
"""

import re
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Optional, Union

import ujson

from .file_utils import atomic_write_text

_CANONICAL_HEX = re.compile(r"^(0|[1-9a-f][0-9a-f]*)$")
_BYTES_HEX = re.compile(r"^([0-9a-f]{2})*$")


def int_to_hex(value: int) -> str:
    """Convert a non-negative integer to canonical lowercase hex.

    Args:
        value: Integer to convert

    Returns:
        Hex string without prefix or leading zeros ("0" for zero)

    Example:
        int_to_hex(55)  # "37"
    """
    if value < 0:
        raise ValueError(f"Negative integers have no canonical hex form: {value}")
    return format(value, "x")


def hex_to_int(text: str) -> int:
    """Parse canonical lowercase hex back into an integer.

    Raises:
        ValueError: If the string is not canonical hex
    """
    if not isinstance(text, str) or not _CANONICAL_HEX.match(text):
        raise ValueError(f"Not canonical hex: {text!r}")
    return int(text, 16)


def bytes_to_hex(data: bytes) -> str:
    """Convert bytes to lowercase hex."""
    return data.hex()


def hex_to_bytes(text: str, length: Optional[int] = None) -> bytes:
    """Parse lowercase hex into bytes, optionally enforcing a length.

    Raises:
        ValueError: If the string is not lowercase hex or has the wrong length
    """
    if not isinstance(text, str) or not _BYTES_HEX.match(text):
        raise ValueError(f"Not lowercase hex bytes: {text!r}")
    data = bytes.fromhex(text)
    if length is not None and len(data) != length:
        raise ValueError(f"Expected {length} bytes, got {len(data)}")
    return data


def to_jsonable(obj: Any) -> Any:
    """Recursively convert values into JSON-ready structures.

    Handles bytes (hex), Enum (value), dataclasses, sets (sorted lists),
    tuples and nested dicts/lists. Integers are left alone: callers that need
    hex integers convert them explicitly.

    Args:
        obj: Object to convert

    Returns:
        JSON-serializable representation of the object
    """
    if isinstance(obj, Enum):
        return to_jsonable(obj.value)
    if isinstance(obj, (bytes, bytearray)):
        return bytes(obj).hex()
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(to_jsonable(item) for item in obj)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(item) for item in obj]
    return obj


def canonical_dumps(doc: Any) -> str:
    """Serialize to compact canonical JSON (sorted keys, no whitespace).

    Example:
        canonical_dumps({"b": 1, "a": "x"})  # '{"a":"x","b":1}'
    """
    return ujson.dumps(
        to_jsonable(doc),
        sort_keys=True,
        ensure_ascii=False,
        escape_forward_slashes=False,
    )


def pretty_dumps(doc: Any) -> str:
    """Serialize to indented JSON with sorted keys and a trailing newline."""
    return (
        ujson.dumps(
            to_jsonable(doc),
            sort_keys=True,
            indent=2,
            ensure_ascii=False,
            escape_forward_slashes=False,
        )
        + "\n"
    )


def loads(text: Union[str, bytes]) -> Any:
    """Parse JSON text."""
    return ujson.loads(text)


def save_json(doc: Any, file_path: Union[str, Path]) -> Path:
    """Save a document as pretty JSON, atomically.

    Example:
        save_json(report.to_dict(), "run1/report.json")
    """
    return atomic_write_text(file_path, pretty_dumps(doc))


def load_json(file_path: Union[str, Path]) -> Any:
    """Load a JSON file."""
    with open(file_path, "r", encoding="utf-8") as f:
        return ujson.load(f)


def save_jsonl(records: Iterable[Any], file_path: Union[str, Path]) -> Path:
    """Save records as canonical JSON lines, atomically."""
    text = "".join(canonical_dumps(record) + "\n" for record in records)
    return atomic_write_text(file_path, text)


def iter_jsonl(file_path: Union[str, Path]) -> Iterator[Dict[str, Any]]:
    """Yield one parsed record per non-empty line of a JSONL file."""
    with open(file_path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield ujson.loads(line)
