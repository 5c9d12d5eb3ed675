"""
Shared serialization helpers.

All JSON artifacts go through orjson with sorted keys so that repeated runs of the
pipeline produce byte-identical files.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Union

import numpy as np
import orjson
import pandas as pd

DOCUMENT_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE
LINE_OPTIONS = orjson.OPT_SORT_KEYS


def make_json_serializable(obj: Any) -> Any:
    """
    Recursively convert an object to plain JSON types.
    Handles numpy and pandas scalars, enums, sets and tuples.

    Args:
        obj: Any Python object

    Returns:
        JSON-serializable version of the object
    """
    if obj is None:
        return None

    if isinstance(obj, Enum):
        return obj.value

    # Handle numpy types
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        value = float(obj)
        return None if np.isnan(value) else value
    if isinstance(obj, np.ndarray):
        return [make_json_serializable(item) for item in obj.tolist()]

    if isinstance(obj, pd.Timedelta):
        return int(obj.value)

    if isinstance(obj, float) and obj != obj:
        return None

    if isinstance(obj, dict):
        return {str(k): make_json_serializable(v) for k, v in obj.items()}

    if isinstance(obj, (list, tuple)):
        return [make_json_serializable(item) for item in obj]

    if isinstance(obj, (set, frozenset)):
        return sorted(make_json_serializable(item) for item in obj)

    if isinstance(obj, (str, int, float, bool)):
        return obj

    if hasattr(obj, "to_dict"):
        return make_json_serializable(obj.to_dict())

    return str(obj)


def dumps_document(obj: Any) -> bytes:
    """Serialize a document (indented, sorted keys, trailing newline)."""
    return orjson.dumps(make_json_serializable(obj), option=DOCUMENT_OPTIONS)


def dumps_line(obj: Any) -> bytes:
    """Serialize one compact JSON line without newline."""
    return orjson.dumps(obj, option=LINE_OPTIONS)


def loads(data: Union[bytes, str]) -> Any:
    return orjson.loads(data)


def write_document(path: Union[str, Path], obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_document(obj))
    return path


def read_document(path: Union[str, Path]) -> Any:
    return orjson.loads(Path(path).read_bytes())
