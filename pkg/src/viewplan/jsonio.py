"""Deterministic JSON emission and schema-aware loading.

Output files must be byte-stable across reruns, so floats are written with
17 significant digits (enough for exact float64 round trips) and dict key
order is preserved exactly as constructed by the caller.
"""

import json
import math

from .errors import FormatError


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite value not representable in JSON: {x}")
    return format(float(x), ".17g")


def dumps(obj, indent=0, _level=0) -> str:
    """Serialize nested dicts/lists/scalars with fixed float formatting."""
    if isinstance(obj, dict):
        items = [f'"{k}":{dumps(v, indent, _level + 1)}' for k, v in obj.items()]
        return _join("{", items, "}", indent, _level)
    if isinstance(obj, (list, tuple)):
        items = [dumps(v, indent, _level + 1) for v in obj]
        return _join("[", items, "]", indent, _level)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"unsupported JSON type: {type(obj)!r}")


def _join(opening, items, closing, indent, level):
    if not items:
        return opening + closing
    if not indent:
        return opening + ",".join(items) + closing
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    return opening + "\n" + ",\n".join(pad + it for it in items) + "\n" + end + closing


def dump_file(obj, path, indent=2) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj, indent=indent))
        fh.write("\n")


def load_file(path):
    """Parse a JSON file, reporting the position of any syntax error."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return loads(text, source=str(path))


def loads(text, source="<json>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
