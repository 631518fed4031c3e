"""Universal value representation shared by tasks, oracles and evaluators.

Values are plain Python data: ``int``, ``float``, ``bool``, ``str``, ``None``,
and arbitrarily nested ``list``/``tuple`` containers of the same.  Lists and
tuples are distinct kinds and never compare equal.  Floats must be finite.

The canonical wire form is tagged JSON::

    {"k": "i", "v": 12}                 # int
    {"k": "f", "v": 0.5}                # float
    {"k": "b", "v": true}               # bool
    {"k": "s", "v": "ab"}               # str
    {"k": "l", "v": [<tagged>, ...]}    # list
    {"k": "t", "v": [<tagged>, ...]}    # tuple
    {"k": "n"}                          # null

This exact form is the contract between the engine and the guest runner.
"""

from __future__ import annotations

import json
import math
from typing import Union

Value = Union[int, float, bool, str, None, list, tuple]

DEFAULT_FLOAT_TOL = 1e-6

_KIND_TAGS = {"i", "f", "b", "s", "l", "t", "n"}


class InvalidValueError(ValueError):
    """Raised when data does not form a valid value tree."""


def kind_of(v: Value) -> str:
    """Return the one-letter kind tag for a value.

    ``bool`` is checked before ``int`` because it is a subclass.
    """
    if v is None:
        return "n"
    if isinstance(v, bool):
        return "b"
    if isinstance(v, int):
        return "i"
    if isinstance(v, float):
        return "f"
    if isinstance(v, str):
        return "s"
    if isinstance(v, list):
        return "l"
    if isinstance(v, tuple):
        return "t"
    raise InvalidValueError(f"unsupported value type: {type(v).__name__}")


def validate(v: Value) -> None:
    """Reject non-finite floats and unsupported payload types anywhere in the tree."""
    k = kind_of(v)
    if k == "f" and not math.isfinite(v):
        raise InvalidValueError("non-finite float in value tree")
    if k in ("l", "t"):
        for child in v:
            validate(child)


def values_equal(a: Value, b: Value, float_tol: float = DEFAULT_FLOAT_TOL) -> bool:
    """Recursive equality with a tolerance on floats; total over valid values.

    Kinds must match exactly: ``1 != 1.0 != True`` and ``(1, 2) != [1, 2]``.
    """
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        return False
    if ka == "f":
        return abs(a - b) <= float_tol
    if ka in ("l", "t"):
        if len(a) != len(b):
            return False
        return all(values_equal(x, y, float_tol) for x, y in zip(a, b))
    return a == b


def _tag(v: Value) -> dict | None:
    k = kind_of(v)
    if k == "n":
        return {"k": "n"}
    if k in ("l", "t"):
        return {"k": k, "v": [_tag(c) for c in v]}
    if k == "f" and not math.isfinite(v):
        raise InvalidValueError("cannot serialize non-finite float")
    return {"k": k, "v": v}


def to_tagged(v: Value) -> dict:
    """Convert a value into its tagged-JSON object form."""
    return _tag(v)


def from_tagged(obj: object) -> Value:
    """Convert a tagged-JSON object back into a value."""
    if not isinstance(obj, dict) or "k" not in obj:
        raise InvalidValueError(f"not a tagged value object: {obj!r}")
    k = obj["k"]
    if k not in _KIND_TAGS:
        raise InvalidValueError(f"unknown kind tag: {k!r}")
    if k == "n":
        return None
    if "v" not in obj:
        raise InvalidValueError(f"kind {k!r} requires a payload")
    payload = obj["v"]
    if k == "l":
        return [from_tagged(c) for c in payload]
    if k == "t":
        return tuple(from_tagged(c) for c in payload)
    expected = {"i": int, "f": float, "b": bool, "s": str}[k]
    if k == "i" and isinstance(payload, bool):
        raise InvalidValueError("bool payload under int tag")
    if k == "f" and isinstance(payload, int) and not isinstance(payload, bool):
        payload = float(payload)
    if not isinstance(payload, expected):
        raise InvalidValueError(f"kind {k!r} has payload of type {type(payload).__name__}")
    if k == "f" and not math.isfinite(payload):
        raise InvalidValueError("non-finite float payload")
    return payload


def serialize(v: Value) -> str:
    """Canonical single-line tagged-JSON text; floats use shortest round-trip form."""
    return json.dumps(to_tagged(v), separators=(",", ":"), sort_keys=True)


def deserialize(text: str) -> Value:
    def _no_const(name):
        raise InvalidValueError(f"non-finite constant in wire text: {name}")

    return from_tagged(json.loads(text, parse_constant=_no_const))


def literal_form(v: Value) -> str:
    """Human-literal rendering, e.g. ``[2, 2, 3]``, ``(1, 2)``, ``'abc'``.

    Matches Python ``repr`` (single space after commas), so it is deterministic
    and injective over the benchmark's value population.
    """
    validate(v)
    return repr(v)


def size_and_depth(v: Value) -> tuple[int, int]:
    """Node count and depth of a value tree.

    Scalars have depth 1; a container contributes a level even when empty,
    so ``[]`` has depth 2.
    """
    k = kind_of(v)
    if k in ("l", "t"):
        sizes = [size_and_depth(c) for c in v]
        count = 1 + sum(s for s, _ in sizes)
        depth = 1 + max((d for _, d in sizes), default=1)
        return count, depth
    return 1, 1
