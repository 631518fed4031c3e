"""Input domains: declarative shape of a task's inputs, sampling and membership.

A domain samples one input value at a time from a seeded ``random.Random``.
Sampling uses only ``randrange``/``random`` so generated benchmarks are stable
across Python versions and platforms.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .values import Value, kind_of

SHAPES = (
    "IntSeq",
    "BitSeq",
    "IntPairSeq",
    "BitPairSeq",
    "FloatSeq",
    "ScalarInt",
    "Text",
    "PointSeq",
    "StrPair",
    "IntPair",
    "IntSeqWithTarget",
)


class DomainViolation(ValueError):
    """Input does not belong to the declared domain."""


@dataclass(frozen=True)
class InputDomain:
    shape: str
    length_range: tuple[int, int] = (3, 10)
    value_range: tuple[float, float] = (0, 9)
    charset: str = ""

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown domain shape: {self.shape}")
        lo, hi = self.length_range
        if lo < 1 or lo > hi:
            raise ValueError(f"bad length_range: {self.length_range}")
        if self.value_range[0] > self.value_range[1]:
            raise ValueError(f"bad value_range: {self.value_range}")

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "length_range": list(self.length_range),
            "value_range": list(self.value_range),
            "charset": self.charset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InputDomain":
        return cls(
            shape=d["shape"],
            length_range=tuple(d["length_range"]),
            value_range=tuple(d["value_range"]),
            charset=d.get("charset", ""),
        )


def _rand_int(rng: random.Random, lo: int, hi: int) -> int:
    return lo + rng.randrange(hi - lo + 1)


def _rand_len(rng: random.Random, dom: InputDomain) -> int:
    return _rand_int(rng, dom.length_range[0], dom.length_range[1])


def _int_seq(rng: random.Random, dom: InputDomain, n: int | None = None) -> list:
    n = _rand_len(rng, dom) if n is None else n
    lo, hi = int(dom.value_range[0]), int(dom.value_range[1])
    return [_rand_int(rng, lo, hi) for _ in range(n)]


def sample_input(dom: InputDomain, rng: random.Random) -> Value:
    """Draw one input value from the domain."""
    shape = dom.shape
    if shape == "ScalarInt":
        return _rand_int(rng, int(dom.value_range[0]), int(dom.value_range[1]))
    if shape in ("IntSeq", "BitSeq"):
        return _int_seq(rng, dom)
    if shape in ("IntPairSeq", "BitPairSeq"):
        n = _rand_len(rng, dom)
        return (_int_seq(rng, dom, n), _int_seq(rng, dom, n))
    if shape == "FloatSeq":
        n = _rand_len(rng, dom)
        lo, hi = dom.value_range
        return [round(lo + rng.random() * (hi - lo), 4) for _ in range(n)]
    if shape == "Text":
        n = _rand_len(rng, dom)
        return "".join(dom.charset[rng.randrange(len(dom.charset))] for _ in range(n))
    if shape == "PointSeq":
        n = _rand_len(rng, dom)
        lo, hi = int(dom.value_range[0]), int(dom.value_range[1])
        return [(_rand_int(rng, lo, hi), _rand_int(rng, lo, hi)) for _ in range(n)]
    if shape == "StrPair":
        a = "".join(dom.charset[rng.randrange(len(dom.charset))] for _ in range(_rand_len(rng, dom)))
        b = "".join(dom.charset[rng.randrange(len(dom.charset))] for _ in range(_rand_len(rng, dom)))
        return (a, b)
    if shape == "IntPair":
        lo, hi = int(dom.value_range[0]), int(dom.value_range[1])
        return (_rand_int(rng, lo, hi), _rand_int(rng, lo, hi))
    if shape == "IntSeqWithTarget":
        xs = _int_seq(rng, dom)
        lo, hi = int(dom.value_range[0]), int(dom.value_range[1])
        # half the draws hit a real pair sum so both labels stay common
        if rng.random() < 0.5 and len(xs) >= 2:
            i = rng.randrange(len(xs))
            j = rng.randrange(len(xs) - 1)
            j = j if j < i else j + 1
            target = xs[i] + xs[j]
        else:
            target = _rand_int(rng, 2 * lo, 2 * hi)
        return (xs, target)
    raise AssertionError(shape)


def _ints_in_range(xs, lo: int, hi: int) -> bool:
    return all(kind_of(x) == "i" and lo <= x <= hi for x in xs)


def contains(dom: InputDomain, v: Value) -> bool:
    """Membership test used to validate externally proposed inputs."""
    shape = dom.shape
    n_lo, n_hi = dom.length_range
    lo, hi = dom.value_range
    if shape == "ScalarInt":
        return kind_of(v) == "i" and lo <= v <= hi
    if shape in ("IntSeq", "BitSeq"):
        return kind_of(v) == "l" and n_lo <= len(v) <= n_hi and _ints_in_range(v, int(lo), int(hi))
    if shape in ("IntPairSeq", "BitPairSeq"):
        if kind_of(v) != "t" or len(v) != 2:
            return False
        a, b = v
        return (
            kind_of(a) == "l"
            and kind_of(b) == "l"
            and len(a) == len(b)
            and n_lo <= len(a) <= n_hi
            and _ints_in_range(a, int(lo), int(hi))
            and _ints_in_range(b, int(lo), int(hi))
        )
    if shape == "FloatSeq":
        return (
            kind_of(v) == "l"
            and n_lo <= len(v) <= n_hi
            and all(kind_of(x) == "f" and lo <= x <= hi for x in v)
        )
    if shape == "Text":
        return kind_of(v) == "s" and n_lo <= len(v) <= n_hi and all(c in dom.charset for c in v)
    if shape == "PointSeq":
        return (
            kind_of(v) == "l"
            and n_lo <= len(v) <= n_hi
            and all(
                kind_of(p) == "t" and len(p) == 2 and _ints_in_range(p, int(lo), int(hi))
                for p in v
            )
        )
    if shape == "StrPair":
        if kind_of(v) != "t" or len(v) != 2:
            return False
        return all(
            kind_of(s) == "s" and n_lo <= len(s) <= n_hi and all(c in dom.charset for c in s)
            for s in v
        )
    if shape == "IntPair":
        return (
            kind_of(v) == "t"
            and len(v) == 2
            and _ints_in_range(v, int(lo), int(hi))
        )
    if shape == "IntSeqWithTarget":
        if kind_of(v) != "t" or len(v) != 2:
            return False
        xs, target = v
        return (
            kind_of(xs) == "l"
            and n_lo <= len(xs) <= n_hi
            and _ints_in_range(xs, int(lo), int(hi))
            and kind_of(target) == "i"
            and 2 * int(lo) <= target <= 2 * int(hi)
        )
    raise AssertionError(shape)


_PAIR_SHAPES = ("IntPairSeq", "BitPairSeq", "StrPair", "IntPair", "IntSeqWithTarget")


def coerce_to_shape(shape: str, raw):
    """Map plain-JSON data (lists only) onto the tuple structure a shape expects."""
    if shape in _PAIR_SHAPES and isinstance(raw, list) and len(raw) == 2:
        return tuple(raw)
    if shape == "PointSeq" and isinstance(raw, list):
        return [tuple(p) if isinstance(p, list) and len(p) == 2 else p for p in raw]
    return raw


def sample_without_replacement(rng: random.Random, items: list, k: int) -> list:
    """Partial Fisher-Yates draw of k items; stable across Python versions."""
    pool = list(items)
    out = []
    for _ in range(min(k, len(pool))):
        idx = rng.randrange(len(pool))
        out.append(pool.pop(idx))
    return out
