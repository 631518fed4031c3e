"""Ground-truth oracle registry.

Every benchmark task is defined here by a deterministic oracle function, an
input domain, a family/level tag, and a handful of canonical edge-case inputs
that the generator always emits first.  Multi-argument oracles receive one
tuple-wrapped input so every task is unary at the wire level.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from .domains import DomainViolation, InputDomain, contains, sample_input
from .values import Value

FAMILIES = ("Arithmetic", "Core", "Sequence", "BitParity", "Newton", "Geometry", "Extra")
LEVELS = ("Base", "Algorithm", "Geometry")


class UnknownOracle(KeyError):
    pass


@dataclass(frozen=True)
class OracleSpec:
    oracle_id: str
    family: str
    level: str
    domain: InputDomain
    fn: Callable[[Value], Value]
    arity: int = 1
    edge_cases: tuple = ()
    sampler: Callable[[random.Random], Value] | None = None
    validator: Callable[[Value], bool] | None = None
    small_domain: bool = False

    def sample(self, rng: random.Random) -> Value:
        if self.sampler is not None:
            return self.sampler(rng)
        return sample_input(self.domain, rng)

    def admits(self, v: Value) -> bool:
        if not contains(self.domain, v):
            return False
        return self.validator(v) if self.validator else True


# --- oracle functions -------------------------------------------------------

def _prime_factorization(n):
    factors = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors.append(d)
            n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return factors


def _digit_sum(n):
    return sum(int(c) for c in str(n))


def _gcd_pair(pair):
    return math.gcd(pair[0], pair[1])


def _collatz_steps(n):
    steps = 0
    while n != 1:
        n = n // 2 if n % 2 == 0 else 3 * n + 1
        steps += 1
    return steps


BASE_K = 3


def _base_k_addition(pair):
    # little-endian digit streams; output canonical little-endian sum digits
    xs, ys = pair
    out, carry = [], 0
    for a, b in zip(xs, ys):
        s = a + b + carry
        out.append(s % BASE_K)
        carry = s // BASE_K
    while carry:
        out.append(carry % BASE_K)
        carry //= BASE_K
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def _running_sum(xs):
    out, acc = [], 0
    for x in xs:
        acc += x
        out.append(acc)
    return out


def _running_max(xs):
    out, best = [], None
    for x in xs:
        best = x if best is None or x > best else best
        out.append(best)
    return out


def _running_mean(xs):
    out, acc = [], 0.0
    for i, x in enumerate(xs):
        acc += x
        out.append(acc / (i + 1))
    return out


def _reverse_list(xs):
    return list(reversed(xs))


def _sort_list(xs):
    return sorted(xs)


def _filter_even(xs):
    return [x for x in xs if x % 2 == 0]


def _pairwise_diff(xs):
    return [b - a for a, b in zip(xs, xs[1:])]


def _delayed_echo(xs):
    return [0] + xs[:-1]


def _count_occurrences(pair):
    # overlapping occurrences
    s, sub = pair
    count = 0
    start = s.find(sub)
    while start != -1:
        count += 1
        start = s.find(sub, start + 1)
    return count


def _parity_fold(bits):
    return sum(bits) % 2


def _xor_fold(xs):
    acc = 0
    for x in xs:
        acc ^= x
    return acc


def _binary_dot_product(pair):
    xs, ys = pair
    return sum(a * b for a, b in zip(xs, ys))


def _majority_bit(bits):
    return 1 if 2 * sum(bits) > len(bits) else 0


def _lis_length(xs):
    # O(n^2) DP over strictly increasing subsequences
    best = [1] * len(xs)
    for i in range(len(xs)):
        for j in range(i):
            if xs[j] < xs[i]:
                best[i] = max(best[i], best[j] + 1)
    return max(best)


def _edit_distance(pair):
    a, b = pair
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _rpn_eval(expr):
    stack = []
    for c in expr:
        if c.isdigit():
            stack.append(int(c))
        else:
            b, a = stack.pop(), stack.pop()
            stack.append(a + b if c == "+" else a - b if c == "-" else a * b)
    return stack[0]


def _two_sum_exists(pair):
    xs, target = pair
    seen = set()
    for x in xs:
        if target - x in seen:
            return True
        seen.add(x)
    return False


def _tri_area(p, q, r):
    return abs((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])) / 2


def _triangle_area_3pts(pts):
    return _tri_area(pts[0], pts[1], pts[2])


def _max_triangle_area(pts):
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                best = max(best, _tri_area(pts[i], pts[j], pts[k]))
    return best


def _manhattan_path_length(pts):
    return sum(abs(q[0] - p[0]) + abs(q[1] - p[1]) for p, q in zip(pts, pts[1:]))


def _integer_sqrt(n):
    return math.isqrt(n)


# --- task-specific samplers -------------------------------------------------

def _sample_rpn(rng: random.Random) -> str:
    def expr(budget: int) -> str:
        if budget <= 0 or rng.random() < 0.35:
            return str(rng.randrange(10))
        ops = "+-*"
        return expr(budget - 1) + expr(budget - 1) + ops[rng.randrange(3)]

    while True:
        s = expr(3)
        if len(s) >= 3:
            return s


def _valid_rpn(expr) -> bool:
    if not isinstance(expr, str) or not expr:
        return False
    depth = 0
    for c in expr:
        if c.isdigit():
            depth += 1
        elif c in "+-*":
            if depth < 2:
                return False
            depth -= 1
        else:
            return False
    return depth == 1


def _sample_substring_pair(rng: random.Random) -> tuple:
    charset = "ab"
    n = 3 + rng.randrange(8)
    s = "".join(charset[rng.randrange(2)] for _ in range(n))
    m = 1 + rng.randrange(2)
    sub = "".join(charset[rng.randrange(2)] for _ in range(m))
    return (s, sub)


def _substring_pair_ok(v) -> bool:
    if not (isinstance(v, tuple) and len(v) == 2):
        return False
    s, sub = v
    return (
        isinstance(s, str) and isinstance(sub, str)
        and 3 <= len(s) <= 10 and 1 <= len(sub) <= 2
        and all(c in "ab" for c in s + sub)
    )


# --- registry ----------------------------------------------------------------

def _specs() -> list[OracleSpec]:
    intseq = lambda lo, hi: InputDomain("IntSeq", (3, 10), (lo, hi))
    bitseq = InputDomain("BitSeq", (3, 10), (0, 1))
    points = lambda nlo, nhi: InputDomain("PointSeq", (nlo, nhi), (-9, 9))
    return [
        OracleSpec("prime_factorization", "Arithmetic", "Base",
                   InputDomain("ScalarInt", (1, 1), (1, 200)), _prime_factorization,
                   edge_cases=(1,)),
        OracleSpec("digit_sum", "Arithmetic", "Base",
                   InputDomain("ScalarInt", (1, 1), (0, 99999)), _digit_sum,
                   edge_cases=(0,)),
        OracleSpec("gcd_pair", "Arithmetic", "Base",
                   InputDomain("IntPair", (1, 1), (1, 144)), _gcd_pair,
                   arity=2, edge_cases=((6, 6),)),
        OracleSpec("collatz_steps", "Arithmetic", "Algorithm",
                   InputDomain("ScalarInt", (1, 1), (1, 200)), _collatz_steps,
                   edge_cases=(1,)),
        OracleSpec("reverse_list", "Core", "Base", intseq(0, 99), _reverse_list,
                   edge_cases=([1, 2, 1],)),
        OracleSpec("sort_list", "Core", "Base", intseq(0, 99), _sort_list,
                   edge_cases=([1, 2, 3],)),
        OracleSpec("filter_even", "Core", "Base", intseq(0, 99), _filter_even,
                   edge_cases=([1, 3, 5],)),
        OracleSpec("running_sum", "Core", "Base", intseq(0, 9), _running_sum,
                   edge_cases=([1, 1, 1],)),
        OracleSpec("running_max", "Sequence", "Base", intseq(0, 99), _running_max,
                   edge_cases=([3, 2, 1],)),
        OracleSpec("running_mean", "Sequence", "Base",
                   InputDomain("FloatSeq", (3, 10), (0.0, 10.0)), _running_mean,
                   edge_cases=([2.0, 2.0, 2.0],)),
        OracleSpec("pairwise_diff", "Sequence", "Base", intseq(0, 99), _pairwise_diff,
                   edge_cases=([4, 4, 4],)),
        OracleSpec("delayed_echo", "Sequence", "Base", intseq(0, 9), _delayed_echo,
                   edge_cases=([1, 2, 3],)),
        OracleSpec("count_occurrences", "Sequence", "Algorithm",
                   InputDomain("StrPair", (1, 10), (0, 0), charset="ab"), _count_occurrences,
                   arity=2, edge_cases=(("aaa", "aa"),),
                   sampler=_sample_substring_pair, validator=_substring_pair_ok),
        OracleSpec("parity_fold", "BitParity", "Base", bitseq, _parity_fold,
                   edge_cases=([0, 0, 0],)),
        OracleSpec("xor_fold", "BitParity", "Base", intseq(0, 15), _xor_fold,
                   edge_cases=([5, 5, 5],)),
        OracleSpec("binary_dot_product", "BitParity", "Base",
                   InputDomain("BitPairSeq", (3, 10), (0, 1)), _binary_dot_product,
                   arity=2, edge_cases=(([1, 1, 1], [0, 0, 0]),)),
        OracleSpec("majority_bit", "BitParity", "Base", bitseq, _majority_bit,
                   edge_cases=([0, 1, 0, 1],)),
        OracleSpec("base_k_addition", "BitParity", "Algorithm",
                   InputDomain("IntPairSeq", (3, 10), (0, BASE_K - 1)), _base_k_addition,
                   arity=2, edge_cases=(([0, 0, 0], [0, 0, 0]),)),
        OracleSpec("lis_length", "Extra", "Algorithm", intseq(0, 99), _lis_length,
                   edge_cases=([5, 4, 3],)),
        OracleSpec("edit_distance", "Extra", "Algorithm",
                   InputDomain("StrPair", (3, 10), (0, 0), charset="abc"), _edit_distance,
                   arity=2, edge_cases=(("abc", "abc"),)),
        OracleSpec("rpn_eval", "Extra", "Algorithm",
                   InputDomain("Text", (3, 15), (0, 0), charset="0123456789+-*"), _rpn_eval,
                   edge_cases=("77+",), sampler=_sample_rpn, validator=_valid_rpn),
        OracleSpec("two_sum_exists", "Extra", "Algorithm",
                   InputDomain("IntSeqWithTarget", (3, 10), (0, 9)), _two_sum_exists,
                   arity=2, edge_cases=(([2, 2, 2], 4),)),
        OracleSpec("triangle_area_3pts", "Geometry", "Geometry", points(3, 3),
                   _triangle_area_3pts, edge_cases=([(0, 0), (1, 1), (2, 2)],)),
        OracleSpec("max_triangle_area", "Geometry", "Geometry", points(4, 8),
                   _max_triangle_area, edge_cases=([(0, 0), (2, 0), (0, 2), (2, 2)],)),
        OracleSpec("manhattan_path_length", "Geometry", "Geometry", points(3, 10),
                   _manhattan_path_length, edge_cases=([(0, 0), (0, 0), (0, 0)],)),
        OracleSpec("integer_sqrt", "Newton", "Base",
                   InputDomain("ScalarInt", (1, 1), (0, 10**6)), _integer_sqrt,
                   edge_cases=(0, 1, 16)),
    ]


REGISTRY: dict[str, OracleSpec] = {s.oracle_id: s for s in _specs()}

assert len(REGISTRY) >= 24
assert {s.family for s in REGISTRY.values()} == set(FAMILIES)


def get_spec(oracle_id: str) -> OracleSpec:
    try:
        return REGISTRY[oracle_id]
    except KeyError:
        raise UnknownOracle(oracle_id) from None


def oracle_eval(oracle_id: str, value: Value) -> Value:
    """Ground-truth output for an input; validates domain membership."""
    spec = get_spec(oracle_id)
    if not spec.admits(value):
        raise DomainViolation(f"{oracle_id}: input outside domain: {value!r}")
    return spec.fn(value)
