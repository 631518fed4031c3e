"""Twenty fixture candidate programs exercising the full protocol surface:
values of every kind, arity dispatch, guest errors, load failures, timeouts,
stdout capture, and unencodable returns."""


def i(v):
    return {"k": "i", "v": v}


def f_(v):
    return {"k": "f", "v": v}


def s(v):
    return {"k": "s", "v": v}


def l(*children):
    return {"k": "l", "v": list(children)}


def t(*children):
    return {"k": "t", "v": list(children)}


FIXTURES = [
    {
        "name": "factorize_loop",
        "source": (
            "def f(n):\n"
            "    factors = []\n"
            "    d = 2\n"
            "    while d <= n:\n"
            "        while n % d == 0:\n"
            "            factors.append(d)\n"
            "            n = n // d\n"
            "        d += 1\n"
            "    return factors\n"
        ),
        "fn": "f",
        "cases": [i(8), i(12), i(30)],
    },
    {
        "name": "constant_empty",
        "source": "def f(n):\n    return []\n",
        "fn": "f",
        "cases": [i(1), i(2)],
    },
    {
        "name": "identity_wrap",
        "source": "def f(n):\n    return [n]\n",
        "fn": "f",
        "cases": [i(5)],
    },
    {
        "name": "reverse",
        "source": "def f(xs):\n    return xs[::-1]\n",
        "fn": "f",
        "cases": [l(i(1), i(2), i(3))],
    },
    {
        "name": "pair_sum_spread",
        "source": "def f(a, b):\n    return a + b\n",
        "fn": "f",
        "cases": [t(i(3), i(4)), t(i(10), i(-2))],
    },
    {
        "name": "dot_product_spread",
        "source": "def f(xs, ys):\n    return sum(a * b for a, b in zip(xs, ys))\n",
        "fn": "f",
        "cases": [t(l(i(1), i(0), i(1)), l(i(1), i(1), i(1)))],
    },
    {
        "name": "string_upper",
        "source": "def f(s):\n    return s.upper()\n",
        "fn": "f",
        "cases": [s("abc")],
    },
    {
        "name": "tuple_return",
        "source": "def f(x):\n    return (x, x + 1)\n",
        "fn": "f",
        "cases": [i(7)],
    },
    {
        "name": "float_mean",
        "source": "def f(xs):\n    return sum(xs) / len(xs)\n",
        "fn": "f",
        "cases": [l(f_(1.0), f_(2.0), f_(4.0))],
    },
    {
        "name": "bool_parity",
        "source": "def f(n):\n    return n % 2 == 0\n",
        "fn": "f",
        "cases": [i(4), i(5)],
    },
    {
        "name": "none_return",
        "source": "def f(x):\n    pass\n",
        "fn": "f",
        "cases": [i(1)],
    },
    {
        "name": "crash_containment",
        "source": "def f(n):\n    return 10 // n\n",
        "fn": "f",
        "cases": [i(1), i(0), i(2)],
    },
    {
        "name": "syntax_error",
        "source": "def f(n):\n    return [\n",
        "fn": "f",
        "cases": [i(1), i(2)],
    },
    {
        "name": "missing_function",
        "source": "def g(n):\n    return n\n",
        "fn": "f",
        "cases": [i(1)],
    },
    {
        "name": "unencodable_set",
        "source": "def f(n):\n    return {n}\n",
        "fn": "f",
        "cases": [i(3)],
    },
    {
        "name": "nan_return",
        "source": "def f(n):\n    return float('nan')\n",
        "fn": "f",
        "cases": [i(1)],
    },
    {
        "name": "partial_timeout",
        "source": (
            "def f(n):\n"
            "    if n == 0:\n"
            "        while True:\n"
            "            pass\n"
            "    return n\n"
        ),
        "fn": "f",
        "cases": [i(1), i(0), i(2)],
        "timeout_ms": 150,
    },
    {
        "name": "stdout_capture",
        "source": "def f(n):\n    print('debug', n)\n    return n + 1\n",
        "fn": "f",
        "cases": [i(41)],
    },
    {
        "name": "explicit_raise",
        "source": (
            "def f(n):\n"
            "    if n < 0:\n"
            "        raise ValueError('negative input %d' % n)\n"
            "    return n\n"
        ),
        "fn": "f",
        "cases": [i(3), i(-4)],
    },
    {
        "name": "recursive_factorial",
        "source": "def f(n):\n    return 1 if n <= 1 else n * f(n - 1)\n",
        "fn": "f",
        "cases": [i(5), i(0)],
    },
]

assert len(FIXTURES) == 20
