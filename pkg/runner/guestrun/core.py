"""Execute a candidate function over a batch of cases, one process per request.

Protocol (newline-delimited JSON, one request/response pair per process):

    stdin:  {"source": str, "fn": str, "cases": [<tagged>...], "timeout_ms": int}
    stdout: {"results": [{"status":"ok","value":<tagged>} |
                         {"status":"error","message":str} |
                         {"status":"timeout"}...],
             "wall_ms": int}

Tagged values: {"k":"i|f|b|s|l|t|n", "v": payload} ("t" decodes to a tuple,
"n" has no payload).  A malformed request produces {"fatal": str} and exit 1.

Each case runs under a SIGALRM interval watchdog; a case that raises or times
out never prevents later cases from running.  Guest stdout/stderr are captured
so they cannot corrupt the protocol stream; on error the tail of the captured
output (up to 2 KiB) is attached to the message.
"""

from __future__ import annotations

import io
import json
import math
import os
import signal
import sys
import time
from contextlib import redirect_stderr, redirect_stdout
from inspect import Parameter, signature

MESSAGE_CAP = 2048
DEFAULT_TIMEOUT_MS = 2000

_KIND_TAGS = {"i", "f", "b", "s", "l", "t", "n"}


class ProtocolError(ValueError):
    pass


class UnencodableReturn(ValueError):
    pass


class CaseTimeout(Exception):
    pass


def decode(obj):
    if not isinstance(obj, dict) or "k" not in obj:
        raise ProtocolError(f"not a tagged value: {obj!r}")
    k = obj["k"]
    if k not in _KIND_TAGS:
        raise ProtocolError(f"unknown kind tag: {k!r}")
    if k == "n":
        return None
    payload = obj["v"]
    if k == "l":
        return [decode(c) for c in payload]
    if k == "t":
        return tuple(decode(c) for c in payload)
    if k == "f" and isinstance(payload, int) and not isinstance(payload, bool):
        return float(payload)
    return payload


def encode(value):
    if value is None:
        return {"k": "n"}
    if isinstance(value, bool):
        return {"k": "b", "v": value}
    if isinstance(value, int):
        return {"k": "i", "v": value}
    if isinstance(value, float):
        if not math.isfinite(value):
            raise UnencodableReturn("non-finite float")
        return {"k": "f", "v": value}
    if isinstance(value, str):
        return {"k": "s", "v": value}
    if isinstance(value, list):
        return {"k": "l", "v": [encode(c) for c in value]}
    if isinstance(value, tuple):
        return {"k": "t", "v": [encode(c) for c in value]}
    raise UnencodableReturn(type(value).__name__)


def _denied_modules() -> set[str]:
    raw = os.environ.get("GUESTRUN_DENY", "")
    return {name.strip() for name in raw.split(",") if name.strip()}


def _guarded_import(denied):
    real_import = __import__

    def guarded(name, *args, **kwargs):
        if name.split(".")[0] in denied:
            raise ImportError(f"module {name!r} is denied in the guest sandbox")
        return real_import(name, *args, **kwargs)

    return guarded


def load_function(source: str, fn_name: str):
    """Compile and exec the candidate; return (fn, None) or (None, message)."""
    import builtins

    guest_builtins = dict(vars(builtins))
    guest_builtins["__import__"] = _guarded_import(_denied_modules())
    namespace = {"__name__": "__guest__", "__builtins__": guest_builtins}
    sink = io.StringIO()
    try:
        code = compile(source, "<candidate>", "exec")
        with redirect_stdout(sink), redirect_stderr(sink):
            exec(code, namespace)
    except BaseException as exc:
        return None, _error_message(exc, sink)
    fn = namespace.get(fn_name)
    if not callable(fn):
        return None, f"NameError: function {fn_name!r} not found in candidate"
    return fn, None


def positional_arity(fn) -> int:
    try:
        params = signature(fn).parameters.values()
    except (TypeError, ValueError):
        return 1
    if any(p.kind == Parameter.VAR_POSITIONAL for p in params):
        return 2  # *args accepts a spread
    return sum(1 for p in params
               if p.kind in (Parameter.POSITIONAL_ONLY, Parameter.POSITIONAL_OR_KEYWORD))


def _error_message(exc: BaseException, sink: io.StringIO) -> str:
    message = f"{type(exc).__name__}: {exc}"
    captured = sink.getvalue()
    if captured:
        message += f" | guest output: {captured[-1024:]}"
    return message[:MESSAGE_CAP]


def _alarm_handler(signum, frame):
    raise CaseTimeout()


def run_case(fn, value, spread: bool, timeout_ms: int) -> dict:
    sink = io.StringIO()
    old_handler = signal.signal(signal.SIGALRM, _alarm_handler)
    signal.setitimer(signal.ITIMER_REAL, timeout_ms / 1000.0)
    try:
        with redirect_stdout(sink), redirect_stderr(sink):
            if spread and isinstance(value, tuple):
                result = fn(*value)
            else:
                result = fn(value)
    except CaseTimeout:
        return {"status": "timeout"}
    except BaseException as exc:
        return {"status": "error", "message": _error_message(exc, sink)}
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0.0)
        signal.signal(signal.SIGALRM, old_handler)
    try:
        return {"status": "ok", "value": encode(result)}
    except UnencodableReturn as exc:
        return {"status": "error", "message": f"unencodable return ({exc})"}


def run_cases(request: dict) -> dict:
    if not isinstance(request, dict):
        raise ProtocolError("request must be a JSON object")
    for key in ("source", "fn", "cases"):
        if key not in request:
            raise ProtocolError(f"missing request field {key!r}")
    source = request["source"]
    fn_name = request["fn"]
    cases = request["cases"]
    timeout_ms = int(request.get("timeout_ms", DEFAULT_TIMEOUT_MS))
    if not isinstance(source, str) or not isinstance(fn_name, str) \
            or not isinstance(cases, list) or timeout_ms <= 0:
        raise ProtocolError("malformed request fields")
    inputs = [decode(c) for c in cases]

    start = time.monotonic()
    fn, load_error = load_function(source, fn_name)
    if load_error is not None:
        results = [{"status": "error", "message": load_error} for _ in inputs]
    else:
        spread = positional_arity(fn) > 1
        results = [run_case(fn, v, spread, timeout_ms) for v in inputs]
    wall_ms = int((time.monotonic() - start) * 1000)
    return {"results": results, "wall_ms": wall_ms}


def main() -> int:
    line = sys.stdin.readline()
    try:
        request = json.loads(line)
        response = run_cases(request)
    except (json.JSONDecodeError, ProtocolError, TypeError) as exc:
        sys.stdout.write(json.dumps({"fatal": str(exc)[:MESSAGE_CAP]}) + "\n")
        sys.stdout.flush()
        return 1
    sys.stdout.write(json.dumps(response) + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
