"""Golden derivation files: one CLI invocation per bundled example."""
import io
import os
from pathlib import Path

from incral.driver import cli

GOLDEN_DIR = Path(__file__).parent / "golden"
REGENERATE = "INCRAL_REGEN_GOLDEN"

CASES = {
    "fib": ["inc-func", "fib", "--func", "fib", "--derive-iter"],
    "h": ["inc-func", "h", "--func", "h", "--derive-iter"],
    "steps": ["inc-func", "steps", "--func", "k", "--derive-iter"],
    "sum": ["inc-func", "sum", "--func", "total"],
    "sort": ["inc-func", "sort", "--func", "sort"],
    "views": ["inc-set", "views"],
    "setops": ["inc-set", "setops"],
    "image": ["inc-set", "image"],
    "join": ["inc-set", "join"],
    "aggregates": ["inc-set", "aggregates"],
    "tc": ["inc-rules", "tc"],
    "square-after": ["poly-diff", "--expr", "x*x", "--step", "1", "--mode", "after"],
    "cubic-before": ["poly-diff", "--expr", "x*x*x + x", "--step", "2"],
}


def render(name) -> str:
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(CASES[name], out, err)
    if code != 0:
        raise RuntimeError(f"{name}: exit {code}: {err.getvalue()}")
    return out.getvalue()


def compare(name) -> bool:
    """True when the rendered derivation equals its golden file byte for byte."""
    path = GOLDEN_DIR / f"{name}.txt"
    text = render(name)
    if os.environ.get(REGENERATE):
        path.write_bytes(text.encode("utf-8"))
    return path.exists() and path.read_bytes() == text.encode("utf-8")
