"""Verification harness, cost benchmarks and the command-line interface."""
from .bench import BenchRow, BenchTable, bench
from .config import Config
from .programs import BUNDLED, Derived, bundled_path, bundled_text, derive_all, derive_function
from .verify import VerifyReport, verify_equiv

__all__ = [
    "BenchRow", "BenchTable", "bench", "Config", "BUNDLED", "Derived", "bundled_path",
    "bundled_text", "derive_all", "derive_function", "VerifyReport", "verify_equiv",
]
