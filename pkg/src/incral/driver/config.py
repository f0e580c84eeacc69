from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace

from ..interp.machine import DEFAULT_STEP_LIMIT
from ..funcinc.derive import DEFAULT_CACHE_DEPTH

SEED_ENV = "INCRAL_SEED"


@dataclass(frozen=True)
class Config:
    """Knobs for verification and benchmarking runs.

    ``universe`` bounds random set elements to ``0 .. universe - 1``;
    ``int_max`` and ``list_len``/``list_values`` bound the exhaustive
    domains used for function derivations.
    """

    seed: int = 42
    ops: int = 1000
    universe: int = 8
    step_limit: int = DEFAULT_STEP_LIMIT
    cache_depth: int = DEFAULT_CACHE_DEPTH
    format: str = "text"
    int_max: int = 20
    list_len: int = 8
    list_values: int = 2
    check_every: int = 1

    def __post_init__(self):
        if self.ops < 0:
            raise ValueError("ops must be non-negative")
        for name in ("universe", "step_limit", "cache_depth", "int_max", "list_len",
                     "list_values", "check_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.format not in ("text", "json"):
            raise ValueError("format must be text or json")

    @classmethod
    def from_env(cls, env=None, **kw) -> "Config":
        """Defaults, then ``INCRAL_SEED`` from the environment, then ``kw``."""
        env = os.environ if env is None else env
        if SEED_ENV in env and "seed" not in kw:
            try:
                kw["seed"] = int(env[SEED_ENV])
            except ValueError:
                raise ValueError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
        return cls(**kw)

    def with_(self, **kw) -> "Config":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)
