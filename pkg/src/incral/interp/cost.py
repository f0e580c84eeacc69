from __future__ import annotations

import json
from dataclasses import dataclass, fields

COUNTERS = (
    "set_add", "set_del", "membership", "map_get", "map_put",
    "arith", "compare", "call", "list_op", "iter_step",
)


@dataclass
class CostReport:
    """Elementary-operation counters; every counted operation costs one unit."""

    set_add: int = 0
    set_del: int = 0
    membership: int = 0
    map_get: int = 0
    map_put: int = 0
    arith: int = 0
    compare: int = 0
    call: int = 0
    list_op: int = 0
    iter_step: int = 0

    @property
    def total(self) -> int:
        return (self.set_add + self.set_del + self.membership + self.map_get
                + self.map_put + self.arith + self.compare + self.call
                + self.list_op + self.iter_step)

    def copy(self) -> "CostReport":
        return CostReport(**self.as_dict(total=False))

    def as_dict(self, total: bool = True) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if total:
            d["total"] = self.total
        return d

    def __add__(self, other: "CostReport") -> "CostReport":
        return CostReport(**{k: getattr(self, k) + getattr(other, k) for k in COUNTERS})

    def __sub__(self, other: "CostReport") -> "CostReport":
        return CostReport(**{k: getattr(self, k) - getattr(other, k) for k in COUNTERS})

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.as_dict().items()) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "CostReport":
        return cls(**{k: int(d.get(k, 0)) for k in COUNTERS})

    @classmethod
    def from_text(cls, text: str) -> "CostReport":
        pairs = dict(line.split("=", 1) for line in text.splitlines() if line.strip())
        return cls.from_dict(pairs)
