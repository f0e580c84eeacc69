"""Runtime values: integers, booleans, tuples, lists, sets and bucket maps.

Python ints and tuples are used directly. Sets and maps are dict-backed so
iteration follows insertion order; equality ignores order.
"""
from __future__ import annotations

from typing import Iterable, Iterator


class LList:
    """Immutable singly linked list with O(1) cons/head/tail."""

    __slots__ = ("head", "tail", "_len")

    def __init__(self, head=None, tail: "LList | None" = None):
        self.head = head
        self.tail = tail
        self._len = 0 if tail is None else tail._len + 1

    @classmethod
    def of(cls, items: Iterable) -> "LList":
        out = NIL
        for x in reversed(list(items)):
            out = LList(x, out)
        return out

    @property
    def empty(self) -> bool:
        return self.tail is None

    def __len__(self) -> int:
        return self._len

    def __iter__(self) -> Iterator:
        node = self
        while node.tail is not None:
            yield node.head
            node = node.tail

    def __eq__(self, other) -> bool:
        if not isinstance(other, LList):
            return NotImplemented
        if self._len != other._len:
            return False
        return all(a == b for a, b in zip(self, other))

    def __hash__(self) -> int:
        return hash(("list",) + tuple(self))

    def __repr__(self) -> str:
        return format_value(self)


NIL = LList()


class VSet(dict):
    """Finite set with insertion-ordered iteration (keys of a dict)."""

    __slots__ = ()

    def __init__(self, items: Iterable = ()):
        super().__init__((x, None) for x in items)

    def add(self, x) -> None:
        self[x] = None

    def discard(self, x) -> None:
        self.pop(x, None)

    def copy(self) -> "VSet":
        return VSet(self)

    def __eq__(self, other) -> bool:
        if isinstance(other, (set, frozenset)):
            return self.keys() == other
        if not isinstance(other, VSet):
            return NotImplemented
        return dict.__eq__(self, other)

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self) -> int:
        return hash(frozenset(self))

    def __repr__(self) -> str:
        return format_value(self)


class VMap(dict):
    """Finite map from keys to buckets; a bucket counts each value it holds.

    Entries exist only while their bucket is non-empty, and bucket counts are
    always at least one.
    """

    __slots__ = ()

    def inc(self, key, value) -> None:
        bucket = self.get(key)
        if bucket is None:
            bucket = self[key] = {}
        bucket[value] = bucket.get(value, 0) + 1

    def dec(self, key, value) -> None:
        bucket = self.get(key)
        if bucket is None or value not in bucket:
            raise KeyError((key, value))
        if bucket[value] == 1:
            del bucket[value]
            if not bucket:
                del self[key]
        else:
            bucket[value] -= 1

    def copy(self) -> "VMap":
        out = VMap()
        for k, bucket in self.items():
            out[k] = dict(bucket)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, VMap):
            return NotImplemented
        return dict.__eq__(self, other)

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self) -> int:
        return hash(frozenset((k, frozenset(b.items())) for k, b in self.items()))

    def __repr__(self) -> str:
        return format_value(self)


def copy_value(v):
    if isinstance(v, (VSet, VMap)):
        return v.copy()
    return v


# ints < booleans < tuples < lists < sets < maps
def _rank(v) -> int:
    if isinstance(v, bool):
        return 1
    if isinstance(v, int):
        return 0
    if isinstance(v, tuple):
        return 2
    if isinstance(v, LList):
        return 3
    if isinstance(v, VSet):
        return 4
    if isinstance(v, VMap):
        return 5
    raise TypeError(f"not a value: {v!r}")


def sort_key(v):
    r = _rank(v)
    if r <= 1:
        return (r, int(v))
    if r == 2 or r == 3:
        return (r, len(v), tuple(sort_key(x) for x in v))
    if r == 4:
        return (r, len(v), tuple(sorted(sort_key(x) for x in v)))
    return (
        r,
        len(v),
        tuple(sorted((sort_key(k), sorted((sort_key(x), c) for x, c in b.items()))
                     for k, b in v.items())),
    )


def format_value(v) -> str:
    """Deterministic text form; sets and maps print in canonical order."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(format_value(x) for x in v) + ")"
    if isinstance(v, LList):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    if isinstance(v, VSet):
        return "{" + ", ".join(format_value(x) for x in sorted(v, key=sort_key)) + "}"
    if isinstance(v, VMap):
        parts = []
        for k in sorted(v, key=sort_key):
            bucket = v[k]
            inner = ", ".join(
                format_value(x) if c == 1 else f"{format_value(x)}*{c}"
                for x, c in sorted(bucket.items(), key=lambda kv: sort_key(kv[0]))
            )
            parts.append(f"{format_value(k)} -> {{{inner}}}")
        return "{" + ", ".join(parts) + "}"
    raise TypeError(f"not a value: {v!r}")


def to_json(v):
    """JSON-compatible structure for a value."""
    if isinstance(v, bool) or isinstance(v, int):
        return v
    if isinstance(v, tuple):
        return {"tuple": [to_json(x) for x in v]}
    if isinstance(v, LList):
        return {"list": [to_json(x) for x in v]}
    if isinstance(v, VSet):
        return {"set": [to_json(x) for x in sorted(v, key=sort_key)]}
    if isinstance(v, VMap):
        return {
            "map": [
                [to_json(k), [[to_json(x), c] for x, c in
                              sorted(v[k].items(), key=lambda kv: sort_key(kv[0]))]]
                for k in sorted(v, key=sort_key)
            ]
        }
    raise TypeError(f"not a value: {v!r}")
