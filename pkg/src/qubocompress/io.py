"""Reading and writing QUBO instances.

Text format::

    # comment lines start with '#'
    3                 <- n
    0 0 -1.0          <- i j value, 0-based, i <= j
    1 2 -0.8

Omitted entries are zero. JSON format: ``{"n": 3, "entries": [[0, 0, -1.0], ...]}``.
Writers list only nonzero entries, sorted by (i, j), using ``repr`` so that
floats round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import QuboInstance
from .errors import ParseError


def _nonzero_entries(q: QuboInstance):
    return [(i, j, v) for i, j, v in q.entries() if v != 0.0]


def loads_text(text: str) -> QuboInstance:
    n = None
    m = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1:
                raise ParseError(f"expected the dimension n, got {line!r}", lineno)
            try:
                n = int(parts[0])
            except ValueError:
                raise ParseError(f"dimension is not an integer: {parts[0]!r}", lineno) from None
            if n < 1:
                raise ParseError(f"dimension must be positive, got {n}", lineno)
            m = np.zeros((n, n))
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'i j value', got {line!r}", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"malformed entry {line!r}", lineno) from None
        if not (0 <= i <= j < n):
            raise ParseError(f"position ({i}, {j}) invalid for n={n} (need 0 <= i <= j < n)", lineno)
        if not np.isfinite(v):
            raise ParseError(f"non-finite value {parts[2]!r}", lineno)
        m[i, j] += v
    if n is None:
        raise ParseError("no dimension line found")
    return QuboInstance(m)


def dumps_text(q: QuboInstance, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(str(q.n))
    lines.extend(f"{i} {j} {v!r}" for i, j, v in _nonzero_entries(q))
    return "\n".join(lines) + "\n"


def to_json_obj(q: QuboInstance) -> dict:
    return {"n": q.n, "entries": [[i, j, v] for i, j, v in _nonzero_entries(q)]}


def from_json_obj(obj) -> QuboInstance:
    try:
        n = int(obj["n"])
        entries = obj.get("entries", [])
        m = np.zeros((n, n))
        for k, e in enumerate(entries):
            i, j, v = int(e[0]), int(e[1]), float(e[2])
            if not (0 <= i <= j < n):
                raise ParseError(f"entry {k}: position ({i}, {j}) invalid for n={n}")
            m[i, j] += v
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid QUBO JSON: {exc}") from None
    return QuboInstance(m)


def loads_json(text: str) -> QuboInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    return from_json_obj(obj)


def dumps_json(q: QuboInstance) -> str:
    return json.dumps(to_json_obj(q))


def read_qubo(path) -> QuboInstance:
    """Read a QUBO file; ``.json`` files use the JSON format, anything else the text format."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return loads_json(text)
    return loads_text(text)


def write_qubo(q: QuboInstance, path, comment: str | None = None):
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(dumps_json(q) + "\n")
    else:
        path.write_text(dumps_text(q, comment))
