"""Plain-text instance files.

A file is a sequence of sections introduced by a keyword on its own line::

    NAME problem5          # optional, value on the same line
    CONES
    3 2
    A
    1 0 0 0 0
    ...
    B
    1 0 1
    C
    0 0 -1 0 0
    CBAR
    0 -1 1 0 0
    DOMAIN -inf inf        # optional parameter bounds

``#`` starts a comment. Keywords are case-insensitive. Every row of ``A``
sits on its own line; vectors may wrap over several lines.
"""

from __future__ import annotations

import hashlib
import math
from importlib import resources

import numpy as np

from .cones import ConeStructure
from .errors import DimensionMismatch, ParseError
from .solver import ParametricInstance

__all__ = [
    "BUNDLED",
    "instance_digest",
    "load_bundled",
    "parse_instance",
    "read_instance",
    "write_instance",
]

_SECTIONS = ("NAME", "CONES", "A", "B", "C", "CBAR", "DOMAIN")

BUNDLED = ("problem5", "problem6", "problem8", "problem14",
           "problem14_modified", "problem15")


def _number(tok: str, line: int, col: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", line, col) from None
    if math.isnan(v):
        raise ParseError("NaN is not allowed", line, col)
    return v


def _tokens(raw: str):
    """Yield ``(column, token)`` pairs of a comment-stripped line."""
    body = raw.split("#", 1)[0]
    col = 0
    for tok in body.split():
        col = body.index(tok, col)
        yield col + 1, tok
        col += len(tok)


def parse_instance(text: str) -> ParametricInstance:
    """Parse an instance document.

    Raises
    ------
    ParseError
        Malformed text, with the offending line and column.
    DimensionMismatch
        Sections parse but their sizes disagree.
    """
    sections: dict[str, list[tuple[int, list[tuple[int, str]]]]] = {}
    header_line: dict[str, int] = {}
    name = ""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = list(_tokens(raw))
        if not toks:
            continue
        key = toks[0][1].upper()
        if key in _SECTIONS and not _is_number(toks[0][1]):
            if key in sections or (key == "NAME" and name):
                raise ParseError(f"duplicate section {key}", lineno, toks[0][0])
            header_line[key] = lineno
            if key == "NAME":
                name = " ".join(t for _, t in toks[1:])
                current = None
                continue
            sections[key] = []
            current = key
            if len(toks) > 1:
                sections[key].append((lineno, toks[1:]))
            continue
        if current is None:
            raise ParseError(f"data outside any section: {toks[0][1]!r}",
                             lineno, toks[0][0])
        sections[current].append((lineno, toks))

    for key in ("CONES", "A", "B", "C", "CBAR"):
        if key not in sections:
            raise ParseError(f"missing section {key}")
        if not sections[key] and key != "A":
            raise ParseError(f"empty section {key}", header_line[key])

    dims = []
    for lineno, toks in sections["CONES"]:
        for col, tok in toks:
            try:
                d = int(tok)
            except ValueError:
                raise ParseError(f"cone size must be an integer: {tok!r}",
                                 lineno, col) from None
            if d < 1:
                raise ParseError(f"cone size must be >= 1, got {d}", lineno, col)
            dims.append(d)
    structure = ConeStructure(tuple(dims))

    def vector(key):
        vals = []
        for lineno, toks in sections[key]:
            for col, tok in toks:
                v = _number(tok, lineno, col)
                if math.isinf(v):
                    raise ParseError("Inf is not allowed", lineno, col)
                vals.append(v)
        return np.array(vals)

    rows = []
    for lineno, toks in sections["A"]:
        row = []
        for col, tok in toks:
            v = _number(tok, lineno, col)
            if math.isinf(v):
                raise ParseError("Inf is not allowed", lineno, col)
            row.append(v)
        if len(row) != structure.n:
            raise DimensionMismatch(
                f"line {lineno}: A row has {len(row)} entries, cones need "
                f"{structure.n}")
        rows.append(row)
    A = np.array(rows, dtype=float).reshape(len(rows), structure.n)
    b, c, cbar = vector("B"), vector("C"), vector("CBAR")
    if b.size != A.shape[0]:
        raise DimensionMismatch(f"b has {b.size} entries, A has {A.shape[0]} rows")
    for key, vec in (("C", c), ("CBAR", cbar)):
        if vec.size != structure.n:
            raise DimensionMismatch(
                f"{key} has {vec.size} entries, cones need {structure.n}")

    domain = None
    if "DOMAIN" in sections:
        vals = [(lineno, col, _number(tok, lineno, col))
                for lineno, toks in sections["DOMAIN"] for col, tok in toks]
        if len(vals) != 2:
            raise ParseError("DOMAIN needs exactly two values (lo hi)",
                             header_line["DOMAIN"])
        if not vals[0][2] < vals[1][2]:
            raise ParseError("DOMAIN needs lo < hi", vals[0][0], vals[0][1])
        domain = (vals[0][2], vals[1][2])
    try:
        return ParametricInstance(structure, A, b, c, cbar, domain, name)
    except ValueError as exc:
        raise DimensionMismatch(str(exc)) from None


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_instance(instance: ParametricInstance) -> str:
    """Serialize with shortest round-trip float formatting."""
    out = []
    if instance.name:
        out.append(f"NAME {instance.name}")
    out.append("CONES")
    out.append(" ".join(str(d) for d in instance.structure.dims))
    out.append("A")
    out.extend(" ".join(_fmt(v) for v in row) for row in instance.A)
    for key, vec in (("B", instance.b), ("C", instance.c),
                     ("CBAR", instance.cbar)):
        out.append(key)
        out.append(" ".join(_fmt(v) for v in vec))
    if instance.domain is not None:
        out.append("DOMAIN " + " ".join(_fmt(v) for v in instance.domain))
    return "\n".join(out) + "\n"


def read_instance(path) -> ParametricInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled instance {name!r}; have {BUNDLED}")
    return (resources.files("socopart") / "data" / f"{name}.soco").read_text(
        encoding="utf-8")


def load_bundled(name: str) -> ParametricInstance:
    return parse_instance(bundled_text(name))


def instance_digest(instance: ParametricInstance) -> str:
    return hashlib.sha256(write_instance(instance).encode()).hexdigest()[:16]
