"""
Text formats for configurations, packings, plans and reports.

Every file starts with KEY=VALUE header lines, the first of which is
format=proxlab/1. Site data follows as "element<TAB>value" lines in canonical
order. Element lists in headers are space separated, also in canonical
order, so equal values always encode to identical bytes.
"""

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from configuration import WindowConfiguration
from groups import (
    ElementEncodingError,
    GroupBackend,
    GroupElement,
    SymmetricSet,
    UnknownBackendError,
    decode_element,
    parse_group,
    sort_canonical,
)
from packing import PackingWindow, Shape
from proximal_lab import ProximalPlan
from witness_construct import WitnessParams, WitnessPlan

FORMAT_VERSION = "proxlab/1"
EMPTY_CELL = "."


class FileFormatError(ValueError):
    """Raised for malformed files; the message names the offending line."""


class FormatVersionError(FileFormatError):
    pass


@dataclass
class Report:
    op: str
    status: str
    fields: Dict[str, str] = field(default_factory=dict)


def encode_elements(elements: Iterable[GroupElement]) -> str:
    return " ".join(g.encode() for g in sort_canonical(elements))


def _decode_elements(backend: GroupBackend, text: str, what: str) -> List[GroupElement]:
    try:
        return [decode_element(backend, token) for token in text.split()]
    except ElementEncodingError as e:
        raise FileFormatError(f"header {what}: {e}")


def _header(kind: str, entries: List[Tuple[str, object]]) -> List[str]:
    lines = [f"format={FORMAT_VERSION}", f"kind={kind}"]
    for key, value in entries:
        text = str(value)
        if "\n" in text:
            raise ValueError(f"Header value for {key!r} spans several lines")
        lines.append(f"{key}={text}")
    return lines


def _finish(lines: List[str]) -> str:
    return "\n".join(lines) + "\n"


class _Reader:
    """Splits a file into header values and numbered data lines."""

    def __init__(self, text: str, kind: str):
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise FormatVersionError("line 1: empty file")
        if lines[0] != f"format={FORMAT_VERSION}":
            raise FormatVersionError(f"line 1: expected format={FORMAT_VERSION}, got {lines[0]!r}")
        self.header: Dict[str, str] = {}
        self.data: List[Tuple[int, str]] = []
        for lineno, line in enumerate(lines[1:], start=2):
            if "\t" in line or self.data:
                self.data.append((lineno, line))
                continue
            if "=" not in line:
                raise FileFormatError(f"line {lineno}: expected KEY=VALUE header, got {line!r}")
            key, value = line.split("=", 1)
            if key in self.header:
                raise FileFormatError(f"line {lineno}: duplicate header key {key!r}")
            self.header[key] = value
        self.last_line = len(lines)
        if self.header.get("kind") != kind:
            raise FileFormatError(f"line 2: expected kind={kind}, got kind={self.header.get('kind')}")

    def require(self, key: str) -> str:
        if key not in self.header:
            raise FileFormatError(f"header is missing {key}=")
        return self.header[key]

    def integer(self, key: str) -> int:
        value = self.require(key)
        try:
            return int(value)
        except ValueError:
            raise FileFormatError(f"header {key}: expected an integer, got {value!r}")

    def backend(self) -> GroupBackend:
        try:
            return parse_group(self.require("group"))
        except UnknownBackendError as e:
            raise FileFormatError(f"header group: {e}")

    def alphabet(self) -> Tuple[int, ...]:
        text = self.require("alphabet")
        try:
            return tuple(int(a) for a in text.split(","))
        except ValueError:
            raise FileFormatError(f"header alphabet: expected comma separated integers, got {text!r}")

    def site_lines(self, backend: GroupBackend, count: int) -> List[Tuple[int, GroupElement, str]]:
        if len(self.data) < count:
            raise FileFormatError(
                f"line {self.last_line + 1}: truncated, expected {count} site lines, found {len(self.data)}"
            )
        if len(self.data) > count:
            lineno, _ = self.data[count]
            raise FileFormatError(f"line {lineno}: more site lines than sites={count}")
        seen = {}
        out = []
        for lineno, line in self.data:
            parts = line.split("\t")
            if len(parts) != 2:
                raise FileFormatError(f"line {lineno}: expected element<TAB>value, got {line!r}")
            try:
                g = decode_element(backend, parts[0])
            except ElementEncodingError as e:
                raise FileFormatError(f"line {lineno}: {e}")
            if g in seen:
                raise FileFormatError(f"line {lineno}: duplicate site {parts[0]} (first on line {seen[g]})")
            seen[g] = lineno
            out.append((lineno, g, parts[1]))
        return out


def encode_configuration(c: WindowConfiguration) -> str:
    entries = [
        ("group", c.backend.name),
        ("alphabet", ",".join(str(a) for a in c.alphabet)),
        ("sites", len(c.values)),
    ]
    if c.seed is not None:
        entries.append(("seed", c.seed))
    lines = _header("configuration", entries)
    lines.extend(f"{g.encode()}\t{c.values[g]}" for g in c.sorted_sites())
    return _finish(lines)


def decode_configuration(text: str) -> WindowConfiguration:
    reader = _Reader(text, "configuration")
    backend = reader.backend()
    alphabet = reader.alphabet()
    seed = reader.integer("seed") if "seed" in reader.header else None
    values = {}
    for lineno, g, raw in reader.site_lines(backend, reader.integer("sites")):
        try:
            symbol = int(raw)
        except ValueError:
            raise FileFormatError(f"line {lineno}: symbol {raw!r} is not an integer")
        if symbol not in alphabet:
            raise FileFormatError(f"line {lineno}: symbol {symbol} is outside alphabet {list(alphabet)}")
        values[g] = symbol
    return WindowConfiguration(backend, values, alphabet, seed=seed)


def encode_packing(p: PackingWindow) -> str:
    entries = [("group", p.backend.name), ("shapes", " ".join(s.id for s in p.shapes))]
    entries.extend((f"shape.{s.id}", encode_elements(s.cells)) for s in p.shapes)
    entries.append(("sites", len(p.window)))
    lines = _header("packing", entries)
    lines.extend(f"{g.encode()}\t{p.assignment.get(g, EMPTY_CELL)}" for g in sort_canonical(p.window))
    return _finish(lines)


def decode_packing(text: str) -> PackingWindow:
    reader = _Reader(text, "packing")
    backend = reader.backend()
    shapes = []
    for shape_id in reader.require("shapes").split():
        cells = _decode_elements(backend, reader.require(f"shape.{shape_id}"), f"shape.{shape_id}")
        shapes.append(Shape(shape_id, frozenset(cells)))
    ids = {s.id for s in shapes}
    window = []
    assignment = {}
    for lineno, g, raw in reader.site_lines(backend, reader.integer("sites")):
        window.append(g)
        if raw == EMPTY_CELL:
            continue
        if raw not in ids:
            raise FileFormatError(f"line {lineno}: unknown shape {raw!r}")
        assignment[g] = raw
    return PackingWindow(backend, frozenset(window), assignment, tuple(shapes))


def encode_witness_plan(plan: WitnessPlan) -> str:
    params = plan.params
    lines = _header(
        "witness-plan",
        [
            ("group", params.backend.name),
            ("k", params.k),
            ("c_exp", params.c_exp),
            ("c_den", params.c_den),
            ("frac", params.frac),
            ("g_s", plan.g_s.encode()),
            ("x", encode_elements(params.X)),
            ("y1", encode_elements(plan.Y1)),
            ("y", encode_elements(plan.Y)),
            ("bound_exact", repr(plan.bound.exact)),
            ("bound_coarse", repr(plan.bound.coarse)),
            ("y_pow_k_size", plan.y_pow_k_size),
            ("y_pow_k_exact", int(plan.y_pow_k_exact)),
        ],
    )
    return _finish(lines)


def decode_witness_plan(text: str) -> WitnessPlan:
    """Rebuilds the plan from its sets; the bound lines are informational and recomputed."""
    reader = _Reader(text, "witness-plan")
    if reader.data:
        raise FileFormatError(f"line {reader.data[0][0]}: a plan has no site lines")
    backend = reader.backend()
    X = SymmetricSet(frozenset(_decode_elements(backend, reader.require("x"), "x")))
    params = WitnessParams(
        X,
        k=reader.integer("k"),
        c_exp=reader.integer("c_exp"),
        c_den=reader.integer("c_den"),
        frac=reader.integer("frac"),
    )
    g_s = _decode_elements(backend, reader.require("g_s"), "g_s")
    if len(g_s) != 1:
        raise FileFormatError("header g_s: expected one element")
    Y = SymmetricSet(frozenset(_decode_elements(backend, reader.require("y"), "y")))
    Y1 = frozenset(_decode_elements(backend, reader.require("y1"), "y1"))
    return WitnessPlan.from_sets(params, Y, g_s[0], Y1)


def encode_proximal_plan(plan: ProximalPlan) -> str:
    u = plan.u_library
    lines = _header(
        "proximal-plan",
        [
            ("group", plan.backend.name),
            ("alphabet", ",".join(str(a) for a in u.alphabet)),
            ("epsilon_inv", plan.epsilon_inv),
            ("x", encode_elements(plan.X)),
            ("u", encode_elements(plan.U)),
            ("slots", " ".join(g.encode() for g in plan.slots)),
            ("sites", len(u.values)),
        ],
    )
    lines.extend(f"{g.encode()}\t{u.values[g]}" for g in u.sorted_sites())
    return _finish(lines)


def decode_proximal_plan(text: str) -> ProximalPlan:
    """V is the window of the library lines."""
    reader = _Reader(text, "proximal-plan")
    backend = reader.backend()
    alphabet = reader.alphabet()
    values = {}
    for lineno, g, raw in reader.site_lines(backend, reader.integer("sites")):
        try:
            values[g] = int(raw)
        except ValueError:
            raise FileFormatError(f"line {lineno}: symbol {raw!r} is not an integer")
    u = WindowConfiguration(backend, values, alphabet)
    X = SymmetricSet(frozenset(_decode_elements(backend, reader.require("x"), "x")))
    U = SymmetricSet(frozenset(_decode_elements(backend, reader.require("u"), "u")))
    slots = tuple(_decode_elements(backend, reader.require("slots"), "slots"))
    return ProximalPlan(X, U, SymmetricSet(u.window), u, reader.integer("epsilon_inv"), slots)


def encode_report(report: Report) -> str:
    lines = _header("report", [("op", report.op), ("status", report.status), *report.fields.items()])
    return _finish(lines)


def decode_report(text: str) -> Report:
    reader = _Reader(text, "report")
    if reader.data:
        raise FileFormatError(f"line {reader.data[0][0]}: a report has no site lines")
    fields_ = {k: v for k, v in reader.header.items() if k not in ("format", "kind", "op", "status")}
    return Report(reader.require("op"), reader.require("status"), fields_)


def write_text(path: str, text: str) -> None:
    """Write to a file, or to stdout for "-"."""
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).write_text(text)


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    file_path = Path(path)
    if not file_path.exists():
        raise FileFormatError(f"file not found: {path}")
    return file_path.read_text()


def sidecar_path(path: str, suffix: str) -> Optional[str]:
    """Provenance file next to an output file; none for stdout."""
    if path == "-":
        return None
    return f"{path}.{suffix}"
