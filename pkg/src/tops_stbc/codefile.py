"""Text format for weight-matrix lists.

::

    stbc <name> <Nt> <T> <K>
    # energy_scale 1.0
    # labels a_I a_Q ...
    <K blocks of Nt lines, each with T tokens "re+imi">

Floats are written with ``repr`` so parsing restores them bit-exactly.
Lines starting with ``#`` are comments; the recognised directives are
``energy_scale``, ``labels``, ``rectangular`` and ``n_rx``. Blank lines
are ignored.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .core import LinearSTBC
from .errors import CodeFileParseError, TopsError

__all__ = ["format_complex", "parse_complex", "dumps", "loads", "dump", "load"]

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?|inf|nan"
_TOKEN = re.compile(rf"^(?P<re>[+-]?(?:{_NUM}))(?P<sign>[+-])(?P<im>{_NUM})i$")


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def parse_complex(token: str) -> complex:
    m = _TOKEN.match(token)
    if not m:
        raise ValueError(f"bad complex token '{token}'")
    im = float(m["im"])
    if m["sign"] == "-":
        im = -im
    return complex(float(m["re"]), im)


def dumps(code: LinearSTBC) -> str:
    lines = [f"stbc {code.name} {code.n_tx} {code.n_slots} {code.n_symbols}",
             f"# energy_scale {code.energy_scale!r}",
             "# labels " + " ".join(code.symbol_labels),
             f"# n_rx {code.n_rx}"]
    if code.rectangular:
        lines.append("# rectangular")
    for k, a in enumerate(code.weights):
        lines.append(f"# symbol {k + 1}")
        for row in a:
            lines.append(" ".join(format_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def loads(text: str) -> LinearSTBC:
    header = None
    meta = {}
    rows = []  # (line number, tokens)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] in ("energy_scale", "labels", "rectangular", "n_rx"):
                meta[parts[0]] = (lineno, parts[1:])
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 5 or parts[0] != "stbc":
                raise CodeFileParseError("expected header 'stbc <name> <Nt> <T> <K>'", lineno)
            try:
                header = (parts[1], int(parts[2]), int(parts[3]), int(parts[4]))
            except ValueError as exc:
                raise CodeFileParseError(f"non-integer dimension in header ({exc})", lineno)
            if min(header[1:]) < 1:
                raise CodeFileParseError("dimensions must be positive", lineno)
            continue
        rows.append((lineno, line.split()))
    if header is None:
        raise CodeFileParseError("missing header line")
    name, n_tx, n_slots, k_count = header
    if len(rows) != n_tx * k_count:
        block = len(rows) // n_tx + 1 if len(rows) < n_tx * k_count else k_count + 1
        raise CodeFileParseError(
            f"expected {k_count} blocks of {n_tx} rows ({n_tx * k_count} rows), "
            f"found {len(rows)}", rows[-1][0] if rows else None, block)
    weights = np.zeros((k_count, n_tx, n_slots), dtype=complex)
    for r, (lineno, tokens) in enumerate(rows):
        k, i = divmod(r, n_tx)
        if len(tokens) != n_slots:
            raise CodeFileParseError(f"expected {n_slots} entries, got {len(tokens)}",
                                     lineno, k + 1)
        for j, tok in enumerate(tokens):
            try:
                weights[k, i, j] = parse_complex(tok)
            except ValueError as exc:
                raise CodeFileParseError(str(exc), lineno, k + 1)
    kwargs = {}
    try:
        if "energy_scale" in meta:
            kwargs["energy_scale"] = float(meta["energy_scale"][1][0])
        if "labels" in meta:
            kwargs["symbol_labels"] = tuple(meta["labels"][1])
        if "n_rx" in meta:
            kwargs["n_rx"] = int(meta["n_rx"][1][0])
    except (ValueError, IndexError) as exc:
        raise CodeFileParseError(f"bad directive ({exc})")
    kwargs["rectangular"] = "rectangular" in meta
    try:
        return LinearSTBC(name, n_tx, n_slots, weights, **kwargs)
    except TopsError as exc:
        raise CodeFileParseError(str(exc))


def dump(code: LinearSTBC, path) -> None:
    Path(path).write_text(dumps(code))


def load(path) -> LinearSTBC:
    return loads(Path(path).read_text())
