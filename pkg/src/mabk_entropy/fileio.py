"""Plain-text state files and the curve CSV."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .linalg import PSD_TOL, check_density_matrix

STATE_MAGIC = "QSTATE"
STATE_VERSION = "1"
CSV_HEADER = ("m", "F", "G", "numeric_HXE", "numeric_HXY", "thm2_note")
FIXTURES = ("ghz3", "tau_half", "id8", "remark1_state")


class StateFileError(ValueError):
    """Malformed state file."""


def format_number(x: float) -> str:
    """Shortest round-trip decimal, capped at 12 significant digits."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot format {x!r}")
    return repr(float(f"{x:.12g}"))


def quantize(x: float) -> float:
    """The value a CSV cell holds after formatting."""
    return float(format_number(x))


# --- state files ---------------------------------------------------------------


def parse_state(text: str, tol: float = PSD_TOL, check: bool = True) -> np.ndarray:
    """Parse ``QSTATE 1 <dim>`` followed by dim rows of ``re,im`` tokens.

    Lines after the matrix must be comments (``#``) or blank. With ``check``
    the matrix must be a density matrix to ``tol``; otherwise only the
    layout is validated.
    """
    lines = text.splitlines()
    if not lines:
        raise StateFileError("empty state file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != STATE_MAGIC or header[1] != STATE_VERSION:
        raise StateFileError(f"bad header {lines[0]!r}, expected 'QSTATE 1 <dim>'")
    try:
        dim = int(header[2])
    except ValueError:
        raise StateFileError(f"bad dimension {header[2]!r}") from None
    if dim <= 0:
        raise StateFileError("dimension must be positive")
    if len(lines) < 1 + dim:
        raise StateFileError(f"expected {dim} matrix rows, found {len(lines) - 1}")
    rho = np.empty((dim, dim), dtype=complex)
    for i, line in enumerate(lines[1 : 1 + dim]):
        tokens = line.split()
        if len(tokens) != dim:
            raise StateFileError(f"row {i + 1} has {len(tokens)} entries, expected {dim}")
        for j, tok in enumerate(tokens):
            parts = tok.split(",")
            if len(parts) != 2:
                raise StateFileError(f"entry ({i + 1},{j + 1}) {tok!r} is not 're,im'")
            try:
                rho[i, j] = complex(float(parts[0]), float(parts[1]))
            except ValueError:
                raise StateFileError(f"entry ({i + 1},{j + 1}) {tok!r} is not numeric") from None
    for line in lines[1 + dim :]:
        if line.strip() and not line.lstrip().startswith("#"):
            raise StateFileError(f"unexpected trailing line {line!r}")
    return check_density_matrix(rho, tol) if check else rho


def format_state(rho, comments=()) -> str:
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    out = [f"{STATE_MAGIC} {STATE_VERSION} {dim}"]
    for row in rho:
        out.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    out.extend(f"# {c}" for c in comments)
    return "\n".join(out) + "\n"


def read_state(path_or_name, tol: float = PSD_TOL) -> np.ndarray:
    """Load a state file, or a bundled fixture by name."""
    name = str(path_or_name)
    if name in FIXTURES and not Path(name).exists():
        text = resources.files("mabk_entropy").joinpath("fixtures", f"{name}.qstate").read_text()
    else:
        text = Path(name).read_text()
    return parse_state(text, tol)


def write_state(path, rho, comments=()) -> None:
    Path(path).write_text(format_state(rho, comments))


# --- curve CSV -----------------------------------------------------------------


@dataclass(frozen=True)
class CurveRow:
    m: float
    F: float | None = None
    G: float | None = None
    numeric_hxe: float | None = None
    numeric_hxy: float | None = None
    thm2_note: float | None = None

    def cells(self) -> list[str]:
        values = (self.m, self.F, self.G, self.numeric_hxe, self.numeric_hxy, self.thm2_note)
        return ["" if v is None else format_number(v) for v in values]


def emit_csv(rows) -> str:
    rows = list(rows)
    for prev, cur in zip(rows, rows[1:]):
        if not quantize(cur.m) > quantize(prev.m):
            raise ValueError("m must be strictly increasing")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def parse_csv(text: str) -> list[CurveRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    rows = []
    for record in reader:
        if len(record) != len(CSV_HEADER):
            raise ValueError(f"row has {len(record)} cells, expected {len(CSV_HEADER)}")
        vals = [None if cell == "" else float(cell) for cell in record]
        if vals[0] is None:
            raise ValueError("every row needs an m value")
        rows.append(CurveRow(*vals))
    return rows
