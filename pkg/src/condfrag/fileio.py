"""Text formats for wavefunctions, records and tables.

Every file starts with a provenance comment ``# condfrag <version> config=<sha256>``
(wavefunction files put their own format header first). Floats are written
with ``repr`` so a write/read cycle is exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import ComplexWavefunction, Grid, RealWavefunction

__all__ = [
    "WavefileError",
    "provenance_line",
    "format_wavefunction",
    "write_wavefunction",
    "read_wavefunction",
    "write_text",
    "read_record",
]

WF_MAGIC = "# condfrag-wf v1"


class WavefileError(ValueError):
    pass


def provenance_line(config_hash: str | None) -> str:
    from . import __version__

    return f"# condfrag {__version__} config={config_hash or 'none'}\n"


def format_wavefunction(psi, config_hash: str | None = None) -> str:
    """Two columns ``x value`` (three with the imaginary part for complex)."""
    g = psi.grid
    lines = [f"{WF_MAGIC} n={g.n_points} xmin={g.x_min!r} xmax={g.x_max!r}\n", provenance_line(config_hash)]
    x = g.x
    if isinstance(psi, ComplexWavefunction):
        for xi, v in zip(x.tolist(), psi.values.tolist()):
            lines.append(f"{xi!r} {v.real!r} {v.imag!r}\n")
    else:
        for xi, v in zip(x.tolist(), psi.values.tolist()):
            lines.append(f"{xi!r} {v!r}\n")
    return "".join(lines)


def write_text(path, text: str):
    """Write ``text`` with ``\\n`` line endings regardless of platform."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_wavefunction(path, psi, config_hash: str | None = None):
    return write_text(path, format_wavefunction(psi, config_hash))


def _parse_header(line: str, path) -> dict:
    if not line.startswith(WF_MAGIC):
        raise WavefileError(f"{path}: line 1: not a condfrag wavefunction file")
    fields = {}
    for tok in line[len(WF_MAGIC):].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise WavefileError(f"{path}: line 1: malformed header field {tok!r}")
        fields[key] = val
    try:
        return {"n": int(fields["n"]), "xmin": float(fields["xmin"]), "xmax": float(fields["xmax"])}
    except (KeyError, ValueError) as exc:
        raise WavefileError(f"{path}: line 1: bad header ({exc})") from None


def read_wavefunction(path, fd_order: int = 4):
    """Read a file written by :func:`write_wavefunction`.

    Returns a ``RealWavefunction`` for two columns and a
    ``ComplexWavefunction`` for three. ``fd_order`` is not stored in the file
    and is attached to the reconstructed grid.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise WavefileError(f"{path}: empty file")
    hdr = _parse_header(lines[0], path)
    rows, ncol = [], None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if ncol is None:
            ncol = len(parts)
            if ncol not in (2, 3):
                raise WavefileError(f"{path}: line {lineno}: expected 2 or 3 columns, got {ncol}")
        elif len(parts) != ncol:
            raise WavefileError(f"{path}: line {lineno}: expected {ncol} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise WavefileError(f"{path}: line {lineno}: non-numeric value") from None
    if len(rows) != hdr["n"]:
        raise WavefileError(f"{path}: header says n={hdr['n']} but found {len(rows)} rows")
    try:
        grid = Grid(hdr["n"], hdr["xmin"], hdr["xmax"], fd_order)
    except ValueError as exc:
        raise WavefileError(f"{path}: line 1: bad grid ({exc})") from None
    data = np.array(rows)
    if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-12 * max(1.0, abs(grid.x_max))):
        raise WavefileError(f"{path}: x column does not match the header grid")
    if ncol == 2:
        return RealWavefunction(grid, data[:, 1])
    return ComplexWavefunction(grid, data[:, 1] + 1j * data[:, 2])


def read_record(path) -> dict:
    """Parse a ``key=value`` record, skipping ``#`` comments. Values stay strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            out[key] = val
    return out

