"""FCIDUMP electron-integral files.

Layout: a namelist-style header `&FCI NORB=...,NELEC=...,MS2=...` terminated
by `&END` (or a bare `/`), then one record per line: `value i j k l` with
1-based orbital indices. Four nonzero indices carry a two-electron integral
in chemists' notation (ij|kl), two nonzero indices carry a core-Hamiltonian
element h_ij, and the all-zero record carries the scalar core energy. Only
one representative of each permutation-symmetric class is stored; parsing
expands the full 8-fold symmetry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInput, ParseError


@dataclass(frozen=True)
class FcidumpData:
    """Integrals in an orthonormal orbital basis."""

    norb: int
    nelec: int
    ms2: int
    e_core: float
    h1e: np.ndarray
    eri: np.ndarray

    def __post_init__(self):
        if self.norb < 1:
            raise InvalidInput("norb must be positive")
        if self.nelec < 0:
            raise InvalidInput("nelec must be nonnegative")
        if self.h1e.shape != (self.norb, self.norb):
            raise InvalidInput(f"h1e shape {self.h1e.shape} != ({self.norb},)*2")
        if self.eri.shape != (self.norb,) * 4:
            raise InvalidInput(f"eri shape {self.eri.shape} != ({self.norb},)*4")

    def symmetry_residual(self) -> float:
        """Max deviation from Hermitian h and 8-fold symmetric integrals."""
        g = self.eri
        r = np.abs(self.h1e - self.h1e.T).max(initial=0.0)
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            r = max(r, np.abs(g - g.transpose(perm)).max(initial=0.0))
        return float(r)


_HEADER_INT = {
    "NORB": re.compile(r"NORB\s*=\s*(\d+)", re.IGNORECASE),
    "NELEC": re.compile(r"NELEC\s*=\s*(\d+)", re.IGNORECASE),
    "MS2": re.compile(r"MS2\s*=\s*(-?\d+)", re.IGNORECASE),
}


def parse_fcidump(path: str | Path) -> FcidumpData:
    """Read an FCIDUMP file; raises ParseError with the offending line number."""
    lines = Path(path).read_text().splitlines()
    header_lines: list[str] = []
    body_start = None
    for ln, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not header_lines:
            if not stripped:
                continue
            if not stripped.upper().startswith("&FCI"):
                raise ParseError(f"line {ln}: expected &FCI header, got {stripped[:30]!r}")
            header_lines.append(stripped)
        else:
            header_lines.append(stripped)
        if "&END" in stripped.upper() or stripped.endswith("/"):
            body_start = ln
            break
    if body_start is None:
        raise ParseError("header never terminated with &END or /")

    header = " ".join(header_lines)
    fields = {}
    for key, rx in _HEADER_INT.items():
        m = rx.search(header)
        if m:
            fields[key] = int(m.group(1))
    if "NORB" not in fields or "NELEC" not in fields:
        raise ParseError("header is missing NORB or NELEC")
    norb, nelec = fields["NORB"], fields["NELEC"]
    ms2 = fields.get("MS2", 0)

    h1e = np.zeros((norb, norb))
    eri = np.zeros((norb,) * 4)
    e_core = 0.0
    for ln, raw in enumerate(lines[body_start:], start=body_start + 1):
        stripped = raw.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 5:
            raise ParseError(f"line {ln}: expected 'value i j k l', got {len(parts)} fields")
        try:
            val = float(parts[0])
            i, j, k, l = (int(t) for t in parts[1:])
        except ValueError as exc:
            raise ParseError(f"line {ln}: {exc}") from exc
        idx = (i, j, k, l)
        if any(t < 0 or t > norb for t in idx):
            raise ParseError(f"line {ln}: orbital index outside 0..{norb}")
        nz = sum(t > 0 for t in idx)
        if nz == 0:
            e_core = val
        elif nz == 2 and k == 0 and l == 0:
            h1e[i - 1, j - 1] = val
            h1e[j - 1, i - 1] = val
        elif nz == 4:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b in ((p, q), (q, p)):
                for c, d in ((r, s), (s, r)):
                    eri[a, b, c, d] = val
                    eri[c, d, a, b] = val
        else:
            raise ParseError(f"line {ln}: unsupported index pattern {idx}")
    return FcidumpData(norb=norb, nelec=nelec, ms2=ms2, e_core=e_core, h1e=h1e, eri=eri)


def write_fcidump(data: FcidumpData, path: str | Path) -> None:
    """Write one representative per symmetry class; round-trips exactly."""
    out = [f" &FCI NORB={data.norb:4d},NELEC={data.nelec:3d},MS2={data.ms2:d},"]
    out.append("  ORBSYM=" + "1," * data.norb)
    out.append("  ISYM=1,")
    out.append(" &END")
    fmt = " {:>23.16e} {:4d} {:4d} {:4d} {:4d}"
    n = data.norb
    for p in range(n):
        for q in range(p + 1):
            for r in range(p + 1):
                smax = q if r == p else r
                for s in range(smax + 1):
                    val = data.eri[p, q, r, s]
                    if val != 0.0:
                        out.append(fmt.format(val, p + 1, q + 1, r + 1, s + 1))
    for p in range(n):
        for q in range(p + 1):
            if data.h1e[p, q] != 0.0:
                out.append(fmt.format(data.h1e[p, q], p + 1, q + 1, 0, 0))
    out.append(fmt.format(data.e_core, 0, 0, 0, 0))
    Path(path).write_text("\n".join(out) + "\n")
