"""Snapshot, diagnostics, and manifest serialization.

All numeric text output is written with 17 significant digits via the
locale-independent ``%.17g`` format, which round-trips IEEE doubles
exactly.  Identical runs therefore produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .model_continuum import FieldState
from .params import PERIODIC

__all__ = [
    "FLOAT_FORMAT",
    "format_float",
    "write_field_csv",
    "read_field_csv",
    "write_field_json",
    "read_field_json",
    "write_table_csv",
    "write_json",
    "sha256_file",
    "write_manifest",
]

FLOAT_FORMAT = "%.17g"


def format_float(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def write_field_csv(path: str | Path, field: FieldState,
                    meta: Mapping[str, str] | None = None) -> Path:
    """Write a field snapshot as CSV with grid metadata in header comments."""
    path = Path(path)
    x = field.x
    with path.open("w", newline="\n") as fh:
        fh.write(f"# domain_length={format_float(field.domain_length)}\n")
        fh.write(f"# boundary={field.boundary}\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("x,re_psi,im_psi\n")
        for xi, pi in zip(x, field.psi):
            fh.write(f"{format_float(xi)},{format_float(pi.real)},"
                     f"{format_float(pi.imag)}\n")
    return path


def read_field_csv(path: str | Path) -> FieldState:
    path = Path(path)
    meta: dict[str, str] = {}
    rows: list[tuple[float, float, float]] = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                meta[key.strip()] = value.strip()
            elif line[0].isalpha() or line.startswith('"'):
                continue  # header row
            else:
                a, b, c = line.split(",")
                rows.append((float(a), float(b), float(c)))
    if "domain_length" not in meta:
        raise ValueError(f"{path}: missing '# domain_length=...' metadata")
    psi = np.array([r[1] + 1j * r[2] for r in rows])
    return FieldState(psi, float(meta["domain_length"]),
                      meta.get("boundary", PERIODIC))


def write_field_json(path: str | Path, field: FieldState,
                     meta: Mapping[str, str] | None = None) -> Path:
    path = Path(path)
    payload = {
        "domain_length": field.domain_length,
        "boundary": field.boundary,
        "x": field.x.tolist(),
        "re_psi": field.psi.real.tolist(),
        "im_psi": field.psi.imag.tolist(),
    }
    if meta:
        payload["meta"] = dict(meta)
    write_json(path, payload)
    return path


def read_field_json(path: str | Path) -> FieldState:
    with Path(path).open() as fh:
        payload = json.load(fh)
    psi = np.asarray(payload["re_psi"]) + 1j * np.asarray(payload["im_psi"])
    return FieldState(psi, payload["domain_length"],
                      payload.get("boundary", PERIODIC))


def write_table_csv(path: str | Path, columns: Mapping[str, np.ndarray]) -> Path:
    """Write named columns of equal length as CSV."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("all columns must have equal length")
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(length):
            fh.write(",".join(format_float(a[i]) for a in arrays) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)!r}")


def write_json(path: str | Path, payload) -> Path:
    """Write JSON deterministically (sorted keys, fixed separators)."""
    path = Path(path)
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    path.write_text(text + "\n")
    return path


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(directory: str | Path, files: Iterable[Path],
                   extra: Mapping | None = None) -> Path:
    """Write manifest.json listing every output file with its checksum."""
    directory = Path(directory)
    entries = []
    for f in sorted(Path(f) for f in files):
        entries.append({
            "path": str(f.relative_to(directory)),
            "sha256": sha256_file(f),
            "bytes": f.stat().st_size,
        })
    payload = {"files": entries}
    if extra:
        payload.update(extra)
    return write_json(directory / "manifest.json", payload)
