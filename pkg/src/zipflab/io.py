"""Bit-exact file formats shared by the CLI.

CSV tables: header ``rank,count,frequency``, ranks ascending, LF line
endings, RFC-style quoting (never needed for numeric fields), count left
empty for analytic tables. Block tables get their own schema:
``length,width,width_real,start_rank,frequency``.

JSON: floats rendered with 17 significant digits (%.17g, lossless
round-trip), keys in insertion order, two-space indent, LF endings, no
wall-clock anywhere, so identical runs are byte-identical.

Token files: the text form is newline-delimited spellings. The compact
form is a 16-byte header (magic ``zipflab-tokens\\x00``, one version byte)
followed by one (length, index) pair per token, each value an unsigned
LEB128 varint, index 1-based, little-endian base-128 as usual.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from collections import Counter
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .analytic import BlockCurve, RankFrequencyTable
from .errors import DataError, IoFailure, ParameterError
from .generate import TypeId

TOKEN_MAGIC = b"zipflab-tokens\x00"
TOKEN_VERSION = 1

TABLE_HEADER = ["rank", "count", "frequency"]
BLOCK_HEADER = ["length", "width", "width_real", "start_rank", "frequency"]


# ---------------------------------------------------------------------------
# JSON with fixed float formatting
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _render_json(obj, out: list, indent: int) -> None:
    pad = "  " * indent
    if obj is None or obj is True or obj is False:
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            out.append("  " * (indent + 1) + json.dumps(str(key), ensure_ascii=False) + ": ")
            _render_json(val, out, indent + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, val in enumerate(obj):
            out.append("  " * (indent + 1))
            _render_json(val, out, indent + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise ParameterError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps_json(obj) -> str:
    out: list = []
    _render_json(obj, out, 0)
    out.append("\n")
    return "".join(out)


def write_json(path: Union[str, Path], obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8", newline="\n")


def read_json(path: Union[str, Path]) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Rank-frequency CSV
# ---------------------------------------------------------------------------


def write_table_csv(path: Union[str, Path], table: RankFrequencyTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        counts = table.counts
        for i, freq in enumerate(table.frequencies):
            count = "" if counts is None else int(counts[i])
            w.writerow([i + 1, count, format(float(freq), ".17g")])


def read_table_csv(
    path: Union[str, Path], provenance: str = "empirical"
) -> RankFrequencyTable:
    freqs: list[float] = []
    counts: list[int] = []
    have_counts = True
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != TABLE_HEADER:
                raise DataError(
                    f"{path}: expected header {','.join(TABLE_HEADER)!r}, got {header!r}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
                rank, count, freq = row
                if int(rank) != len(freqs) + 1:
                    raise DataError(f"{path}:{lineno}: ranks must ascend from 1")
                freqs.append(float(freq))
                if count == "":
                    have_counts = False
                else:
                    counts.append(int(count))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not freqs:
        raise DataError(f"{path}: table has no rows")
    arr = np.array(freqs, dtype=np.float64)
    return RankFrequencyTable(
        frequencies=arr,
        total_mass=float(math.fsum(freqs)),
        provenance=provenance,  # type: ignore[arg-type]
        counts=np.array(counts, dtype=np.int64) if have_counts else None,
    )


def write_blocks_csv(path: Union[str, Path], curve: BlockCurve) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(BLOCK_HEADER)
        for b in curve.blocks:
            w.writerow(
                [
                    b.length,
                    b.width,
                    format(b.width_real, ".17g"),
                    b.start_rank,
                    format(b.frequency, ".17g"),
                ]
            )


def write_points_csv(
    path: Union[str, Path],
    named_curves: Iterable[tuple[str, Iterable[tuple[float, float]]]],
) -> None:
    """Overlay plot data: one row per (curve, rank_midpoint, frequency)."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["curve", "rank_midpoint", "mean_frequency"])
        for name, points in named_curves:
            for mid, freq in points:
                w.writerow([name, format(mid, ".17g"), format(freq, ".17g")])


# ---------------------------------------------------------------------------
# Token files
# ---------------------------------------------------------------------------


def _uleb(value: int) -> bytes:
    if value < 0:
        raise ParameterError("varints are unsigned")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _read_uleb(buf: memoryview, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise DataError("truncated varint in token file")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


def token_header() -> bytes:
    return TOKEN_MAGIC + bytes([TOKEN_VERSION])


def write_tokens_compact(path: Union[str, Path], tokens: Iterable[TypeId]) -> int:
    n = 0
    with open(path, "wb") as f:
        f.write(token_header())
        buf = bytearray()
        for k, index in tokens:
            buf += _uleb(k)
            buf += _uleb(index)
            n += 1
            if len(buf) >= 1 << 20:
                f.write(buf)
                buf.clear()
        f.write(buf)
    return n


def read_tokens_compact(path: Union[str, Path]) -> Counter:
    """Counter keyed by TypeId."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    header = token_header()
    if data[: len(header)] != header:
        raise DataError(f"{path}: bad magic; not a compact token file")
    buf = memoryview(data)
    pos = len(header)
    counts: Counter = Counter()
    while pos < len(buf):
        k, pos = _read_uleb(buf, pos)
        index, pos = _read_uleb(buf, pos)
        counts[TypeId(k, index)] += 1
    return counts


def write_tokens_text(path: Union[str, Path], spellings: Iterable[str]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in spellings:
            f.write(s)
            f.write("\n")
            n += 1
    return n


def read_tokens_text(path: Union[str, Path]) -> Counter:
    """Counter keyed by spelling; one token per line."""
    counts: Counter = Counter()
    try:
        with open(path, "r", encoding="utf-8", newline="\n") as f:
            for line in f:
                tok = line.rstrip("\n")
                if tok:
                    counts[tok] += 1
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return counts


def sniff_token_file(path: Union[str, Path]) -> str:
    """'compact' or 'text', by magic."""
    try:
        with open(path, "rb") as f:
            head = f.read(len(TOKEN_MAGIC))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return "compact" if head == TOKEN_MAGIC else "text"


# ---------------------------------------------------------------------------
# Run manifests
# ---------------------------------------------------------------------------


def sha256_file(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            while True:
                block = f.read(1 << 20)
                if not block:
                    break
                h.update(block)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return h.hexdigest()


def write_manifest(
    out_dir: Union[str, Path],
    command: str,
    args: dict,
    version: str,
    inputs: Optional[list[str]] = None,
    output_names: Optional[list[str]] = None,
) -> Path:
    """Write manifest.json capturing everything needed to re-run.

    The output directory itself is deliberately not recorded, so re-runs
    into a fresh directory produce byte-identical files, manifest included.
    """
    out_dir = Path(out_dir)
    outputs = {}
    for name in output_names or []:
        outputs[name] = sha256_file(out_dir / name)
    manifest = {
        "tool": "zipflab",
        "version": version,
        "command": command,
        "args": args,
        "inputs": {p: sha256_file(p) for p in inputs or []},
        "outputs": outputs,
    }
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path
