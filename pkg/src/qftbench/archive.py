"""Shot archives: final z-basis readouts with multiplicities.

JSON layout::

    {"meta": {"L": 4, "J": 1.0, "tau_us": 20.0, "machine": "2X"},
     "samples": [{"spins": [1, 1, -1, -1], "count": 12}, ...]}

CSV layout: header ``s1,...,sL,count`` with metadata in the sidecar
``<name>.meta.json``. Archives drawn from a work distribution instead of a
final state carry ``{"delta_omega": k, "count": n}`` samples (JSON only).
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IngestError, ValidationError
from .model import ChainSpec


@dataclass(frozen=True, eq=False)
class ShotArchive:
    meta: dict
    counts: np.ndarray
    spins: np.ndarray | None = None
    delta_omega: np.ndarray | None = None
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if (self.spins is None) == (self.delta_omega is None):
            raise ValidationError("archive needs exactly one of spins or delta_omega")
        if counts.ndim != 1 or np.any(counts < 1):
            raise ValidationError("counts must be positive integers")
        object.__setattr__(self, "counts", counts)
        if self.spins is not None:
            spins = np.asarray(self.spins, dtype=np.int8)
            if spins.ndim != 2 or spins.shape[0] != counts.shape[0]:
                raise ValidationError("spins must be a (samples, L) array matching counts")
            if not np.all(np.abs(spins) == 1):
                raise ValidationError("spin values must be +1 or -1")
            if "L" in self.meta and spins.shape[1] != self.meta["L"]:
                raise ValidationError(f"spins have length {spins.shape[1]}, meta says L={self.meta['L']}")
            object.__setattr__(self, "spins", spins)
        else:
            dw = np.asarray(self.delta_omega, dtype=np.int64)
            if dw.shape != counts.shape:
                raise ValidationError("delta_omega must match counts")
            object.__setattr__(self, "delta_omega", dw)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def L(self) -> int:
        if "L" in self.meta:
            return int(self.meta["L"])
        return int(self.spins.shape[1])

    @property
    def tau(self):
        return self.meta.get("tau_us")

    def chain_spec(self) -> ChainSpec:
        J = self.meta.get("J", 1.0)
        if np.ndim(J) == 0:
            return ChainSpec.uniform(self.L, float(J))
        return ChainSpec(self.L, tuple(J))

    def __eq__(self, other):
        if not isinstance(other, ShotArchive):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        if self.spins is not None:
            samples = [{"spins": s.tolist(), "count": int(c)} for s, c in zip(self.spins, self.counts)]
        else:
            samples = [{"delta_omega": int(k), "count": int(c)} for k, c in zip(self.delta_omega, self.counts)]
        return {"meta": dict(self.meta), "samples": samples}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    def to_csv(self, path) -> None:
        if self.spins is None:
            raise ValidationError("CSV archives hold bitstrings only")
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"s{i + 1}" for i in range(self.L)] + ["count"])
            for s, c in zip(self.spins, self.counts):
                writer.writerow(s.tolist() + [int(c)])
        sidecar_path(path).write_text(json.dumps(self.meta, indent=1) + "\n")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def merge_counts(spins: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Combine repeated bitstrings, keeping first-appearance order."""
    uniq, first, inv = np.unique(spins, axis=0, return_index=True, return_inverse=True)
    totals = np.bincount(inv.ravel(), weights=counts).astype(np.int64)
    order = np.argsort(first)
    return uniq[order], totals[order]


def _check_meta(meta, source):
    if not isinstance(meta, dict):
        raise IngestError("meta must be an object", source)
    if "L" not in meta or not isinstance(meta["L"], int) or isinstance(meta["L"], bool) or meta["L"] < 2:
        raise IngestError("meta.L must be an integer >= 2", source)
    J = meta.get("J", 1.0)
    if isinstance(J, list):
        if len(J) != meta["L"] - 1 or not all(isinstance(j, (int, float)) for j in J):
            raise IngestError(f"meta.J must list {meta['L'] - 1} numbers", source)
    elif not isinstance(J, (int, float)):
        raise IngestError("meta.J must be a number or a list of numbers", source)
    if "tau_us" in meta and not isinstance(meta["tau_us"], (int, float)):
        raise IngestError("meta.tau_us must be a number", source)


def _sample_line_numbers(text: str) -> list[int]:
    # line of each sample object inside the "samples" array, for error messages
    start = text.find('"samples"')
    lines = []
    depth = 0
    line = text.count("\n", 0, max(start, 0)) + 1
    for ch in text[max(start, 0) :]:
        if ch == "\n":
            line += 1
        elif ch == "{":
            if depth == 0:
                lines.append(line)
            depth += 1
        elif ch == "}":
            depth -= 1
    return lines


def _parse_json(text: str, source) -> ShotArchive:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc.msg}", source, exc.lineno) from None
    if not isinstance(doc, dict) or "meta" not in doc or "samples" not in doc:
        raise IngestError('archive must have "meta" and "samples"', source)
    meta = doc["meta"]
    _check_meta(meta, source)
    L = meta["L"]
    samples = doc["samples"]
    if not isinstance(samples, list) or not samples:
        raise IngestError("samples must be a non-empty list", source)
    lines = _sample_line_numbers(text)
    spins, dws, counts = [], [], []
    for i, item in enumerate(samples):
        line = lines[i] if i < len(lines) else None
        where = f"sample {i}"
        if not isinstance(item, dict) or "count" not in item:
            raise IngestError(f"{where}: expected an object with a count", source, line)
        c = item["count"]
        if not isinstance(c, int) or isinstance(c, bool) or c < 1:
            raise IngestError(f"{where}: count must be a positive integer, got {c!r}", source, line)
        if "spins" in item:
            s = item["spins"]
            if not isinstance(s, list) or len(s) != L:
                raise IngestError(f"{where}: spins must be a list of length {L}", source, line)
            bad = [v for v in s if v not in (1, -1) or isinstance(v, bool)]
            if bad:
                raise IngestError(f"{where}: spin value {bad[0]!r} is not +1 or -1", source, line)
            spins.append(s)
        elif "delta_omega" in item:
            k = item["delta_omega"]
            if not isinstance(k, int) or isinstance(k, bool):
                raise IngestError(f"{where}: delta_omega must be an integer", source, line)
            dws.append(k)
        else:
            raise IngestError(f"{where}: needs spins or delta_omega", source, line)
        counts.append(c)
    if spins and dws:
        raise IngestError("archive mixes bitstring and delta_omega samples", source)
    if spins:
        return ShotArchive(meta, np.array(counts), spins=np.array(spins), source=source)
    return ShotArchive(meta, np.array(counts), delta_omega=np.array(dws), source=source)


def _parse_csv(text: str, meta, source) -> ShotArchive:
    if meta is None:
        raise IngestError("CSV archive needs metadata (sidecar .meta.json)", source)
    _check_meta(meta, source)
    L = meta["L"]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = [f"s{i + 1}" for i in range(L)] + ["count"]
    if header is None or [h.strip() for h in header] != expected:
        raise IngestError(f"header must be {','.join(expected)}", source, 1)
    spins, counts = [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != L + 1:
            raise IngestError(f"expected {L + 1} fields, got {len(row)}", source, line)
        try:
            values = [int(c) for c in row]
        except ValueError:
            raise IngestError(f"non-integer field in {row!r}", source, line) from None
        bad = [v for v in values[:-1] if v not in (1, -1)]
        if bad:
            raise IngestError(f"spin value {bad[0]} is not +1 or -1", source, line)
        if values[-1] < 1:
            raise IngestError(f"count must be positive, got {values[-1]}", source, line)
        spins.append(values[:-1])
        counts.append(values[-1])
    if not spins:
        raise IngestError("archive has no samples", source)
    return ShotArchive(meta, np.array(counts), spins=np.array(spins), source=source)


def ingest(source, meta: dict | None = None) -> ShotArchive:
    """Read and validate a JSON or CSV shot archive from a path or text stream.

    For CSV paths the metadata is read from the ``.meta.json`` sidecar unless
    given explicitly. Malformed content raises :class:`IngestError` naming the
    source and line.
    """
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        name = str(path)
        text = path.read_text()
        if path.suffix.lower() == ".csv":
            if meta is None:
                side = sidecar_path(path)
                if not side.exists():
                    raise IngestError(f"missing metadata sidecar {side.name}", name)
                try:
                    meta = json.loads(side.read_text())
                except json.JSONDecodeError as exc:
                    raise IngestError(f"invalid JSON: {exc.msg}", str(side), exc.lineno) from None
            return _parse_csv(text, meta, name)
        return _parse_json(text, name)
    name = getattr(source, "name", "<stream>")
    text = source.read()
    if text.lstrip().startswith("{"):
        return _parse_json(text, name)
    return _parse_csv(text, meta, name)
