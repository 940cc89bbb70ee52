"""Feature CSV, ARFF export and query-list codecs.

Real-valued features are written with four decimals; integer and binary
features as plain integers. Readers reject out-of-domain values instead of
coercing them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from serpscope.classifier import NON_SCHOLAR, SCHOLAR
from serpscope.errors import HeaderMismatch, RangeViolation, UnlabeledInstance
from serpscope.features import FEATURE_NAMES, REAL_FEATURES, FeatureVector
from serpscope.trainer import LabeledDataset, LabeledInstance

UNLABELED = "unlabeled"
LABELS = (SCHOLAR, NON_SCHOLAR, UNLABELED)
HEADER = ("query_id", *FEATURE_NAMES, "label")


@dataclass(frozen=True)
class FeatureCsvRow:
    query_id: str
    features: FeatureVector
    label: str = UNLABELED

    def __post_init__(self):
        if self.label not in LABELS:
            raise RangeViolation(f"label {self.label!r} not one of {LABELS}", column="label")


def format_value(name: str, value: float) -> str:
    return f"{value:.4f}" if name in REAL_FEATURES else str(int(value))


def _feature_cells(fv: FeatureVector) -> list[str]:
    return [format_value(n, v) for n, v in zip(FEATURE_NAMES, fv.as_tuple())]


def write_csv(rows: Iterable[FeatureCsvRow], header: bool = True) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(HEADER)
    for r in rows:
        w.writerow([r.query_id, *_feature_cells(r.features), r.label])
    return buf.getvalue().encode("utf-8")


def _parse_cell(name: str, text: str, row: int) -> float | int:
    text = text.strip()
    try:
        if name in REAL_FEATURES:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        return int(text)
    except ValueError:
        raise RangeViolation(f"row {row}, column {name}: cannot parse {text!r}", row=row, column=name) from None


def read_csv(data: bytes | str) -> list[FeatureCsvRow]:
    """Parse a feature CSV. Row numbers in errors count data rows from 1."""
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    elif data.startswith("\ufeff"):
        data = data[1:]
    reader = csv.reader(io.StringIO(data))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch("empty feature CSV") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise HeaderMismatch(f"expected header {','.join(HEADER)!r}, got {','.join(header)!r}")

    rows = []
    for i, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(HEADER):
            raise RangeViolation(f"row {i}: expected {len(HEADER)} columns, got {len(cells)}", row=i)
        values = [_parse_cell(n, c, i) for n, c in zip(FEATURE_NAMES, cells[1:11])]
        try:
            fv = FeatureVector(*values)
        except RangeViolation as exc:
            raise RangeViolation(f"row {i}: {exc}", row=i, column=exc.column) from None
        label = cells[11].strip()
        if label not in LABELS:
            raise RangeViolation(f"row {i}, column label: {label!r} not one of {LABELS}", row=i, column="label")
        rows.append(FeatureCsvRow(cells[0], fv, label))
    return rows


def rows_to_dataset(rows: Iterable[FeatureCsvRow]) -> LabeledDataset:
    instances = []
    for r in rows:
        if r.label == UNLABELED:
            raise UnlabeledInstance(f"instance {r.query_id!r} has no label")
        instances.append(LabeledInstance(r.features, 1 if r.label == SCHOLAR else 0, r.query_id))
    return LabeledDataset(instances)


def dataset_to_rows(data: LabeledDataset) -> list[FeatureCsvRow]:
    return [
        FeatureCsvRow(inst.source_query or f"q{i + 1}", inst.features, SCHOLAR if inst.label else NON_SCHOLAR)
        for i, inst in enumerate(data)
    ]


def load_dataset(path: str | Path) -> LabeledDataset:
    return rows_to_dataset(read_csv(Path(path).read_bytes()))


def export_arff(rows: Iterable[FeatureCsvRow] | LabeledDataset, relation: str = "serp") -> bytes:
    if isinstance(rows, LabeledDataset):
        rows = dataset_to_rows(rows)
    rows = list(rows)
    for r in rows:
        if r.label == UNLABELED:
            raise UnlabeledInstance(f"instance {r.query_id!r} has no label; ARFF export needs a class")
    lines = [f"@relation {relation}", ""]
    lines += [f"@attribute {n} numeric" for n in FEATURE_NAMES]
    lines += [f"@attribute class {{{SCHOLAR},{NON_SCHOLAR}}}", "", "@data"]
    lines += [",".join([*_feature_cells(r.features), r.label]) for r in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_query_list(data: bytes | str) -> list[tuple[str, str]]:
    """One query per line, optionally ``id<TAB>query``; missing ids become the line number."""
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    out = []
    lines = data.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if "\t" in line:
            qid, text = line.split("\t", 1)
            out.append((qid.strip(), text.strip()))
        else:
            out.append((str(lineno), line.strip()))
    return out
