"""Pipe record schema, material encoding, CSV ingestion, cleaning and splitting.

A pipe segment carries seven inventory attributes (age, diameter, length,
material, break count, installation year, wall thickness loss) plus an
optional remaining-useful-life target in years.  Materials are encoded as a
numeric deterioration-impact score (the EA value) so that every downstream
model sees a purely numeric table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateColumn,
    EmptyAfterCleaning,
    FileUnreadable,
    RatioSumInvalid,
    SchemaMismatch,
    UnknownColumn,
    UnknownMaterial,
)

# Canonical CSV schema.  rul_years is optional on ingest.
CSV_COLUMNS = (
    "age_years",
    "diameter_in",
    "length_ft",
    "material",
    "breaks",
    "install_year",
    "wall_thickness_loss_pct",
    "rul_years",
)
REQUIRED_COLUMNS = CSV_COLUMNS[:-1]

# Feature identifiers usable with build_features.
FEATURE_COLUMNS = (
    "age_years",
    "diameter_in",
    "length_ft",
    "material",
    "breaks",
    "install_year",
    "wall_thickness_loss_pct",
)
TARGET_COLUMN = "rul_years"

# decimals used when rounding a column for its mode; EA scores are the only
# non-integer-valued inventory column
COLUMN_MODE_PRECISION = {"material": 2}

DIAMETER_RANGE = (4.0, 24.0)
WTL_RANGE = (0.0, 100.0)
AGE_YEAR_TOLERANCE = 1  # fiscal vs calendar year slack


class Material(Enum):
    """Pipe material with its deterioration-impact (EA) score."""

    POLYETHYLENE = "Polyethylene"
    DUCTILE_IRON = "DuctileIron"
    PVC = "PVC"
    STEEL = "Steel"
    CONCRETE = "Concrete"
    ASBESTOS = "Asbestos"
    CAST_IRON = "CastIron"

    @property
    def ea_value(self) -> float:
        return _EA_VALUES[self]


_EA_VALUES = {
    Material.POLYETHYLENE: 0.42,
    Material.DUCTILE_IRON: 1.67,
    Material.PVC: 1.67,
    Material.STEEL: 1.67,
    Material.CONCRETE: 5.01,
    Material.ASBESTOS: 6.68,
    Material.CAST_IRON: 8.35,
}

# Accepted spellings, keyed on lowercase with spaces/underscores/dashes removed.
# CI/DI/AC are the abbreviations used by the deterioration-model tables.
_MATERIAL_ALIASES = {
    "polyethylene": Material.POLYETHYLENE,
    "ductileiron": Material.DUCTILE_IRON,
    "di": Material.DUCTILE_IRON,
    "pvc": Material.PVC,
    "steel": Material.STEEL,
    "concrete": Material.CONCRETE,
    "asbestos": Material.ASBESTOS,
    "asbestoscement": Material.ASBESTOS,
    "ac": Material.ASBESTOS,
    "castiron": Material.CAST_IRON,
    "ci": Material.CAST_IRON,
}


def encode_material(name: str) -> Material:
    """Map a material name (case-insensitive, CI/DI/AC aliases) to its variant."""
    key = "".join(ch for ch in name.strip().lower() if ch not in " _-")
    try:
        return _MATERIAL_ALIASES[key]
    except KeyError:
        raise UnknownMaterial(f"unknown pipe material: {name!r}") from None


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(frozen=True)
class PipeRecord:
    """One pipe segment: seven input attributes plus optional RUL target."""

    age: int                     # years
    diameter: float              # inches
    length: float                # feet
    material: Material
    breaks: int
    install_year: int
    wall_thickness_loss: float   # percent of original wall
    rul: Optional[float] = None  # years; absent for prediction-only records

    def validate(self, reference_year: int) -> None:
        """Raise ValueError (with a .column attribute) on any invariant breach."""
        if self.age < 0:
            raise _field_error("age_years", f"age must be >= 0, got {self.age}")
        if not DIAMETER_RANGE[0] <= self.diameter <= DIAMETER_RANGE[1]:
            raise _field_error(
                "diameter_in", f"diameter {self.diameter} outside {DIAMETER_RANGE}"
            )
        if self.length <= 0:
            raise _field_error("length_ft", f"length must be positive, got {self.length}")
        if self.breaks < 0:
            raise _field_error("breaks", f"breaks must be >= 0, got {self.breaks}")
        if not WTL_RANGE[0] <= self.wall_thickness_loss <= WTL_RANGE[1]:
            raise _field_error(
                "wall_thickness_loss_pct",
                f"wall thickness loss {self.wall_thickness_loss} outside {WTL_RANGE}",
            )
        implied_age = reference_year - self.install_year
        if abs(implied_age - self.age) > AGE_YEAR_TOLERANCE:
            raise _field_error(
                "install_year",
                f"age {self.age} inconsistent with install year "
                f"{self.install_year} (reference {reference_year})",
            )


@dataclass(frozen=True)
class CleaningReport:
    """Row accounting for one ingestion pass."""

    rows_read: int
    rows_kept: int
    rows_dropped: int
    drops_by_column: dict

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": self.rows_dropped,
            "drops_by_column": dict(self.drops_by_column),
        }

    def render(self) -> str:
        lines = [
            f"rows read:    {self.rows_read}",
            f"rows kept:    {self.rows_kept}",
            f"rows dropped: {self.rows_dropped}",
        ]
        for col, n in sorted(self.drops_by_column.items()):
            lines.append(f"  {col}: {n}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Dataset:
    """Validated, ordered collection of pipe records.

    Immutable after construction; safe to share across workers.
    """

    records: tuple
    reference_year: int
    split: Optional[tuple] = None  # per-record Split labels, same length

    def __len__(self) -> int:
        return len(self.records)

    def has_rul(self) -> bool:
        return all(r.rul is not None for r in self.records)

    def column(self, name: str) -> np.ndarray:
        """Raw numeric values of one column; material yields EA values."""
        if name == "age_years":
            return np.array([r.age for r in self.records], dtype=float)
        if name == "diameter_in":
            return np.array([r.diameter for r in self.records], dtype=float)
        if name == "length_ft":
            return np.array([r.length for r in self.records], dtype=float)
        if name == "material":
            return np.array([r.material.ea_value for r in self.records], dtype=float)
        if name == "breaks":
            return np.array([r.breaks for r in self.records], dtype=float)
        if name == "install_year":
            return np.array([r.install_year for r in self.records], dtype=float)
        if name == "wall_thickness_loss_pct":
            return np.array(
                [r.wall_thickness_loss for r in self.records], dtype=float
            )
        if name == TARGET_COLUMN:
            if not self.has_rul():
                raise UnknownColumn("dataset has records without rul_years")
            return np.array([r.rul for r in self.records], dtype=float)
        raise UnknownColumn(f"no such column: {name!r}")

    def subset(self, indices: Sequence[int]) -> "Dataset":
        recs = tuple(self.records[i] for i in indices)
        labels = tuple(self.split[i] for i in indices) if self.split else None
        return Dataset(recs, self.reference_year, labels)


def _field_error(column: str, message: str) -> ValueError:
    exc = ValueError(message)
    exc.column = column
    return exc


def _parse_row(row: dict, reference_year: int):
    """Parse one CSV row into a PipeRecord, or return the offending column name."""
    try:
        col = "age_years"
        age = int(float(row[col]))
        col = "diameter_in"
        diameter = float(row[col])
        col = "length_ft"
        length = float(row[col])
        col = "material"
        material = encode_material(row[col])
        col = "breaks"
        breaks = int(float(row[col]))
        col = "install_year"
        install_year = int(float(row[col]))
        col = "wall_thickness_loss_pct"
        wtl = float(row[col])
        col = "rul_years"
        raw_rul = row.get(col)
        rul = float(raw_rul) if raw_rul not in (None, "") else None
    except (ValueError, UnknownMaterial, TypeError):
        return None, col
    record = PipeRecord(age, diameter, length, material, breaks, install_year, wtl, rul)
    try:
        record.validate(reference_year)
    except ValueError as exc:
        return None, getattr(exc, "column", "install_year")
    return record, None


def ingest_csv(path, reference_year: int):
    """Read the canonical CSV schema, dropping and counting invalid rows.

    Returns (Dataset, CleaningReport).  Rows with any missing or unparseable
    cell are removed, never imputed; surviving rows keep file order.
    """
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaMismatch(f"missing required column(s): {', '.join(missing)}")
        records = []
        drops: dict = {}
        rows_read = 0
        for row in reader:
            rows_read += 1
            if any(row.get(c) in (None, "") for c in REQUIRED_COLUMNS):
                bad = next(c for c in REQUIRED_COLUMNS if row.get(c) in (None, ""))
                drops[bad] = drops.get(bad, 0) + 1
                continue
            record, bad_col = _parse_row(row, reference_year)
            if record is None:
                drops[bad_col] = drops.get(bad_col, 0) + 1
                continue
            records.append(record)
    if not records:
        raise EmptyAfterCleaning(f"no valid rows in {path}")
    report = CleaningReport(
        rows_read=rows_read,
        rows_kept=len(records),
        rows_dropped=rows_read - len(records),
        drops_by_column=drops,
    )
    return Dataset(tuple(records), reference_year), report


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the canonical CSV schema."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in dataset.records:
            writer.writerow(
                [
                    r.age,
                    _fmt(r.diameter),
                    _fmt(r.length),
                    r.material.value,
                    r.breaks,
                    r.install_year,
                    _fmt(r.wall_thickness_loss),
                    _fmt(r.rul) if r.rul is not None else "",
                ]
            )


def _fmt(x: float) -> str:
    # repr keeps round-trips exact while writing integers compactly
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def split_dataset(dataset: Dataset, ratios, seed: int) -> Dataset:
    """Assign Train/Validation/Test labels by a seed-deterministic shuffle.

    Label counts are floor(ratio * n); leftover records go to Train first,
    then Validation.
    """
    train_r, val_r, test_r = ratios
    if min(train_r, val_r, test_r) <= 0:
        raise RatioSumInvalid(f"ratios must be positive, got {ratios}")
    if abs(train_r + val_r + test_r - 1.0) > 1e-9:
        raise RatioSumInvalid(f"ratios must sum to 1, got {ratios}")
    n = len(dataset)
    counts = [int(np.floor(r * n)) for r in (train_r, val_r, test_r)]
    remainder = n - sum(counts)
    for i in range(remainder):
        counts[i % 3] += 1
    order = np.random.default_rng(seed).permutation(n)
    labels = [None] * n
    cursor = 0
    for label, count in zip((Split.TRAIN, Split.VALIDATION, Split.TEST), counts):
        for idx in order[cursor:cursor + count]:
            labels[idx] = label
        cursor += count
    return Dataset(dataset.records, dataset.reference_year, tuple(labels))


@dataclass(frozen=True)
class FeatureMatrix:
    """Numeric design matrix with recorded normalization constants.

    Raw values are stored; `normalized()` applies the per-column transform.
    min-max mode maps each column onto [0, 1]; a constant column maps to 0.0
    with min == max recorded.  z-score mode uses the sample (n-1) std.
    """

    values: np.ndarray            # n x d raw values
    column_names: tuple
    mode: str                     # "minmax" | "zscore"
    constants: tuple              # per column: (min, max) or (mean, std)
    split: Optional[tuple] = None

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise UnknownColumn(f"no such column: {name!r}") from None

    def raw_column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    def normalized(self) -> np.ndarray:
        out = np.empty_like(self.values)
        for j in range(self.values.shape[1]):
            out[:, j] = self.normalize_column(self.column_names[j], self.values[:, j])
        return out

    def normalize_column(self, name: str, values) -> np.ndarray:
        a, b = self.constants[self.column_index(name)]
        values = np.asarray(values, dtype=float)
        if self.mode == "minmax":
            if b == a:
                return np.zeros_like(values)
            return (values - a) / (b - a)
        return (values - a) / b

    def denormalize_column(self, name: str, values) -> np.ndarray:
        a, b = self.constants[self.column_index(name)]
        values = np.asarray(values, dtype=float)
        if self.mode == "minmax":
            if b == a:
                return np.full_like(values, a)
            return values * (b - a) + a
        return values * b + a

    def rows_for(self, label: Split) -> np.ndarray:
        if self.split is None:
            raise ValueError("feature matrix carries no split labels")
        return np.array([i for i, s in enumerate(self.split) if s == label], dtype=int)


def build_features(dataset: Dataset, columns: Iterable[str], mode: str = "minmax") -> FeatureMatrix:
    """Assemble the requested columns into a FeatureMatrix.

    Column order matches the request.  Material is encoded as EA values.
    """
    columns = tuple(columns)
    if len(dataset) == 0:
        raise EmptyAfterCleaning("dataset is empty")
    if mode not in ("minmax", "zscore"):
        raise ValueError(f"unknown normalization mode: {mode!r}")
    cols = [dataset.column(name) for name in columns]  # raises UnknownColumn
    values = np.column_stack(cols)
    constants = []
    for j, name in enumerate(columns):
        col = values[:, j]
        if mode == "minmax":
            constants.append((float(col.min()), float(col.max())))
        else:
            std = float(col.std(ddof=1)) if len(col) > 1 else 0.0
            if std == 0.0:
                raise DegenerateColumn(f"column {name!r} has zero variance")
            constants.append((float(col.mean()), std))
    return FeatureMatrix(values, columns, mode, tuple(constants), dataset.split)
