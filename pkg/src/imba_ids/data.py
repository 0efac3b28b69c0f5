"""Flow-record ingestion and preparation: CSV loading with malformed-row
accounting, one-hot encoding, z-score normalization, stratified splitting,
the resampling baselines, and Gaussian synthetic datasets.

Class indices are always arranged with the benign class at 0; the schema
declares which label string is benign.
"""

import csv
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import imbalance_measure

logger = logging.getLogger(__name__)

FEATURE_KINDS = ("numeric", "categorical")


class DataError(ValueError):
    """Dataset contents violate the schema or the malformed-row threshold."""


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise DataError(f"feature {self.name!r}: kind must be one of {FEATURE_KINDS}, got {self.kind!r}")


@dataclass
class DatasetSchema:
    """Column layout, class list, and label handling for one dataset.

    classes is normalized so the benign class is always index 0; the rest
    keep their declared order. fine_label_map folds raw label strings (e.g.
    fine-grained attack names) into the coarse classes before indexing.
    """

    features: list[FeatureColumn]
    label: str
    classes: list[str]
    benign: str
    has_header: bool = True
    fine_label_map: dict[str, str] | None = None
    malformed_threshold: float = 0.01

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if len(set(self.classes)) != len(self.classes):
            raise DataError("class names must be unique")
        if self.benign not in self.classes:
            raise DataError(f"benign class {self.benign!r} is not in the class list {self.classes}")
        if not 0.0 <= self.malformed_threshold <= 1.0:
            raise DataError(f"malformed_threshold must be in [0, 1], got {self.malformed_threshold}")
        self.classes = [self.benign] + [c for c in self.classes if c != self.benign]
        if self.fine_label_map:
            bad = sorted(set(self.fine_label_map.values()) - set(self.classes))
            if bad:
                raise DataError(f"fine_label_map targets unknown classes: {bad}")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_index(self, raw_label: str) -> int:
        name = self.fine_label_map.get(raw_label, raw_label) if self.fine_label_map else raw_label
        try:
            return self.classes.index(name)
        except ValueError:
            raise DataError(f"unknown label string {raw_label!r}") from None

    def to_dict(self) -> dict:
        return {
            "features": [{"name": f.name, "kind": f.kind} for f in self.features],
            "label": self.label,
            "classes": list(self.classes),
            "benign": self.benign,
            "has_header": self.has_header,
            "fine_label_map": dict(self.fine_label_map) if self.fine_label_map else None,
            "malformed_threshold": self.malformed_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSchema":
        try:
            features = [FeatureColumn(f["name"], f["kind"]) for f in d["features"]]
            return cls(
                features=features,
                label=d["label"],
                classes=list(d["classes"]),
                benign=d["benign"],
                has_header=bool(d.get("has_header", True)),
                fine_label_map=d.get("fine_label_map") or None,
                malformed_threshold=float(d.get("malformed_threshold", 0.01)),
            )
        except KeyError as e:
            raise DataError(f"schema is missing required key {e.args[0]!r}") from None


def load_schema(path) -> DatasetSchema:
    with open(path, encoding="utf-8") as f:
        return DatasetSchema.from_dict(json.load(f))


@dataclass
class RawTable:
    """Parsed rows in schema order: numeric cells as floats, categorical cells
    as strings, labels as raw strings. Malformed rows are counted, not kept."""

    feature_names: list[str]
    rows: list[list]
    labels: list[str]
    n_malformed: int = 0

    def __len__(self) -> int:
        return len(self.rows)


def _column_picker(header: list[str] | None, schema: DatasetSchema):
    """Index of every schema column in the file. Headerless files must carry
    the features in declared order with the label in the last position."""
    names = [f.name for f in schema.features]
    if header is None:
        return list(range(len(names))), len(names)
    positions = {name: i for i, name in enumerate(header)}
    missing = [n for n in names + [schema.label] if n not in positions]
    if missing:
        raise DataError(f"header is missing schema columns: {missing}")
    return [positions[n] for n in names], positions[schema.label]


def _parse_row(row: list[str], feat_pos: list[int], label_pos: int, kinds: list[str]):
    """(values, label) for a well-formed row, None for a malformed one.

    Malformed means: wrong field count, or a numeric cell that does not parse
    to a finite float.
    """
    width = max(max(feat_pos, default=-1), label_pos) + 1
    if len(row) < width:
        return None
    values = []
    for pos, kind in zip(feat_pos, kinds):
        cell = row[pos]
        if kind == "numeric":
            try:
                v = float(cell)
            except ValueError:
                return None
            if not np.isfinite(v):
                return None
            values.append(v)
        else:
            values.append(cell)
    return values, row[label_pos]


def _iter_csv(path, schema: DatasetSchema):
    """Yield parsed (values, label) per data row, or None for malformed rows.
    Empty lines are skipped without counting."""
    kinds = [f.kind for f in schema.features]
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None) if schema.has_header else None
        if schema.has_header and header is None:
            raise DataError(f"{path}: empty file, expected a header row")
        feat_pos, label_pos = _column_picker(header, schema)
        exact_len = None if schema.has_header else len(kinds) + 1
        for row in reader:
            if not row:
                continue
            if exact_len is not None and len(row) != exact_len:
                yield None
                continue
            yield _parse_row(row, feat_pos, label_pos, kinds)


def _check_malformed(path, schema, n_malformed: int, n_total: int) -> None:
    if n_malformed == 0:
        return
    logger.warning("%s: skipped %d of %d malformed rows", path, n_malformed, n_total)
    if n_malformed > schema.malformed_threshold * n_total:
        raise DataError(
            f"{path}: {n_malformed} of {n_total} rows malformed, "
            f"over the {schema.malformed_threshold:.2%} threshold"
        )


def load_csv(path, schema: DatasetSchema) -> RawTable:
    """Parse a CSV into a RawTable.

    Rows failing to parse are counted and reported; more than
    schema.malformed_threshold of them aborts the load with the count.
    File columns absent from the schema are ignored.
    """
    rows, labels = [], []
    n_malformed = 0
    for parsed in _iter_csv(path, schema):
        if parsed is None:
            n_malformed += 1
        else:
            rows.append(parsed[0])
            labels.append(parsed[1])
    _check_malformed(path, schema, n_malformed, n_malformed + len(rows))
    return RawTable([f.name for f in schema.features], rows, labels, n_malformed)


def count_labels(path, schema: DatasetSchema) -> tuple[np.ndarray, int]:
    """Per-class row counts (in schema class order) without holding rows in
    memory; same parsing and threshold rules as load_csv."""
    counts = np.zeros(schema.num_classes, dtype=np.int64)
    n_malformed = 0
    n_total = 0
    for parsed in _iter_csv(path, schema):
        n_total += 1
        if parsed is None:
            n_malformed += 1
        else:
            counts[schema.class_index(parsed[1])] += 1
    _check_malformed(path, schema, n_malformed, n_total)
    return counts, n_malformed


@dataclass
class EncodedDataset:
    """Feature matrix, integer labels (benign = 0), and the encoding state
    (category vocabulary, positions of numeric columns) needed to transform
    further tables the same way."""

    features: np.ndarray
    labels: np.ndarray
    schema: DatasetSchema
    vocab: dict[str, tuple[str, ...]] = field(default_factory=dict)
    numeric_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return self.schema.num_classes

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def decode_labels(self) -> list[str]:
        return [self.schema.classes[i] for i in self.labels]

    def subset(self, indices) -> "EncodedDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return EncodedDataset(
            self.features[indices], self.labels[indices], self.schema, self.vocab, self.numeric_idx
        )


def encode(table: RawTable, schema: DatasetSchema, vocab: dict | None = None) -> EncodedDataset:
    """Turn a RawTable into float64 features and integer labels.

    Categorical features one-hot encode against a vocabulary; pass the
    training set's vocab to encode a test set, where unseen categories map to
    all-zero columns. With vocab=None the vocabulary is built from this table
    (sorted unique values per feature). Unknown label strings raise.
    """
    if [f.name for f in schema.features] != table.feature_names:
        raise DataError("table columns do not match the schema")
    n = len(table.rows)
    fitting = vocab is None
    vocab = {} if fitting else dict(vocab)

    col_arrays: list[np.ndarray] = []
    numeric_idx: list[int] = []
    offset = 0
    for j, feat in enumerate(schema.features):
        if feat.kind == "numeric":
            col_arrays.append(np.fromiter((row[j] for row in table.rows), dtype=np.float64, count=n).reshape(n, 1))
            numeric_idx.append(offset)
            offset += 1
        else:
            if fitting:
                vocab[feat.name] = tuple(sorted({row[j] for row in table.rows}))
            categories = vocab.get(feat.name, ())
            block = np.zeros((n, len(categories)))
            slot = {cat: k for k, cat in enumerate(categories)}
            for i, row in enumerate(table.rows):
                k = slot.get(row[j])
                if k is not None:
                    block[i, k] = 1.0
            col_arrays.append(block)
            offset += len(categories)

    features = np.hstack(col_arrays) if col_arrays else np.zeros((n, 0))
    labels = np.fromiter((schema.class_index(lab) for lab in table.labels), dtype=np.int64, count=n)
    return EncodedDataset(features, labels, schema, vocab, np.asarray(numeric_idx, dtype=np.int64))


@dataclass
class Normalizer:
    """Per-numeric-column mean and std learned from training data; std is
    floored at 1e-9 so constant features normalize to zero."""

    mean: np.ndarray
    std: np.ndarray
    numeric_idx: np.ndarray

    STD_FLOOR = 1e-9


def fit_normalizer(train: EncodedDataset) -> Normalizer:
    cols = train.features[:, train.numeric_idx]
    mean = cols.mean(axis=0) if cols.size else np.zeros(len(train.numeric_idx))
    std = cols.std(axis=0) if cols.size else np.zeros(len(train.numeric_idx))
    return Normalizer(mean, np.maximum(std, Normalizer.STD_FLOOR), train.numeric_idx.copy())


def apply_normalizer(ds: EncodedDataset, norm: Normalizer) -> EncodedDataset:
    """Z-score the numeric columns with the fitted stats; one-hot columns pass
    through untouched."""
    if not np.array_equal(ds.numeric_idx, norm.numeric_idx):
        raise DataError("normalizer was fitted on a different encoding layout")
    features = ds.features.copy()
    features[:, norm.numeric_idx] = (features[:, norm.numeric_idx] - norm.mean) / norm.std
    return replace(ds, features=features)


def stratified_split(
    ds: EncodedDataset, ratio: tuple[int, int], rng: np.random.Generator
) -> tuple[EncodedDataset, EncodedDataset]:
    """Split each class independently at train:test = ratio, then shuffle both
    sides. Classes with fewer than 2 rows go entirely to train with a warning."""
    parts_train, parts_test = ratio
    if parts_train < 1 or parts_test < 1:
        raise DataError(f"split ratio parts must be >= 1, got {ratio}")
    frac = parts_train / (parts_train + parts_test)
    train_idx, test_idx = [], []
    for k in range(ds.num_classes):
        idx = np.flatnonzero(ds.labels == k)
        if idx.size == 0:
            continue
        if idx.size < 2:
            logger.warning(
                "class %r has %d row(s); placing all of them in the training split",
                ds.schema.classes[k], idx.size,
            )
            train_idx.append(idx)
            continue
        perm = rng.permutation(idx)
        n_train = int(round(idx.size * frac))
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train = np.concatenate(train_idx) if train_idx else np.empty(0, dtype=np.int64)
    test = np.concatenate(test_idx) if test_idx else np.empty(0, dtype=np.int64)
    return ds.subset(rng.permutation(train)), ds.subset(rng.permutation(test))


def oversample(ds: EncodedDataset, rng: np.random.Generator) -> EncodedDataset:
    """Duplicate minority-class rows (sampling with replacement) until every
    class has n_max rows, then shuffle. No feature values are fabricated."""
    counts = ds.class_counts()
    if np.any(counts == 0):
        empty = ds.schema.classes[int(np.flatnonzero(counts == 0)[0])]
        raise DataError(f"cannot oversample: class {empty!r} has no rows")
    n_max = int(counts.max())
    pieces = [np.arange(ds.n)]
    for k in range(ds.num_classes):
        short = n_max - int(counts[k])
        if short > 0:
            idx = np.flatnonzero(ds.labels == k)
            pieces.append(rng.choice(idx, size=short, replace=True))
    return ds.subset(rng.permutation(np.concatenate(pieces)))


def undersample(ds: EncodedDataset, rng: np.random.Generator) -> EncodedDataset:
    """Uniformly subsample (without replacement) every class down to the
    smallest present class size, then shuffle. Absent classes stay absent."""
    counts = ds.class_counts()
    present = counts[counts > 0]
    if present.size == 0:
        return ds.subset(np.empty(0, dtype=np.int64))
    n_min = int(present.min())
    pieces = []
    for k in range(ds.num_classes):
        idx = np.flatnonzero(ds.labels == k)
        if idx.size:
            pieces.append(rng.choice(idx, size=n_min, replace=False))
    return ds.subset(rng.permutation(np.concatenate(pieces)))


@dataclass(frozen=True)
class SynthClass:
    name: str
    count: int
    mean: tuple[float, ...] | None = None
    cov: float = 1.0


@dataclass(frozen=True)
class SynthSpec:
    """Gaussian-cluster dataset description: one isotropic cluster per class.

    Classes without an explicit mean get one drawn from N(0, mean_scale^2 I),
    so mean_scale controls how much the clusters overlap.
    """

    dim: int
    classes: tuple[SynthClass, ...]
    benign: str
    mean_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise DataError(f"dim must be >= 1, got {self.dim}")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise DataError("synth class names must be unique")
        if self.benign not in names:
            raise DataError(f"benign class {self.benign!r} not among {names}")
        for c in self.classes:
            if c.count < 1:
                raise DataError(f"class {c.name!r}: count must be >= 1, got {c.count}")
            if c.cov < 0:
                raise DataError(f"class {c.name!r}: cov must be >= 0, got {c.cov}")
            if c.mean is not None and len(c.mean) != self.dim:
                raise DataError(f"class {c.name!r}: mean has length {len(c.mean)}, expected {self.dim}")


def load_synth_spec(path) -> SynthSpec:
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    try:
        classes = tuple(
            SynthClass(
                name=c["name"],
                count=int(c["count"]),
                mean=tuple(c["mean"]) if c.get("mean") is not None else None,
                cov=float(c.get("cov", 1.0)),
            )
            for c in d["classes"]
        )
        return SynthSpec(
            dim=int(d["dim"]),
            classes=classes,
            benign=d["benign"],
            mean_scale=float(d.get("mean_scale", 1.0)),
            seed=int(d.get("seed", 0)),
        )
    except KeyError as e:
        raise DataError(f"synth spec is missing required key {e.args[0]!r}") from None


def synth_schema(spec: SynthSpec) -> DatasetSchema:
    return DatasetSchema(
        features=[FeatureColumn(f"f{i}", "numeric") for i in range(spec.dim)],
        label="label",
        classes=[c.name for c in spec.classes],
        benign=spec.benign,
    )


def synth_generate(spec: SynthSpec, rng: np.random.Generator) -> EncodedDataset:
    """Sample the Gaussian clusters declared by spec, shuffled into one
    dataset. Identical spec + rng state reproduce identical data."""
    schema = synth_schema(spec)
    by_name = {c.name: c for c in spec.classes}
    blocks, labels = [], []
    for k, name in enumerate(schema.classes):
        c = by_name[name]
        if c.mean is not None:
            mean = np.asarray(c.mean, dtype=np.float64)
        else:
            mean = rng.standard_normal(spec.dim) * spec.mean_scale
        pts = mean + rng.standard_normal((c.count, spec.dim)) * np.sqrt(c.cov)
        blocks.append(pts)
        labels.append(np.full(c.count, k, dtype=np.int64))
    features = np.vstack(blocks)
    labels = np.concatenate(labels)
    order = rng.permutation(features.shape[0])
    return EncodedDataset(
        features[order], labels[order], schema,
        vocab={}, numeric_idx=np.arange(spec.dim, dtype=np.int64),
    )


def write_synth_csv(ds: EncodedDataset, path) -> None:
    """Write an all-numeric dataset as a schema-conformant CSV (header row,
    label strings in the last column). Same data -> byte-identical file."""
    if ds.features.shape[1] != len(ds.schema.features):
        raise DataError("write_synth_csv needs an all-numeric (un-one-hot) dataset")
    names = ds.schema.classes
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([c.name for c in ds.schema.features] + [ds.schema.label])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [names[label]])


def dataset_omega(ds: EncodedDataset) -> float:
    """Imbalance measure of an encoded dataset's class counts."""
    return imbalance_measure(ds.class_counts())
