"""Dataset representation, file ingestion/persistence, and synthetic data.

File formats:
  features CSV        header ``id,label,f0,...`` (optional ``regime`` column
                      between ``label`` and ``f0``), UTF-8, '.' decimals.
  class attribute CSV header ``class,<name0>,<name1>,...``, one row per class.
  detections JSON     array of ``{image_id, box:[x,y,w,h], attribute, object, score}``.
  model JSON          ``{version, kind, shape, values, training_config}`` with
                      values flattened row-major.
  predictions CSV     header ``id,label,predicted_class,regime,z0,...``.

Loaders are deterministic and validate invariants eagerly, reporting the
offending line or record. Loaded values are immutable by convention and safe
to share across threads.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from attrex.errors import InputError

MODEL_FILE_VERSION = 1

REGIME_CLEAN = "clean"
REGIME_ADV = "adversarial"
REGIME_ADV_AT = "adversarial_AT"
REGIMES = (REGIME_CLEAN, REGIME_ADV, REGIME_ADV_AT)


@dataclass
class Dataset:
    """Feature vectors with string ids and integer class labels."""

    ids: list[str]
    features: np.ndarray  # (N, D) float64
    labels: np.ndarray  # (N,) int64
    split: str = "train"
    regime: str | None = None

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.ids)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise InputError(
                f"dataset: {n} ids but feature array of shape {self.features.shape}"
            )
        if self.labels.shape != (n,):
            raise InputError(
                f"dataset: {n} ids but label array of shape {self.labels.shape}"
            )
        if len(set(self.ids)) != n:
            seen: set[str] = set()
            for i in self.ids:
                if i in seen:
                    raise InputError(f"dataset: duplicate id {i!r}")
                seen.add(i)
        if np.any(self.labels < 0):
            raise InputError("dataset: negative class label")
        if not np.all(np.isfinite(self.features)):
            raise InputError("dataset: non-finite feature value")

    @property
    def n_examples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n_examples


@dataclass
class ClassAttributeMatrix:
    """Per-class ground-truth attribute vectors, one row per class."""

    class_names: list[str]
    attribute_names: list[str]
    values: np.ndarray  # (C, E) float64

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InputError(
                f"class attributes: expected 2-D values, got shape {self.values.shape}"
            )
        if self.values.shape[0] != len(self.class_names):
            raise InputError(
                f"class attributes: {len(self.class_names)} class names but "
                f"{self.values.shape[0]} rows"
            )
        if self.values.shape[1] != len(self.attribute_names):
            raise InputError(
                f"class attributes: {len(self.attribute_names)} attribute names but "
                f"{self.values.shape[1]} columns"
            )
        if len(set(self.attribute_names)) != len(self.attribute_names):
            dup = next(
                n for i, n in enumerate(self.attribute_names)
                if n in self.attribute_names[:i]
            )
            raise InputError(f"class attributes: duplicate attribute name {dup!r}")
        if not np.all(np.isfinite(self.values)):
            raise InputError("class attributes: non-finite value")

    @property
    def n_classes(self) -> int:
        return self.values.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.values.shape[1]

    def row(self, class_index: int) -> np.ndarray:
        if not 0 <= class_index < self.n_classes:
            raise InputError(
                f"class index {class_index} out of range [0, {self.n_classes})"
            )
        return self.values[class_index]


@dataclass
class DetectionRecord:
    """One detector bounding box with its attribute/object names and score."""

    image_id: str
    box: tuple[float, float, float, float]  # x, y, width, height in pixels
    attribute_name: str
    object_name: str
    score: float

    def __post_init__(self) -> None:
        x, y, w, h = self.box
        if w <= 0 or h <= 0:
            raise InputError(
                f"detection for image {self.image_id!r}: box width/height must be "
                f"positive, got ({w}, {h})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise InputError(
                f"detection for image {self.image_id!r}: score {self.score} "
                f"outside [0, 1]"
            )


@dataclass
class EmbeddingModel:
    """Bilinear compatibility model: a D x E weight matrix plus training metadata."""

    w: np.ndarray  # (D, E) float64
    d: int
    e: int
    training_config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != (self.d, self.e):
            raise InputError(
                f"embedding model: weight shape {self.w.shape} does not match "
                f"declared ({self.d}, {self.e})"
            )
        if not np.all(np.isfinite(self.w)):
            raise InputError("embedding model: non-finite weight")


@dataclass
class SoftmaxModel:
    """One-hidden-layer (tanh) softmax classifier; hidden_width 0 means linear.

    Shapes: w1 (H, D), b1 (H,), w2 (C, H) -- or w2 (C, D) when H == 0.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    hidden_width: int
    training_config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.w1 = np.ascontiguousarray(self.w1, dtype=np.float64)
        self.b1 = np.ascontiguousarray(self.b1, dtype=np.float64)
        self.w2 = np.ascontiguousarray(self.w2, dtype=np.float64)
        self.b2 = np.ascontiguousarray(self.b2, dtype=np.float64)
        h = self.hidden_width
        if h < 0:
            raise InputError(f"softmax model: negative hidden width {h}")
        if self.w1.shape[0] != h or self.b1.shape != (h,):
            raise InputError(
                f"softmax model: hidden layer shapes {self.w1.shape}/{self.b1.shape} "
                f"inconsistent with hidden width {h}"
            )
        expected_in = self.dim if h == 0 else h
        if self.w2.ndim != 2 or self.w2.shape[1] != expected_in:
            raise InputError(
                f"softmax model: output layer shape {self.w2.shape} inconsistent "
                f"with input width {expected_in}"
            )
        if self.b2.shape != (self.n_classes,):
            raise InputError(
                f"softmax model: bias shape {self.b2.shape} does not match "
                f"{self.n_classes} classes"
            )
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(arr)):
                raise InputError("softmax model: non-finite parameter")

    @property
    def dim(self) -> int:
        return self.w1.shape[1] if self.hidden_width > 0 else self.w2.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]


@dataclass
class AttributePredictionRecord:
    """One predicted attribute vector with its provenance."""

    example_id: str
    true_label: int
    predicted_class: int
    regime: str
    values: np.ndarray  # (E,) float64

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.regime not in REGIMES:
            raise InputError(
                f"prediction record {self.example_id!r}: unknown regime "
                f"{self.regime!r} (expected one of {', '.join(REGIMES)})"
            )


# ---------------------------------------------------------------------------
# CSV / JSON ingestion
# ---------------------------------------------------------------------------


def _read_csv_rows(path: str | Path) -> list[list[str]]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh)]


def _parse_float(cell: str, path: Path, line: int, what: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise InputError(
            f"{path}: line {line}: non-numeric {what} {cell!r}"
        ) from None
    if not np.isfinite(value):
        raise InputError(f"{path}: line {line}: non-finite {what} {cell!r}")
    return value


def load_features(
    path: str | Path,
    split: str = "train",
    n_classes: int | None = None,
    feature_range: tuple[float, float] = (0.0, 1.0),
    allow_out_of_range: bool = False,
) -> Dataset:
    """Load a features CSV into a Dataset, inferring D from the header.

    Features are expected to lie in ``feature_range`` (attacks and their clip
    semantics assume a bounded domain); pass ``allow_out_of_range=True`` to
    skip the check.
    """
    path = Path(path)
    rows = _read_csv_rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise InputError(
            f"{path}: line 1: expected header starting 'id,label,...', got "
            f"{','.join(header[:3])}"
        )
    has_regime = len(header) > 2 and header[2] == "regime"
    first_feature = 3 if has_regime else 2
    feature_names = header[first_feature:]
    if not feature_names:
        raise InputError(f"{path}: line 1: header declares no feature columns")

    ids: list[str] = []
    labels: list[int] = []
    feats: list[list[float]] = []
    regimes: set[str] = set()
    seen: set[str] = set()
    for offset, row in enumerate(rows[1:]):
        line = offset + 2
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}: line {line}: expected {len(header)} cells, got {len(row)}"
            )
        ex_id = row[0]
        if ex_id in seen:
            raise InputError(f"{path}: line {line}: duplicate id {ex_id!r}")
        seen.add(ex_id)
        try:
            label = int(row[1])
        except ValueError:
            label = -1
        if label < 0 or (n_classes is not None and label >= n_classes):
            raise InputError(f"{path}: line {line}: unknown label {row[1]!r}")
        if has_regime:
            regimes.add(row[2])
        values = [
            _parse_float(cell, path, line, "feature") for cell in row[first_feature:]
        ]
        ids.append(ex_id)
        labels.append(label)
        feats.append(values)

    if not ids:
        raise InputError(f"{path}: no examples")
    features = np.array(feats, dtype=np.float64)
    lo, hi = feature_range
    if not allow_out_of_range and (features.min() < lo or features.max() > hi):
        bad = np.unravel_index(
            int(np.argmax((features < lo) | (features > hi))), features.shape
        )
        raise InputError(
            f"{path}: line {bad[0] + 2}: feature value {features[bad]} outside "
            f"[{lo}, {hi}] (pass allow_out_of_range to accept)"
        )
    regime = regimes.pop() if len(regimes) == 1 else None
    return Dataset(ids=ids, features=features, labels=np.array(labels), split=split,
                   regime=regime)


def save_features(dataset: Dataset, path: str | Path, regime: str | None = None) -> None:
    """Write a Dataset in the features CSV format, adding a regime column if set."""
    regime = regime if regime is not None else dataset.regime
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["id", "label"]
        if regime is not None:
            header.append("regime")
        header += [f"f{i}" for i in range(dataset.dim)]
        writer.writerow(header)
        for i in range(dataset.n_examples):
            row = [dataset.ids[i], str(int(dataset.labels[i]))]
            if regime is not None:
                row.append(regime)
            row += [repr(float(v)) for v in dataset.features[i]]
            writer.writerow(row)


def load_class_attributes(path: str | Path) -> ClassAttributeMatrix:
    """Load a class attribute CSV, preserving file order for names."""
    path = Path(path)
    rows = _read_csv_rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0] != "class":
        raise InputError(f"{path}: line 1: expected header 'class,<attribute names>'")
    attribute_names = header[1:]
    class_names: list[str] = []
    values: list[list[float]] = []
    for offset, row in enumerate(rows[1:]):
        line = offset + 2
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}: line {line}: expected {len(header)} cells, got {len(row)}"
            )
        class_names.append(row[0])
        values.append([_parse_float(c, path, line, "attribute value") for c in row[1:]])
    if not class_names:
        raise InputError(f"{path}: no classes")
    return ClassAttributeMatrix(class_names, attribute_names, np.array(values))


def save_class_attributes(matrix: ClassAttributeMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class"] + list(matrix.attribute_names))
        for i, name in enumerate(matrix.class_names):
            writer.writerow([name] + [repr(float(v)) for v in matrix.values[i]])


def load_detections(path: str | Path) -> list[DetectionRecord]:
    """Load a detections JSON array in file order."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise InputError(f"{path}: expected a JSON array of detection records")
    records: list[DetectionRecord] = []
    for idx, item in enumerate(raw):
        try:
            box = item["box"]
            if len(box) != 4:
                raise InputError(f"box must have 4 entries, got {len(box)}")
            record = DetectionRecord(
                image_id=str(item["image_id"]),
                box=tuple(float(v) for v in box),
                attribute_name=str(item["attribute"]),
                object_name=str(item["object"]),
                score=float(item["score"]),
            )
        except (KeyError, TypeError, ValueError, InputError) as exc:
            raise InputError(f"{path}: record {idx}: {exc}") from None
        records.append(record)
    return records


def save_detections(records: Sequence[DetectionRecord], path: str | Path) -> None:
    payload = [
        {
            "image_id": r.image_id,
            "box": list(r.box),
            "attribute": r.attribute_name,
            "object": r.object_name,
            "score": r.score,
        }
        for r in records
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Model persistence
# ---------------------------------------------------------------------------


def save_model(model: EmbeddingModel | SoftmaxModel, path: str | Path) -> None:
    """Persist a model as a single JSON document (values row-major)."""
    if isinstance(model, EmbeddingModel):
        doc = {
            "version": MODEL_FILE_VERSION,
            "kind": "sje",
            "shape": [model.d, model.e],
            "values": model.w.ravel().tolist(),
            "training_config": model.training_config,
        }
    elif isinstance(model, SoftmaxModel):
        values = np.concatenate(
            [model.w1.ravel(), model.b1, model.w2.ravel(), model.b2]
        )
        doc = {
            "version": MODEL_FILE_VERSION,
            "kind": "softmax",
            "shape": [model.dim, model.hidden_width, model.n_classes],
            "values": values.tolist(),
            "training_config": model.training_config,
        }
    else:
        raise InputError(f"cannot save model of type {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path: str | Path) -> EmbeddingModel | SoftmaxModel:
    """Load a model JSON document; exact inverse of save_model."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: unexpected end or malformed JSON: {exc}") from None
    version = doc.get("version")
    if version != MODEL_FILE_VERSION:
        raise InputError(
            f"{path}: unsupported model file version {version!r} "
            f"(supported: {MODEL_FILE_VERSION})"
        )
    kind = doc.get("kind")
    shape = doc.get("shape", [])
    values = np.asarray(doc.get("values", []), dtype=np.float64)
    config = doc.get("training_config", {})
    if kind == "sje":
        if len(shape) != 2:
            raise InputError(f"{path}: sje model needs shape [D, E], got {shape}")
        d, e = (int(s) for s in shape)
        if values.size != d * e:
            raise InputError(
                f"{path}: shape mismatch between header ({d}x{e}={d * e} values) "
                f"and payload ({values.size} values)"
            )
        return EmbeddingModel(w=values.reshape(d, e), d=d, e=e, training_config=config)
    if kind == "softmax":
        if len(shape) != 3:
            raise InputError(f"{path}: softmax model needs shape [D, H, C], got {shape}")
        d, h, c = (int(s) for s in shape)
        in2 = d if h == 0 else h
        expected = h * d + h + c * in2 + c
        if values.size != expected:
            raise InputError(
                f"{path}: shape mismatch between header ({expected} values for "
                f"D={d}, H={h}, C={c}) and payload ({values.size} values)"
            )
        pos = 0
        w1 = values[pos:pos + h * d].reshape(h, d); pos += h * d
        b1 = values[pos:pos + h]; pos += h
        w2 = values[pos:pos + c * in2].reshape(c, in2); pos += c * in2
        b2 = values[pos:pos + c]
        return SoftmaxModel(w1=w1, b1=b1, w2=w2, b2=b2, hidden_width=h,
                            training_config=config)
    raise InputError(f"{path}: unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# Attribute prediction persistence (consumed by analyze/ground commands)
# ---------------------------------------------------------------------------


def save_predictions(
    records: Sequence[AttributePredictionRecord], path: str | Path
) -> None:
    if not records:
        raise InputError("no prediction records to save")
    e = records[0].values.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "label", "predicted_class", "regime"] + [f"z{i}" for i in range(e)]
        )
        for r in records:
            if r.values.shape[0] != e:
                raise InputError(
                    f"prediction record {r.example_id!r}: length {r.values.shape[0]} "
                    f"differs from {e}"
                )
            writer.writerow(
                [r.example_id, str(r.true_label), str(r.predicted_class), r.regime]
                + [repr(float(v)) for v in r.values]
            )


def load_predictions(path: str | Path) -> list[AttributePredictionRecord]:
    path = Path(path)
    rows = _read_csv_rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    if header[:4] != ["id", "label", "predicted_class", "regime"]:
        raise InputError(
            f"{path}: line 1: expected header 'id,label,predicted_class,regime,z0,...'"
        )
    records: list[AttributePredictionRecord] = []
    for offset, row in enumerate(rows[1:]):
        line = offset + 2
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}: line {line}: expected {len(header)} cells, got {len(row)}"
            )
        try:
            record = AttributePredictionRecord(
                example_id=row[0],
                true_label=int(row[1]),
                predicted_class=int(row[2]),
                regime=row[3],
                values=np.array(
                    [_parse_float(c, path, line, "attribute") for c in row[4:]]
                ),
            )
        except ValueError as exc:
            raise InputError(f"{path}: line {line}: {exc}") from None
        records.append(record)
    if not records:
        raise InputError(f"{path}: no prediction records")
    return records


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def make_blob_problem(
    n_classes: int = 5,
    dim: int = 20,
    n_attributes: int = 16,
    n_train_per_class: int = 60,
    n_test_per_class: int = 40,
    std: float = 0.03,
    signal_dims: int = 3,
    signal_range: tuple[float, float] = (0.25, 0.75),
    noise_offsets: tuple[float, float] = (0.02, 0.09),
    seed: int = 0,
) -> tuple[Dataset, Dataset, ClassAttributeMatrix]:
    """Gaussian class clusters in [0,1]^dim with attached attribute vectors.

    The first signal_dims coordinates place each class on a distinct corner
    of a two-level lattice, keeping a pairwise l-inf gap of
    signal_range[1] - signal_range[0]; a decision rule using only those
    coordinates survives moderate l-inf perturbation. The remaining
    coordinates carry weak class-correlated offsets (0.5 +- a per-coordinate
    value in noise_offsets) that plain training exploits and a budget-limited
    sign attack can reverse, so undefended models collapse under attack while
    adversarially trained ones do not.
    """
    if signal_dims < 1 or signal_dims > dim:
        raise InputError(f"signal_dims must lie in [1, {dim}], got {signal_dims}")
    if 2 ** signal_dims < n_classes:
        raise InputError(
            f"{signal_dims} signal dimensions support at most {2 ** signal_dims} "
            f"classes, got {n_classes}"
        )
    rng = np.random.default_rng(seed)
    lo, hi = signal_range
    corners = np.array(list(itertools.product((lo, hi), repeat=signal_dims)))
    corner_index = rng.permutation(corners.shape[0])[:n_classes]
    n_weak = dim - signal_dims
    offsets = rng.uniform(noise_offsets[0], noise_offsets[1], size=n_weak)
    centers = np.empty((n_classes, dim))
    for k in range(n_classes):
        centers[k, :signal_dims] = corners[corner_index[k]]
        centers[k, signal_dims:] = 0.5 + offsets * rng.choice(
            [-1.0, 1.0], size=n_weak
        )
    # equal-norm attribute rows keep nearest-embedding and max-compatibility
    # classification consistent with each other
    attr_values = rng.uniform(0.0, 1.0, size=(n_classes, n_attributes))
    attr_values /= np.linalg.norm(attr_values, axis=1, keepdims=True)
    cam = ClassAttributeMatrix(
        class_names=[f"class_{k}" for k in range(n_classes)],
        attribute_names=[f"attr_{j:02d}" for j in range(n_attributes)],
        values=attr_values,
    )

    def _draw(split: str, per_class: int) -> Dataset:
        ids, labels, feats = [], [], []
        for k in range(n_classes):
            points = centers[k] + rng.normal(0.0, std, size=(per_class, dim))
            feats.append(np.clip(points, 0.0, 1.0))
            labels += [k] * per_class
            ids += [f"{split}-{k}-{i:04d}" for i in range(per_class)]
        return Dataset(
            ids=ids,
            features=np.vstack(feats),
            labels=np.array(labels),
            split=split,
        )

    train = _draw("train", n_train_per_class)
    test = _draw("test", n_test_per_class)
    return train, test, cam


def make_synthetic_detections(
    dataset: Dataset,
    cam: ClassAttributeMatrix,
    seed: int = 0,
    images: Sequence[str] | None = None,
    per_image: int = 3,
) -> list[DetectionRecord]:
    """Detection records for the named images, labeled with the attribute
    names that score highest for each image's true class."""
    rng = np.random.default_rng(seed)
    if images is None:
        images = dataset.ids
    label_of = dict(zip(dataset.ids, (int(v) for v in dataset.labels)))
    records: list[DetectionRecord] = []
    for image_id in images:
        if image_id not in label_of:
            raise InputError(f"unknown image id {image_id!r}")
        label = label_of[image_id]
        top = np.argsort(-cam.values[label], kind="stable")[:per_image]
        for j in top:
            x, y = rng.uniform(0.0, 80.0, size=2)
            w, h = rng.uniform(10.0, 60.0, size=2)
            records.append(DetectionRecord(
                image_id=image_id,
                box=(round(float(x), 1), round(float(y), 1),
                     round(float(w), 1), round(float(h), 1)),
                attribute_name=cam.attribute_names[int(j)],
                object_name=cam.class_names[label],
                score=round(float(rng.uniform(0.5, 1.0)), 4),
            ))
    return records


def make_moons_problem(
    n_train_per_class: int = 100,
    n_test_per_class: int = 50,
    n_attributes: int = 6,
    noise: float = 0.04,
    seed: int = 0,
) -> tuple[Dataset, Dataset, ClassAttributeMatrix]:
    """Two interleaved half-circles scaled into [0,1]^2, with attribute vectors."""
    rng = np.random.default_rng(seed)
    attr_values = rng.uniform(0.0, 1.0, size=(2, n_attributes))
    attr_values /= np.linalg.norm(attr_values, axis=1, keepdims=True)
    cam = ClassAttributeMatrix(
        class_names=["moon_0", "moon_1"],
        attribute_names=[f"attr_{j:02d}" for j in range(n_attributes)],
        values=attr_values,
    )

    def _draw(split: str, per_class: int) -> Dataset:
        t0 = rng.uniform(0.0, np.pi, size=per_class)
        t1 = rng.uniform(0.0, np.pi, size=per_class)
        upper = np.column_stack([np.cos(t0), np.sin(t0)])
        lower = np.column_stack([1.0 - np.cos(t1), -np.sin(t1) + 0.5])
        points = np.vstack([upper, lower])
        points += rng.normal(0.0, noise, size=points.shape)
        # map the moons' bounding box into [0.1, 0.9]^2
        points = 0.1 + 0.8 * (points - [-1.1, -0.6]) / np.array([3.2, 1.7])
        points = np.clip(points, 0.0, 1.0)
        labels = np.array([0] * per_class + [1] * per_class)
        ids = [f"{split}-{k}-{i:04d}" for k in (0, 1) for i in range(per_class)]
        return Dataset(ids=ids, features=points, labels=labels, split=split)

    return _draw("train", n_train_per_class), _draw("test", n_test_per_class), cam
