"""Structured joint embedding: bilinear compatibility scoring, pairwise
ranking-loss SGD, attribute prediction, and nearest-embedding classification.

The model is a D x E matrix W scoring feature/class-attribute pairs as
features^T W attrs. Training ranks the correct class above the others: each
step finds the most violating class and, when the violation is positive,
adds the learning-rate-scaled outer product of the features with the
attribute difference between the true and violating class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from attrex import backends
from attrex.data import ClassAttributeMatrix, Dataset, EmbeddingModel
from attrex.errors import InputError

NEAREST_EUCLIDEAN = "nearest_euclidean"
MAX_COMPATIBILITY = "max_compatibility"
CLASSIFICATION_RULES = (NEAREST_EUCLIDEAN, MAX_COMPATIBILITY)

DeltaRule = Callable[[int, int], float]


def zero_one_delta(true_class: int, other_class: int) -> float:
    return 0.0 if true_class == other_class else 1.0


def _resolve_delta(delta_rule: str | DeltaRule) -> DeltaRule:
    if delta_rule == "zero_one":
        return zero_one_delta
    if callable(delta_rule):
        return delta_rule
    raise InputError(f"unknown delta rule {delta_rule!r}")


@dataclass
class RankingLossConfig:
    delta_rule: str = "zero_one"
    learning_rate: float = 0.01
    epochs: int = 100
    seed: int = 0
    sampling_rule: str = "exact"  # "exact" scans all classes, "sample_one" draws one
    init: str = "zeros"  # or "uniform" in [-init_scale, init_scale]
    init_scale: float = 1e-3
    classification_rule: str = NEAREST_EUCLIDEAN

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise InputError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.sampling_rule not in ("exact", "sample_one"):
            raise InputError(f"unknown sampling rule {self.sampling_rule!r}")
        if self.init not in ("zeros", "uniform"):
            raise InputError(f"unknown init {self.init!r}")
        if self.classification_rule not in CLASSIFICATION_RULES:
            raise InputError(
                f"unknown classification rule {self.classification_rule!r}"
            )
        _resolve_delta(self.delta_rule)


@dataclass
class PredictedAttributes:
    values: np.ndarray  # (E,)
    source_example_id: str = ""
    regime: str = "clean"


@dataclass
class StepReport:
    chosen_class: int
    loss: float  # hinge value of the most violating class
    updated: bool


def _check_features(model: EmbeddingModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (model.d,):
        raise InputError(
            f"features of shape {features.shape} do not match model input "
            f"dimension {model.d}"
        )
    return features


def compatibility(
    model: EmbeddingModel, features: np.ndarray, class_attrs: np.ndarray
) -> float:
    """Bilinear score features^T W class_attrs."""
    features = _check_features(model, features)
    class_attrs = np.asarray(class_attrs, dtype=np.float64)
    if class_attrs.shape != (model.e,):
        raise InputError(
            f"class attributes of shape {class_attrs.shape} do not match model "
            f"output dimension {model.e}"
        )
    return float(features @ model.w @ class_attrs)


def ranking_loss(
    model: EmbeddingModel,
    features: np.ndarray,
    true_class: int,
    other_class: int,
    class_matrix: ClassAttributeMatrix,
    delta_rule: str | DeltaRule = "zero_one",
) -> float:
    """Pairwise violation: cost(true, other) + score(other) - score(true)."""
    delta = _resolve_delta(delta_rule)
    score_other = compatibility(model, features, class_matrix.row(other_class))
    score_true = compatibility(model, features, class_matrix.row(true_class))
    return float(delta(true_class, other_class) + score_other - score_true)


def sgd_step(
    model: EmbeddingModel,
    features: np.ndarray,
    true_class: int,
    class_matrix: ClassAttributeMatrix,
    config: RankingLossConfig | None = None,
    candidate_classes: Sequence[int] | None = None,
) -> tuple[EmbeddingModel, StepReport]:
    """One ranking-SGD step; returns a new model (input left untouched).

    Scans candidate_classes (all classes by default) for the maximizer of
    cost + score(y) - score(true); on a positive violation by another class,
    applies w += learning_rate * outer(features, attrs(true) - attrs(chosen)).
    """
    config = config or RankingLossConfig()
    config.validate()
    features = _check_features(model, features)
    phi = class_matrix.values
    if phi.shape[1] != model.e:
        raise InputError(
            f"class matrix has {phi.shape[1]} attributes but model expects {model.e}"
        )
    n_classes = class_matrix.n_classes
    if not 0 <= true_class < n_classes:
        raise InputError(f"class index {true_class} out of range [0, {n_classes})")
    delta = _resolve_delta(config.delta_rule)

    scores = phi @ (features @ model.w)
    if candidate_classes is None:
        candidates = range(n_classes)
    else:
        candidates = [int(c) for c in candidate_classes]
        for c in candidates:
            if not 0 <= c < n_classes:
                raise InputError(f"class index {c} out of range [0, {n_classes})")

    best_class = -1
    best_loss = -np.inf
    for c in candidates:
        if c == true_class:
            loss_c = 0.0
        else:
            loss_c = (scores[c] - scores[true_class]) + delta(true_class, c)
        if loss_c > best_loss:
            best_loss = loss_c
            best_class = c

    hinge = max(0.0, float(best_loss))
    fired = best_class != true_class and best_loss > 0.0
    if fired:
        w = model.w + np.outer(features, phi[true_class] - phi[best_class]) * config.learning_rate
    else:
        w = model.w.copy()
    updated = EmbeddingModel(w=w, d=model.d, e=model.e,
                             training_config=dict(model.training_config))
    return updated, StepReport(chosen_class=best_class, loss=hinge, updated=fired)


def train(
    dataset: Dataset,
    class_matrix: ClassAttributeMatrix,
    config: RankingLossConfig | None = None,
) -> tuple[EmbeddingModel, list[float]]:
    """Ranking-loss SGD over the dataset; returns the model and the per-epoch
    mean hinge loss. Deterministic given the seed."""
    config = config or RankingLossConfig()
    config.validate()
    if dataset.n_examples == 0:
        raise InputError("training requires a nonempty dataset")
    if int(dataset.labels.max()) >= class_matrix.n_classes:
        raise InputError(
            f"label {int(dataset.labels.max())} out of range for "
            f"{class_matrix.n_classes} classes"
        )
    if config.delta_rule != "zero_one":
        return _train_generic(dataset, class_matrix, config)

    d, e = dataset.dim, class_matrix.n_attributes
    rng = np.random.default_rng(config.seed)
    if config.init == "uniform":
        w = rng.uniform(-config.init_scale, config.init_scale, size=(d, e))
    else:
        w = np.zeros((d, e))
    feats = np.ascontiguousarray(dataset.features)
    labels = np.ascontiguousarray(dataset.labels, dtype=np.int64)
    phi = np.ascontiguousarray(class_matrix.values)
    n_classes = class_matrix.n_classes
    no_candidates = np.empty(0, dtype=np.int64)

    trace: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(dataset.n_examples).astype(np.int64)
        if config.sampling_rule == "sample_one":
            draws = rng.integers(0, n_classes - 1, size=order.shape[0]) if n_classes > 1 \
                else np.zeros(order.shape[0], dtype=np.int64)
            candidates = (draws + (draws >= labels[order])).astype(np.int64)
        else:
            candidates = no_candidates
        trace.append(
            backends.sje_epoch(w, feats, labels, phi, config.learning_rate, order,
                               candidates)
        )

    model = EmbeddingModel(
        w=w, d=d, e=e,
        training_config={
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "seed": config.seed,
            "classification_rule": config.classification_rule,
            "sampling_rule": config.sampling_rule,
            "init": config.init,
        },
    )
    return model, trace


def _train_generic(
    dataset: Dataset, class_matrix: ClassAttributeMatrix, config: RankingLossConfig
) -> tuple[EmbeddingModel, list[float]]:
    """Step-by-step path for custom cost functions (no kernel support)."""
    d, e = dataset.dim, class_matrix.n_attributes
    rng = np.random.default_rng(config.seed)
    if config.init == "uniform":
        w = rng.uniform(-config.init_scale, config.init_scale, size=(d, e))
    else:
        w = np.zeros((d, e))
    model = EmbeddingModel(w=w, d=d, e=e)
    n_classes = class_matrix.n_classes
    trace: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(dataset.n_examples)
        if config.sampling_rule == "sample_one":
            draws = rng.integers(0, n_classes - 1, size=order.shape[0]) if n_classes > 1 \
                else np.zeros(order.shape[0], dtype=np.int64)
            candidates = draws + (draws >= dataset.labels[order])
        else:
            candidates = None
        total = 0.0
        for pos, n in enumerate(order):
            chosen = None if candidates is None else [int(candidates[pos])]
            model, report = sgd_step(
                model, dataset.features[n], int(dataset.labels[n]), class_matrix,
                config, candidate_classes=chosen,
            )
            total += report.loss
        trace.append(total / dataset.n_examples)
    model.training_config = {
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "seed": config.seed,
        "classification_rule": config.classification_rule,
        "sampling_rule": config.sampling_rule,
        "init": config.init,
    }
    return model, trace


def predict_attributes(
    model: EmbeddingModel,
    features: np.ndarray,
    example_id: str = "",
    regime: str = "clean",
) -> PredictedAttributes:
    """Project features into attribute space: features^T W."""
    features = _check_features(model, features)
    return PredictedAttributes(values=features @ model.w,
                               source_example_id=example_id, regime=regime)


def predict_attributes_batch(model: EmbeddingModel, features: np.ndarray) -> np.ndarray:
    """(N, D) features -> (N, E) predicted attribute matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.d:
        raise InputError(
            f"feature matrix of shape {features.shape} does not match model input "
            f"dimension {model.d}"
        )
    return features @ model.w


def classify(
    model: EmbeddingModel,
    features: np.ndarray,
    class_matrix: ClassAttributeMatrix,
    rule: str = NEAREST_EUCLIDEAN,
) -> int:
    """Assign the class whose attribute vector is nearest to the prediction
    (or the compatibility maximizer); ties go to the lowest class index."""
    return int(classify_batch(model, np.asarray(features, dtype=np.float64)[None, :],
                              class_matrix, rule)[0])


def classify_batch(
    model: EmbeddingModel,
    features: np.ndarray,
    class_matrix: ClassAttributeMatrix,
    rule: str = NEAREST_EUCLIDEAN,
) -> np.ndarray:
    if class_matrix.n_classes == 0:
        raise InputError("classify: empty class matrix")
    if class_matrix.n_attributes != model.e:
        raise InputError(
            f"class matrix has {class_matrix.n_attributes} attributes but model "
            f"expects {model.e}"
        )
    z = predict_attributes_batch(model, features)  # (N, E)
    phi = class_matrix.values
    if rule == NEAREST_EUCLIDEAN:
        # squared distances suffice for the argmin
        d2 = np.sum((z[:, None, :] - phi[None, :, :]) ** 2, axis=2)
        return np.argmin(d2, axis=1)
    if rule == MAX_COMPATIBILITY:
        return np.argmax(z @ phi.T, axis=1)
    raise InputError(f"unknown classification rule {rule!r} "
                     f"(expected one of {', '.join(CLASSIFICATION_RULES)})")
