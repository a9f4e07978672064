"""The attacked differentiable classifier: a one-hidden-layer tanh softmax
network over feature vectors, with exact input gradients and mini-batch SGD
training. hidden_width=0 degenerates to a linear softmax model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from attrex import backends
from attrex.data import Dataset, SoftmaxModel
from attrex.errors import InputError


@dataclass
class ForwardTrace:
    logits: np.ndarray
    probabilities: np.ndarray
    hidden: np.ndarray | None
    loss: float | None


@dataclass
class SoftmaxTrainConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    seed: int = 0
    batch_size: int = 32
    hidden_width: int = 32
    n_classes: int | None = None

    def validate(self) -> None:
        if self.learning_rate < 0:
            raise InputError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise InputError(f"batch size must be >= 1, got {self.batch_size}")
        if self.hidden_width < 0:
            raise InputError(f"hidden width must be >= 0, got {self.hidden_width}")


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    accuracy: float


def _check_input(model: SoftmaxModel, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise InputError(
            f"input of shape {x.shape} does not match model dimension {model.dim}"
        )
    return x


def _check_label(model: SoftmaxModel, label: int) -> int:
    if not 0 <= label < model.n_classes:
        raise InputError(
            f"label {label} out of range [0, {model.n_classes})"
        )
    return int(label)


def forward(model: SoftmaxModel, x: np.ndarray, label: int | None = None) -> ForwardTrace:
    """Logits and max-stabilized softmax probabilities; loss if a label is given."""
    x = _check_input(model, x)
    hidden = None
    if model.hidden_width > 0:
        hidden = np.tanh(model.w1 @ x + model.b1)
        logits = model.w2 @ hidden + model.b2
    else:
        logits = model.w2 @ x + model.b2
    shifted = logits - np.max(logits)
    expd = np.exp(shifted)
    probabilities = expd / expd.sum()
    loss = None
    if label is not None:
        label = _check_label(model, label)
        loss = float(np.log(expd.sum()) - shifted[label])
    return ForwardTrace(logits=logits, probabilities=probabilities, hidden=hidden,
                        loss=loss)


def loss_and_input_grad(model: SoftmaxModel, x: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Cross-entropy loss and its analytic gradient w.r.t. the input."""
    x = _check_input(model, x)
    label = _check_label(model, label)
    return backends.loss_input_grad(model.w1, model.b1, model.w2, model.b2, x, label)


def batch_logits(model: SoftmaxModel, features: np.ndarray) -> np.ndarray:
    """Logits for a (N, D) feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.dim:
        raise InputError(
            f"feature matrix of shape {features.shape} does not match model "
            f"dimension {model.dim}"
        )
    if model.hidden_width > 0:
        hidden = np.tanh(features @ model.w1.T + model.b1)
        return hidden @ model.w2.T + model.b2
    return features @ model.w2.T + model.b2


def predict_labels(model: SoftmaxModel, features: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index."""
    return np.argmax(batch_logits(model, features), axis=1)


def accuracy(model: SoftmaxModel, dataset: Dataset) -> float:
    """Fraction of argmax-correct predictions."""
    if dataset.n_examples == 0:
        raise InputError("accuracy: empty dataset")
    return float(np.mean(predict_labels(model, dataset.features) == dataset.labels))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _batch_forward(w1, b1, w2, b2, features):
    if w1.shape[0] > 0:
        hidden = np.tanh(features @ w1.T + b1)
        return hidden @ w2.T + b2, hidden
    return features @ w2.T + b2, None


def _batch_param_grads(w1, b1, w2, b2, features, labels):
    """Summed cross-entropy loss and mean parameter gradients for one batch."""
    n = features.shape[0]
    rows = np.arange(n)
    logits, hidden = _batch_forward(w1, b1, w2, b2, features)
    m = logits.max(axis=1, keepdims=True)
    expd = np.exp(logits - m)
    total = expd.sum(axis=1, keepdims=True)
    loss_sum = float(np.sum(np.log(total[:, 0]) + m[:, 0] - logits[rows, labels]))
    dlogits = expd / total
    dlogits[rows, labels] -= 1.0
    dlogits /= n
    if hidden is not None:
        gw2 = dlogits.T @ hidden
        gb2 = dlogits.sum(axis=0)
        dpre = (1.0 - hidden * hidden) * (dlogits @ w2)
        gw1 = dpre.T @ features
        gb1 = dpre.sum(axis=0)
    else:
        gw2 = dlogits.T @ features
        gb2 = dlogits.sum(axis=0)
        gw1 = np.zeros_like(w1)
        gb1 = np.zeros_like(b1)
    return loss_sum, gw1, gb1, gw2, gb2


def _init_params(rng: np.random.Generator, dim: int, n_classes: int, hidden: int):
    if hidden > 0:
        w1 = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(hidden, dim))
        w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(n_classes, hidden))
    else:
        w1 = np.zeros((0, dim))
        w2 = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(n_classes, dim))
    return w1, np.zeros(hidden), w2, np.zeros(n_classes)


AdvBatchHook = Callable[
    [np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    np.ndarray,
]


def _run_training(
    dataset: Dataset,
    config: SoftmaxTrainConfig,
    adv_hook: AdvBatchHook | None = None,
    alpha_mix: float = 1.0,
) -> tuple[SoftmaxModel, list[EpochStats]]:
    """Mini-batch SGD shared by plain and adversarially-augmented training.

    When adv_hook is set and alpha_mix < 1, each batch's adversarial twin is
    regenerated against the current parameters and the update uses
    alpha_mix * clean + (1 - alpha_mix) * adversarial gradients. alpha_mix=1
    takes exactly the plain-training code path (the hook is never called),
    so traces and parameters match plain training bit for bit.
    """
    config.validate()
    if dataset.n_examples == 0:
        raise InputError("training requires a nonempty dataset")
    n_classes = config.n_classes or int(dataset.labels.max()) + 1
    if int(dataset.labels.max()) >= n_classes:
        raise InputError(
            f"label {int(dataset.labels.max())} out of range for {n_classes} classes"
        )
    rng = np.random.default_rng(config.seed)
    w1, b1, w2, b2 = _init_params(rng, dataset.dim, n_classes, config.hidden_width)
    lr = config.learning_rate
    use_adv = adv_hook is not None and alpha_mix < 1.0

    trace: list[EpochStats] = []
    for epoch in range(config.epochs):
        order = rng.permutation(dataset.n_examples)
        loss_total = 0.0
        for start in range(0, dataset.n_examples, config.batch_size):
            batch = order[start:start + config.batch_size]
            feats = dataset.features[batch]
            labels = dataset.labels[batch]
            if use_adv:
                adv = adv_hook(w1, b1, w2, b2, feats, labels)
                adv_loss, agw1, agb1, agw2, agb2 = _batch_param_grads(
                    w1, b1, w2, b2, adv, labels
                )
                if alpha_mix == 0.0:
                    loss_total += adv_loss
                    gw1, gb1, gw2, gb2 = agw1, agb1, agw2, agb2
                else:
                    clean_loss, gw1, gb1, gw2, gb2 = _batch_param_grads(
                        w1, b1, w2, b2, feats, labels
                    )
                    loss_total += alpha_mix * clean_loss + (1.0 - alpha_mix) * adv_loss
                    gw1 = alpha_mix * gw1 + (1.0 - alpha_mix) * agw1
                    gb1 = alpha_mix * gb1 + (1.0 - alpha_mix) * agb1
                    gw2 = alpha_mix * gw2 + (1.0 - alpha_mix) * agw2
                    gb2 = alpha_mix * gb2 + (1.0 - alpha_mix) * agb2
            else:
                batch_loss, gw1, gb1, gw2, gb2 = _batch_param_grads(
                    w1, b1, w2, b2, feats, labels
                )
                loss_total += batch_loss
            w1 = w1 - lr * gw1
            b1 = b1 - lr * gb1
            w2 = w2 - lr * gw2
            b2 = b2 - lr * gb2
        logits, _ = _batch_forward(w1, b1, w2, b2, dataset.features)
        acc = float(np.mean(np.argmax(logits, axis=1) == dataset.labels))
        trace.append(EpochStats(epoch=epoch, mean_loss=loss_total / dataset.n_examples,
                                accuracy=acc))

    model = SoftmaxModel(
        w1=w1, b1=b1, w2=w2, b2=b2, hidden_width=config.hidden_width,
        training_config={
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "seed": config.seed,
            "batch_size": config.batch_size,
            "hidden_width": config.hidden_width,
        },
    )
    return model, trace


def train_softmax(
    dataset: Dataset, config: SoftmaxTrainConfig | None = None
) -> tuple[SoftmaxModel, list[EpochStats]]:
    """Train on cross-entropy with mini-batch SGD; deterministic given the seed."""
    return _run_training(dataset, config or SoftmaxTrainConfig())
