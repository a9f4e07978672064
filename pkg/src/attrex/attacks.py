"""Untargeted/targeted iterated gradient-sign attacks, the projected variant
with random starts, dataset-level attack evaluation, and adversarial training.

All attacks operate on the classifier's feature-space inputs under an l-inf
budget: each step moves by the step size in the gradient-sign direction, then
the iterate is clamped into the eps-ball around the original point and into
the valid data range. Untargeted attacks ascend the loss at the true label;
targeted attacks descend the loss at the target label.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from attrex import backends, classifier
from attrex.classifier import EpochStats, SoftmaxTrainConfig, _run_training
from attrex.data import Dataset, SoftmaxModel
from attrex.errors import InputError

UNTARGETED = "untargeted"
TARGETED = "targeted"

THREADS_ENV = "ATTREX_THREADS"


@dataclass
class AttackConfig:
    eps: float = 0.06
    alpha: float | None = None  # step size; defaults to eps / 4
    iterations: int = 10
    mode: str = UNTARGETED
    target_rule: str = "random_other_label"  # or "fixed"
    fixed_target: int | None = None
    random_start: bool = False
    clamp: tuple[float, float] = (0.0, 1.0)
    seed: int = 0

    @property
    def step_size(self) -> float:
        return self.alpha if self.alpha is not None else self.eps / 4.0

    def validate(self) -> None:
        if self.eps < 0:
            raise InputError(f"eps must be nonnegative, got {self.eps}")
        if self.iterations < 1:
            raise InputError(f"iterations must be >= 1, got {self.iterations}")
        if self.mode not in (UNTARGETED, TARGETED):
            raise InputError(f"unknown attack mode {self.mode!r}")
        if self.target_rule not in ("random_other_label", "fixed"):
            raise InputError(f"unknown target rule {self.target_rule!r}")
        if self.target_rule == "fixed" and self.mode == TARGETED and self.fixed_target is None:
            raise InputError("target rule 'fixed' requires fixed_target")
        lo, hi = self.clamp
        if lo > hi:
            raise InputError(f"clamp range lo ({lo}) exceeds hi ({hi})")
        if self.step_size <= 0 and self.eps > 0:
            raise InputError(f"step size must be positive, got {self.step_size}")


@dataclass
class AdversarialExample:
    original_id: str
    perturbed_features: np.ndarray
    true_label: int | None
    predicted_label_clean: int
    predicted_label_adv: int
    attack: AttackConfig
    success: bool
    target_label: int | None = None


@dataclass
class AdvTrainConfig:
    alpha_mix: float = 0.5
    attack: AttackConfig = field(default_factory=lambda: AttackConfig(
        eps=0.12, iterations=7, random_start=True))
    train: SoftmaxTrainConfig = field(default_factory=SoftmaxTrainConfig)

    def validate(self) -> None:
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise InputError(f"alpha_mix must lie in [0, 1], got {self.alpha_mix}")
        self.attack.validate()
        if self.attack.mode != UNTARGETED:
            raise InputError("adversarial training uses untargeted inner attacks")
        self.train.validate()


@dataclass
class AttackSummary:
    eps: float
    mode: str
    clean_accuracy: float
    adversarial_accuracy: float
    success_rate: float
    misclassification_rate: float
    n_examples: int


def _check_point(model: SoftmaxModel, x: np.ndarray, cfg: AttackConfig) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise InputError(
            f"input of shape {x.shape} does not match model dimension {model.dim}"
        )
    lo, hi = cfg.clamp
    if x.min() < lo or x.max() > hi:
        raise InputError(
            f"input lies outside the clamp range [{lo}, {hi}]"
        )
    return x


def _predict_one(model: SoftmaxModel, x: np.ndarray) -> int:
    return int(classifier.predict_labels(model, x[None, :])[0])


def _run_attack(
    model: SoftmaxModel,
    x: np.ndarray,
    x_start: np.ndarray,
    loss_label: int,
    cfg: AttackConfig,
    targeted: bool,
    true_label: int | None,
    target_label: int | None,
    example_id: str = "",
) -> AdversarialExample:
    x_hat = backends.attack_steps(
        model.w1, model.b1, model.w2, model.b2, x_start, x, loss_label,
        cfg.eps, cfg.step_size, cfg.iterations, cfg.clamp[0], cfg.clamp[1],
        targeted,
    )
    pred_clean = _predict_one(model, x)
    pred_adv = _predict_one(model, x_hat)
    if targeted:
        success = pred_adv == target_label
    else:
        success = pred_adv != true_label
    return AdversarialExample(
        original_id=example_id,
        perturbed_features=x_hat,
        true_label=true_label,
        predicted_label_clean=pred_clean,
        predicted_label_adv=pred_adv,
        attack=cfg,
        success=success,
        target_label=target_label,
    )


def ifgsm(
    model: SoftmaxModel, x: np.ndarray, label: int, cfg: AttackConfig,
    example_id: str = "",
) -> AdversarialExample:
    """Iterated gradient-sign ascent on the loss at the true label."""
    cfg.validate()
    if cfg.mode != UNTARGETED:
        raise InputError(f"ifgsm requires an untargeted config, got mode {cfg.mode!r}")
    x = _check_point(model, x, cfg)
    label = int(label)
    if not 0 <= label < model.n_classes:
        raise InputError(f"label {label} out of range [0, {model.n_classes})")
    return _run_attack(model, x, x, label, cfg, targeted=False, true_label=label,
                       target_label=None, example_id=example_id)


def ifgsm_targeted(
    model: SoftmaxModel, x: np.ndarray, target: int, cfg: AttackConfig,
    true_label: int | None = None, example_id: str = "",
) -> AdversarialExample:
    """Iterated gradient-sign descent on the loss at the target label;
    success means the prediction reached the target."""
    cfg.validate()
    if cfg.mode != TARGETED:
        raise InputError(
            f"ifgsm_targeted requires a targeted config, got mode {cfg.mode!r}"
        )
    x = _check_point(model, x, cfg)
    target = int(target)
    if not 0 <= target < model.n_classes:
        raise InputError(f"target {target} out of range [0, {model.n_classes})")
    return _run_attack(model, x, x, target, cfg, targeted=True, true_label=true_label,
                       target_label=target, example_id=example_id)


def pgd(
    model: SoftmaxModel, x: np.ndarray, label: int, cfg: AttackConfig,
    rng: np.random.Generator | None = None, example_id: str = "",
) -> AdversarialExample:
    """Same loop as ifgsm, optionally starting from a uniform point in the
    eps-ball; without a random start this is bit-identical to ifgsm."""
    cfg.validate()
    if cfg.mode != UNTARGETED:
        raise InputError(f"pgd requires an untargeted config, got mode {cfg.mode!r}")
    x = _check_point(model, x, cfg)
    label = int(label)
    if not 0 <= label < model.n_classes:
        raise InputError(f"label {label} out of range [0, {model.n_classes})")
    if cfg.random_start and cfg.eps > 0:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        x_start = np.clip(x + rng.uniform(-cfg.eps, cfg.eps, size=x.shape),
                          cfg.clamp[0], cfg.clamp[1])
    else:
        x_start = x
    return _run_attack(model, x, x_start, label, cfg, targeted=False,
                       true_label=label, target_label=None, example_id=example_id)


# ---------------------------------------------------------------------------
# Dataset-level evaluation
# ---------------------------------------------------------------------------


def _example_seed(seed: int, example_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{example_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def draw_target(rng: np.random.Generator, true_label: int, n_classes: int) -> int:
    """Uniform draw over the labels other than the true one."""
    if n_classes < 2:
        raise InputError("targeted attacks need at least 2 classes")
    draw = int(rng.integers(0, n_classes - 1))
    return draw + 1 if draw >= true_label else draw


def _max_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def attack_dataset(
    model: SoftmaxModel, dataset: Dataset, cfg: AttackConfig
) -> tuple[list[AdversarialExample], AttackSummary]:
    """Attack every example with a per-example seed derived from (seed, id).

    Results are merged in dataset order regardless of worker count, so the
    output is independent of the ATTREX_THREADS setting.
    """
    cfg.validate()
    if dataset.n_examples == 0:
        raise InputError("attack_dataset: empty dataset")
    clean_preds = classifier.predict_labels(model, dataset.features)

    def _one(i: int) -> AdversarialExample:
        example_id = dataset.ids[i]
        label = int(dataset.labels[i])
        rng = np.random.default_rng(_example_seed(cfg.seed, example_id))
        if cfg.mode == TARGETED:
            if cfg.target_rule == "fixed":
                target = int(cfg.fixed_target)  # validated by cfg.validate()
            else:
                target = draw_target(rng, label, model.n_classes)
            x = _check_point(model, dataset.features[i], cfg)
            x_start = x
            if cfg.random_start and cfg.eps > 0:
                x_start = np.clip(x + rng.uniform(-cfg.eps, cfg.eps, size=x.shape),
                                  cfg.clamp[0], cfg.clamp[1])
            return _run_attack(model, x, x_start, target, cfg, targeted=True,
                               true_label=label, target_label=target,
                               example_id=example_id)
        return pgd(model, dataset.features[i], label, cfg, rng=rng,
                   example_id=example_id)

    workers = _max_workers()
    indices = range(dataset.n_examples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, indices))
    else:
        results = [_one(i) for i in indices]

    adv_preds = np.array([r.predicted_label_adv for r in results])
    summary = AttackSummary(
        eps=cfg.eps,
        mode=cfg.mode,
        clean_accuracy=float(np.mean(clean_preds == dataset.labels)),
        adversarial_accuracy=float(np.mean(adv_preds == dataset.labels)),
        success_rate=float(np.mean([r.success for r in results])),
        misclassification_rate=float(np.mean(adv_preds != dataset.labels)),
        n_examples=dataset.n_examples,
    )
    return results, summary


def perturbed_dataset(
    results: list[AdversarialExample], dataset: Dataset, regime: str = "adversarial"
) -> Dataset:
    """Repack attack outputs as a Dataset in the original example order."""
    features = np.vstack([r.perturbed_features for r in results])
    return Dataset(ids=list(dataset.ids), features=features,
                   labels=dataset.labels.copy(), split=dataset.split, regime=regime)


def write_summary_csv(summaries: list[AttackSummary], path: str | Path) -> None:
    """Emit the attack summary table: eps,clean_acc,adv_acc,success_rate,mode."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("eps,clean_acc,adv_acc,success_rate,mode\n")
        for s in summaries:
            fh.write(
                f"{s.eps:g},{s.clean_accuracy:.6f},{s.adversarial_accuracy:.6f},"
                f"{s.success_rate:.6f},{s.mode}\n"
            )


# ---------------------------------------------------------------------------
# Adversarial training
# ---------------------------------------------------------------------------


def adversarial_train(
    dataset: Dataset, cfg: AdvTrainConfig
) -> tuple[SoftmaxModel, list[EpochStats]]:
    """Mini-batch SGD on the mixed clean/adversarial loss, regenerating the
    adversarial batch against the current parameters every step."""
    cfg.validate()
    attack = cfg.attack
    attack_rng = np.random.default_rng(attack.seed)
    lo, hi = attack.clamp

    def _hook(w1, b1, w2, b2, feats, labels):
        n = feats.shape[0]
        if attack.random_start and attack.eps > 0:
            starts = np.clip(
                feats + attack_rng.uniform(-attack.eps, attack.eps, size=feats.shape),
                lo, hi,
            )
        else:
            starts = feats
        adv = np.empty_like(feats)
        for i in range(n):
            adv[i] = backends.attack_steps(
                w1, b1, w2, b2, starts[i], feats[i], int(labels[i]),
                attack.eps, attack.step_size, attack.iterations, lo, hi, False,
            )
        return adv

    model, trace = _run_training(dataset, cfg.train, adv_hook=_hook,
                                 alpha_mix=cfg.alpha_mix)
    model.training_config["adversarial"] = {
        "alpha_mix": cfg.alpha_mix,
        "eps": attack.eps,
        "step_size": attack.step_size,
        "iterations": attack.iterations,
        "random_start": attack.random_start,
        "seed": attack.seed,
    }
    return model, trace
