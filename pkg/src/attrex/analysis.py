"""Attribute-distance analysis of attack effects.

Four paired-distance scenarios contrast, per example, how far the predicted
attribute vector moved and how far apart the involved class attribute vectors
are; distances are Euclidean, optionally restricted to the attribute
coordinates that change most under perturbation. Non-qualifying examples are
skipped (the populations are filtered subsets), never errors.

Scenario populations and distance pairs:
  a  clean correct, adversarial wrong:   d1 = |Zc - Za|,        d2 = |phi_true - phi_wrong|
  b  wrong standard, correct with AT:    d1 = |Za_AT - Za|,     d2 = |phi_true - phi_wrong|
  c  adversarial wrong:                  d1 = |Za - phi_wrong|, d2 = |Za - phi_true|
  d  wrong despite AT:                   d1 = |Za_AT - phi_wrong_AT|, d2 = |Za_AT - phi_true|
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from attrex.data import (
    REGIME_ADV,
    REGIME_ADV_AT,
    REGIME_CLEAN,
    AttributePredictionRecord,
    ClassAttributeMatrix,
)
from attrex.errors import InputError

SCENARIOS = ("a", "b", "c", "d")


@dataclass
class AttributeQuadruple:
    """Per-example predicted attribute vectors across regimes plus the
    classes assigned to them by the nearest-embedding rule."""

    example_id: str
    z_clean: np.ndarray
    z_adv: np.ndarray
    true_class: int
    predicted_clean_class: int
    predicted_adv_class: int
    z_adv_at: np.ndarray | None = None
    predicted_adv_at_class: int | None = None


@dataclass
class DistancePair:
    example_id: str
    scenario: str
    d1: float
    d2: float


@dataclass
class Histogram:
    bin_edges: np.ndarray  # length bins + 1, strictly increasing
    counts_d1: np.ndarray
    counts_d2: np.ndarray


def build_quadruples(
    clean: Sequence[AttributePredictionRecord],
    adv: Sequence[AttributePredictionRecord],
    adv_at: Sequence[AttributePredictionRecord] | None = None,
) -> list[AttributeQuadruple]:
    """Join per-regime prediction records on example id (clean order kept)."""
    for records, regime in ((clean, REGIME_CLEAN), (adv, REGIME_ADV)):
        for r in records:
            if r.regime != regime:
                raise InputError(
                    f"record {r.example_id!r}: expected regime {regime!r}, "
                    f"got {r.regime!r}"
                )
    adv_by_id = {r.example_id: r for r in adv}
    at_by_id = {}
    if adv_at is not None:
        for r in adv_at:
            if r.regime != REGIME_ADV_AT:
                raise InputError(
                    f"record {r.example_id!r}: expected regime {REGIME_ADV_AT!r}, "
                    f"got {r.regime!r}"
                )
            at_by_id[r.example_id] = r
    quadruples = []
    for c in clean:
        if c.example_id not in adv_by_id:
            raise InputError(f"example {c.example_id!r} missing from adversarial records")
        a = adv_by_id[c.example_id]
        if a.true_label != c.true_label:
            raise InputError(f"example {c.example_id!r}: true labels disagree across regimes")
        at = at_by_id.get(c.example_id)
        if adv_at is not None and at is None:
            raise InputError(f"example {c.example_id!r} missing from AT records")
        quadruples.append(AttributeQuadruple(
            example_id=c.example_id,
            z_clean=c.values,
            z_adv=a.values,
            true_class=c.true_label,
            predicted_clean_class=c.predicted_class,
            predicted_adv_class=a.predicted_class,
            z_adv_at=None if at is None else at.values,
            predicted_adv_at_class=None if at is None else at.predicted_class,
        ))
    return quadruples


def restrict_to_top_changed(
    quadruples: Sequence[AttributeQuadruple], fraction: float
) -> tuple[np.ndarray, list[AttributeQuadruple]]:
    """Keep the ceil(fraction * E) attribute coordinates whose mean absolute
    clean-to-adversarial change is largest.

    The ranking population is the qualifying examples (clean classified
    correctly, adversarial misclassified). Returns the kept indices in rank
    order plus copies of all quadruples sliced to those coordinates.
    """
    if not quadruples:
        raise InputError("restrict_to_top_changed: no quadruples")
    if not 0.0 < fraction <= 1.0:
        raise InputError(f"fraction must lie in (0, 1], got {fraction}")
    n_attrs = quadruples[0].z_clean.shape[0]
    qualifying = [
        q for q in quadruples
        if q.predicted_clean_class == q.true_class
        and q.predicted_adv_class != q.true_class
    ]
    if not qualifying:
        raise InputError(
            "restrict_to_top_changed: no qualifying examples (clean-correct and "
            "adversarially misclassified)"
        )
    changes = np.vstack([np.abs(q.z_clean - q.z_adv) for q in qualifying])
    mean_change = changes.mean(axis=0)
    keep = math.ceil(fraction * n_attrs)
    indices = np.argsort(-mean_change, kind="stable")[:keep]

    restricted = []
    for q in quadruples:
        restricted.append(replace(
            q,
            z_clean=q.z_clean[indices],
            z_adv=q.z_adv[indices],
            z_adv_at=None if q.z_adv_at is None else q.z_adv_at[indices],
        ))
    return indices, restricted


def _take(vec: np.ndarray, indices: np.ndarray | None) -> np.ndarray:
    return vec if indices is None else vec[indices]


def _dist(u: np.ndarray, v: np.ndarray) -> float:
    if u.shape != v.shape:
        raise InputError(
            f"distance: vector lengths differ ({u.shape[0]} vs {v.shape[0]})"
        )
    return float(np.linalg.norm(u - v))


def _require_at(quad: AttributeQuadruple) -> None:
    if quad.z_adv_at is None or quad.predicted_adv_at_class is None:
        raise InputError(
            f"example {quad.example_id!r}: AT predictions required for this scenario"
        )


def scenario_a(
    quad: AttributeQuadruple,
    class_matrix: ClassAttributeMatrix,
    indices: np.ndarray | None = None,
) -> DistancePair | None:
    """Moved prediction vs. class-attribute gap, standard training."""
    if quad.predicted_clean_class != quad.true_class:
        return None
    if quad.predicted_adv_class == quad.true_class:
        return None
    phi = class_matrix.values
    return DistancePair(
        example_id=quad.example_id,
        scenario="a",
        d1=_dist(_take(quad.z_clean, indices), _take(quad.z_adv, indices)),
        d2=_dist(_take(phi[quad.true_class], indices),
                 _take(phi[quad.predicted_adv_class], indices)),
    )


def scenario_b(
    quad: AttributeQuadruple,
    class_matrix: ClassAttributeMatrix,
    indices: np.ndarray | None = None,
) -> DistancePair | None:
    """Prediction recovery under adversarial training vs. class-attribute gap."""
    _require_at(quad)
    if quad.predicted_adv_class == quad.true_class:
        return None
    if quad.predicted_adv_at_class != quad.true_class:
        return None
    phi = class_matrix.values
    return DistancePair(
        example_id=quad.example_id,
        scenario="b",
        d1=_dist(_take(quad.z_adv_at, indices), _take(quad.z_adv, indices)),
        d2=_dist(_take(phi[quad.true_class], indices),
                 _take(phi[quad.predicted_adv_class], indices)),
    )


def scenario_c(
    quad: AttributeQuadruple,
    class_matrix: ClassAttributeMatrix,
    indices: np.ndarray | None = None,
) -> DistancePair | None:
    """Adversarial prediction against wrong-class vs. true-class attributes."""
    if quad.predicted_adv_class == quad.true_class:
        return None
    phi = class_matrix.values
    z = _take(quad.z_adv, indices)
    return DistancePair(
        example_id=quad.example_id,
        scenario="c",
        d1=_dist(z, _take(phi[quad.predicted_adv_class], indices)),
        d2=_dist(z, _take(phi[quad.true_class], indices)),
    )


def scenario_d(
    quad: AttributeQuadruple,
    class_matrix: ClassAttributeMatrix,
    indices: np.ndarray | None = None,
) -> DistancePair | None:
    """Like scenario c but for examples still misclassified after AT."""
    _require_at(quad)
    if quad.predicted_adv_at_class == quad.true_class:
        return None
    phi = class_matrix.values
    z = _take(quad.z_adv_at, indices)
    return DistancePair(
        example_id=quad.example_id,
        scenario="d",
        d1=_dist(z, _take(phi[quad.predicted_adv_at_class], indices)),
        d2=_dist(z, _take(phi[quad.true_class], indices)),
    )


SCENARIO_FUNCS: dict[str, Callable[..., DistancePair | None]] = {
    "a": scenario_a,
    "b": scenario_b,
    "c": scenario_c,
    "d": scenario_d,
}


def compute_scenario(
    name: str,
    quadruples: Sequence[AttributeQuadruple],
    class_matrix: ClassAttributeMatrix,
    indices: np.ndarray | None = None,
) -> list[DistancePair]:
    """Distance pairs for every qualifying example, in input order."""
    if name not in SCENARIO_FUNCS:
        raise InputError(f"unknown scenario {name!r} (expected one of a, b, c, d)")
    func = SCENARIO_FUNCS[name]
    pairs = []
    for quad in quadruples:
        pair = func(quad, class_matrix, indices)
        if pair is not None:
            pairs.append(pair)
    return pairs


def build_histogram(pairs: Sequence[DistancePair], bins: int = 30) -> Histogram:
    """Equal-width bins over [0, max distance], shared across both series."""
    if not pairs:
        raise InputError("build_histogram: no distance pairs")
    if bins < 1:
        raise InputError(f"bins must be >= 1, got {bins}")
    d1 = np.array([p.d1 for p in pairs])
    d2 = np.array([p.d2 for p in pairs])
    top = float(max(d1.max(), d2.max()))
    if top <= 0.0:
        top = 1.0
    edges = np.linspace(0.0, top, bins + 1)
    counts_d1, _ = np.histogram(d1, bins=edges)
    counts_d2, _ = np.histogram(d2, bins=edges)
    return Histogram(bin_edges=edges, counts_d1=counts_d1, counts_d2=counts_d2)


def write_distances_csv(pairs: Sequence[DistancePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("example_id,scenario,d1,d2\n")
        for p in pairs:
            fh.write(f"{p.example_id},{p.scenario},{p.d1!r},{p.d2!r}\n")


def write_histogram_csv(hist: Histogram, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("bin_lo,bin_hi,count_d1,count_d2\n")
        for i in range(hist.counts_d1.shape[0]):
            fh.write(
                f"{hist.bin_edges[i]!r},{hist.bin_edges[i + 1]!r},"
                f"{int(hist.counts_d1[i])},{int(hist.counts_d2[i])}\n"
            )
