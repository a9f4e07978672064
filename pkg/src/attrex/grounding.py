"""Discriminative attribute selection and grounding against detection records.

Selection ranks attribute coordinates by how much the predicted value exceeds
a contrast class's ground-truth value: for clean predictions the contrast is
the wrongly-assigned class, for adversarial predictions it is the true class.
Grounding matches the selected attribute names against detector output for
the same image after normalizing both vocabularies.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from attrex.data import DetectionRecord
from attrex.errors import InputError
from attrex.sje import PredictedAttributes

_LEADING_TOKENS = ("has", "is")
_WS = re.compile(r"\s+")


class AttributeNormalizer:
    """Canonicalizes attribute names so two vocabularies can be compared.

    Pipeline: lowercase, underscores to spaces, drop leading "has"/"is"
    tokens, collapse whitespace, then apply the optional synonym table
    (keys and values are themselves normalized).
    """

    def __init__(self, synonyms: dict[str, str] | None = None):
        self.synonyms: dict[str, str] = {}
        for key, value in (synonyms or {}).items():
            self.synonyms[self._base(key)] = self._base(value)

    @staticmethod
    def _base(name: str) -> str:
        text = _WS.sub(" ", name.lower().replace("_", " ")).strip()
        tokens = text.split(" ")
        while len(tokens) > 1 and tokens[0] in _LEADING_TOKENS:
            tokens = tokens[1:]
        return " ".join(tokens)

    def __call__(self, name: str) -> str:
        base = self._base(name)
        return self.synonyms.get(base, base)


def load_synonyms(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            table = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(table, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in table.items()
    ):
        raise InputError(f"{path}: synonym table must map strings to strings")
    return table


@dataclass
class SelectedAttributes:
    indices: list[int]  # most discriminative first
    names: list[str]
    regime: str
    k: int


@dataclass
class GroundingResult:
    image_id: str
    regime: str
    matches: list[tuple[str, DetectionRecord]]
    ungrounded: list[str]


def _select(
    predicted: np.ndarray,
    contrast_attrs: np.ndarray,
    attribute_names: Sequence[str],
    k: int,
    regime: str,
) -> SelectedAttributes:
    predicted = np.asarray(predicted, dtype=np.float64)
    contrast_attrs = np.asarray(contrast_attrs, dtype=np.float64)
    n_attrs = predicted.shape[0]
    if contrast_attrs.shape != (n_attrs,):
        raise InputError(
            f"selection: predicted length {n_attrs} vs class attributes "
            f"{contrast_attrs.shape[0]}"
        )
    if len(attribute_names) != n_attrs:
        raise InputError(
            f"selection: {len(attribute_names)} attribute names for {n_attrs} "
            f"coordinates"
        )
    if not 1 <= k <= n_attrs:
        raise InputError(f"k must lie in [1, {n_attrs}], got {k}")
    diff = predicted - contrast_attrs
    order = np.argsort(-diff, kind="stable")[:k]
    indices = [int(i) for i in order]
    return SelectedAttributes(
        indices=indices,
        names=[attribute_names[i] for i in indices],
        regime=regime,
        k=k,
    )


def select_clean(
    pred: PredictedAttributes,
    wrong_class_attrs: np.ndarray,
    attribute_names: Sequence[str],
    k: int,
) -> SelectedAttributes:
    """Top-k coordinates of (clean prediction - wrong-class attributes)."""
    return _select(pred.values, wrong_class_attrs, attribute_names, k, pred.regime)


def select_adversarial(
    pred_adv: PredictedAttributes,
    true_class_attrs: np.ndarray,
    attribute_names: Sequence[str],
    k: int,
) -> SelectedAttributes:
    """Top-k coordinates of (adversarial prediction - true-class attributes)."""
    return _select(pred_adv.values, true_class_attrs, attribute_names, k,
                   pred_adv.regime)


def match_detections(
    selected: SelectedAttributes,
    detections: Sequence[DetectionRecord],
    image_id: str,
    normalizer: AttributeNormalizer | None = None,
) -> GroundingResult:
    """Ground each selected attribute on the highest-scoring detection of the
    same image whose normalized attribute name matches; the rest are reported
    as ungrounded. Ties on score keep the earliest record."""
    normalizer = normalizer or AttributeNormalizer()
    by_name: dict[str, DetectionRecord] = {}
    for record in detections:
        if record.image_id != image_id:
            continue
        key = normalizer(record.attribute_name)
        best = by_name.get(key)
        if best is None or record.score > best.score:
            by_name[key] = record
    matches: list[tuple[str, DetectionRecord]] = []
    ungrounded: list[str] = []
    for name in selected.names:
        record = by_name.get(normalizer(name))
        if record is None:
            ungrounded.append(name)
        else:
            matches.append((name, record))
    return GroundingResult(
        image_id=image_id,
        regime=selected.regime,
        matches=matches,
        ungrounded=ungrounded,
    )


def grounding_result_to_dict(result: GroundingResult) -> dict:
    """Report schema: image_id, regime, matches (attribute/box/object/score),
    ungrounded names."""
    return {
        "image_id": result.image_id,
        "regime": result.regime,
        "matches": [
            {
                "attribute": name,
                "box": list(record.box),
                "object": record.object_name,
                "score": record.score,
            }
            for name, record in result.matches
        ],
        "ungrounded": list(result.ungrounded),
    }
