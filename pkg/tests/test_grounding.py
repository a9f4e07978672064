import numpy as np
import pytest

from attrex import grounding
from attrex.data import DetectionRecord
from attrex.errors import InputError
from attrex.sje import PredictedAttributes


def pred(values, regime="clean"):
    return PredictedAttributes(values=np.asarray(values, dtype=np.float64),
                               source_example_id="img", regime=regime)


def det(image_id, attribute, score, box=(0.0, 0.0, 10.0, 10.0), obj="thing"):
    return DetectionRecord(image_id=image_id, box=box, attribute_name=attribute,
                           object_name=obj, score=score)


NAMES4 = ["a0", "a1", "a2", "a3"]


class TestSelection:
    def test_all_zero_differences_tie_break_by_index(self):
        sel = grounding.select_clean(pred([0.5, 0.5, 0.5, 0.5]),
                                     np.full(4, 0.5), NAMES4, k=2)
        assert sel.indices == [0, 1]
        assert sel.names == ["a0", "a1"]

    def test_clean_direct_evaluation(self):
        sel = grounding.select_clean(pred([0.9, 0.1]), np.array([0.2, 0.3]),
                                     ["x", "y"], k=1)
        assert sel.indices == [0]

    def test_adversarial_direct_evaluation(self):
        sel = grounding.select_adversarial(pred([0.1, 0.8], regime="adversarial"),
                                           np.array([0.4, 0.2]), ["x", "y"], k=1)
        assert sel.indices == [1]
        assert sel.regime == "adversarial"

    def test_k_equals_e_is_a_sorted_permutation(self):
        rng = np.random.default_rng(0)
        z, phi = rng.normal(size=4), rng.normal(size=4)
        sel = grounding.select_clean(pred(z), phi, NAMES4, k=4)
        diff = z - phi
        assert sorted(sel.indices) == [0, 1, 2, 3]
        assert all(diff[a] >= diff[b] for a, b in zip(sel.indices, sel.indices[1:]))

    @pytest.mark.parametrize("n_attrs,k", [(85, 50), (312, 50), (359, 100)])
    def test_canonical_selection_sizes(self, n_attrs, k):
        rng = np.random.default_rng(n_attrs)
        sel = grounding.select_adversarial(
            pred(rng.normal(size=n_attrs), regime="adversarial"),
            rng.normal(size=n_attrs), [f"a{i}" for i in range(n_attrs)], k=k,
        )
        assert len(sel.indices) == k == sel.k
        assert len(set(sel.indices)) == k

    def test_sort_oracle_including_ties(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            n_attrs = int(rng.integers(2, 12))
            # coarse grid values force ties
            z = rng.integers(0, 4, n_attrs) / 4.0
            phi = rng.integers(0, 4, n_attrs) / 4.0
            k = int(rng.integers(1, n_attrs + 1))
            names = [f"a{i}" for i in range(n_attrs)]
            sel = grounding.select_clean(pred(z), phi, names, k)
            diff = z - phi
            expected = sorted(range(n_attrs), key=lambda i: (-diff[i], i))[:k]
            assert sel.indices == expected

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(2)
        z, phi = rng.normal(size=6), rng.normal(size=6)
        names = [f"a{i}" for i in range(6)]
        base = grounding.select_clean(pred(z), phi, names, k=3)
        shifted = grounding.select_clean(pred(z + 0.75), phi + 0.75, names, k=3)
        assert base.indices == shifted.indices

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(3)
        z, phi = rng.normal(size=5), rng.normal(size=5)
        names = [f"a{i}" for i in range(5)]
        perm = rng.permutation(5)
        base = grounding.select_clean(pred(z), phi, names, k=5)
        permuted = grounding.select_clean(
            pred(z[perm]), phi[perm], [names[i] for i in perm], k=5
        )
        assert [names[i] for i in base.indices] == \
            [[names[i] for i in perm][j] for j in permuted.indices]

    def test_k_out_of_range(self):
        with pytest.raises(InputError):
            grounding.select_clean(pred([1.0, 2.0]), np.zeros(2), ["a", "b"], k=0)
        with pytest.raises(InputError):
            grounding.select_clean(pred([1.0, 2.0]), np.zeros(2), ["a", "b"], k=3)


class TestNormalizer:
    def test_lowercase_and_underscores(self):
        norm = grounding.AttributeNormalizer()
        assert norm("has_blue_head") == norm("Blue Head") == "blue head"

    def test_leading_tokens_and_whitespace(self):
        norm = grounding.AttributeNormalizer()
        assert norm("is  Big") == "big"
        assert norm("has  stripes") == "stripes"
        assert norm("history") == "history"  # no token stripping inside words

    def test_never_strips_to_empty(self):
        norm = grounding.AttributeNormalizer()
        assert norm("has") == "has"
        assert norm("is") == "is"

    def test_synonym_table(self):
        norm = grounding.AttributeNormalizer({"has_red_belly": "Red Abdomen"})
        assert norm("red belly") == "red abdomen"
        assert norm("RED_BELLY") == "red abdomen"

    def test_load_synonyms(self, tmp_path):
        p = tmp_path / "syn.json"
        p.write_text('{"blue head": "azure head"}', encoding="utf-8")
        table = grounding.load_synonyms(p)
        assert grounding.AttributeNormalizer(table)("has_Blue_Head") == "azure head"
        bad = tmp_path / "bad.json"
        bad.write_text('{"a": 3}', encoding="utf-8")
        with pytest.raises(InputError):
            grounding.load_synonyms(bad)


class TestMatching:
    def selected(self, names, regime="clean"):
        return grounding.SelectedAttributes(
            indices=list(range(len(names))), names=list(names), regime=regime,
            k=len(names),
        )

    def test_empty_detections_all_ungrounded(self):
        result = grounding.match_detections(self.selected(["blue head"]), [], "img")
        assert result.matches == [] and result.ungrounded == ["blue head"]

    def test_exact_name_match(self):
        record = det("img", "blue head", 0.9)
        result = grounding.match_detections(self.selected(["blue head"]),
                                            [record], "img")
        assert result.matches == [("blue head", record)]
        assert result.ungrounded == []

    def test_normalized_match(self):
        record = det("img", "Blue Head", 0.8)
        result = grounding.match_detections(self.selected(["has_blue_head"]),
                                            [record], "img")
        assert result.matches == [("has_blue_head", record)]

    def test_highest_score_wins_and_ties_keep_earliest(self):
        low = det("img", "blue head", 0.3)
        high = det("img", "blue head", 0.9)
        tie = det("img", "blue head", 0.9, obj="later")
        result = grounding.match_detections(self.selected(["blue head"]),
                                            [low, high, tie], "img")
        assert result.matches[0][1] is high

    def test_other_images_ignored(self):
        elsewhere = det("other", "blue head", 0.99)
        result = grounding.match_detections(self.selected(["blue head"]),
                                            [elsewhere], "img")
        assert result.ungrounded == ["blue head"]

    def test_partition_property(self):
        rng = np.random.default_rng(4)
        names = [f"attr {i}" for i in range(8)]
        detections = [det("img", names[int(i)], float(rng.uniform(0, 1)))
                      for i in rng.integers(0, 8, 12)]
        sel = self.selected(names[:6])
        result = grounding.match_detections(sel, detections, "img")
        assert len(result.matches) + len(result.ungrounded) == sel.k
        matched = [name for name, _ in result.matches]
        assert sorted(matched + result.ungrounded) == sorted(sel.names)

    def test_deterministic_repeat(self):
        rng = np.random.default_rng(5)
        names = [f"n{i}" for i in range(5)]
        detections = [det("img", names[int(i)], round(float(rng.uniform(0, 1)), 3))
                      for i in rng.integers(0, 5, 20)]
        sel = self.selected(names)
        first = grounding.match_detections(sel, detections, "img")
        second = grounding.match_detections(sel, detections, "img")
        assert first == second

    def test_report_dict_schema(self):
        record = det("img", "blue head", 0.9, box=(1.0, 2.0, 3.0, 4.0), obj="bird")
        result = grounding.match_detections(
            self.selected(["blue head", "red tail"], regime="adversarial"),
            [record], "img",
        )
        doc = grounding.grounding_result_to_dict(result)
        assert doc == {
            "image_id": "img",
            "regime": "adversarial",
            "matches": [{"attribute": "blue head", "box": [1.0, 2.0, 3.0, 4.0],
                         "object": "bird", "score": 0.9}],
            "ungrounded": ["red tail"],
        }
