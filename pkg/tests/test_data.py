import json

import numpy as np
import pytest

from attrex import data
from attrex.errors import InputError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadFeatures:
    def test_small_fixture(self, tmp_path):
        p = write(tmp_path / "f.csv",
                  "id,label,f0,f1,f2,f3\n"
                  "a,0,0.1,0.2,0.3,0.4\n"
                  "b,1,0.5,0.6,0.7,0.8\n"
                  "c,0,0.9,0.0,0.5,0.5\n")
        ds = data.load_features(p)
        assert ds.n_examples == 3 and ds.dim == 4
        assert ds.ids == ["a", "b", "c"]
        assert np.array_equal(ds.labels, [0, 1, 0])

    def test_empty_data_section(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0\n")
        with pytest.raises(InputError, match="no examples"):
            data.load_features(p)

    def test_duplicate_id_named(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0\nx,0,0.1\nx,1,0.2\n")
        with pytest.raises(InputError, match="'x'"):
            data.load_features(p)

    def test_ragged_row_line_number(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0,f1\na,0,0.1,0.2\nb,0,0.3\n")
        with pytest.raises(InputError, match="line 3"):
            data.load_features(p)

    def test_non_numeric_cell_line_number(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0\na,0,oops\n")
        with pytest.raises(InputError, match="line 2"):
            data.load_features(p)

    def test_unknown_label(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0\na,duck,0.1\n")
        with pytest.raises(InputError, match="unknown label"):
            data.load_features(p)
        p2 = write(tmp_path / "g.csv", "id,label,f0\na,7,0.1\n")
        with pytest.raises(InputError, match="unknown label"):
            data.load_features(p2, n_classes=3)

    def test_range_check_and_override(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0\na,0,1.5\n")
        with pytest.raises(InputError, match="outside"):
            data.load_features(p)
        ds = data.load_features(p, allow_out_of_range=True)
        assert ds.features[0, 0] == 1.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            data.load_features(tmp_path / "nope.csv")

    def test_regime_column_round_trip(self, tmp_path):
        ds = data.Dataset(ids=["a", "b"], features=np.array([[0.1], [0.2]]),
                          labels=np.array([0, 1]), regime="adversarial")
        path = tmp_path / "adv.csv"
        data.save_features(ds, path)
        again = data.load_features(path)
        assert again.regime == "adversarial"
        assert np.array_equal(again.features, ds.features)
        data.save_features(again, tmp_path / "again.csv")
        assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()

    def test_loader_is_deterministic(self, tmp_path):
        p = write(tmp_path / "f.csv", "id,label,f0\na,0,0.25\nb,1,0.75\n")
        first = data.load_features(p)
        second = data.load_features(p)
        assert first.ids == second.ids
        assert np.array_equal(first.features, second.features)
        assert np.array_equal(first.labels, second.labels)


class TestClassAttributes:
    def _matrix_csv(self, tmp_path, n_classes, n_attrs):
        rng = np.random.default_rng(n_classes)
        header = "class," + ",".join(f"a{j}" for j in range(n_attrs))
        rows = [header]
        for i in range(n_classes):
            vals = rng.uniform(0, 1, n_attrs)
            rows.append(f"c{i}," + ",".join(f"{v:.4f}" for v in vals))
        return write(tmp_path / f"cam_{n_classes}.csv", "\n".join(rows) + "\n")

    def test_awa_shape_accepted(self, tmp_path):
        cam = data.load_class_attributes(self._matrix_csv(tmp_path, 50, 85))
        assert cam.n_classes == 50 and cam.n_attributes == 85

    def test_cub_shape_accepted(self, tmp_path):
        cam = data.load_class_attributes(self._matrix_csv(tmp_path, 200, 312))
        assert cam.n_classes == 200 and cam.n_attributes == 312

    def test_degenerate_1x1(self, tmp_path):
        p = write(tmp_path / "tiny.csv", "class,a0\nonly,0.5\n")
        cam = data.load_class_attributes(p)
        assert cam.values.shape == (1, 1)

    def test_duplicate_attribute_names(self, tmp_path):
        p = write(tmp_path / "dup.csv", "class,a0,a0\nc,1,2\n")
        with pytest.raises(InputError, match="duplicate attribute name"):
            data.load_class_attributes(p)

    def test_save_round_trip(self, tmp_path):
        cam = data.load_class_attributes(self._matrix_csv(tmp_path, 5, 7))
        out = tmp_path / "out.csv"
        data.save_class_attributes(cam, out)
        again = data.load_class_attributes(out)
        assert again.class_names == cam.class_names
        assert again.attribute_names == cam.attribute_names
        assert np.array_equal(again.values, cam.values)


class TestDetections:
    def test_empty_array(self, tmp_path):
        p = write(tmp_path / "d.json", "[]")
        assert data.load_detections(p) == []

    def test_single_record(self, tmp_path):
        p = write(tmp_path / "d.json", json.dumps([{
            "image_id": "a", "box": [0, 0, 10, 10],
            "attribute": "blue", "object": "head", "score": 0.9,
        }]))
        (record,) = data.load_detections(p)
        assert record.image_id == "a"
        assert record.box == (0.0, 0.0, 10.0, 10.0)
        assert record.attribute_name == "blue"
        assert record.object_name == "head"
        assert record.score == 0.9

    def test_score_out_of_range(self, tmp_path):
        p = write(tmp_path / "d.json", json.dumps([{
            "image_id": "a", "box": [0, 0, 10, 10],
            "attribute": "blue", "object": "head", "score": 1.5,
        }]))
        with pytest.raises(InputError, match="record 0"):
            data.load_detections(p)

    def test_negative_box(self, tmp_path):
        p = write(tmp_path / "d.json", json.dumps([{
            "image_id": "a", "box": [0, 0, -3, 10],
            "attribute": "blue", "object": "head", "score": 0.5,
        }]))
        with pytest.raises(InputError, match="record 0"):
            data.load_detections(p)

    def test_round_trip(self, tmp_path):
        records = [data.DetectionRecord("img", (1.0, 2.0, 3.0, 4.0), "red wing",
                                        "bird", 0.75)]
        path = tmp_path / "d.json"
        data.save_detections(records, path)
        assert data.load_detections(path) == records


class TestModelPersistence:
    def test_embedding_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        model = data.EmbeddingModel(w=rng.normal(size=(4, 3)), d=4, e=3,
                                    training_config={"learning_rate": 0.01})
        path = tmp_path / "m.json"
        data.save_model(model, path)
        loaded = data.load_model(path)
        assert isinstance(loaded, data.EmbeddingModel)
        assert np.array_equal(loaded.w, model.w)
        assert loaded.training_config == model.training_config

    @pytest.mark.parametrize("hidden", [0, 5])
    def test_softmax_round_trip_exact(self, tmp_path, hidden):
        rng = np.random.default_rng(1)
        d, c = 6, 3
        if hidden:
            model = data.SoftmaxModel(
                w1=rng.normal(size=(hidden, d)), b1=rng.normal(size=hidden),
                w2=rng.normal(size=(c, hidden)), b2=rng.normal(size=c),
                hidden_width=hidden,
            )
        else:
            model = data.SoftmaxModel(
                w1=np.zeros((0, d)), b1=np.zeros(0),
                w2=rng.normal(size=(c, d)), b2=rng.normal(size=c), hidden_width=0,
            )
        path = tmp_path / "m.json"
        data.save_model(model, path)
        loaded = data.load_model(path)
        assert isinstance(loaded, data.SoftmaxModel)
        for name in ("w1", "b1", "w2", "b2"):
            assert np.array_equal(getattr(loaded, name), getattr(model, name))

    def test_truncated_file(self, tmp_path):
        rng = np.random.default_rng(2)
        model = data.EmbeddingModel(w=rng.normal(size=(3, 3)), d=3, e=3)
        path = tmp_path / "m.json"
        data.save_model(model, path)
        path.write_text(path.read_text()[:40], encoding="utf-8")
        with pytest.raises(InputError, match="unexpected end"):
            data.load_model(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"version": 99, "kind": "sje", "shape": [1, 1],
                                    "values": [0.0]}), encoding="utf-8")
        with pytest.raises(InputError, match=r"99.*supported: 1"):
            data.load_model(path)

    def test_shape_payload_mismatch(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"version": 1, "kind": "sje", "shape": [2, 2],
                                    "values": [0.0, 1.0, 2.0]}), encoding="utf-8")
        with pytest.raises(InputError, match="shape mismatch"):
            data.load_model(path)


class TestPredictions:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        records = [
            data.AttributePredictionRecord(f"id{i}", i % 2, (i + 1) % 2, "clean",
                                           rng.normal(size=4))
            for i in range(5)
        ]
        path = tmp_path / "p.csv"
        data.save_predictions(records, path)
        loaded = data.load_predictions(path)
        assert [r.example_id for r in loaded] == [r.example_id for r in records]
        for got, want in zip(loaded, records):
            assert np.array_equal(got.values, want.values)
            assert got.regime == want.regime

    def test_bad_regime_rejected(self):
        with pytest.raises(InputError, match="regime"):
            data.AttributePredictionRecord("x", 0, 0, "weird", np.zeros(2))


class TestSynthetic:
    def test_blob_shapes_and_ranges(self):
        train, test, cam = data.make_blob_problem(
            n_classes=4, dim=10, n_attributes=8, n_train_per_class=12,
            n_test_per_class=6, seed=3,
        )
        assert train.n_examples == 48 and test.n_examples == 24
        assert train.dim == 10 and cam.values.shape == (4, 8)
        for ds in (train, test):
            assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0
            assert set(np.unique(ds.labels)) == {0, 1, 2, 3}
            assert len(set(ds.ids)) == ds.n_examples

    def test_blob_determinism(self):
        a = data.make_blob_problem(seed=11)
        b = data.make_blob_problem(seed=11)
        assert np.array_equal(a[0].features, b[0].features)
        assert np.array_equal(a[2].values, b[2].values)

    def test_blob_class_count_limit(self):
        with pytest.raises(InputError, match="signal dimensions"):
            data.make_blob_problem(n_classes=9, signal_dims=3)

    def test_moons_shapes(self):
        train, test, cam = data.make_moons_problem(n_train_per_class=20,
                                                   n_test_per_class=10, seed=0)
        assert train.n_examples == 40 and test.n_examples == 20
        assert train.dim == 2 and cam.n_classes == 2
        assert train.features.min() >= 0.0 and train.features.max() <= 1.0

    def test_synthetic_detections_valid_and_deterministic(self):
        train, _, cam = data.make_blob_problem(
            n_classes=4, dim=10, n_attributes=8, n_train_per_class=3,
            n_test_per_class=2, seed=3,
        )
        first = data.make_synthetic_detections(train, cam, seed=5, per_image=2)
        second = data.make_synthetic_detections(train, cam, seed=5, per_image=2)
        assert first == second
        assert len(first) == 2 * train.n_examples
        known_names = set(cam.attribute_names)
        for record in first:
            assert record.attribute_name in known_names
