import csv
import filecmp
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from attrex import analysis, cli, data, sje
from attrex.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Synthetic problem files plus trained models produced via the CLI."""
    root = tmp_path_factory.mktemp("cli")
    train, test, cam = data.make_blob_problem(
        n_classes=4, dim=12, n_attributes=10, n_train_per_class=30,
        n_test_per_class=15, seed=2,
    )
    data.save_features(train, root / "train.csv")
    data.save_features(test, root / "test.csv")
    data.save_class_attributes(cam, root / "cam.csv")
    detections = data.make_synthetic_detections(test, cam, seed=3, per_image=3)
    data.save_detections(detections, root / "detections.json")

    code = main([
        "train", "--features", str(root / "train.csv"),
        "--class-attrs", str(root / "cam.csv"),
        "--out-dir", str(root / "models"),
        "--epochs", "60", "--sje-epochs", "40", "--seed", "1",
    ])
    assert code == 0
    return root


class TestTrain:
    def test_outputs_exist(self, workdir):
        assert (workdir / "models" / "softmax.json").exists()
        assert (workdir / "models" / "sje.json").exists()
        rows = list(csv.DictReader(open(workdir / "models" / "metrics.csv")))
        names = {r["classifier"] for r in rows}
        assert names == {"softmax", "sje"}
        assert all(float(r["value"]) >= 0.9 for r in rows)

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = main([
            "train", "--features", str(tmp_path / "absent.csv"),
            "--class-attrs", str(tmp_path / "absent2.csv"),
            "--out-dir", str(tmp_path / "out"),
        ])
        assert code == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_seed_repetition_byte_identical(self, workdir, tmp_path):
        for out in ("rep1", "rep2"):
            assert main([
                "train", "--features", str(workdir / "train.csv"),
                "--class-attrs", str(workdir / "cam.csv"),
                "--out-dir", str(tmp_path / out),
                "--epochs", "10", "--sje-epochs", "10", "--seed", "5",
            ]) == 0
        for name in ("softmax.json", "sje.json", "metrics.csv"):
            assert (tmp_path / "rep1" / name).read_bytes() == \
                (tmp_path / "rep2" / name).read_bytes()


@pytest.fixture(scope="module")
def attacked(workdir):
    out = workdir / "attack"
    code = main([
        "attack",
        "--softmax-model", str(workdir / "models" / "softmax.json"),
        "--sje-model", str(workdir / "models" / "sje.json"),
        "--features", str(workdir / "test.csv"),
        "--class-attrs", str(workdir / "cam.csv"),
        "--out-dir", str(out),
        "--eps", "0", "0.06", "0.12", "--seed", "4",
    ])
    assert code == 0
    return out


class TestAttack:
    def test_summary_rows_per_classifier(self, attacked):
        for name in ("summary_softmax.csv", "summary_sje.csv"):
            rows = list(csv.DictReader(open(attacked / name)))
            assert len(rows) == 3
            assert [r["eps"] for r in rows] == ["0", "0.06", "0.12"]

    def test_eps_zero_row_keeps_accuracy(self, attacked):
        rows = list(csv.DictReader(open(attacked / "summary_softmax.csv")))
        assert rows[0]["clean_acc"] == rows[0]["adv_acc"]

    def test_summary_recomputable_from_features_file(self, workdir, attacked):
        softmax_model = data.load_model(workdir / "models" / "softmax.json")
        test = data.load_features(workdir / "test.csv")
        adv = data.load_features(attacked / "adv_features_untargeted_eps0.12.csv")
        assert adv.regime == "adversarial"
        assert adv.ids == test.ids
        from attrex import classifier
        acc = float(np.mean(
            classifier.predict_labels(softmax_model, adv.features) == adv.labels
        ))
        rows = list(csv.DictReader(open(attacked / "summary_softmax.csv")))
        assert float(rows[2]["adv_acc"]) == pytest.approx(acc, abs=1e-6)

    def test_perturbations_respect_budget(self, workdir, attacked):
        test = data.load_features(workdir / "test.csv")
        adv = data.load_features(attacked / "adv_features_untargeted_eps0.06.csv")
        assert np.max(np.abs(adv.features - test.features)) <= 0.06 + 1e-9

    def test_targeted_mode(self, workdir, tmp_path):
        out = tmp_path / "targeted"
        code = main([
            "attack",
            "--softmax-model", str(workdir / "models" / "softmax.json"),
            "--sje-model", str(workdir / "models" / "sje.json"),
            "--features", str(workdir / "test.csv"),
            "--class-attrs", str(workdir / "cam.csv"),
            "--out-dir", str(out),
            "--eps", "0.12", "--mode", "targeted", "--seed", "4",
        ])
        assert code == 0
        rows = list(csv.DictReader(open(out / "summary_softmax.csv")))
        assert rows[0]["mode"] == "targeted"
        assert (out / "adv_features_targeted_eps0.12.csv").exists()


class TestAdvtrain:
    def test_advtrain_writes_model_and_metrics(self, workdir):
        out = workdir / "at"
        code = main([
            "advtrain", "--features", str(workdir / "train.csv"),
            "--out-dir", str(out), "--eps", "0.12", "--epochs", "30",
            "--seed", "1",
        ])
        assert code == 0
        model = data.load_model(out / "softmax_at.json")
        assert isinstance(model, data.SoftmaxModel)
        rows = list(csv.DictReader(open(out / "metrics.csv")))
        assert len(rows) == 2


@pytest.fixture(scope="module")
def predictions(workdir, attacked):
    paths = {}
    for regime, feats in (
        ("clean", workdir / "test.csv"),
        ("adversarial", attacked / "adv_features_untargeted_eps0.12.csv"),
    ):
        out = workdir / f"pred_{regime}.csv"
        code = main([
            "predict-attributes",
            "--sje-model", str(workdir / "models" / "sje.json"),
            "--features", str(feats),
            "--class-attrs", str(workdir / "cam.csv"),
            "--regime", regime, "--out", str(out),
        ])
        assert code == 0
        paths[regime] = out
    return paths


class TestPredictAndAnalyze:
    def test_prediction_files_load(self, predictions):
        records = data.load_predictions(predictions["clean"])
        assert all(r.regime == "clean" for r in records)

    def test_analyze_matches_module_output(self, workdir, predictions):
        out = workdir / "analysis"
        code = main([
            "analyze", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--scenarios", "a,c", "--fraction", "0.2", "--bins", "8",
            "--out-dir", str(out),
        ])
        assert code == 0
        clean = data.load_predictions(predictions["clean"])
        adv = data.load_predictions(predictions["adversarial"])
        cam = data.load_class_attributes(workdir / "cam.csv")
        quads = analysis.build_quadruples(clean, adv)
        indices, _ = analysis.restrict_to_top_changed(quads, 0.2)
        expected = analysis.compute_scenario("c", quads, cam, indices)
        rows = list(csv.DictReader(open(out / "distances_c.csv")))
        assert len(rows) == len(expected)
        for row, pair in zip(rows, expected):
            assert row["example_id"] == pair.example_id
            assert float(row["d1"]) == pytest.approx(pair.d1, rel=1e-12)
            assert float(row["d2"]) == pytest.approx(pair.d2, rel=1e-12)

    def test_fraction_one_uses_all_coordinates(self, workdir, predictions, tmp_path):
        out = tmp_path / "full"
        code = main([
            "analyze", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--scenarios", "a", "--fraction", "1.0", "--out-dir", str(out),
        ])
        assert code == 0
        ranked = list(csv.DictReader(open(out / "top_attributes.csv")))
        assert len(ranked) == 10

    def test_svg_is_wellformed_with_one_group_per_series(self, workdir, predictions):
        svg_path = workdir / "analysis" / "histogram_c.svg"
        root = ET.parse(svg_path).getroot()
        groups = [el for el in root.iter("{http://www.w3.org/2000/svg}g")
                  if el.get("class", "").startswith("series-")]
        assert len(groups) == 2

    def test_scenario_b_without_at_file_exits_2(self, workdir, predictions, capsys):
        code = main([
            "analyze", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--scenarios", "b", "--out-dir", str(workdir / "nope"),
        ])
        assert code == 2
        assert "adv-at" in capsys.readouterr().err.lower()


class TestGround:
    def test_report_contents(self, workdir, predictions):
        out = workdir / "grounding.json"
        records = data.load_predictions(predictions["clean"])
        image = records[0].example_id
        code = main([
            "ground", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--detections", str(workdir / "detections.json"),
            "--top-k", "4", "--images", image, "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert len(report) == 2  # clean + adversarial regimes
        assert {entry["regime"] for entry in report} == {"clean", "adversarial"}
        for entry in report:
            assert entry["image_id"] == image
            assert len(entry["matches"]) + len(entry["ungrounded"]) == 4

    def test_no_detections_all_ungrounded(self, workdir, predictions, tmp_path):
        empty = tmp_path / "none.json"
        empty.write_text("[]", encoding="utf-8")
        out = tmp_path / "report.json"
        code = main([
            "ground", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--detections", str(empty), "--top-k", "3", "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert all(entry["matches"] == [] for entry in report)
        assert all(len(entry["ungrounded"]) == 3 for entry in report)

    def test_repeat_is_byte_identical(self, workdir, predictions, tmp_path):
        args = [
            "ground", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--detections", str(workdir / "detections.json"), "--top-k", "3",
        ]
        for name in ("r1.json", "r2.json"):
            assert main(args + ["--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()

    def test_unknown_image_lists_known_ids(self, workdir, predictions, capsys):
        code = main([
            "ground", "--clean", str(predictions["clean"]),
            "--adv", str(predictions["adversarial"]),
            "--class-attrs", str(workdir / "cam.csv"),
            "--detections", str(workdir / "detections.json"),
            "--images", "mystery", "--out", str(workdir / "r.json"),
        ])
        assert code == 2
        err = capsys.readouterr().err
        assert "mystery" in err and "test-0-0000" in err


class TestDemo:
    def test_demo_runs_and_repeats_byte_identically(self, tmp_path):
        args = ["demo", "--seed", "3", "--classes", "4", "--dim", "12",
                "--attributes", "10", "--train-per-class", "25",
                "--test-per-class", "12"]
        for out in ("d1", "d2"):
            assert main(args + ["--out-dir", str(tmp_path / out)]) == 0
        left, right = tmp_path / "d1", tmp_path / "d2"
        names = sorted(p.name for p in left.iterdir())
        assert sorted(p.name for p in right.iterdir()) == names
        match, mismatch, errors = filecmp.cmpfiles(left, right, names, shallow=False)
        assert mismatch == [] and errors == []
        # a Fig-4-shaped artifact exists alongside the distance reports
        assert "accuracy_vs_eps_untargeted.svg" in names
        assert "distances_a.csv" in names


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["attack"])  # missing required arguments
    assert excinfo.value.code == 2
