"""Command-line pipeline: train models, attack them, adversarially train,
predict attributes, analyze attribute distances, and ground attributes.

Every subcommand is deterministic given its inputs and --seed: rerunning a
command writes byte-identical outputs. Exit codes: 0 success, 1 internal
error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from attrex import analysis, attacks, classifier, data, grounding, sje, svg
from attrex.errors import InputError

EPS_SWEEP = (0.01, 0.06, 0.12)

RULE_FLAGS = {"nearest": sje.NEAREST_EUCLIDEAN, "compat": sje.MAX_COMPATIBILITY}


def _load_softmax(path: str) -> data.SoftmaxModel:
    model = data.load_model(path)
    if not isinstance(model, data.SoftmaxModel):
        raise InputError(f"{path}: expected a softmax model file")
    return model


def _load_sje(path: str) -> data.EmbeddingModel:
    model = data.load_model(path)
    if not isinstance(model, data.EmbeddingModel):
        raise InputError(f"{path}: expected an sje model file")
    return model


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_metrics(path: Path, rows: list[tuple[str, str, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("classifier,metric,value\n")
        for name, metric, value in rows:
            fh.write(f"{name},{metric},{value:.6f}\n")


def _sje_accuracy(model, dataset, cam, rule) -> float:
    preds = sje.classify_batch(model, dataset.features, cam, rule)
    return float(np.mean(preds == dataset.labels))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    dataset = data.load_features(args.features)
    cam = data.load_class_attributes(args.class_attrs)
    if int(dataset.labels.max()) >= cam.n_classes:
        raise InputError(
            f"label {int(dataset.labels.max())} out of range for "
            f"{cam.n_classes} classes in {args.class_attrs}"
        )
    rule = RULE_FLAGS[args.rule]
    out = _out_dir(args)

    softmax_model, _ = classifier.train_softmax(dataset, classifier.SoftmaxTrainConfig(
        learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
        batch_size=args.batch_size, hidden_width=args.hidden,
        n_classes=cam.n_classes,
    ))
    sje_model, _ = sje.train(dataset, cam, sje.RankingLossConfig(
        learning_rate=args.sje_lr, epochs=args.sje_epochs, seed=args.seed,
        classification_rule=rule,
    ))
    data.save_model(softmax_model, out / "softmax.json")
    data.save_model(sje_model, out / "sje.json")

    softmax_acc = classifier.accuracy(softmax_model, dataset)
    sje_acc = _sje_accuracy(sje_model, dataset, cam, rule)
    _write_metrics(out / "metrics.csv", [
        ("softmax", f"{dataset.split}_accuracy", softmax_acc),
        ("sje", f"{dataset.split}_accuracy", sje_acc),
    ])
    print(f"softmax {dataset.split} accuracy: {softmax_acc:.4f}")
    print(f"sje {dataset.split} accuracy: {sje_acc:.4f}")
    return 0


def _sje_summary(sje_model, cam, rule, dataset, adv_features, results, summary):
    clean_preds = sje.classify_batch(sje_model, dataset.features, cam, rule)
    adv_preds = sje.classify_batch(sje_model, adv_features, cam, rule)
    if summary.mode == attacks.TARGETED:
        targets = np.array([r.target_label for r in results])
        success = float(np.mean(adv_preds == targets))
    else:
        success = float(np.mean(adv_preds != dataset.labels))
    return attacks.AttackSummary(
        eps=summary.eps,
        mode=summary.mode,
        clean_accuracy=float(np.mean(clean_preds == dataset.labels)),
        adversarial_accuracy=float(np.mean(adv_preds == dataset.labels)),
        success_rate=success,
        misclassification_rate=float(np.mean(adv_preds != dataset.labels)),
        n_examples=dataset.n_examples,
    )


def cmd_attack(args) -> int:
    softmax_model = _load_softmax(args.softmax_model)
    sje_model = _load_sje(args.sje_model)
    dataset = data.load_features(args.features)
    cam = data.load_class_attributes(args.class_attrs)
    rule = RULE_FLAGS[args.rule]
    out = _out_dir(args)

    softmax_rows, sje_rows = [], []
    for eps in args.eps:
        cfg = attacks.AttackConfig(
            eps=eps, alpha=args.alpha, iterations=args.iters, mode=args.mode,
            random_start=args.random_start, seed=args.seed,
        )
        results, summary = attacks.attack_dataset(softmax_model, dataset, cfg)
        adv_ds = attacks.perturbed_dataset(results, dataset)
        data.save_features(adv_ds, out / f"adv_features_{args.mode}_eps{eps:g}.csv")
        softmax_rows.append(summary)
        sje_rows.append(_sje_summary(sje_model, cam, rule, dataset,
                                     adv_ds.features, results, summary))
        print(f"eps={eps:g} mode={args.mode}: softmax adv acc "
              f"{summary.adversarial_accuracy:.4f}, sje adv acc "
              f"{sje_rows[-1].adversarial_accuracy:.4f}")

    attacks.write_summary_csv(softmax_rows, out / "summary_softmax.csv")
    attacks.write_summary_csv(sje_rows, out / "summary_sje.csv")
    return 0


def cmd_advtrain(args) -> int:
    dataset = data.load_features(args.features)
    out = _out_dir(args)
    cfg = attacks.AdvTrainConfig(
        alpha_mix=args.alpha_mix,
        attack=attacks.AttackConfig(
            eps=args.eps, alpha=args.alpha, iterations=args.iters,
            random_start=args.random_start, seed=args.seed,
        ),
        train=classifier.SoftmaxTrainConfig(
            learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
            batch_size=args.batch_size, hidden_width=args.hidden,
        ),
    )
    model, _ = attacks.adversarial_train(dataset, cfg)
    data.save_model(model, out / "softmax_at.json")

    clean_acc = classifier.accuracy(model, dataset)
    _, robust = attacks.attack_dataset(dataset=dataset, model=model, cfg=cfg.attack)
    _write_metrics(out / "metrics.csv", [
        ("softmax_at", f"{dataset.split}_accuracy", clean_acc),
        ("softmax_at", f"robust_accuracy_eps{args.eps:g}", robust.adversarial_accuracy),
    ])
    print(f"adversarially trained softmax: clean {clean_acc:.4f}, "
          f"robust {robust.adversarial_accuracy:.4f} at eps={args.eps:g}")
    return 0


def cmd_predict(args) -> int:
    sje_model = _load_sje(args.sje_model)
    dataset = data.load_features(args.features)
    cam = data.load_class_attributes(args.class_attrs)
    rule = RULE_FLAGS[args.rule]
    z = sje.predict_attributes_batch(sje_model, dataset.features)
    preds = sje.classify_batch(sje_model, dataset.features, cam, rule)
    records = [
        data.AttributePredictionRecord(
            example_id=dataset.ids[i],
            true_label=int(dataset.labels[i]),
            predicted_class=int(preds[i]),
            regime=args.regime,
            values=z[i],
        )
        for i in range(dataset.n_examples)
    ]
    data.save_predictions(records, args.out)
    print(f"wrote {len(records)} {args.regime} predictions to {args.out}")
    return 0


def _run_analysis(out: Path, clean, adv, adv_at, cam, scenarios, fraction, bins):
    quads = analysis.build_quadruples(clean, adv, adv_at)
    indices, _ = analysis.restrict_to_top_changed(quads, fraction)
    with open(out / "top_attributes.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("rank,attribute_index,attribute_name\n")
        for rank, idx in enumerate(indices):
            fh.write(f"{rank},{int(idx)},{cam.attribute_names[int(idx)]}\n")
    for name in scenarios:
        pairs = analysis.compute_scenario(name, quads, cam, indices)
        analysis.write_distances_csv(pairs, out / f"distances_{name}.csv")
        if pairs:
            hist = analysis.build_histogram(pairs, bins)
            analysis.write_histogram_csv(hist, out / f"histogram_{name}.csv")
            (out / f"histogram_{name}.svg").write_text(
                svg.histogram_svg(hist, f"scenario {name} distances"),
                encoding="utf-8",
            )
        print(f"scenario {name}: {len(pairs)} qualifying examples")


def cmd_analyze(args) -> int:
    clean = data.load_predictions(args.clean)
    adv = data.load_predictions(args.adv)
    adv_at = data.load_predictions(args.adv_at) if args.adv_at else None
    cam = data.load_class_attributes(args.class_attrs)
    scenarios = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    for s in scenarios:
        if s not in analysis.SCENARIOS:
            raise InputError(f"unknown scenario {s!r} (expected a, b, c, or d)")
        if s in ("b", "d") and adv_at is None:
            raise InputError(f"scenario {s} requires AT predictions (--adv-at)")
    out = _out_dir(args)
    _run_analysis(out, clean, adv, adv_at, cam, scenarios, args.fraction, args.bins)
    return 0


def _ground_image(image_id, clean_by_id, adv_by_id, cam, detections, k, normalizer):
    clean_rec = clean_by_id[image_id]
    adv_rec = adv_by_id[image_id]
    wrong_class = adv_rec.predicted_class
    true_class = clean_rec.true_label
    sel_clean = grounding.select_clean(
        sje.PredictedAttributes(clean_rec.values, image_id, data.REGIME_CLEAN),
        cam.values[wrong_class], cam.attribute_names, k,
    )
    sel_adv = grounding.select_adversarial(
        sje.PredictedAttributes(adv_rec.values, image_id, adv_rec.regime),
        cam.values[true_class], cam.attribute_names, k,
    )
    return [
        grounding.match_detections(sel_clean, detections, image_id, normalizer),
        grounding.match_detections(sel_adv, detections, image_id, normalizer),
    ]


def cmd_ground(args) -> int:
    clean = data.load_predictions(args.clean)
    adv = data.load_predictions(args.adv)
    cam = data.load_class_attributes(args.class_attrs)
    detections = data.load_detections(args.detections)
    normalizer = grounding.AttributeNormalizer(
        grounding.load_synonyms(args.synonyms) if args.synonyms else None
    )
    clean_by_id = {r.example_id: r for r in clean}
    adv_by_id = {r.example_id: r for r in adv}
    known = [i for i in clean_by_id if i in adv_by_id]
    requested = args.images if args.images else known
    for image_id in requested:
        if image_id not in clean_by_id or image_id not in adv_by_id:
            raise InputError(
                f"unknown image id {image_id!r}; known ids: {', '.join(known)}"
            )
    report = []
    for image_id in requested:
        for result in _ground_image(image_id, clean_by_id, adv_by_id, cam,
                                    detections, args.top_k, normalizer):
            report.append(grounding.grounding_result_to_dict(result))
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"grounded {len(requested)} images -> {args.out}")
    return 0


def cmd_demo(args) -> int:
    """Generate the synthetic problem, run the whole pipeline, and write a
    report directory with accuracy curves, distance histograms, and a
    grounding report."""
    out = _out_dir(args)
    seed = args.seed
    rule = sje.NEAREST_EUCLIDEAN
    eps_attack = 0.12

    train_ds, test_ds, cam = data.make_blob_problem(
        n_classes=args.classes, dim=args.dim, n_attributes=args.attributes,
        n_train_per_class=args.train_per_class,
        n_test_per_class=args.test_per_class, seed=seed,
    )
    data.save_features(train_ds, out / "features_train.csv")
    data.save_features(test_ds, out / "features_test.csv")
    data.save_class_attributes(cam, out / "class_attributes.csv")
    detections = data.make_synthetic_detections(test_ds, cam, seed=seed + 1)
    data.save_detections(detections, out / "detections.json")

    print("training softmax and sje models...")
    softmax_model, _ = classifier.train_softmax(train_ds, classifier.SoftmaxTrainConfig(
        learning_rate=0.5, epochs=80, seed=seed, batch_size=32, hidden_width=24,
        n_classes=cam.n_classes,
    ))
    sje_model, _ = sje.train(train_ds, cam, sje.RankingLossConfig(
        learning_rate=0.05, epochs=60, seed=seed, classification_rule=rule,
    ))
    data.save_model(softmax_model, out / "softmax.json")
    data.save_model(sje_model, out / "sje.json")

    print("adversarial training...")
    at_cfg = attacks.AdvTrainConfig(
        alpha_mix=0.5,
        attack=attacks.AttackConfig(eps=eps_attack, iterations=7, random_start=True,
                                    seed=seed),
        train=classifier.SoftmaxTrainConfig(
            learning_rate=0.5, epochs=80, seed=seed, batch_size=32, hidden_width=24,
            n_classes=cam.n_classes,
        ),
    )
    softmax_at, _ = attacks.adversarial_train(train_ds, at_cfg)
    data.save_model(softmax_at, out / "softmax_at.json")

    print("attack sweeps...")
    curves: dict[str, list[float]] = {}
    adv_at_test = None
    for mode in (attacks.UNTARGETED, attacks.TARGETED):
        rows_std, rows_at, rows_sje, rows_sje_at = [], [], [], []
        for eps in EPS_SWEEP:
            cfg = attacks.AttackConfig(eps=eps, iterations=args.iters, mode=mode,
                                       seed=seed)
            results, summary = attacks.attack_dataset(softmax_model, test_ds, cfg)
            adv_ds = attacks.perturbed_dataset(results, test_ds)
            data.save_features(adv_ds, out / f"adv_features_{mode}_eps{eps:g}.csv")
            rows_std.append(summary)
            rows_sje.append(_sje_summary(sje_model, cam, rule, test_ds,
                                         adv_ds.features, results, summary))
            results_at, summary_at = attacks.attack_dataset(softmax_at, test_ds, cfg)
            rows_at.append(summary_at)
            rows_sje_at.append(_sje_summary(sje_model, cam, rule, test_ds,
                                            np.vstack([r.perturbed_features
                                                       for r in results_at]),
                                            results_at, summary_at))
            if mode == attacks.UNTARGETED and eps == eps_attack:
                adv_at_test = attacks.perturbed_dataset(results_at, test_ds,
                                                        regime=data.REGIME_ADV_AT)
        attacks.write_summary_csv(rows_std, out / f"summary_softmax_{mode}.csv")
        attacks.write_summary_csv(rows_at, out / f"summary_softmax_at_{mode}.csv")
        attacks.write_summary_csv(rows_sje, out / f"summary_sje_{mode}.csv")
        attacks.write_summary_csv(rows_sje_at, out / f"summary_sje_at_{mode}.csv")
        curves[mode] = [
            [s.adversarial_accuracy for s in rows_std],
            [s.adversarial_accuracy for s in rows_sje],
            [s.adversarial_accuracy for s in rows_at],
            [s.adversarial_accuracy for s in rows_sje_at],
        ]

    softmax_clean = classifier.accuracy(softmax_model, test_ds)
    sje_clean = _sje_accuracy(sje_model, test_ds, cam, rule)
    softmax_at_clean = classifier.accuracy(softmax_at, test_ds)
    for mode, series in curves.items():
        labels = ["softmax adv", "sje adv", "softmax adv (AT)", "sje adv (AT)"]
        starts = [softmax_clean, sje_clean, softmax_at_clean, sje_clean]
        chart = svg.line_chart_svg(
            [0.0] + list(EPS_SWEEP),
            [(label, [start] + ys) for label, start, ys in zip(labels, starts, series)],
            f"accuracy vs attack budget ({mode})", "eps", "accuracy",
            y_range=(0.0, 1.0),
        )
        (out / f"accuracy_vs_eps_{mode}.svg").write_text(chart, encoding="utf-8")

    print("attribute predictions and distance analysis...")
    adv_test = data.load_features(out / f"adv_features_untargeted_eps{eps_attack:g}.csv")

    def _predict(ds, regime):
        z = sje.predict_attributes_batch(sje_model, ds.features)
        preds = sje.classify_batch(sje_model, ds.features, cam, rule)
        return [
            data.AttributePredictionRecord(
                example_id=ds.ids[i], true_label=int(ds.labels[i]),
                predicted_class=int(preds[i]), regime=regime, values=z[i],
            )
            for i in range(ds.n_examples)
        ]

    clean_records = _predict(test_ds, data.REGIME_CLEAN)
    adv_records = _predict(adv_test, data.REGIME_ADV)
    at_records = _predict(adv_at_test, data.REGIME_ADV_AT)
    data.save_predictions(clean_records, out / "predictions_clean.csv")
    data.save_predictions(adv_records, out / "predictions_adversarial.csv")
    data.save_predictions(at_records, out / "predictions_adversarial_AT.csv")

    _run_analysis(out, clean_records, adv_records, at_records, cam,
                  list(analysis.SCENARIOS), fraction=0.2, bins=30)

    print("grounding...")
    clean_by_id = {r.example_id: r for r in clean_records}
    adv_by_id = {r.example_id: r for r in adv_records}
    adv_wrong = [r.example_id for r in adv_records
                 if r.predicted_class != r.true_label]
    requested = adv_wrong[:args.ground_images] or list(clean_by_id)[:args.ground_images]
    normalizer = grounding.AttributeNormalizer()
    k = min(5, cam.n_attributes)
    report = []
    for image_id in requested:
        for result in _ground_image(image_id, clean_by_id, adv_by_id, cam,
                                    detections, k, normalizer):
            report.append(grounding.grounding_result_to_dict(result))
    with open(out / "grounding.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    print(f"report directory: {out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_rule(p) -> None:
    p.add_argument("--rule", choices=sorted(RULE_FLAGS), default="nearest",
                   help="sje classification rule")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attrex",
        description="attribute-based interpretation of adversarial examples",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the softmax and sje models")
    p.add_argument("--features", required=True)
    p.add_argument("--class-attrs", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--sje-lr", type=float, default=0.05)
    p.add_argument("--sje-epochs", type=int, default=100)
    _add_rule(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack a trained model over an eps sweep")
    p.add_argument("--softmax-model", required=True)
    p.add_argument("--sje-model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--class-attrs", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--eps", type=float, nargs="+", default=list(EPS_SWEEP))
    p.add_argument("--alpha", type=float, default=None,
                   help="step size (default eps/4)")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--mode", choices=[attacks.UNTARGETED, attacks.TARGETED],
                   default=attacks.UNTARGETED)
    p.add_argument("--random-start", action="store_true")
    _add_rule(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("advtrain", help="adversarially train the softmax model")
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--eps", type=float, default=0.12)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--iters", type=int, default=7)
    p.add_argument("--alpha-mix", type=float, default=0.5)
    p.add_argument("--no-random-start", dest="random_start", action="store_false")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_advtrain, random_start=True)

    p = sub.add_parser("predict-attributes",
                       help="write sje attribute predictions for a features file")
    p.add_argument("--sje-model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--class-attrs", required=True)
    p.add_argument("--regime", choices=list(data.REGIMES), default=data.REGIME_CLEAN)
    _add_rule(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("analyze", help="paired attribute-distance analysis")
    p.add_argument("--clean", required=True, help="clean predictions CSV")
    p.add_argument("--adv", required=True, help="adversarial predictions CSV")
    p.add_argument("--adv-at", default=None,
                   help="adversarial-under-AT predictions CSV")
    p.add_argument("--class-attrs", required=True)
    p.add_argument("--scenarios", default="a,c")
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ground",
                       help="ground discriminative attributes on detections")
    p.add_argument("--clean", required=True)
    p.add_argument("--adv", required=True)
    p.add_argument("--class-attrs", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--images", nargs="*", default=None)
    p.add_argument("--synonyms", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("demo", help="synthesize data and run the full pipeline")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--attributes", type=int, default=16)
    p.add_argument("--train-per-class", type=int, default=60)
    p.add_argument("--test-per-class", type=int, default=40)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--ground-images", type=int, default=5)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
