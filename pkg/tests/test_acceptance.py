"""Acceptance gate: ten release criteria, one pass/fail line each.

Each criterion asserts its property at the stated tolerance and its
wall-clock budget where one is stated, so a slow pass still fails.
Run with -s to see the per-criterion lines; under default capture they
appear on failure.
"""

import json
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest
import torch

from _ap_oracle import oracle_average_precision
from thermoscope.datasets.manifest import DatasetManifest, load_manifest, save_manifest
from thermoscope.datasets.types import BoundingBox, LabeledImage, ObjectAnnotation
from thermoscope.datasets.voc import from_voc_xml, to_voc_xml
from thermoscope.detection.types import Detection
from thermoscope.evaluation.ap import AP_MODES, average_precision, mean_ap
from thermoscope.evaluation.report import load_report
from thermoscope.pipelines.config import PipelineConfig
from thermoscope.pipelines.runs import run_pipeline
from thermoscope.pipelines.synthetic import make_paired_toy_corpus, make_toy_corpus
from thermoscope.style.features import CONTENT_SCALE, LossNetwork, set_style_targets
from thermoscope.style.generator import GeneratorParams
from thermoscope.style.losses import content_loss, style_loss, total_objective_t, tv_loss
from thermoscope.style.ops import comatch, gram
from thermoscope.style.types import CoMatchWeights, FeatureMap, GramMatrix, LossWeights


@contextmanager
def gate(label, budget=None):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[acceptance] {label}: FAIL after {time.perf_counter() - t0:.1f}s")
        raise
    elapsed = time.perf_counter() - t0
    if budget is not None and elapsed >= budget:
        print(f"[acceptance] {label}: FAIL ({elapsed:.1f}s exceeds the {budget:.0f}s budget)")
        raise AssertionError(f"{label}: {elapsed:.1f}s exceeds the {budget}s runtime budget")
    suffix = f" < {budget:.0f}s budget" if budget is not None else ""
    print(f"[acceptance] {label}: PASS ({elapsed:.1f}s{suffix})")


def test_criterion_01_gram_matches_double_loop():
    with gate("criterion 01, gram vs double-loop sum", budget=30):
        rng = np.random.default_rng(101)
        worst = 0.0
        for c in range(1, 9):
            for h in range(1, 9):
                for w in range(1, 9):
                    values = rng.standard_normal((c, h, w)).astype(np.float32)
                    got = gram(FeatureMap(values, scale_index=1)).values
                    want = np.zeros((c, c), dtype=np.float64)
                    for a in range(c):
                        for b in range(c):
                            acc = 0.0
                            for i in range(h):
                                for j in range(w):
                                    acc += float(values[a, i, j]) * float(values[b, i, j])
                            want[a, b] = acc / (c * h * w)
                    scale = max(float(np.max(np.abs(want))), 1e-12)
                    worst = max(worst, float(np.max(np.abs(got - want))) / scale)
        assert worst <= 1e-6, f"max relative error {worst}"


def test_criterion_02_comatch_identities():
    with gate("criterion 02, feature-transform identities", budget=10):
        rng = np.random.default_rng(202)
        for _ in range(50):
            c = int(rng.integers(1, 9))
            h = int(rng.integers(1, 7))
            w = int(rng.integers(1, 7))
            fmap = FeatureMap(rng.standard_normal((c, h, w)).astype(np.float32), scale_index=1)
            eye = np.eye(c)
            out = comatch(fmap, GramMatrix(eye, 1, 1.0), CoMatchWeights(eye))
            assert float(np.max(np.abs(out.values - fmap.values))) <= 1e-7

            target = gram(
                FeatureMap(rng.standard_normal((c, h, w)).astype(np.float32), scale_index=1)
            )
            wmat = rng.standard_normal((c, c))
            alpha = float(rng.uniform(-2.0, 2.0))
            base = comatch(fmap, target, CoMatchWeights(wmat)).values
            scaled = comatch(fmap, target, CoMatchWeights(alpha * wmat)).values
            assert float(np.max(np.abs(scaled - alpha * base))) <= 1e-7


def test_criterion_03_gradients_match_finite_differences():
    # two FD regimes: the losses are polynomials of their direct inputs
    # (coarse step fine), but composed through the piecewise-linear loss
    # network a small step must keep both probes in one linear region
    from thermoscope.style.diff import content_loss_t, gram_t, style_loss_t, tv_loss_t

    def relative_error(analytic, numeric):
        return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)

    def fd_check(fn, point, coords, step):
        x = point.clone().requires_grad_(True)
        fn(x).backward()
        grad = x.grad.detach()
        worst = 0.0
        for idx in coords:
            shifted = point.clone()
            shifted[idx] += step
            plus = float(fn(shifted))
            shifted[idx] -= 2 * step
            minus = float(fn(shifted))
            worst = max(worst, relative_error(float(grad[idx]), (plus - minus) / (2 * step)))
        return worst

    with gate("criterion 03, analytic gradients vs central FD", budget=120):
        network = LossNetwork(seed=0, dtype=torch.float64)
        rng = np.random.default_rng(303)
        image = torch.from_numpy(rng.random((3, 32, 32)))
        coords = [
            tuple(int(rng.integers(0, s)) for s in (3, 32, 32)) for _ in range(8)
        ]

        worst_tv = fd_check(lambda x: tv_loss_t(x.unsqueeze(0)), image, coords, 1e-3)
        assert worst_tv <= 1e-3, f"tv relative error {worst_tv}"

        reference = torch.from_numpy(rng.random((3, 32, 32)))
        with torch.no_grad():
            ref_tap = network.forward_taps(reference.unsqueeze(0))[CONTENT_SCALE - 1]

        def content_objective(x):
            return content_loss_t(network.forward_taps(x.unsqueeze(0))[CONTENT_SCALE - 1], ref_tap)

        worst_content = fd_check(content_objective, image, coords[:5], 1e-5)
        assert worst_content <= 1e-3, f"content relative error {worst_content}"

        style = torch.from_numpy(rng.random((3, 32, 32)))
        with torch.no_grad():
            targets = [gram_t(t)[0] for t in network.forward_taps(style.unsqueeze(0))]

        def style_objective(x):
            return style_loss_t(network.forward_taps(x.unsqueeze(0)), targets)

        worst_style = fd_check(style_objective, image, coords[:5], 1e-5)
        assert worst_style <= 1e-3, f"style relative error {worst_style}"

        # total objective, differentiated through the generator weights
        params = GeneratorParams.initialize(width=16, seed=0)
        params.module.double()
        content_batch = torch.from_numpy(rng.random((1, 3, 32, 32)))
        style_targets = set_style_targets(rng.random((3, 32, 32)).astype(np.float32), network)
        weights = LossWeights()

        def total():
            value, _, _, _ = total_objective_t(
                content_batch, params, style_targets, weights, network
            )
            return value

        leaves = [p for p in params.module.parameters() if p.requires_grad]
        flat_index = [(pi, ei) for pi, p in enumerate(leaves) for ei in range(p.numel())]
        picks = [flat_index[int(rng.integers(0, len(flat_index)))] for _ in range(10)]
        for p in leaves:
            p.grad = None
        total().backward()
        worst_total = 0.0
        step = 1e-6
        for pi, ei in picks:
            p = leaves[pi]
            analytic = float(p.grad.reshape(-1)[ei])
            with torch.no_grad():
                flat = p.reshape(-1)
                original = float(flat[ei])
                flat[ei] = original + step
                plus = float(total())
                flat[ei] = original - step
                minus = float(total())
                flat[ei] = original
            worst_total = max(
                worst_total, relative_error(analytic, (plus - minus) / (2 * step))
            )
        assert worst_total <= 1e-3, f"total-objective relative error {worst_total}"


def test_criterion_04_zero_loss_forcing(loss_network):
    with gate("criterion 04, zero-loss forcing"):
        rng = np.random.default_rng(404)
        fmap = FeatureMap(rng.standard_normal((16, 6, 6)).astype(np.float32), scale_index=3)
        assert content_loss(fmap, fmap) == 0.0

        from thermoscope.style.features import extract_features
        from thermoscope.style.types import StyleTargets

        image = rng.random((3, 32, 32)).astype(np.float32)
        pyramid = extract_features(image, loss_network)
        targets = StyleTargets(grams=tuple(gram(m) for m in pyramid.maps))
        assert style_loss(pyramid, targets) == 0.0

        assert tv_loss(np.full((3, 16, 16), 0.7, dtype=np.float32)) == 0.0


# Published per-class APs and the row averages printed next to them.
# (table, detector, per-class APs, printed average)
CONSISTENT_ROWS = [
    ("flir-with-style", "faster-rcnn/resnet-101", (0.7190, 0.4394, 0.6201), 0.5928),
    ("flir-with-style", "ssd-300/vgg-16", (0.7991, 0.4691, 0.6253), 0.6312),
    ("flir-with-style", "ssd-300/mobilenet-v2", (0.5434, 0.2798, 0.3638), 0.3957),
    ("flir-with-style", "ssd-300/efficientnet", (0.7405, 0.3512, 0.5169), 0.5362),
    ("flir-with-style", "ssd-512/vgg-16", (0.8233, 0.5553, 0.7101), 0.6962),
    ("flir-baseline", "faster-rcnn/resnet-101", (0.6799, 0.4276, 0.548), 0.5518),
    ("flir-baseline", "ssd-300/vgg-16", (0.7561, 0.4502, 0.6197), 0.6087),
    ("flir-baseline", "ssd-300/efficientnet", (0.6809, 0.2747, 0.4992), 0.4849),
    ("flir-baseline", "ssd-512/vgg-16", (0.8055, 0.5399, 0.702), 0.6825),
    ("kaist-with-style", "faster-rcnn/resnet-101", (0.5745,), 0.5745),
    ("kaist-with-style", "ssd-300/vgg-16", (0.7536,), 0.7536),
    ("kaist-with-style", "ssd-300/mobilenet-v2", (0.7465,), 0.7465),
    ("kaist-with-style", "ssd-300/efficientnet", (0.6770,), 0.6770),
    ("kaist-with-style", "ssd-512/vgg-16", (0.7725,), 0.7725),
    ("kaist-baseline", "faster-rcnn/resnet-101", (0.5583,), 0.5583),
    ("kaist-baseline", "ssd-300/vgg-16", (0.6687,), 0.6687),
    ("kaist-baseline", "ssd-300/mobilenet-v2", (0.5998,), 0.5998),
    ("kaist-baseline", "ssd-300/efficientnet", (0.6162,), 0.6162),
    ("kaist-baseline", "ssd-512/vgg-16", (0.6409,), 0.6409),
]

# One published row is internally inconsistent: its per-class APs
# (0.4774, 0.1943, 0.3163) average to 0.329333..., not the printed
# 0.3284 (off by 9.3e-4, far beyond rounding of 4-decimal entries).
DEFECTIVE_ROW = ((0.4774, 0.1943, 0.3163), 0.3284)

CLASS_NAMES = ("car", "bicycle", "person")


def _row_mean(per_class):
    return mean_ap(dict(zip(CLASS_NAMES[: len(per_class)], per_class)))


def test_criterion_05_table_arithmetic_parity():
    with gate("criterion 05, published row-average parity", budget=1):
        for table, detector, per_class, printed in CONSISTENT_ROWS:
            got = _row_mean(per_class)
            assert abs(got - printed) <= 5e-5, (
                f"{table} {detector}: mean {got:.6f} vs printed {printed}"
            )


@pytest.mark.xfail(
    strict=True,
    reason="published baseline mobilenet row prints 0.3284 but its per-class "
    "APs average to 0.329333...; the printed cell is arithmetically wrong",
)
def test_criterion_05_defective_row_printed_average():
    per_class, printed = DEFECTIVE_ROW
    assert abs(_row_mean(per_class) - printed) <= 5e-5


def test_criterion_05_defective_row_true_mean():
    per_class, _ = DEFECTIVE_ROW
    assert abs(_row_mean(per_class) - (0.4774 + 0.1943 + 0.3163) / 3) <= 1e-12


def _grid_boxes():
    boxes = []
    for x0 in range(4):
        for x1 in range(x0 + 1, 5):
            for y0 in range(4):
                for y1 in range(y0 + 1, 5):
                    boxes.append(BoundingBox(float(x0), float(y0), float(x1), float(y1)))
    return boxes


def test_criterion_06_voc_ap_matches_brute_force_oracle():
    with gate("criterion 06, AP vs brute-force PR enumeration", budget=60):
        boxes = _grid_boxes()
        assert len(boxes) == 100

        # exhaustive slab: every det/gt box pair on the grid, both modes
        for mode in AP_MODES:
            for gt_box in boxes:
                gts = {"a": [ObjectAnnotation(gt_box, "person")]}
                for det_box in boxes:
                    dets = [Detection("a", det_box, "person", 0.7)]
                    got = average_precision(dets, gts, mode=mode)
                    want = oracle_average_precision(dets, gts, Fraction(1, 2), mode)
                    assert got == want

        # random scenes within the stated envelope: <=3 GTs and <=5
        # detections per image, difficult flags, confidence ties
        rng = random.Random(606)

        def random_box():
            x0 = rng.randrange(0, 4)
            y0 = rng.randrange(0, 4)
            return BoundingBox(
                float(x0), float(y0),
                float(rng.randrange(x0 + 1, 5)), float(rng.randrange(y0 + 1, 5)),
            )

        checked = 0
        for mode in AP_MODES:
            for _ in range(250):
                gts = {
                    img: [
                        ObjectAnnotation(random_box(), "person", rng.random() < 0.25)
                        for _ in range(rng.randrange(0, 4))
                    ]
                    for img in ("a", "b")
                }
                dets = [
                    Detection(rng.choice(("a", "b")), random_box(), "person",
                              rng.randrange(1, 100) / 100)
                    for _ in range(rng.randrange(0, 6))
                ]
                got = average_precision(dets, gts, mode=mode)
                want = oracle_average_precision(dets, gts, Fraction(1, 2), mode)
                assert got == want
                if want is not None:
                    checked += 1
        assert checked > 100


def _single_pair_config(root, size=64):
    from thermoscope.style.training import StyleTrainConfig

    paired = make_paired_toy_corpus(root / "pair", n_train=1, n_val=0, seed=0, size=size)
    content = paired.subset(["frame0000/thermal"])
    style = paired.subset(["frame0000/visible"])
    return StyleTrainConfig(
        content_manifest=content,
        style_manifest=style,
        epochs=200,
        batch_size=1,
        style_sizes=(size,),
        content_size=size,
        seed=0,
        width=16,
    )


def test_criterion_07_single_pair_overfit_and_bitwise_rerun(tmp_path):
    from thermoscope.style.training import train_msgnet

    with gate("criterion 07, 200-iteration overfit + bitwise rerun", budget=300):
        config = _single_pair_config(tmp_path)
        checkpoint, log = train_msgnet(config, deterministic=True)
        assert len(log.entries) == 200
        initial = log.entries[0].total
        final = log.entries[-1].total
        assert final < 0.5 * initial, f"total {initial} -> {final}, less than 2x drop"

        rerun_checkpoint, rerun_log = train_msgnet(config, deterministic=True)
        assert [e.total for e in rerun_log.entries] == [e.total for e in log.entries]
        state = checkpoint.params.module.state_dict()
        rerun_state = rerun_checkpoint.params.module.state_dict()
        assert set(state) == set(rerun_state)
        for key in state:
            assert torch.equal(state[key], rerun_state[key]), f"weights differ at {key}"


def test_criterion_08_odsc_toy_pipeline(tmp_path):
    with gate("criterion 08, end-to-end toy stylize-train-eval run", budget=600):
        thermal = make_toy_corpus(tmp_path / "thermal", n_train=10, n_val=10, seed=0)
        visible = make_toy_corpus(
            tmp_path / "visible", n_train=6, n_val=1, seed=1, spectrum="visible",
            name="toy-visible",
        )
        thermal_path = tmp_path / "thermal-manifest.json"
        visible_path = tmp_path / "visible-manifest.json"
        save_manifest(thermal, thermal_path)
        save_manifest(visible, visible_path)

        config = PipelineConfig(
            pipeline="odsc",
            out_dir=str(tmp_path / "out"),
            seed=0,
            datasets={"content": str(thermal_path), "style": str(visible_path)},
            style_train={
                "epochs": 2, "batch_size": 4, "content_size": 32,
                "style_sizes": [32], "width": 16,
            },
        )
        record = run_pipeline(config)

        report = load_report(record.artifacts["eval_report"])
        assert report.iou_threshold == 0.5
        assert set(report.classes) <= set(thermal.class_set)
        assert report.classes, "evaluation saw no classes"
        for name, entry in report.classes.items():
            assert entry.gt >= 0 and entry.tp >= 0 and entry.fp >= 0
            assert entry.tp + entry.fn == entry.gt, f"{name} counts do not close"
            if entry.ap is not None:
                assert 0.0 <= entry.ap <= 1.0
        if report.map is not None:
            assert 0.0 <= report.map <= 1.0

        # annotation invariance: stylization rewrote pixels, never labels
        styled = load_manifest(record.artifacts["styled_train_manifest"])
        train = thermal.subset(thermal.ids("train"))
        assert sorted(styled.ids()) == sorted(train.ids())
        by_id = train.by_id()
        for rec in styled.records:
            assert rec.annotations == by_id[rec.image_id].annotations

        # split hygiene: nothing evaluated was ever trained on
        val_ids = set(thermal.ids("val"))
        assert val_ids.isdisjoint(styled.ids())
        from thermoscope.detection.types import load_detections

        assert {d.image_id for d in load_detections(record.artifacts["detections"])} <= val_ids


def test_criterion_09_style_transfer_helps_cross_domain_transfer(tmp_path):
    with gate("criterion 09, with-style person AP >= without-style", budget=600):
        paired = make_paired_toy_corpus(tmp_path / "paired", n_train=40, n_val=10, seed=5)
        paired_path = tmp_path / "paired-manifest.json"
        save_manifest(paired, paired_path)

        config = PipelineConfig(
            pipeline="cdmt",
            out_dir=str(tmp_path / "out"),
            seed=3,
            datasets={"paired": str(paired_path)},
            detector={"epochs": 60},
            style_train={
                "epochs": 8, "batch_size": 4, "content_size": 64,
                "style_sizes": [64], "width": 16,
            },
        )
        record_without, record_with = run_pipeline(config)

        ap_without = record_without.report["classes"]["person"]["ap"]
        ap_with = record_with.report["classes"]["person"]["ap"]
        assert ap_without is not None and ap_with is not None
        assert ap_with >= ap_without, (
            f"styled eval did not help: person AP {ap_without} -> {ap_with}"
        )


def test_criterion_10_format_round_trips(tmp_path):
    with gate("criterion 10, file formats round-trip", budget=10):
        # VOC XML: integer-coordinate boxes, difficult flags, extensions
        record = LabeledImage(
            image_id="frame0001",
            path="images/frame0001.png",
            width=64,
            height=48,
            spectrum="thermal",
            annotations=[
                ObjectAnnotation(BoundingBox(2.0, 3.0, 20.0, 30.0), "person"),
                ObjectAnnotation(BoundingBox(5.0, 5.0, 12.0, 9.0), "car", difficult=True),
            ],
        )
        assert from_voc_xml(to_voc_xml(record)) == record

        # manifest JSON
        other = LabeledImage(
            image_id="frame0002", path="images/frame0002.png", width=64, height=48,
            spectrum="visible", annotations=[],
        )
        manifest = DatasetManifest(
            "round-trip", ["car", "person"], [record, other],
            {"frame0001": "train", "frame0002": "val"},
        )
        manifest_path = tmp_path / "manifest.json"
        save_manifest(manifest, manifest_path)
        assert load_manifest(manifest_path) == manifest

        # weak-label XMLs re-parse through the same reader
        from thermoscope.detection.detector import train_reference_mini
        from thermoscope.detection.registry import MiniAdapter

        corpus = make_toy_corpus(tmp_path / "toy", n_train=2, n_val=0, seed=6, size=48)
        handle, _losses = train_reference_mini(
            corpus, corpus.class_set, epochs=2, seed=0
        )
        adapter = MiniAdapter()
        handle_path = tmp_path / "handle.tsc"
        adapter.save(handle, handle_path)

        unlabeled = tmp_path / "unlabeled"
        unlabeled.mkdir()
        import shutil

        for i, rec in enumerate(corpus.records):
            shutil.copy(rec.path, unlabeled / f"u{i}.png")
        weak_config = PipelineConfig(
            pipeline="weak-label",
            out_dir=str(tmp_path / "weak-out"),
            datasets={"unlabeled_dir": str(unlabeled)},
            detector_handle=str(handle_path),
            weak_label={"confidence_threshold": 0.05},
        )
        weak_record = run_pipeline(weak_config)
        from pathlib import Path

        xml_files = sorted(Path(weak_record.artifacts["weak_labels_dir"]).glob("*.xml"))
        assert len(xml_files) == len(corpus.records)
        for xml_path in xml_files:
            parsed = from_voc_xml(xml_path.read_text(encoding="utf-8"))
            assert parsed.width == 48 and parsed.height == 48
            for ann in parsed.annotations:
                assert 0 <= ann.box.x_min < ann.box.x_max <= parsed.width
                assert 0 <= ann.box.y_min < ann.box.y_max <= parsed.height
