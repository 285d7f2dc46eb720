"""Command-line surface: exit codes, stdout contracts, standalone tools."""

import json
from types import SimpleNamespace

import pytest

from thermoscope import cli
from thermoscope.datasets.manifest import load_manifest, save_manifest
from thermoscope.datasets.types import BoundingBox
from thermoscope.detection.types import Detection, save_detections
from thermoscope.evaluation.report import load_report
from thermoscope.pipelines.synthetic import make_toy_corpus


@pytest.fixture(scope="module")
def cli_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-env")
    thermal = make_toy_corpus(root / "thermal", n_train=4, n_val=2, seed=3, size=48)
    visible = make_toy_corpus(
        root / "visible", n_train=3, n_val=1, seed=4, spectrum="visible", size=48,
        name="toy-visible",
    )
    thermal_path = root / "thermal-manifest.json"
    visible_path = root / "visible-manifest.json"
    save_manifest(thermal, thermal_path)
    save_manifest(visible, visible_path)

    config_path = root / "baseline.json"
    config_path.write_text(
        json.dumps(
            {
                "pipeline": "baseline",
                "out_dir": str(root / "baseline-out"),
                "datasets": {"content": str(thermal_path)},
                "detector": {"epochs": 6},
            }
        ),
        encoding="utf-8",
    )
    return SimpleNamespace(
        root=root,
        thermal=thermal,
        thermal_path=thermal_path,
        visible_path=visible_path,
        baseline_config=config_path,
    )


def test_baseline_subcommand_exit_zero(cli_env, tmp_path, capsys):
    rc = cli.main(
        ["baseline", "--config", str(cli_env.baseline_config), "--out", str(tmp_path / "out")]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "[baseline] finished; artifacts in" in captured.out
    assert "mAP:" in captured.out
    assert (tmp_path / "out" / "run_record.json").is_file()


def test_subcommand_config_mismatch_exit_two(cli_env, capsys):
    rc = cli.main(["odsc", "--config", str(cli_env.baseline_config)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "configuration error:" in captured.err
    assert "config names pipeline 'baseline'" in captured.err
    assert "'odsc' subcommand was invoked" in captured.err


def test_missing_config_exit_two(tmp_path, capsys):
    rc = cli.main(["baseline", "--config", str(tmp_path / "absent.json")])
    captured = capsys.readouterr()
    assert rc == 2
    assert "config file not found" in captured.err


def test_unknown_config_key_exit_two(cli_env, tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps(
            {
                "pipeline": "baseline",
                "out_dir": str(tmp_path / "out"),
                "datasets": {"content": str(cli_env.thermal_path)},
                "stylize": True,
            }
        ),
        encoding="utf-8",
    )
    rc = cli.main(["baseline", "--config", str(path)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "unknown config keys in the top level" in captured.err


def test_invalid_json_config_exit_two(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    rc = cli.main(["baseline", "--config", str(path)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "not valid JSON" in captured.err


def _perfect_val_detections(manifest):
    detections = []
    for record in manifest.subset(manifest.ids("val")).records:
        for ann in record.annotations:
            detections.append(Detection(record.image_id, ann.box, ann.label, 0.9))
    return detections


def test_eval_subcommand(cli_env, tmp_path, capsys):
    det_path = tmp_path / "dets.ndjson"
    save_detections(_perfect_val_detections(cli_env.thermal), det_path)
    out_path = tmp_path / "report.json"
    rc = cli.main(
        [
            "eval",
            "--detections", str(det_path),
            "--manifest", str(cli_env.thermal_path),
            "--out", str(out_path),
        ]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "Average mAP" in captured.out
    assert "IoU threshold 0.5, interpolation all-point" in captured.out
    report = load_report(out_path)
    assert report.map == 1.0


def test_eval_stray_detection_exit_one(cli_env, tmp_path, capsys):
    det_path = tmp_path / "stray.ndjson"
    stray = Detection("ghost-image", BoundingBox(1.0, 1.0, 5.0, 5.0), "car", 0.5)
    save_detections([stray], det_path)
    rc = cli.main(
        ["eval", "--detections", str(det_path), "--manifest", str(cli_env.thermal_path)]
    )
    captured = capsys.readouterr()
    assert rc == 1
    assert captured.err.startswith("error:")


def test_style_train_then_stylize(cli_env, tmp_path, capsys):
    train_out = tmp_path / "style-train"
    rc = cli.main(
        [
            "style-train",
            "--content-manifest", str(cli_env.thermal_path),
            "--style-manifest", str(cli_env.visible_path),
            "--out", str(train_out),
            "--epochs", "1",
            "--batch-size", "4",
            "--style-sizes", "32",
            "--content-size", "32",
            "--width", "16",
        ]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "checkpoint written to" in captured.out
    checkpoint = train_out / "style_checkpoint.tsc"
    assert checkpoint.is_file()
    assert (train_out / "style_train_log.ndjson").is_file()

    stylize_out = tmp_path / "stylized"
    rc = cli.main(
        [
            "stylize",
            "--manifest", str(cli_env.thermal_path),
            "--style-manifest", str(cli_env.visible_path),
            "--checkpoint", str(checkpoint),
            "--out", str(stylize_out),
        ]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "styled manifest written to" in captured.out
    styled = load_manifest(stylize_out / "styled_manifest.json")
    assert sorted(styled.ids()) == sorted(cli_env.thermal.ids())
    assert all(r.path.startswith(str(stylize_out)) for r in styled.records)


def test_missing_required_arg_raises_system_exit():
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["baseline"])
    assert excinfo.value.code == 2


def test_bad_interpolation_choice_raises_system_exit(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(
            [
                "eval",
                "--detections", str(tmp_path / "d.ndjson"),
                "--manifest", str(tmp_path / "m.json"),
                "--interpolation", "nearest",
            ]
        )
    assert excinfo.value.code == 2
