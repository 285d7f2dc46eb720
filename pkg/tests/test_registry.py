"""Detector registry: combo defaults, transfer overrides, adapter dispatch."""

import pytest

from thermoscope.detection.detector import MiniDetectorHandle
from thermoscope.detection.registry import (
    CDMT_LEARNING_RATES,
    REGISTERED_COMBOS,
    DetectorSpec,
    ExternalAdapter,
    MiniAdapter,
    register_detector,
    set_external_factory,
)
from thermoscope.errors import ConfigError, ExternalBackendError
from thermoscope.pipelines.synthetic import make_toy_corpus


def test_registered_combo_inventory():
    assert set(REGISTERED_COMBOS) == {
        ("faster-rcnn", "resnet-101"),
        ("ssd-300", "vgg-16"),
        ("ssd-300", "mobilenet-v2"),
        ("ssd-300", "efficientnet"),
        ("ssd-512", "vgg-16"),
        ("reference-mini", "mini"),
    }
    assert set(CDMT_LEARNING_RATES) == set(REGISTERED_COMBOS)


def test_faster_rcnn_defaults():
    spec = DetectorSpec("faster-rcnn", "resnet-101", ("person",))
    assert spec.learning_rate == 1e-4
    assert spec.epochs == 15
    assert spec.batch_size == 4
    assert spec.input_size == 600


@pytest.mark.parametrize(
    "architecture,backbone,lr,input_size",
    [
        ("ssd-300", "vgg-16", 1e-4, 300),
        ("ssd-300", "mobilenet-v2", 1e-3, 300),
        ("ssd-300", "efficientnet", 1e-3, 300),
        ("ssd-512", "vgg-16", 1e-3, 512),
    ],
)
def test_ssd_defaults(architecture, backbone, lr, input_size):
    spec = DetectorSpec(architecture, backbone, ("car", "bicycle", "person"))
    assert spec.learning_rate == lr
    assert spec.epochs == 15
    assert spec.input_size == input_size


def test_cdmt_learning_rate_override():
    base = DetectorSpec("faster-rcnn", "resnet-101", ("person",))
    transfer = base.for_cdmt()
    assert transfer.learning_rate == 1e-3
    assert (transfer.architecture, transfer.epochs, transfer.class_set) == (
        base.architecture,
        base.epochs,
        base.class_set,
    )
    # efficientnet is the one pair whose transfer rate goes down, not up
    assert DetectorSpec("ssd-300", "efficientnet", ("person",)).for_cdmt().learning_rate == 1e-4


def test_explicit_overrides_survive():
    spec = DetectorSpec("reference-mini", "mini", ("person",), learning_rate=5e-4, epochs=7)
    assert spec.learning_rate == 5e-4
    assert spec.epochs == 7


def test_unknown_combination_lists_valid_pairs():
    with pytest.raises(ConfigError, match="valid pairs") as err:
        DetectorSpec("ssd-300", "resnet-101", ("person",))
    assert "reference-mini" in str(err.value)


def test_bad_spec_values_rejected():
    with pytest.raises(ConfigError, match="class_set"):
        DetectorSpec("reference-mini", "mini", ())
    with pytest.raises(ConfigError, match="positive"):
        DetectorSpec("reference-mini", "mini", ("person",), learning_rate=-1.0)
    with pytest.raises(ConfigError, match="positive"):
        DetectorSpec("reference-mini", "mini", ("person",), batch_size=0)


def test_spec_dict_round_trip():
    spec = DetectorSpec("ssd-512", "vgg-16", ("car", "person"), seed=3)
    assert DetectorSpec.from_dict(spec.to_dict()) == spec


def test_adapter_dispatch():
    mini_spec = DetectorSpec("reference-mini", "mini", ("person",))
    assert isinstance(register_detector(mini_spec), MiniAdapter)
    external_spec = DetectorSpec("ssd-300", "vgg-16", ("person",))
    assert isinstance(register_detector(external_spec), ExternalAdapter)


def test_external_adapter_without_backend_raises():
    spec = DetectorSpec("ssd-512", "vgg-16", ("person",))
    adapter = register_detector(spec)
    with pytest.raises(ExternalBackendError, match="set_external_factory"):
        adapter.train(None, spec)
    with pytest.raises(ExternalBackendError, match="reference-mini"):
        adapter.infer(None, [])


def test_external_factory_plumbing():
    calls = []

    class StubBackend:
        def train(self, manifest, spec, deterministic=True):
            calls.append(("train", spec.backbone, deterministic))
            return "stub-handle"

        def infer(self, handle, records, score_threshold=0.01):
            calls.append(("infer", handle, score_threshold))
            return []

    spec = DetectorSpec("ssd-300", "mobilenet-v2", ("person",))
    adapter = register_detector(spec)
    set_external_factory(lambda s: StubBackend())
    try:
        handle = adapter.train("manifest", spec)
        assert handle == "stub-handle"
        assert adapter.infer(handle, [], score_threshold=0.3) == []
    finally:
        set_external_factory(None)
    assert calls == [("train", "mobilenet-v2", True), ("infer", "stub-handle", 0.3)]


def test_mini_adapter_end_to_end(tmp_path):
    manifest = make_toy_corpus(tmp_path / "toy", n_train=4, n_val=0, seed=1)
    spec = DetectorSpec("reference-mini", "mini", tuple(manifest.class_set), epochs=2)
    adapter = register_detector(spec)
    handle = adapter.train(manifest, spec)
    assert isinstance(handle, MiniDetectorHandle)
    assert len(adapter.last_losses) == 2  # 4 images, batch 4, 2 epochs
    detections = adapter.infer(handle, manifest.records, score_threshold=0.01)
    assert all(d.label in spec.class_set for d in detections)

    path = tmp_path / "handle.tsc"
    adapter.save(handle, path)
    loaded = adapter.load(path)
    assert adapter.infer(loaded, manifest.records[:1]) == adapter.infer(
        handle, manifest.records[:1]
    )
