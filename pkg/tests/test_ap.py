"""AP unit tests: exact rational values, mode behaviour, oracle cross-checks."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _ap_oracle import oracle_average_precision
from thermoscope.datasets.types import BoundingBox, ObjectAnnotation
from thermoscope.detection.types import Detection
from thermoscope.errors import ValidationError
from thermoscope.evaluation.ap import AP_MODES, average_precision, mean_ap, pr_curve


def box(x0, y0, x1, y1):
    return BoundingBox(float(x0), float(y0), float(x1), float(y1))


def det(image_id, b, confidence, label="person"):
    return Detection(image_id, b, label, confidence)


def gt(b, label="person", difficult=False):
    return ObjectAnnotation(b, label, difficult)


def two_hits_one_miss():
    """2 ground truths; detections ranked TP, FP, TP."""
    gts = {"a": [gt(box(0, 0, 10, 10)), gt(box(20, 20, 30, 30))]}
    dets = [
        det("a", box(0, 0, 10, 10), 0.9),
        det("a", box(40, 40, 50, 50), 0.8),
        det("a", box(20, 20, 30, 30), 0.7),
    ]
    return dets, gts


def test_all_point_ap_exact_five_sixths():
    dets, gts = two_hits_one_miss()
    # PR points (1/2, 1), (1/2, 1/2), (1, 2/3); envelope area 1/2 + 1/3
    assert average_precision(dets, gts) == float(Fraction(5, 6))


def test_eleven_point_ap_exact():
    dets, gts = two_hits_one_miss()
    # recall levels 0.0-0.5 see precision 1, levels 0.6-1.0 see 2/3
    expected = float((6 * Fraction(1) + 5 * Fraction(2, 3)) / 11)
    assert average_precision(dets, gts, mode="voc2007-11pt") == expected


def test_perfect_detections_give_unit_ap():
    gts = {"a": [gt(box(0, 0, 10, 10))], "b": [gt(box(5, 5, 9, 9))]}
    dets = [det("a", box(0, 0, 10, 10), 0.9), det("b", box(5, 5, 9, 9), 0.6)]
    assert average_precision(dets, gts) == 1.0
    assert average_precision(dets, gts, mode="voc2007-11pt") == 1.0


def test_all_misses_give_zero_ap():
    gts = {"a": [gt(box(0, 0, 10, 10))]}
    dets = [det("a", box(30, 30, 40, 40), 0.9)]
    assert average_precision(dets, gts) == 0.0


def test_zero_ground_truths_give_none_not_zero():
    gts = {"a": [], "b": []}
    dets = [det("a", box(0, 0, 10, 10), 0.9)]
    ap = average_precision(dets, gts)
    assert ap is None
    # only difficult boxes present counts as zero positives too
    gts = {"a": [gt(box(0, 0, 10, 10), difficult=True)]}
    assert average_precision(dets, gts) is None


def test_no_detections_give_zero_ap_when_positives_exist():
    gts = {"a": [gt(box(0, 0, 10, 10))]}
    assert average_precision([], gts) == 0.0


def test_unknown_mode_rejected():
    with pytest.raises(ValidationError, match="unknown AP mode"):
        average_precision([], {"a": [gt(box(0, 0, 10, 10))]}, mode="roc")
    assert AP_MODES == ("all-point", "voc2007-11pt")


def test_mismatched_classes_rejected():
    gts = {"a": [gt(box(0, 0, 10, 10), label="car")]}
    dets = [det("a", box(0, 0, 10, 10), 0.9, label="person")]
    with pytest.raises(ValidationError, match="does not match"):
        average_precision(dets, gts)


def test_input_permutation_invariance():
    dets, gts = two_hits_one_miss()
    reference = average_precision(dets, gts)
    rng = random.Random(4)
    for _ in range(10):
        shuffled = list(dets)
        rng.shuffle(shuffled)
        assert average_precision(shuffled, gts) == reference


def test_pr_curve_monotone_recall_and_unit_square():
    dets, gts = two_hits_one_miss()
    curve = pr_curve(dets, gts)
    assert curve.recalls == (0.5, 0.5, 1.0)
    assert curve.precisions == (1.0, 0.5, 2.0 / 3.0)
    assert all(b >= a for a, b in zip(curve.recalls, curve.recalls[1:]))


def test_pr_curve_needs_positives():
    with pytest.raises(ValidationError, match="zero ground truths"):
        pr_curve([], {"a": []})


def test_false_positive_on_empty_image_counts():
    gts = {"a": [gt(box(0, 0, 10, 10))], "b": []}
    hit = [det("a", box(0, 0, 10, 10), 0.9)]
    with_stray = hit + [det("b", box(0, 0, 10, 10), 0.95)]
    assert average_precision(hit, gts) == 1.0
    assert average_precision(with_stray, gts) == 0.5


def _random_scene(rng):
    def random_box():
        x0 = rng.randrange(0, 3)
        y0 = rng.randrange(0, 3)
        return box(x0, y0, x0 + rng.randrange(1, 4), y0 + rng.randrange(1, 4))

    images = ["a", "b"]
    gts = {
        img: [
            gt(random_box(), difficult=rng.random() < 0.2)
            for _ in range(rng.randrange(0, 4))
        ]
        for img in images
    }
    dets = [
        det(rng.choice(images), random_box(), rng.randrange(1, 100) / 100)
        for _ in range(rng.randrange(0, 6))
    ]
    return dets, gts


@pytest.mark.parametrize("mode", AP_MODES)
def test_matches_independent_oracle_on_random_scenes(mode):
    rng = random.Random(11)
    checked = 0
    for _ in range(150):
        dets, gts = _random_scene(rng)
        expected = oracle_average_precision(dets, gts, Fraction(1, 2), mode)
        got = average_precision(dets, gts, mode=mode)
        assert got == expected  # exact: both routes are rational until the end
        if expected is not None:
            checked += 1
    assert checked > 50


def test_mean_ap_exact_examples():
    assert mean_ap({"person": 0.7725}) == 0.7725
    assert abs(mean_ap({"car": 0.7190, "bicycle": 0.4394, "person": 0.6201}) - 0.5928) <= 5e-5
    assert abs(mean_ap({"car": 0.8055, "bicycle": 0.5399, "person": 0.702}) - 0.6825) <= 5e-5


def test_mean_ap_rejects_empty_and_absent():
    with pytest.raises(ValidationError, match="at least one"):
        mean_ap({})
    with pytest.raises(ValidationError, match=r"\['bicycle'\]"):
        mean_ap({"car": 0.5, "bicycle": None})


@settings(max_examples=40)
@given(
    values=st.dictionaries(
        st.sampled_from(["car", "bicycle", "person", "dog"]),
        st.floats(0, 1),
        min_size=1,
    ),
    alpha=st.floats(0.1, 2.0),
)
def test_mean_ap_homogeneous(values, alpha):
    scaled = {k: alpha * v for k, v in values.items()}
    assert mean_ap(scaled) == pytest.approx(alpha * mean_ap(values), abs=1e-12)
