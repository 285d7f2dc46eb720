"""In-repo reference detector: single-scale, anchor-based, ~160k parameters.

Small enough to train on CPU in seconds, real enough to exercise every
downstream contract (scored boxes, NMS, mAP, pipelines). Four stride-8
convolutions feed a head predicting, per cell and per square anchor,
an objectness logit, class logits, and a center/size box regression.

Images are resized to the square ``input_size`` for the network and
boxes are mapped back to native coordinates on the way out. There is
deliberately no input standardization: the raw pixel statistics of the
training domain are part of what the model learns, which is exactly the
effect the cross-domain experiments measure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from thermoscope.container import load_container, save_container
from thermoscope.datasets.types import BoundingBox, DatasetManifest, LabeledImage
from thermoscope.detection.types import Detection
from thermoscope.errors import NumericError, ParseError, ValidationError
from thermoscope.imaging import load_image, resize_image
from thermoscope.rng import substream_rng, substream_seed

logger = logging.getLogger(__name__)

STRIDE = 8
ANCHOR_SIZES = (12, 24, 40)
POS_IOU = 0.5
NEG_IOU = 0.4
NMS_IOU = 0.45
HANDLE_KIND = "reference-mini-handle"


class MiniDetectorNet(nn.Module):
    def __init__(self, n_classes: int):
        super().__init__()
        self.n_classes = n_classes
        self.backbone = nn.Sequential(
            nn.Conv2d(3, 24, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(24, 48, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(48, 96, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(96, 96, 3, stride=1, padding=1), nn.ReLU(inplace=True),
        )
        per_anchor = 1 + n_classes + 4
        self.head = nn.Conv2d(96, len(ANCHOR_SIZES) * per_anchor, 3, padding=1)

    def forward(self, x):
        """(B, 3, H, W) -> (B, cells*anchors, 1 + n_classes + 4) raw predictions."""
        y = self.head(self.backbone(x))
        b, _, gh, gw = y.shape
        per_anchor = 1 + self.n_classes + 4
        y = y.view(b, len(ANCHOR_SIZES), per_anchor, gh, gw)
        y = y.permute(0, 3, 4, 1, 2).reshape(b, gh * gw * len(ANCHOR_SIZES), per_anchor)
        return y


def _anchor_grid(grid_h: int, grid_w: int) -> np.ndarray:
    """(cells*anchors, 3) array of (cx, cy, size) in input pixels."""
    anchors = []
    for gy in range(grid_h):
        for gx in range(grid_w):
            cx = gx * STRIDE + STRIDE / 2
            cy = gy * STRIDE + STRIDE / 2
            for s in ANCHOR_SIZES:
                anchors.append((cx, cy, float(s)))
    return np.asarray(anchors, dtype=np.float32)


def _anchor_boxes(anchors: np.ndarray) -> np.ndarray:
    half = anchors[:, 2:3] / 2
    return np.concatenate(
        [anchors[:, 0:1] - half, anchors[:, 1:2] - half, anchors[:, 0:1] + half, anchors[:, 1:2] + half],
        axis=1,
    )


def _iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    ix0 = np.maximum(boxes_a[:, None, 0], boxes_b[None, :, 0])
    iy0 = np.maximum(boxes_a[:, None, 1], boxes_b[None, :, 1])
    ix1 = np.minimum(boxes_a[:, None, 2], boxes_b[None, :, 2])
    iy1 = np.minimum(boxes_a[:, None, 3], boxes_b[None, :, 3])
    inter = np.clip(ix1 - ix0, 0, None) * np.clip(iy1 - iy0, 0, None)
    area_a = (boxes_a[:, 2] - boxes_a[:, 0]) * (boxes_a[:, 3] - boxes_a[:, 1])
    area_b = (boxes_b[:, 2] - boxes_b[:, 0]) * (boxes_b[:, 3] - boxes_b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(union > 0, inter / union, 0.0)


def _encode(gt_box: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    cx = (gt_box[0] + gt_box[2]) / 2
    cy = (gt_box[1] + gt_box[3]) / 2
    w = max(gt_box[2] - gt_box[0], 1e-3)
    h = max(gt_box[3] - gt_box[1], 1e-3)
    ax, ay, s = anchor
    return np.asarray(
        [(cx - ax) / s, (cy - ay) / s, math.log(w / s), math.log(h / s)], dtype=np.float32
    )


def _assign_targets(
    gt_boxes: np.ndarray, gt_labels: np.ndarray, anchors: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (obj_target in {1,0,-1 ignore}, class_target, box_target)."""
    n = anchors.shape[0]
    obj = np.zeros(n, dtype=np.float32)
    cls = np.zeros(n, dtype=np.int64)
    box = np.zeros((n, 4), dtype=np.float32)
    if len(gt_boxes) == 0:
        return obj, cls, box
    ious = _iou_matrix(_anchor_boxes(anchors), gt_boxes)
    best_gt = ious.argmax(axis=1)
    best_iou = ious.max(axis=1)
    obj[(best_iou > NEG_IOU) & (best_iou < POS_IOU)] = -1.0  # ignore band
    positive = best_iou >= POS_IOU
    # every GT claims its single best anchor even below the threshold
    for g in range(len(gt_boxes)):
        a = ious[:, g].argmax()
        positive[a] = True
        best_gt[a] = g
    obj[positive] = 1.0
    for a in np.flatnonzero(positive):
        g = best_gt[a]
        cls[a] = gt_labels[g]
        box[a] = _encode(gt_boxes[g], anchors[a])
    return obj, cls, box


@dataclass
class MiniDetectorHandle:
    """Immutable-after-training bundle: network, class names, input size, seed."""

    module: MiniDetectorNet
    class_set: Tuple[str, ...]
    input_size: int
    seed: int


def _loss_terms(pred: torch.Tensor, obj_t, cls_t, box_t, n_classes: int) -> torch.Tensor:
    obj_logit = pred[:, :, 0]
    cls_logit = pred[:, :, 1 : 1 + n_classes]
    box_pred = pred[:, :, 1 + n_classes :]
    selected = obj_t >= 0.0
    obj_loss = nn.functional.binary_cross_entropy_with_logits(
        obj_logit[selected], obj_t[selected]
    )
    positive = obj_t > 0.5
    total = obj_loss
    if positive.any():
        total = total + nn.functional.cross_entropy(cls_logit[positive], cls_t[positive])
        total = total + nn.functional.smooth_l1_loss(box_pred[positive], box_t[positive])
    return total


def train_reference_mini(
    manifest: DatasetManifest,
    class_set: Sequence[str],
    input_size: int = 64,
    learning_rate: float = 1e-3,
    epochs: int = 60,
    batch_size: int = 4,
    seed: int = 0,
    deterministic: bool = True,
) -> Tuple[MiniDetectorHandle, List[float]]:
    """Train on the manifest's train split (all records when unsplit)."""
    if deterministic:
        torch.set_num_threads(1)
    train_ids = manifest.ids("train") if manifest.split else manifest.ids()
    records = [r for r in manifest.records if r.image_id in set(train_ids)]
    if not records:
        raise ValidationError("empty train split: nothing to train on")
    if set(manifest.class_set) != set(class_set):
        raise ValidationError(
            f"manifest classes {sorted(manifest.class_set)} do not match "
            f"detector classes {sorted(class_set)}"
        )
    records = sorted(records, key=lambda r: r.image_id)
    label_index = {name: i for i, name in enumerate(class_set)}

    with torch.random.fork_rng():
        torch.manual_seed(substream_seed(seed, "detector-init"))
        module = MiniDetectorNet(n_classes=len(class_set))
    optimizer = torch.optim.Adam(module.parameters(), lr=learning_rate, betas=(0.9, 0.999))

    grid = input_size // STRIDE
    anchors = _anchor_grid(grid, grid)

    # preload and pre-encode once; the corpus is desk-scale by design
    images, targets = [], []
    dropped = 0
    for record in records:
        try:
            img = resize_image(load_image(record.path), input_size)
        except (OSError, ValueError):
            dropped += 1
            continue
        sx = input_size / record.width
        sy = input_size / record.height
        boxes = np.asarray(
            [
                (a.box.x_min * sx, a.box.y_min * sy, a.box.x_max * sx, a.box.y_max * sy)
                for a in record.annotations
            ],
            dtype=np.float32,
        ).reshape(-1, 4)
        labels = np.asarray([label_index[a.label] for a in record.annotations], dtype=np.int64)
        images.append(img)
        targets.append(_assign_targets(boxes, labels, anchors))
    if dropped:
        logger.warning("skipped %d unreadable training images", dropped)
    if not images:
        raise ValidationError("no readable training images")

    module.train()
    losses: List[float] = []
    iteration = 0
    for epoch in range(epochs):
        order = substream_rng(seed, f"detector-order:{epoch}").permutation(len(images))
        for start in range(0, len(order), batch_size):
            iteration += 1
            idx = order[start : start + batch_size]
            x = torch.from_numpy(np.stack([images[i] for i in idx]))
            obj_t = torch.from_numpy(np.stack([targets[i][0] for i in idx]))
            cls_t = torch.from_numpy(np.stack([targets[i][1] for i in idx]))
            box_t = torch.from_numpy(np.stack([targets[i][2] for i in idx]))
            optimizer.zero_grad()
            pred = module(x)
            loss = _loss_terms(pred, obj_t, cls_t, box_t, len(class_set))
            if not torch.isfinite(loss):
                raise NumericError(f"non-finite detector loss at iteration {iteration}")
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))

    handle = MiniDetectorHandle(
        module=module, class_set=tuple(class_set), input_size=input_size, seed=seed
    )
    return handle, losses


def _nms(boxes: np.ndarray, scores: np.ndarray, threshold: float) -> List[int]:
    order = np.argsort(-scores, kind="stable")
    keep: List[int] = []
    while len(order):
        i = order[0]
        keep.append(int(i))
        if len(order) == 1:
            break
        rest = order[1:]
        ious = _iou_matrix(boxes[i : i + 1], boxes[rest])[0]
        order = rest[ious < threshold]
    return keep


def infer_reference_mini(
    handle: MiniDetectorHandle,
    records: Sequence[LabeledImage],
    score_threshold: float = 0.01,
) -> List[Detection]:
    """Detections for each record, confidence-sorted per image, class-wise NMS."""
    handle.module.eval()
    grid = handle.input_size // STRIDE
    anchors = _anchor_grid(grid, grid)
    detections: List[Detection] = []
    unreadable = 0
    for record in records:
        try:
            img = resize_image(load_image(record.path), handle.input_size)
        except (OSError, ValueError):
            unreadable += 1
            continue
        with torch.no_grad():
            pred = handle.module(torch.from_numpy(img).unsqueeze(0))[0].numpy()
        obj = 1.0 / (1.0 + np.exp(-pred[:, 0]))
        cls_logits = pred[:, 1 : 1 + len(handle.class_set)]
        cls_prob = np.exp(cls_logits - cls_logits.max(axis=1, keepdims=True))
        cls_prob /= cls_prob.sum(axis=1, keepdims=True)
        deltas = pred[:, 1 + len(handle.class_set) :]

        cx = anchors[:, 0] + deltas[:, 0] * anchors[:, 2]
        cy = anchors[:, 1] + deltas[:, 1] * anchors[:, 2]
        w = np.exp(np.clip(deltas[:, 2], -6, 6)) * anchors[:, 2]
        h = np.exp(np.clip(deltas[:, 3], -6, 6)) * anchors[:, 2]
        sx = record.width / handle.input_size
        sy = record.height / handle.input_size
        x0 = np.clip((cx - w / 2) * sx, 0, record.width)
        y0 = np.clip((cy - h / 2) * sy, 0, record.height)
        x1 = np.clip((cx + w / 2) * sx, 0, record.width)
        y1 = np.clip((cy + h / 2) * sy, 0, record.height)
        boxes = np.stack([x0, y0, x1, y1], axis=1)

        image_dets: List[Detection] = []
        for c, name in enumerate(handle.class_set):
            scores = obj * cls_prob[:, c]
            mask = (scores >= score_threshold) & (boxes[:, 2] > boxes[:, 0]) & (boxes[:, 3] > boxes[:, 1])
            idx = np.flatnonzero(mask)
            if len(idx) == 0:
                continue
            for k in _nms(boxes[idx], scores[idx], NMS_IOU):
                i = idx[k]
                image_dets.append(
                    Detection(
                        image_id=record.image_id,
                        box=BoundingBox(*(float(v) for v in boxes[i])),
                        label=name,
                        confidence=float(min(scores[i], 1.0)),
                    )
                )
        image_dets.sort(key=lambda d: -d.confidence)
        detections.extend(image_dets)
    if unreadable:
        logger.warning("skipped %d unreadable images at inference", unreadable)
    return detections


def save_handle(handle: MiniDetectorHandle, path: str | Path) -> None:
    tensors = {k: v.cpu().numpy() for k, v in handle.module.state_dict().items()}
    metadata = {
        "kind": HANDLE_KIND,
        "class_set": list(handle.class_set),
        "input_size": handle.input_size,
        "seed": handle.seed,
    }
    save_container(path, metadata, tensors)


def load_handle(path: str | Path) -> MiniDetectorHandle:
    metadata, tensors = load_container(path)
    if metadata.get("kind") != HANDLE_KIND:
        raise ParseError(f"{path} is not a reference-mini handle (kind={metadata.get('kind')!r})")
    module = MiniDetectorNet(n_classes=len(metadata["class_set"]))
    module.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
    return MiniDetectorHandle(
        module=module,
        class_set=tuple(metadata["class_set"]),
        input_size=int(metadata["input_size"]),
        seed=int(metadata.get("seed", 0)),
    )
