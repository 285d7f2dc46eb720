"""PASCAL-VOC XML serialization of labeled images.

Emits the conventional skeleton
``annotation/{filename, size/{width,height,depth}, object*/{name, difficult,
bndbox/{xmin,ymin,xmax,ymax}}}`` with integer coordinates (half-up rounding).
Three optional extension elements keep the round trip lossless for records
whose identity is not derivable from the filename: ``path``, ``image_id``
and ``spectrum``. Parsers that do not know them ignore extra elements.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from pathlib import Path

from thermoscope.datasets.types import BoundingBox, LabeledImage, ObjectAnnotation
from thermoscope.errors import ParseError, ValidationError


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def to_voc_xml(record: LabeledImage) -> str:
    """Serialize a labeled image to a VOC XML document string."""
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = Path(record.path).name
    ET.SubElement(root, "path").text = record.path
    ET.SubElement(root, "image_id").text = record.image_id
    ET.SubElement(root, "spectrum").text = record.spectrum
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(record.width)
    ET.SubElement(size, "height").text = str(record.height)
    ET.SubElement(size, "depth").text = "3"
    for ann in record.annotations:
        xmin = _round_half_up(ann.box.x_min)
        ymin = _round_half_up(ann.box.y_min)
        xmax = _round_half_up(ann.box.x_max)
        ymax = _round_half_up(ann.box.y_max)
        if xmin >= xmax or ymin >= ymax:
            raise ValidationError(
                f"image {record.image_id!r}: box {ann.box.as_tuple()} collapses "
                "under integer rounding; VOC files carry integer coordinates"
            )
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = ann.label
        ET.SubElement(obj, "difficult").text = "1" if ann.difficult else "0"
        bnd = ET.SubElement(obj, "bndbox")
        ET.SubElement(bnd, "xmin").text = str(xmin)
        ET.SubElement(bnd, "ymin").text = str(ymin)
        ET.SubElement(bnd, "xmax").text = str(xmax)
        ET.SubElement(bnd, "ymax").text = str(ymax)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def _required(parent: ET.Element, tag: str) -> str:
    node = parent.find(tag)
    if node is None or node.text is None:
        raise ParseError(f"VOC document missing required element {tag!r}")
    return node.text.strip()


def from_voc_xml(doc: str) -> LabeledImage:
    """Parse a VOC XML document string into a labeled image.

    Box coordinates are validated against the declared image size.
    """
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        raise ParseError(f"not well-formed VOC XML: {exc}") from exc
    if root.tag != "annotation":
        raise ParseError(f"expected <annotation> root, got <{root.tag}>")
    filename = _required(root, "filename")
    size = root.find("size")
    if size is None:
        raise ParseError("VOC document missing required element 'size'")
    width = int(_required(size, "width"))
    height = int(_required(size, "height"))

    path_node = root.find("path")
    path = path_node.text.strip() if path_node is not None and path_node.text else filename
    id_node = root.find("image_id")
    image_id = id_node.text.strip() if id_node is not None and id_node.text else Path(filename).stem
    spec_node = root.find("spectrum")
    spectrum = spec_node.text.strip() if spec_node is not None and spec_node.text else "thermal"

    annotations = []
    for obj in root.findall("object"):
        label = _required(obj, "name")
        diff_node = obj.find("difficult")
        difficult = bool(int(diff_node.text)) if diff_node is not None and diff_node.text else False
        bnd = obj.find("bndbox")
        if bnd is None:
            raise ParseError(f"object {label!r} missing required element 'bndbox'")
        coords = [float(_required(bnd, t)) for t in ("xmin", "ymin", "xmax", "ymax")]
        annotations.append(ObjectAnnotation(BoundingBox(*coords), label, difficult))

    # LabeledImage validation rejects boxes outside the declared size.
    return LabeledImage(image_id, path, width, height, spectrum, annotations)


def write_voc_file(record: LabeledImage, path: str | Path) -> None:
    Path(path).write_text(to_voc_xml(record), encoding="utf-8")


def read_voc_file(path: str | Path) -> LabeledImage:
    return from_voc_xml(Path(path).read_text(encoding="utf-8"))
