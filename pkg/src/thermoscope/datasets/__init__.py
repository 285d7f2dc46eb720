"""Dataset ingestion: annotation parsing, VOC XML, manifests, splits."""

from thermoscope.datasets.types import (
    BoundingBox,
    DatasetManifest,
    LabeledImage,
    ObjectAnnotation,
    SPECTRA,
)
from thermoscope.datasets.manifest import (
    load_manifest,
    make_split,
    save_manifest,
    single_spectrum_view,
)
from thermoscope.datasets.voc import from_voc_xml, to_voc_xml
from thermoscope.datasets.flir import parse_flir_annotations
from thermoscope.datasets.kaist import parse_kaist_annotations

__all__ = [
    "BoundingBox",
    "ObjectAnnotation",
    "LabeledImage",
    "DatasetManifest",
    "SPECTRA",
    "make_split",
    "save_manifest",
    "load_manifest",
    "single_spectrum_view",
    "to_voc_xml",
    "from_voc_xml",
    "parse_flir_annotations",
    "parse_kaist_annotations",
]
