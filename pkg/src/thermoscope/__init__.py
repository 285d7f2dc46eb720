"""Domain adaptation toolkit for thermal object detection via style consistency.

Subpackages:
    datasets    annotation ingestion, VOC XML, manifests, splits
    style       multi-style generative network: features, Gram statistics,
                CoMatch transform, perceptual losses, training
    detection   detector adapter registry, in-repo reference detector, FPS bench
    evaluation  PASCAL-VOC matching, average precision, weak-label accounting
    pipelines   end-to-end experiment runners and the toy corpus generator
"""

__version__ = "0.1.0"
