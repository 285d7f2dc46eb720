"""Core style algebra: the reshaping map, Gram statistics, feature matching.

All functions here are pure and operate on numpy arrays. Differentiable
twins used by the training loop live in ``thermoscope.style.diff``; a
consistency test ties the two routes together.
"""

from __future__ import annotations

import numpy as np

from thermoscope.errors import DimensionError
from thermoscope.style.types import CoMatchWeights, FeatureMap, GramMatrix


def phi(values: np.ndarray) -> np.ndarray:
    """Reshape (C, H, W) -> (C, H*W). Pure reshape, no centering."""
    if values.ndim != 3:
        raise DimensionError(f"phi expects rank 3, got shape {values.shape}")
    c, h, w = values.shape
    return values.reshape(c, h * w)


def phi_inv(matrix: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of phi: (C, H*W) -> (C, H, W)."""
    if matrix.ndim != 2 or matrix.shape[1] != height * width:
        raise DimensionError(
            f"phi_inv expects (C, {height * width}), got shape {matrix.shape}"
        )
    return matrix.reshape(matrix.shape[0], height, width)


def gram(feature_map: FeatureMap) -> GramMatrix:
    r"""Normalized Gram matrix of a feature map.

    G = phi(F) . phi(F)^T / (C*H*W)

    Accumulated in float64 regardless of input dtype; the normalizer
    C*H*W is recorded on the result.
    """
    c, h, w = feature_map.values.shape
    flat = phi(feature_map.values).astype(np.float64, copy=False)
    norm = float(c * h * w)
    values = (flat @ flat.T) / norm
    # exact symmetry: average out the last-bit asymmetry of BLAS order
    values = (values + values.T) / 2.0
    return GramMatrix(values=values, scale_index=feature_map.scale_index, normalization=norm)


def comatch(feature_map: FeatureMap, target: GramMatrix, weights: CoMatchWeights) -> FeatureMap:
    r"""Match content features toward target style statistics.

    y = phi_inv[ (phi(F)^T . W . G)^T ], algebraically equal to
    phi_inv[ G^T . W^T . phi(F) ]. With W = G = identity this is exactly F.
    """
    c, h, w = feature_map.values.shape
    if target.values.shape != (c, c):
        raise DimensionError(
            f"target dimension {target.values.shape} does not match {c} channels"
        )
    if weights.values.shape != (c, c):
        raise DimensionError(
            f"weights dimension {weights.values.shape} does not match {c} channels"
        )
    mixed = target.values.T @ weights.values.T @ phi(feature_map.values)
    return FeatureMap(values=phi_inv(mixed, h, w), scale_index=feature_map.scale_index)
