"""Joint temporal-viewpoint alignment for skeleton sequences."""

from ._jeanie import (
    align_sequences,
    base_distance,
    euler_rotation,
    fundamental_matrix,
    fvm,
    generate_synthetic,
    jeanie,
    soft_dtw,
    softmin,
    synthetic_class_count,
)

__all__ = [
    "align_sequences",
    "base_distance",
    "euler_rotation",
    "fundamental_matrix",
    "fvm",
    "generate_synthetic",
    "jeanie",
    "soft_dtw",
    "softmin",
    "synthetic_class_count",
]
