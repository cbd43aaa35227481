"""Zero-shot tabular clustering.

A set-transformer encoder pre-trained on synthetic mixture datasets embeds
unseen tables so that classical algorithms (k-means, identity-covariance
GMM) recover their cluster structure without any per-dataset training.
"""

from ._zeus import (
    Encoder,
    IoError,
    NumericError,
    UsageError,
    ari,
    brier_matched,
    default_config,
    gmm,
    kmeans,
    pretrain,
    sample_dataset,
)

__all__ = [
    "Encoder",
    "IoError",
    "NumericError",
    "UsageError",
    "ari",
    "brier_matched",
    "default_config",
    "gmm",
    "kmeans",
    "pretrain",
    "sample_dataset",
]
