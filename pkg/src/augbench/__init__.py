"""Sign-image augmentation benchmark.

Procedural sign rendering, classical and GAN-based dataset augmentation, a
compact fire-module classifier, and a reproducible evaluation harness.
"""

__version__ = "0.1.0"

from .dataset_io import Dataset, ImageSample, load_dataset, save_dataset
from .errors import (
    AugbenchError,
    ConfigError,
    ManifestError,
    TrainingError,
    ValidationError,
)

__all__ = [
    "AugbenchError",
    "ConfigError",
    "Dataset",
    "ImageSample",
    "ManifestError",
    "TrainingError",
    "ValidationError",
    "load_dataset",
    "save_dataset",
    "__version__",
]
