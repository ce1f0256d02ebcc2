"""DCT-threshold data augmentation for distortion-robust image classification."""

__version__ = "0.1.0"
