"""Keypoint-based boosted object detection."""

from ._core import *  # noqa: F401,F403
from ._core import ContractError, FeatureParams, GrayImage, IoError, extract_features

__version__ = "0.1.0"


def features_of(image, params=None, id=""):
    """Keypoints and descriptors of a numpy array or GrayImage."""
    if not isinstance(image, GrayImage):
        image = GrayImage(image)
    return extract_features(image, params or FeatureParams(), id)
