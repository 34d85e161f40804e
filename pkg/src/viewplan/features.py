"""Cheap per-image complexity features and their multi-image aggregation.

Stands in for a learned image encoder: each image is summarized by five
scalar signals of visual complexity, and a set of 1-5 images of the same
object is aggregated into one vector by concatenating the per-feature mean
and variance across the set.  All features are deterministic functions of
the 8-bit RGB pixel data.
"""

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ImageDecodeError, InvalidArgumentError

FEATURE_NAMES = (
    "histogram_entropy",   # nats, joint RGB histogram
    "edge_density",        # fraction of strong-gradient pixels
    "mean_saturation",     # HSV saturation averaged over pixels
    "foreground_fraction", # pixels deviating from the dominant border color
    "luminance_variance",  # variance of per-pixel luminance in [0, 1]
)
PER_IMAGE_FEATURES = len(FEATURE_NAMES)
AGGREGATED_DIM = 2 * PER_IMAGE_FEATURES

HISTOGRAM_BINS = 32          # per channel
EDGE_THRESHOLD = 0.1         # fraction of the image's max gradient magnitude
BORDER_DEVIATION = 0.1       # fraction of full scale, any channel
MAX_IMAGES = 5

_LUMA = np.array([0.299, 0.587, 0.114])


def load_image(path) -> np.ndarray:
    """Decode an image file to an (H, W, 3) uint8 array."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageDecodeError(f"{path}: cannot decode image ({exc})") from exc
    if arr.size == 0:
        raise InvalidArgumentError(f"{path}: zero-size image")
    return arr


def _check_image(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise InvalidArgumentError(
            f"expected (H, W, 3) uint8 image, got shape {arr.shape} dtype {arr.dtype}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError("zero-size image")
    return arr


def histogram_entropy(img: np.ndarray) -> float:
    """Shannon entropy (nats) of the joint RGB histogram, 32 bins per channel."""
    arr = _check_image(img)
    q = (arr.astype(np.int64) >> 3).reshape(-1, 3)  # 256 / 32 = 8 levels per bin
    flat = (q[:, 0] * HISTOGRAM_BINS + q[:, 1]) * HISTOGRAM_BINS + q[:, 2]
    counts = np.bincount(flat, minlength=HISTOGRAM_BINS ** 3)
    p = counts[counts > 0] / flat.size
    return float(-(p * np.log(p)).sum())


def _luminance(arr: np.ndarray) -> np.ndarray:
    return (arr.astype(float) / 255.0) @ _LUMA


def edge_density(img: np.ndarray) -> float:
    """Fraction of pixels whose Sobel gradient magnitude exceeds 0.1 of the max."""
    arr = _check_image(img)
    lum = _luminance(arr)
    gy = ndimage.sobel(lum, axis=0, mode="reflect")
    gx = ndimage.sobel(lum, axis=1, mode="reflect")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak <= 0.0:
        return 0.0
    return float(np.count_nonzero(mag > EDGE_THRESHOLD * peak) / mag.size)


def mean_saturation(img: np.ndarray) -> float:
    """Mean HSV saturation: (max - min) / max per pixel, 0 for black pixels."""
    arr = _check_image(img).astype(float) / 255.0
    cmax = arr.max(axis=2)
    cmin = arr.min(axis=2)
    sat = np.where(cmax > 0.0, (cmax - cmin) / np.where(cmax > 0.0, cmax, 1.0), 0.0)
    return float(sat.mean())


def _dominant_border_color(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape[:2]
    if h <= 2 or w <= 2:
        border = arr.reshape(-1, 3)
    else:
        border = np.concatenate([
            arr[0, :], arr[-1, :], arr[1:-1, 0], arr[1:-1, -1],
        ])
    packed = (border[:, 0].astype(np.int64) << 16) \
        | (border[:, 1].astype(np.int64) << 8) | border[:, 2].astype(np.int64)
    values, counts = np.unique(packed, return_counts=True)
    # argmax takes the first maximum; values are sorted, so ties resolve to
    # the numerically smallest packed color.
    dom = int(values[np.argmax(counts)])
    return np.array([(dom >> 16) & 0xFF, (dom >> 8) & 0xFF, dom & 0xFF], dtype=float)


def foreground_fraction(img: np.ndarray) -> float:
    """Fraction of pixels deviating > 10% of full scale from the dominant border color."""
    arr = _check_image(img)
    dom = _dominant_border_color(arr)
    dev = np.abs(arr.astype(float) - dom)
    fg = (dev > BORDER_DEVIATION * 255.0).any(axis=2)
    return float(np.count_nonzero(fg) / fg.size)


def luminance_variance(img: np.ndarray) -> float:
    arr = _check_image(img)
    return float(np.var(_luminance(arr)))


def image_features(img) -> np.ndarray:
    """All per-image features, in FEATURE_NAMES order."""
    arr = _check_image(img)
    return np.array([
        histogram_entropy(arr),
        edge_density(arr),
        mean_saturation(arr),
        foreground_fraction(arr),
        luminance_variance(arr),
    ])


def extract_features(images) -> np.ndarray:
    """Aggregate 1-5 images into one vector: per-feature mean, then variance.

    Variance uses the population convention, so a single image aggregates to
    zero variance components rather than NaN.
    """
    images = list(images)
    if not 1 <= len(images) <= MAX_IMAGES:
        raise InvalidArgumentError(
            f"feature extraction takes 1..{MAX_IMAGES} images, got {len(images)}")
    per_image = np.stack([image_features(img) for img in images])
    return np.concatenate([per_image.mean(axis=0), per_image.var(axis=0)])


def extract_features_from_files(paths) -> np.ndarray:
    return extract_features([load_image(p) for p in paths])


class ImageFeatureExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping image sets to aggregated feature vectors.

    Follows the fit/transform estimator convention so it can sit in a
    pipeline ahead of the view-count regressor; fitting is a no-op.
    """

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        """X: sequence of image sets (each 1-5 arrays or file paths)."""
        rows = []
        for group in X:
            group = list(group)
            if group and not isinstance(group[0], np.ndarray):
                rows.append(extract_features_from_files(group))
            else:
                rows.append(extract_features(group))
        return np.stack(rows) if rows else np.empty((0, AGGREGATED_DIM))
