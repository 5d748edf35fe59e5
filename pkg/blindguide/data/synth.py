"""
Procedural toy corpus and directory ingest

Synthetic images are layered soft ellipses (a face-like head with eyes and a
mouth) over low-frequency shading, with a band of fine stripes, so that blur
visibly removes structure. Optional film grain adds pixel-scale texture.
"""

from pathlib import Path
from typing import Union

import numpy as np

from ..exceptions import CorpusIOError, ParameterError
from ..logging.logger import get_logger
from ..stores.filesystem import center_crop_resize, read_png

logger = get_logger(__name__)

SIZES = (16, 32, 64)
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def _soft_ellipse(xx: np.ndarray, yy: np.ndarray, cx: float, cy: float, rx: float, ry: float,
                  angle: float, sharpness: float) -> np.ndarray:
    """Smooth indicator of an ellipse; sharpness is the edge slope in pixels"""
    c, s = np.cos(angle), np.sin(angle)
    u = ((xx - cx) * c + (yy - cy) * s) / rx
    v = (-(xx - cx) * s + (yy - cy) * c) / ry
    radius = np.sqrt(u ** 2 + v ** 2)
    return 1.0 / (1.0 + np.exp(np.clip((radius - 1.0) * sharpness, -60.0, 60.0)))


def _synth_image(rng: np.random.Generator, size: int, channels: int, grain: float = 0.0) -> np.ndarray:
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    edge = size / 2.0

    shading = (rng.uniform(0.25, 0.45)
               + rng.uniform(-0.1, 0.1) * xx
               + rng.uniform(-0.1, 0.1) * yy
               + 0.05 * np.cos(np.pi * (rng.uniform(0.5, 1.0) * xx + rng.uniform(0.0, 2.0))))
    img = shading

    head = _soft_ellipse(xx, yy, rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.1),
                         rng.uniform(0.5, 0.7), rng.uniform(0.65, 0.85), rng.uniform(-0.2, 0.2), edge)
    img = img + head * (rng.uniform(0.6, 0.8) - img)

    eye_y = rng.uniform(-0.3, -0.1)
    eye_dx = rng.uniform(0.2, 0.3)
    eye_r = rng.uniform(0.08, 0.14)
    eye_tone = rng.uniform(0.05, 0.25)
    for side in (-1.0, 1.0):
        eye = _soft_ellipse(xx, yy, side * eye_dx, eye_y, eye_r * 1.3, eye_r, 0.0, edge)
        img = img + eye * (eye_tone - img)

    mouth = _soft_ellipse(xx, yy, rng.uniform(-0.05, 0.05), rng.uniform(0.3, 0.45),
                          rng.uniform(0.2, 0.3), rng.uniform(0.05, 0.09), 0.0, edge)
    img = img + mouth * (rng.uniform(0.2, 0.4) - img)

    # fine stripes over the top of the head
    theta = rng.uniform(0.0, np.pi)
    period = rng.uniform(2.5, 4.0) / size * 2.0
    stripes = np.sin(2.0 * np.pi * (xx * np.cos(theta) + yy * np.sin(theta)) / period)
    band = head * (yy < rng.uniform(-0.45, -0.3))
    img = img + rng.uniform(0.08, 0.15) * band * stripes
    if grain > 0:
        img = img + grain * rng.standard_normal(img.shape)

    if channels == 1:
        out = img[:, :, None]
    else:
        tint = rng.uniform(0.85, 1.15, size=channels)
        out = img[:, :, None] * tint[None, None, :]
    return np.clip(out, 0.02, 0.98)


def synth_corpus(n: int, size: int = 32, seed: int = 0, channels: int = 1, grain: float = 0.0) -> np.ndarray:
    """
    Deterministic toy corpus

    Args:
        n: Number of images, at least 1
        size: Side length, one of 16, 32, 64
        seed: Generator seed; equal seeds give bit-identical corpora
        channels: 1 (grayscale) or 3
        grain: Std of per-pixel film grain on the unit range; 0 draws none and
            leaves the corpus unchanged

    Returns:
        Unit-range array of shape (n, size, size, channels)
    """
    if int(n) < 1:
        raise ParameterError("n", f"must be at least 1, got {n}")
    if size not in SIZES:
        raise ParameterError("size", f"must be one of {SIZES}, got {size}")
    if channels not in (1, 3):
        raise ParameterError("channels", f"must be 1 or 3, got {channels}")
    if not 0.0 <= grain <= 0.5:
        raise ParameterError("grain", f"must lie in [0, 0.5], got {grain}")
    rng = np.random.default_rng(seed)
    return np.stack([_synth_image(rng, size, channels, grain) for _ in range(int(n))])


def ingest_directory(path: Union[str, Path], size: int = 32, channels: int = 1) -> np.ndarray:
    """
    Read every image in a directory, center-cropped and resized to size x size

    Raises:
        CorpusIOError: If the directory is missing or empty, or some files cannot be read
    """
    path = Path(path)
    if not path.is_dir():
        raise CorpusIOError(str(path), [str(path)])
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise CorpusIOError(str(path), ["<no image files>"])
    images, failed = [], []
    for file in files:
        try:
            images.append(center_crop_resize(read_png(file, channels), size))
        except (OSError, ValueError) as e:
            logger.warning(f"Cannot read {file}: {e}")
            failed.append(file.name)
    if failed:
        raise CorpusIOError(str(path), failed)
    logger.info(f"Ingested {len(images)} images from {path}")
    return np.stack(images)
