"""
One-level undecimated Haar transform

Along each axis lo[n] = (x[n] + x[n+1]) / 2 and hi[n] = (x[n] - x[n+1]) / 2,
with x[N] = x[N-1] (reflect). Rows are filtered first (horizontal pass), then
columns; LH is horizontal-lo / vertical-hi, so an edge running horizontally
puts its energy in LH. lo + hi = x on each axis, hence reconstruction is
LL + LH + HL + HH.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch

from ..ops.image import Image, as_image

BAND_NAMES = ("ll", "lh", "hl", "hh")


@dataclass(frozen=True, eq=False)
class SwtBands:
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def as_tuple(self) -> Tuple[np.ndarray, ...]:
        return self.ll, self.lh, self.hl, self.hh


def _split(x: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    n = x.shape[axis]
    shifted = np.take(x, np.minimum(np.arange(n) + 1, n - 1), axis=axis)
    return (x + shifted) / 2.0, (x - shifted) / 2.0


def swt_decompose(img: Image) -> SwtBands:
    img = as_image(img)
    lo_h, hi_h = _split(img, axis=1)
    ll, lh = _split(lo_h, axis=0)
    hl, hh = _split(hi_h, axis=0)
    return SwtBands(ll=ll, lh=lh, hl=hl, hh=hh)


def swt_reconstruct(bands: SwtBands) -> Image:
    return bands.ll + bands.lh + bands.hl + bands.hh


def _split_torch(x: torch.Tensor, dim: int) -> Tuple[torch.Tensor, torch.Tensor]:
    n = x.shape[dim]
    index = torch.clamp(torch.arange(n) + 1, max=n - 1)
    shifted = x.index_select(dim, index)
    return (x + shifted) / 2.0, (x - shifted) / 2.0


def swt_decompose_torch(x: torch.Tensor) -> Tuple[torch.Tensor, ...]:
    """Same transform on (B, C, H, W) tensors; returns (ll, lh, hl, hh)"""
    lo_h, hi_h = _split_torch(x, dim=3)
    ll, lh = _split_torch(lo_h, dim=2)
    hl, hh = _split_torch(hi_h, dim=2)
    return ll, lh, hl, hh
