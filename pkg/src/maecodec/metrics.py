"""Full-reference quality metrics: SSIM, PSNR, MSE.

All metrics take 8-bit images (or float arrays on the 0..255 scale) of
identical shape. SSIM follows the reference parameterization: 11x11
Gaussian window with sigma 1.5, C1 = (0.01*255)^2, C2 = (0.03*255)^2,
computed on BT.601 luma, borders handled by valid-window cropping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ContractError, ShapeError

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2

PSNR_INF = math.inf


def _gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()

GAUSSIAN_WINDOW = _gaussian_window()


def _as_planes(image) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.size == 0:
        raise ShapeError(f"expected a non-empty HxWxC image, got shape {arr.shape}")
    return arr


def _check_same_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"image dimensions differ: {a.shape} vs {b.shape}")


def luma(image) -> np.ndarray:
    """BT.601 luma plane on the input's own scale."""
    arr = _as_planes(image)
    if arr.shape[2] == 1:
        return arr[:, :, 0]
    if arr.shape[2] == 3:
        return 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]
    raise ShapeError(f"expected 1 or 3 channels, got {arr.shape[2]}")


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    h, w = x.shape
    if h < WINDOW_SIZE or w < WINDOW_SIZE:
        raise ContractError(
            f"image {h}x{w} smaller than the {WINDOW_SIZE}x{WINDOW_SIZE} SSIM window"
        )
    wx = sliding_window_view(x, (WINDOW_SIZE, WINDOW_SIZE))
    wy = sliding_window_view(y, (WINDOW_SIZE, WINDOW_SIZE))
    g = GAUSSIAN_WINDOW
    mu_x = np.einsum("ijkl,kl->ij", wx, g)
    mu_y = np.einsum("ijkl,kl->ij", wy, g)
    xx = np.einsum("ijkl,kl->ij", wx * wx, g)
    yy = np.einsum("ijkl,kl->ij", wy * wy, g)
    xy = np.einsum("ijkl,kl->ij", wx * wy, g)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2)
    den = (mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2)
    return float(np.mean(num / den))


def ssim(a, b, mode: str = "luma") -> float:
    """Mean local SSIM. mode "luma" (default) or "rgb_mean"."""
    pa, pb = _as_planes(a), _as_planes(b)
    _check_same_dims(pa, pb)
    if mode == "luma":
        return _ssim_plane(luma(pa), luma(pb))
    if mode == "rgb_mean":
        vals = [_ssim_plane(pa[:, :, c], pb[:, :, c]) for c in range(pa.shape[2])]
        return float(np.mean(vals))
    raise ContractError(f"unknown SSIM mode {mode!r}")


def mse(a, b) -> float:
    pa, pb = _as_planes(a), _as_planes(b)
    _check_same_dims(pa, pb)
    diff = pa - pb
    return float(np.mean(diff * diff))


def psnr(a, b) -> float:
    """10*log10(255^2 / mse); identical images give the +inf sentinel."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(255.0**2 / err)


@dataclass(frozen=True)
class MetricReport:
    ssim: float
    psnr: float
    mse: float
    bpp: float

    def __post_init__(self):
        if (self.mse == 0.0) != (self.psnr == PSNR_INF):
            raise ContractError("mse == 0 must coincide with the +inf PSNR sentinel")


def report(original, reconstructed, bpp: float) -> MetricReport:
    return MetricReport(
        ssim=ssim(original, reconstructed),
        psnr=psnr(original, reconstructed),
        mse=mse(original, reconstructed),
        bpp=bpp,
    )
