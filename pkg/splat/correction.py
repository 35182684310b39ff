"""Scale clipping for Gaussians rebuilt from independently moved vertices."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import settings
from splat.gaussian import FlatGaussian, SoupTriangle
from splat.parametrization import triangle_to_gauss


@dataclass(frozen=True)
class CorrectionConfig:
    """Stretch tolerance for reconstructed in-plane scales."""

    alpha: float = 2.0
    enabled: bool = True

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError(f"correction alpha must be > 1, got {self.alpha}")

    @classmethod
    def from_settings(cls, alpha: Optional[float] = None, enabled: bool = True) -> "CorrectionConfig":
        return cls(alpha=alpha or settings.correction_alpha, enabled=enabled)


def clip_scales_arrays(
    rest_lengths: np.ndarray,
    scales: np.ndarray,
    cfg: CorrectionConfig,
) -> np.ndarray:
    """
    Bound reconstructed in-plane scales by alpha times their rest edge length.

    Scales already inside the bound pass through unchanged, so triangles whose
    edges stay within alpha of their rest length reconstruct exactly.

    Args:
        rest_lengths: (N, 2) binding-time lengths of v2-v1 and v3-v1
        scales: (N, 3) scales from the inverse parametrization
        cfg: Correction parameters

    Returns:
        (N, 3) corrected scales (a new array)
    """
    scales = np.array(scales, dtype=np.float64, copy=True)
    if not cfg.enabled:
        return scales
    scales[:, 1:] = np.minimum(scales[:, 1:], cfg.alpha * rest_lengths)
    return scales


def apply_scale_clip(t: SoupTriangle, cfg: CorrectionConfig, eps: Optional[float] = None) -> FlatGaussian:
    """
    Rebuild the Gaussian of a deformed triangle with the stretch bound applied.

    Mean and rotation come from the plain reconstruction; only s2 and s3
    can change.
    """
    g = triangle_to_gauss(t, eps)
    rest = np.array([[t.rest_len2, t.rest_len3]])
    scales = clip_scales_arrays(rest, g.scales[None], cfg)[0]
    return FlatGaussian(
        mean=g.mean,
        rotation=g.rotation,
        scales=scales,
        opacity=g.opacity,
        sh_coeffs=g.sh_coeffs,
    )
