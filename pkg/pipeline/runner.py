"""
Frame loop: deform the bound soup, rebuild corrected Gaussians, emit frames.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np

from config.scene_config import SceneConfig
from deformers.base_deformer import DeformationMap
from pipeline.binder import BoundState
from splat.correction import CorrectionConfig, clip_scales_arrays
from splat.gaussian import GaussianScene
from splat.parametrization import gauss_to_triangle_arrays, triangle_to_gauss_arrays
from utils.error_handler import NumericalBlowupError, PipelineHaltedError, SimulationError
from utils.logger import logger

# Lower bound for the in-plane scales of triangles rebuilt from a collapsed shape
MIN_DEGENERATE_SCALE = 1e-8


@dataclass
class FrameResult:
    """One emitted frame: the full Gaussian scene plus its triangle soup."""

    index: int
    time: float
    scene: GaussianScene
    vertices: np.ndarray  # (N, 3, 3) soup of every Gaussian in the frame
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    degenerate: int = 0
    clipped: int = 0

    def manifest_record(self) -> Dict[str, Any]:
        record = {
            "frame": self.index,
            "time": self.time,
            "gaussians": len(self.scene),
            "degenerate": self.degenerate,
            "clipped": self.clipped,
        }
        record.update(self.diagnostics)
        return record


def _repair_degenerate(
    tri: np.ndarray, rotations: np.ndarray, scales: np.ndarray, degenerate: np.ndarray, previous: np.ndarray
) -> None:
    """Give collapsed triangles their previous frame's rotation; scales follow the edges, in place."""
    rotations[degenerate] = previous[degenerate]
    e2 = tri[degenerate, 1] - tri[degenerate, 0]
    e3 = tri[degenerate, 2] - tri[degenerate, 0]
    scales[degenerate, 1] = np.maximum(np.linalg.norm(e2, axis=1), MIN_DEGENERATE_SCALE)
    scales[degenerate, 2] = np.maximum(
        np.abs(np.sum(e3 * previous[degenerate, :, 2], axis=1)), MIN_DEGENERATE_SCALE
    )


def _motion_diagnostics(bound: BoundState, vertices: np.ndarray, previous: np.ndarray, dt: float) -> Dict[str, Any]:
    """Mass and finite-difference momentum of the particles, for maps that report nothing themselves."""
    mass = bound.particles.mass
    velocity = (vertices - previous) / dt if dt > 0 else np.zeros_like(vertices)
    momentum = np.sum(mass[:, None] * velocity, axis=0) if len(mass) else np.zeros(3)
    return {
        "mass": float(np.sum(mass)),
        "momentum_x": float(momentum[0]),
        "momentum_y": float(momentum[1]),
        "momentum_z": float(momentum[2]),
        "max_speed": float(np.max(np.linalg.norm(velocity, axis=1))) if len(velocity) else 0.0,
        "escaped": 0,
    }


def run(
    bound: BoundState,
    config: SceneConfig,
    deform: DeformationMap,
    correction: Optional[CorrectionConfig] = None,
) -> Iterator[FrameResult]:
    """
    Generate the frames of a scene.

    Frame k is taken at t = k / frame_rate. Every frame holds all Gaussians of
    the rest frame in the same order; static ones are copied unchanged.

    Args:
        bound: Bound rest state
        config: Scene configuration (frame schedule and correction)
        deform: Deformation map; bound to the rest vertices if not already
        correction: Overrides config.correction

    Yields:
        FrameResult per output frame

    Raises:
        PipelineHaltedError: The map or reconstruction failed; carries the
            last good frame index and the indices already emitted
    """
    correction = correction or config.correction
    eps = bound.rest_frame.metadata.epsilon
    if deform.rest_vertices is None:
        deform.bind(bound.rest_vertices)

    rest = bound.rest_frame
    rows = bound.soup.source_index
    n_tri = len(bound.soup)
    rest_soup = gauss_to_triangle_arrays(rest.means, rest.rotations, rest.scales)
    previous_rotations = rest.rotations[rows].copy()
    previous_vertices = bound.rest_vertices.copy()
    previous_time = 0.0
    emitted: List[int] = []

    logger.info(
        f"Running {config.simulation.frame_count} frames at {config.simulation.frame_rate:g} fps "
        f"with {deform.name} (correction alpha={correction.alpha}, enabled={correction.enabled})"
    )
    for k, t in enumerate(config.simulation.frame_times()):
        try:
            vertices = np.asarray(deform.advance_to(t), dtype=np.float64)
            if vertices.shape != (3 * n_tri, 3):
                raise SimulationError(f"{deform.name} returned {vertices.shape} vertices, expected {(3 * n_tri, 3)}")
            if not np.all(np.isfinite(vertices)):
                bad = int(np.flatnonzero(~np.all(np.isfinite(vertices), axis=1))[0])
                raise NumericalBlowupError(f"non-finite vertex from {deform.name}", particle=bad)

            tri = vertices.reshape(n_tri, 3, 3)
            means, rotations, scales, degenerate = triangle_to_gauss_arrays(tri, eps)
            n_degenerate = int(np.sum(degenerate))
            if n_degenerate:
                _repair_degenerate(tri, rotations, scales, degenerate, previous_rotations)
                logger.warning(f"Frame {k}: {n_degenerate} degenerate triangle(s) kept their previous rotation")
            corrected = clip_scales_arrays(bound.soup.rest_lengths, scales, correction)
            n_clipped = int(np.sum(corrected != scales))
        except SimulationError as e:
            last_good = emitted[-1] if emitted else None
            logger.error(f"Run halted at frame {k} (t={t:.4f}s): {e}")
            raise PipelineHaltedError(f"run halted at frame {k}: {e}", last_good, list(emitted)) from e

        frame_means = rest.means.copy()
        frame_rotations = rest.rotations.copy()
        frame_scales = rest.scales.copy()
        frame_means[rows] = means
        frame_rotations[rows] = rotations
        frame_scales[rows] = corrected
        frame_vertices = rest_soup.copy()
        frame_vertices[rows] = tri

        diagnostics = _motion_diagnostics(bound, vertices, previous_vertices, t - previous_time)
        diagnostics.update({key: value for key, value in deform.diagnostics().items() if key != "time"})

        previous_rotations = rotations
        previous_vertices = vertices
        previous_time = t
        emitted.append(k)
        logger.debug(f"Frame {k} t={t:.4f}s: {n_clipped} scale(s) clipped, {n_degenerate} degenerate")
        yield FrameResult(
            index=k,
            time=t,
            scene=rest.with_geometry(frame_means, frame_rotations, frame_scales),
            vertices=frame_vertices,
            diagnostics=diagnostics,
            degenerate=n_degenerate,
            clipped=n_clipped,
        )

    logger.info(f"Emitted {len(emitted)} frames")
