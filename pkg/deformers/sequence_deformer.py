"""Replay of externally produced triangle-soup keyframes."""

import bisect
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from deformers.base_deformer import DeformationMap
from storage.file_storage import read_obj_soup
from utils.logger import logger


class SequenceDeformer(DeformationMap):
    """
    Piecewise-linear interpolation between keyframed vertex sets.

    Times before the first keyframe return the first one, times after the
    last keyframe return the last one.
    """

    def __init__(self, times: Sequence[float], keyframes: Sequence[np.ndarray], name: Optional[str] = None):
        """
        Initialize the sequence.

        Args:
            times: Strictly increasing keyframe times in seconds
            keyframes: (V, 3) vertex positions per keyframe, all the same shape
            name: Label used in log messages
        """
        super().__init__(name or "sequence")
        if len(times) != len(keyframes) or not keyframes:
            raise ValueError("need one time per keyframe and at least one keyframe")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("keyframe times must be strictly increasing")
        self.times = [float(t) for t in times]
        self.keyframes = [np.asarray(k, dtype=np.float64).reshape(-1, 3) for k in keyframes]
        shapes = {k.shape for k in self.keyframes}
        if len(shapes) != 1:
            raise ValueError(f"keyframes differ in vertex count: {sorted(shapes)}")

    @classmethod
    def from_obj_files(
        cls,
        paths: Sequence[Union[str, Path]],
        frame_rate: Optional[float] = None,
        times: Optional[Sequence[float]] = None,
    ) -> "SequenceDeformer":
        """
        Load keyframes from OBJ soups (three vertices per face, faces in triangle order).

        Args:
            paths: OBJ files in keyframe order
            frame_rate: Keyframe k sits at k / frame_rate when times is not given
            times: Explicit keyframe times

        Returns:
            SequenceDeformer
        """
        if times is None:
            if not frame_rate or frame_rate <= 0:
                raise ValueError("either times or a positive frame_rate is required")
            times = [k / frame_rate for k in range(len(paths))]
        keyframes: List[np.ndarray] = [read_obj_soup(p).reshape(-1, 3) for p in paths]
        logger.info(f"Loaded {len(keyframes)} keyframes of {len(keyframes[0]) // 3} triangles")
        return cls(times, keyframes)

    def bind(self, rest_vertices: np.ndarray) -> None:
        super().bind(rest_vertices)
        if self.rest_vertices.shape != self.keyframes[0].shape:
            raise ValueError(
                f"keyframes hold {len(self.keyframes[0])} vertices, rest state has {len(self.rest_vertices)}"
            )

    def advance_to(self, t: float) -> np.ndarray:
        self._require_bound()
        if t <= self.times[0]:
            return self.keyframes[0].copy()
        if t >= self.times[-1]:
            return self.keyframes[-1].copy()
        k = bisect.bisect_right(self.times, t) - 1
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1.0 - w) * self.keyframes[k] + w * self.keyframes[k + 1]
