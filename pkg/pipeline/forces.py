"""Body acceleration fields applied to grid velocities."""

import math
from typing import Optional, Sequence

import numpy as np

from config.scene_config import WIND_GUST, WIND_SINUSOIDAL, WIND_UNIFORM, ForcesConfig, WindConfig
from mpm.transfer import ForceField


def wind_acceleration(wind: Optional[WindConfig], t: float) -> np.ndarray:
    """
    Spatially uniform wind acceleration at time t.

    Args:
        wind: Wind model, or None for no wind
        t: Time in seconds

    Returns:
        (3,) acceleration
    """
    if wind is None:
        return np.zeros(3)
    a = np.asarray(wind.acceleration, dtype=np.float64)
    if wind.kind == WIND_UNIFORM:
        return a.copy()
    if wind.kind == WIND_SINUSOIDAL:
        return a * math.sin(wind.frequency * t + wind.phase)
    if wind.kind == WIND_GUST:
        on = math.fmod(t, wind.period) < wind.duty * wind.period
        return a.copy() if on else np.zeros(3)
    raise ValueError(f"unknown wind kind '{wind.kind}'")


def velocity_field_forces(
    gravity: Sequence[float] = (0.0, 0.0, -9.8), wind: Optional[WindConfig] = None
) -> ForceField:
    """
    Build f(x, t) = gravity + wind(t).

    Args:
        gravity: Constant acceleration
        wind: Optional wind model

    Returns:
        Callable mapping (N, 3) positions and a time to (N, 3) accelerations
    """
    g = np.asarray(gravity, dtype=np.float64)

    def field(positions: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(g + wind_acceleration(wind, t), np.shape(positions)).copy()

    return field


def forces_from_config(forces: ForcesConfig) -> ForceField:
    return velocity_field_forces(forces.gravity, forces.wind)
