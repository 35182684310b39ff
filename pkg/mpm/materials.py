"""
Constitutive models: energy density, stress and plastic return mapping.

Every function works on stacked matrices of shape (..., 3, 3) for a single
material. Elastic and snow use fixed-corotated elasticity (snow with
hardening), sand uses StVK on the Hencky strain with a Drucker-Prager yield
cone, fluid uses a weakly compressible equation of state.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from utils.error_handler import NumericalBlowupError


class MaterialKind(str, Enum):
    ELASTIC = "elastic"
    SNOW = "snow"
    SAND = "sand"
    FLUID = "fluid"


@dataclass(frozen=True)
class MaterialParams:
    """Parameters of one entry in the material table."""

    kind: MaterialKind = MaterialKind.ELASTIC
    name: str = "default"
    density: float = 1000.0
    youngs_modulus: float = 1e5
    poisson_ratio: float = 0.3
    # snow
    critical_compression: float = 2.5e-2
    critical_stretch: float = 7.5e-3
    hardening: float = 10.0
    # sand
    friction_angle: float = 30.0  # degrees
    # fluid
    bulk_modulus: Optional[float] = None
    gamma: float = 7.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MaterialKind(self.kind))
        if self.density <= 0:
            raise ValueError(f"material '{self.name}': density must be positive")
        if self.youngs_modulus <= 0:
            raise ValueError(f"material '{self.name}': Young's modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValueError(f"material '{self.name}': Poisson ratio must lie in [0, 0.5)")
        if self.critical_compression <= 0 or self.critical_stretch <= 0:
            raise ValueError(f"material '{self.name}': snow thresholds must be positive")
        if self.hardening < 0:
            raise ValueError(f"material '{self.name}': hardening must be non-negative")
        if not 0.0 < self.friction_angle < 90.0:
            raise ValueError(f"material '{self.name}': friction angle must lie in (0, 90) degrees")
        if self.bulk_modulus is not None and self.bulk_modulus <= 0:
            raise ValueError(f"material '{self.name}': bulk modulus must be positive")
        if self.gamma <= 1.0:
            raise ValueError(f"material '{self.name}': gamma must exceed 1")

    @property
    def mu(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def lam(self) -> float:
        nu = self.poisson_ratio
        return self.youngs_modulus * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @property
    def kappa(self) -> float:
        if self.bulk_modulus is not None:
            return self.bulk_modulus
        return self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio))

    @property
    def cone_alpha(self) -> float:
        """Drucker-Prager cone coefficient from the friction angle."""
        s = math.sin(math.radians(self.friction_angle))
        return math.sqrt(2.0 / 3.0) * 2.0 * s / (3.0 - s)

    @property
    def sound_speed(self) -> float:
        stiffness = self.kappa if self.kind == MaterialKind.FLUID else self.youngs_modulus
        return math.sqrt(stiffness / self.density)

    @property
    def initial_plastic_state(self) -> float:
        # J_p for snow; accumulated volume correction for sand
        return 0.0 if self.kind == MaterialKind.SAND else 1.0


def _transpose(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def check_finite(F: np.ndarray, step: Optional[int] = None, particle_ids: Optional[np.ndarray] = None) -> None:
    """Raise NumericalBlowupError naming the first particle with non-finite entries."""
    F = np.asarray(F)
    finite = np.isfinite(F).reshape(F.shape[:-2] + (-1,)).all(axis=-1)
    if not np.all(finite):
        bad = int(np.flatnonzero(~np.atleast_1d(finite))[0])
        particle = int(particle_ids[bad]) if particle_ids is not None else bad
        raise NumericalBlowupError("non-finite deformation gradient", step=step, particle=particle)


def _moduli(mat: MaterialParams, plastic_state) -> Tuple[np.ndarray, np.ndarray]:
    mu, lam = mat.mu, mat.lam
    if mat.kind == MaterialKind.SNOW:
        h = np.exp(mat.hardening * (1.0 - np.asarray(plastic_state, dtype=np.float64)))
        return mu * h, lam * h
    return np.asarray(mu), np.asarray(lam)


def energy_density(F: np.ndarray, plastic_state, mat: MaterialParams) -> np.ndarray:
    """
    Strain energy density Psi(F_E) per unit rest volume.

    Args:
        F: (..., 3, 3) elastic deformation gradients
        plastic_state: scalar or (...,) plastic state (J_p for snow)
        mat: Material parameters

    Returns:
        (...,) energy densities
    """
    F = np.asarray(F, dtype=np.float64)
    if mat.kind == MaterialKind.FLUID:
        J = np.linalg.det(F)
        g = mat.gamma
        return mat.kappa * (J ** (1.0 - g) / (g - 1.0) + J - g / (g - 1.0))

    sigma = np.linalg.svd(F, compute_uv=False)
    if mat.kind == MaterialKind.SAND:
        eps = np.log(sigma)
        return mat.mu * np.sum(eps**2, axis=-1) + 0.5 * mat.lam * np.sum(eps, axis=-1) ** 2

    mu, lam = _moduli(mat, plastic_state)
    J = np.linalg.det(F)
    return mu * np.sum((sigma - 1.0) ** 2, axis=-1) + 0.5 * lam * (J - 1.0) ** 2


def first_piola(F: np.ndarray, plastic_state, mat: MaterialParams) -> np.ndarray:
    """
    First Piola-Kirchhoff stress dPsi/dF_E.

    Returns:
        (..., 3, 3) stresses
    """
    F = np.asarray(F, dtype=np.float64)
    J = np.linalg.det(F)

    if mat.kind == MaterialKind.FLUID:
        pressure = mat.kappa * (J ** (-mat.gamma) - 1.0)
        return np.asarray(-pressure * J)[..., None, None] * _transpose(np.linalg.inv(F))

    U, sigma, Vt = np.linalg.svd(F)
    if mat.kind == MaterialKind.SAND:
        eps = np.log(sigma)
        trace = np.sum(eps, axis=-1, keepdims=True)
        diag = (2.0 * mat.mu * eps + mat.lam * trace) / sigma
        return (U * diag[..., None, :]) @ Vt

    mu, lam = _moduli(mat, plastic_state)
    R = U @ Vt
    F_invT = _transpose(np.linalg.inv(F))
    shear = np.asarray(2.0 * mu)[..., None, None] * (F - R)
    volumetric = np.asarray(lam * (J - 1.0) * J)[..., None, None] * F_invT
    return shear + volumetric


def kirchhoff_stress(F: np.ndarray, plastic_state, mat: MaterialParams) -> np.ndarray:
    """tau = P F^T = J sigma, the stress scattered by the MLS transfer."""
    F = np.asarray(F, dtype=np.float64)
    tau = first_piola(F, plastic_state, mat) @ _transpose(F)
    return 0.5 * (tau + _transpose(tau))


def stress(
    F: np.ndarray,
    plastic_state,
    mat: MaterialParams,
    step: Optional[int] = None,
    particle_ids: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Cauchy stress sigma = (1/J) P F^T with J = det(F_E).

    Raises:
        NumericalBlowupError: F contains non-finite entries
    """
    check_finite(F, step, particle_ids)
    F = np.asarray(F, dtype=np.float64)
    J = np.linalg.det(F)
    return kirchhoff_stress(F, plastic_state, mat) / np.asarray(J)[..., None, None]


def plastic_project(F_trial: np.ndarray, plastic_state, mat: MaterialParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Return a trial elastic deformation gradient to the material's admissible set.

    Args:
        F_trial: (..., 3, 3) trial elastic deformation gradients
        plastic_state: scalar or (...,) plastic state
        mat: Material parameters

    Returns:
        Tuple of (projected F_E, new plastic state)
    """
    F_trial = np.asarray(F_trial, dtype=np.float64)
    state = np.broadcast_to(np.asarray(plastic_state, dtype=np.float64), F_trial.shape[:-2]).copy()

    if mat.kind == MaterialKind.ELASTIC:
        return F_trial.copy(), state

    if mat.kind == MaterialKind.FLUID:
        J = np.linalg.det(F_trial)
        return np.asarray(np.cbrt(J))[..., None, None] * np.eye(3), state

    U, sigma, Vt = np.linalg.svd(F_trial)

    if mat.kind == MaterialKind.SNOW:
        clamped = np.clip(sigma, 1.0 - mat.critical_compression, 1.0 + mat.critical_stretch)
        state = state * np.prod(sigma, axis=-1) / np.prod(clamped, axis=-1)
        return (U * clamped[..., None, :]) @ Vt, state

    # sand: Drucker-Prager return mapping on log singular values
    lead = F_trial.shape[:-2]
    F_trial, U, sigma, Vt = (a.reshape((-1,) + a.shape[len(lead):]) for a in (F_trial, U, sigma, Vt))
    state = state.reshape(-1)
    eps = np.log(np.maximum(sigma, 1e-4))
    trace = np.sum(eps, axis=-1) + state
    dev = eps - trace[..., None] / 3.0
    dev_norm = np.linalg.norm(dev, axis=-1)
    ratio = (3.0 * mat.lam + 2.0 * mat.mu) / (2.0 * mat.mu)
    delta_gamma = dev_norm + ratio * trace * mat.cone_alpha

    expanding = trace >= 0.0
    yielding = ~expanding & (delta_gamma > 0.0)

    projected = F_trial.copy()
    if np.any(expanding):
        projected[expanding] = U[expanding] @ Vt[expanding]
    if np.any(yielding):
        scale = (delta_gamma[yielding] / np.maximum(dev_norm[yielding], 1e-30))[:, None]
        new_sigma = np.exp(eps[yielding] - scale * dev[yielding])
        projected[yielding] = (U[yielding] * new_sigma[:, None, :]) @ Vt[yielding]

    new_state = np.where(expanding, trace, 0.0)
    return projected.reshape(lead + (3, 3)), new_state.reshape(lead)
