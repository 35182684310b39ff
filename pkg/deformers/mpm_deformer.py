"""Embedded material point solver exposed as a deformation map."""

from typing import Any, Dict, Optional

import numpy as np

from config.scene_config import SceneConfig
from deformers.base_deformer import DeformationMap
from mpm.solver import MpmSolver, StepDiagnostics
from pipeline.binder import BoundState, fit_grid
from pipeline.forces import forces_from_config
from utils.logger import logger


class MpmDeformer(DeformationMap):
    """
    Moves soup vertices as MPM particles.

    The solver owns the particle state; advance_to steps it forward with the
    nominal dt and returns the particle positions.
    """

    def __init__(self, solver: MpmSolver, dt: float, name: Optional[str] = None):
        """
        Initialize the deformer.

        Args:
            solver: Solver holding one particle per rest vertex, in vertex order
            dt: Nominal step size in seconds
            name: Label used in log messages
        """
        super().__init__(name or "mpm")
        if dt <= 0:
            raise ValueError(f"time step must be positive, got {dt}")
        self.solver = solver
        self.dt = dt
        self._last: Optional[StepDiagnostics] = None

    @classmethod
    def from_bound(cls, bound: BoundState, config: SceneConfig) -> "MpmDeformer":
        """Solver over the bound particles with the scene's grid, forces and colliders."""
        sim = config.simulation
        solver = MpmSolver(
            particles=bound.particles,
            grid=fit_grid(bound, config),
            materials=bound.materials,
            kernel=sim.kernel,
            colliders=bound.colliders,
            force=forces_from_config(config.forces),
            cfl=sim.cfl,
            deterministic=sim.deterministic,
            damping=sim.damping,
        )
        deformer = cls(solver, sim.dt)
        deformer.bind(bound.rest_vertices)
        return deformer

    def bind(self, rest_vertices: np.ndarray) -> None:
        super().bind(rest_vertices)
        if len(rest_vertices) != len(self.solver.particles):
            raise ValueError(
                f"{len(rest_vertices)} rest vertices for {len(self.solver.particles)} particles"
            )

    def advance_to(self, t: float) -> np.ndarray:
        self._require_bound()
        if t < self.solver.time - 1e-12:
            raise ValueError(f"cannot step back from t={self.solver.time} to t={t}")
        if len(self.solver.particles) == 0:
            self.solver.time = t
            return np.zeros((0, 3))
        self._last = self.solver.advance_to(t, self.dt)
        return self.solver.particles.x.copy()

    def diagnostics(self) -> Dict[str, Any]:
        if self._last is None:
            return {}
        return self._last.to_dict()

    def close(self) -> None:
        logger.debug(f"{self.name} finished after {self.solver.step_count} steps at t={self.solver.time:.4f}s")
