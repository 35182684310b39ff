"""Explicit MLS-MPM time stepping with CFL substepping."""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from mpm.colliders import Collider
from mpm.grid import SimGrid
from mpm.materials import MaterialParams
from mpm.particles import ParticleSet
from mpm.transfer import ForceField, g2p, grid_update, p2g
from utils.logger import logger


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step record of the conserved quantities and particle health."""

    step: int
    time: float
    mass: float
    momentum: Tuple[float, float, float]
    max_speed: float
    escaped: int
    substeps: int = 1

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        momentum = record.pop("momentum")
        record.update({"momentum_x": momentum[0], "momentum_y": momentum[1], "momentum_z": momentum[2]})
        return record


class MpmSolver:
    """
    Owns a particle set and its background grid and advances them in time.

    Each step runs clear grid, p2g, grid_update and g2p. Steps larger than the
    CFL bound are split into equal substeps.
    """

    def __init__(
        self,
        particles: ParticleSet,
        grid: SimGrid,
        materials: Sequence[MaterialParams],
        kernel: Optional[str] = None,
        colliders: Sequence[Collider] = (),
        force: Optional[ForceField] = None,
        cfl: Optional[float] = None,
        deterministic: Optional[bool] = None,
        workers: Optional[int] = None,
        start_time: float = 0.0,
        damping: float = 0.0,
    ):
        """
        Initialize the solver.

        Args:
            particles: Particle state, advanced in place
            grid: Background grid
            materials: Material table indexed by particle material id
            kernel: Kernel degree (default from settings)
            colliders: Static colliders applied in grid_update
            force: Body acceleration field f(x, t)
            cfl: CFL number (default from settings)
            deterministic: Fixed reduction order in p2g (default from settings)
            workers: Scatter threads when not deterministic
            start_time: Simulation time of the initial state
            damping: Grid velocity damping rate in 1/s (0 disables it)
        """
        if not materials:
            raise ValueError("solver needs at least one material")
        if len(particles) and int(np.max(particles.material)) >= len(materials):
            raise ValueError("particle material id outside the material table")
        self.particles = particles
        self.grid = grid
        self.materials = list(materials)
        self.kernel = kernel or settings.kernel_degree
        self.colliders = list(colliders)
        self.force = force
        self.cfl = cfl or settings.cfl_number
        self.deterministic = settings.deterministic if deterministic is None else deterministic
        self.workers = workers or settings.p2g_workers
        self.time = float(start_time)
        self.step_count = 0
        if damping < 0:
            raise ValueError(f"damping rate must be non-negative, got {damping}")
        self.damping = float(damping)

        used = np.unique(particles.material) if len(particles) else np.arange(len(materials))
        self._sound_speed = max(self.materials[int(m)].sound_speed for m in used)

    def cfl_bound(self) -> float:
        """Largest stable step: c_cfl * h / (max particle speed + sound speed)."""
        return self.cfl * self.grid.h / (self.particles.max_speed() + self._sound_speed)

    def _mark_escaped(self) -> None:
        p = self.particles
        leaving = ~p.escaped & ~self.grid.safe_mask(p.x)
        if not np.any(leaving):
            return
        p.escaped[leaving] = True
        p.v[leaving] = 0.0
        p.C[leaving] = 0.0
        ids = np.flatnonzero(leaving)
        logger.warning(
            f"{ids.size} particle(s) left the grid domain at step {self.step_count} and were frozen "
            f"(first: {ids[0]}, total escaped: {int(np.sum(p.escaped))})"
        )

    def _substep(self, dt: float) -> None:
        self._mark_escaped()
        self.grid.clear()
        p2g(
            self.particles,
            self.grid,
            dt,
            self.materials,
            kernel=self.kernel,
            deterministic=self.deterministic,
            workers=self.workers,
            step=self.step_count,
        )
        grid_update(
            self.grid, dt, force=self.force, colliders=self.colliders, time=self.time, damping=self.damping
        )
        g2p(self.particles, self.grid, dt, self.materials, kernel=self.kernel, step=self.step_count)
        self.time += dt
        self.step_count += 1

    def diagnostics(self, substeps: int = 1) -> StepDiagnostics:
        p = self.particles
        momentum = p.total_momentum()
        return StepDiagnostics(
            step=self.step_count,
            time=self.time,
            mass=p.total_mass(),
            momentum=(float(momentum[0]), float(momentum[1]), float(momentum[2])),
            max_speed=p.max_speed(),
            escaped=int(np.sum(p.escaped)),
            substeps=substeps,
        )

    def step(self, dt: float) -> StepDiagnostics:
        """
        Advance by dt, substepping if dt exceeds the CFL bound.

        Args:
            dt: Requested step in seconds

        Returns:
            StepDiagnostics after the step
        """
        if dt <= 0:
            raise ValueError(f"time step must be positive, got {dt}")
        bound = self.cfl_bound()
        substeps = 1
        if dt > bound:
            substeps = math.ceil(dt / bound)
            logger.warning(
                f"dt={dt:.3e}s exceeds CFL bound {bound:.3e}s at t={self.time:.4f}s; "
                f"splitting into {substeps} substeps"
            )
        sub_dt = dt / substeps
        for _ in range(substeps):
            self._substep(sub_dt)

        record = self.diagnostics(substeps)
        logger.debug(
            f"step {record.step} t={record.time:.5f} mass={record.mass:.6e} "
            f"momentum={record.momentum} max_speed={record.max_speed:.4f} escaped={record.escaped} "
            f"grid_mass={self.grid.total_mass():.6e} grid_momentum={self.grid.total_momentum()}"
        )
        return record

    def advance_to(self, t_end: float, dt: float) -> StepDiagnostics:
        """
        Step until the simulation time reaches t_end; the last step is shortened to land on it.

        Args:
            t_end: Target time in seconds
            dt: Nominal step size

        Returns:
            Diagnostics at t_end
        """
        tolerance = 1e-12 * max(1.0, abs(t_end))
        while t_end - self.time > tolerance:
            remaining = t_end - self.time
            if remaining <= dt + tolerance:
                self.step(remaining)
                self.time = float(t_end)
            else:
                self.step(dt)
        return self.diagnostics()
