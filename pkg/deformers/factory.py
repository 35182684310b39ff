"""Pick the deformation map a scene asks for."""

from config.scene_config import DEFORMER_MPM, DEFORMER_RIGID, SceneConfig
from deformers.base_deformer import DeformationMap
from deformers.mpm_deformer import MpmDeformer
from deformers.rigid_deformer import RigidDeformer
from deformers.sequence_deformer import SequenceDeformer
from pipeline.binder import BoundState
from utils.error_handler import ConfigError
from utils.logger import logger


def deformer_from_config(bound: BoundState, config: SceneConfig) -> DeformationMap:
    """
    Build and bind the map named by the scene's [deformer] table.

    Args:
        bound: Bound rest state
        config: Scene configuration

    Returns:
        DeformationMap bound to the rest vertices

    Raises:
        ConfigError: Keyframes are missing or do not match the bound soup
    """
    cfg = config.deformer
    if cfg.kind == DEFORMER_MPM:
        return MpmDeformer.from_bound(bound, config)

    if cfg.kind == DEFORMER_RIGID:
        deformer: DeformationMap = RigidDeformer(cfg.velocity, cfg.angular_velocity, cfg.pivot)
        deformer.bind(bound.rest_vertices)
    else:
        missing = [str(p) for p in cfg.keyframes if not p.is_file()]
        if missing:
            raise ConfigError(f"keyframe file(s) not found: {missing}", "deformer.keyframes")
        try:
            deformer = SequenceDeformer.from_obj_files(cfg.keyframes, frame_rate=cfg.keyframe_rate, times=cfg.times)
            deformer.bind(bound.rest_vertices)
        except ValueError as e:
            raise ConfigError(str(e), "deformer.keyframes") from e
    logger.info(f"Using {deformer.name} deformation map")
    return deformer
