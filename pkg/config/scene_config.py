"""
Scene and camera documents (TOML) parsed into validated, frozen configs.

Every value is checked on the way in; problems raise ConfigError with the
dotted key path of the offending entry. See docs/scene_schema.md.
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from config.settings import KERNEL_CUBIC, KERNEL_QUADRATIC, MANIFEST_FORMAT_CSV, MANIFEST_FORMAT_JSONL, \
    MANIFEST_FORMAT_PARQUET, settings
from mpm.colliders import SURFACES, SURFACE_STICKY, BoxCollider, Collider, HalfSpaceCollider, SphereCollider
from mpm.grid import FACE_BEHAVIORS, FACES
from mpm.materials import MaterialKind, MaterialParams
from preview.camera import PreviewCamera
from splat.correction import CorrectionConfig
from splat.procedural import SHAPE_BOX, SHAPE_SPHERE
from splat.regions import BoxRegion, HalfSpaceRegion, Region, SphereRegion
from utils.error_handler import ConfigError

Vec3 = Tuple[float, float, float]

WIND_UNIFORM = "uniform"
WIND_SINUSOIDAL = "sinusoidal"
WIND_GUST = "gust"
WIND_KINDS = (WIND_UNIFORM, WIND_SINUSOIDAL, WIND_GUST)

SHAPE_HALFSPACE = "halfspace"

DEFORMER_MPM = "mpm"
DEFORMER_RIGID = "rigid"
DEFORMER_SEQUENCE = "sequence"
DEFORMER_KINDS = (DEFORMER_MPM, DEFORMER_RIGID, DEFORMER_SEQUENCE)


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 1e-3
    frame_rate: float = 24.0
    duration: float = 1.0
    kernel: str = field(default_factory=lambda: settings.kernel_degree)
    deterministic: bool = field(default_factory=lambda: settings.deterministic)
    cfl: float = field(default_factory=lambda: settings.cfl_number)
    fill_fraction: float = field(default_factory=lambda: settings.fill_fraction)
    damping: float = 0.0  # grid velocity damping rate, 1/s

    @property
    def frame_count(self) -> int:
        return max(1, int(round(self.duration * self.frame_rate)))

    def frame_times(self) -> List[float]:
        return [k / self.frame_rate for k in range(self.frame_count)]


@dataclass(frozen=True)
class GridConfig:
    """Grid sizing; lower/upper replace the automatic fit to the scene bounds."""

    resolution: int = field(default_factory=lambda: settings.grid_resolution)
    padding: int = field(default_factory=lambda: settings.grid_padding)
    boundary: Dict[str, str] = field(default_factory=lambda: {face: "separate" for face in FACES})
    lower: Optional[Vec3] = None
    upper: Optional[Vec3] = None


@dataclass(frozen=True)
class WindConfig:
    """
    Time-varying uniform acceleration.

    uniform: a; sinusoidal: a*sin(frequency*t + phase); gust: a while
    (t mod period) < duty*period, else 0.
    """

    kind: str = WIND_UNIFORM
    acceleration: Vec3 = (0.0, 0.0, 0.0)
    frequency: float = 1.0  # rad/s
    phase: float = 0.0
    period: float = 1.0  # s
    duty: float = 0.5


@dataclass(frozen=True)
class ForcesConfig:
    gravity: Vec3 = (0.0, 0.0, -9.8)
    wind: Optional[WindConfig] = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = field(default_factory=lambda: settings.output_dir)
    ply: bool = True
    obj: bool = False
    preview: bool = False
    manifest_format: str = field(default_factory=lambda: settings.manifest_format)


@dataclass(frozen=True)
class TransformConfig:
    """Uniform scale, then rotation (xyz Euler angles, degrees), then translation."""

    translation: Vec3 = (0.0, 0.0, 0.0)
    rotation: Vec3 = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def matrix(self) -> np.ndarray:
        return Rotation.from_euler("xyz", self.rotation, degrees=True).as_matrix()

    def apply(
        self, means: np.ndarray, rotations: np.ndarray, scales: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Move Gaussians rigidly and scale them uniformly.

        The flat slot keeps its constant; in-plane scales are multiplied.
        """
        R = self.matrix()
        new_scales = np.array(scales, dtype=np.float64, copy=True)
        new_scales[:, 1:] *= self.scale
        return (
            self.scale * means @ R.T + np.asarray(self.translation),
            R @ rotations,
            new_scales,
        )


@dataclass(frozen=True)
class ProceduralAsset:
    shape: str = SHAPE_SPHERE
    count: int = 1000
    center: Vec3 = (0.0, 0.0, 0.0)
    size: float = 0.5
    scale_range: Tuple[float, float] = (0.01, 0.04)
    color: Optional[Vec3] = None
    seed: int = 0


@dataclass(frozen=True)
class VelocityRegion:
    region: Region
    velocity: Vec3


@dataclass(frozen=True)
class ObjectConfig:
    """One scene object: an asset, its material and its initial state."""

    name: str
    material: str
    asset: Optional[Path] = None
    procedural: Optional[ProceduralAsset] = None
    transform: TransformConfig = field(default_factory=TransformConfig)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    pinned: bool = False
    surface: str = SURFACE_STICKY
    region: Optional[Region] = None
    velocity_regions: Tuple[VelocityRegion, ...] = ()


@dataclass(frozen=True)
class DeformerConfig:
    """
    Deformation map driving the soup vertices.

    mpm runs the built-in solver; rigid applies a constant translation and
    angular velocity; sequence replays OBJ soup keyframes, placed either at
    k / keyframe_rate or at explicit times.
    """

    kind: str = DEFORMER_MPM
    velocity: Vec3 = (0.0, 0.0, 0.0)
    angular_velocity: Vec3 = (0.0, 0.0, 0.0)
    pivot: Optional[Vec3] = None
    keyframes: Tuple[Path, ...] = ()
    keyframe_rate: Optional[float] = None
    times: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class SceneConfig:
    """Validated scene description."""

    objects: Tuple[ObjectConfig, ...]
    materials: Dict[str, MaterialParams]
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    forces: ForcesConfig = field(default_factory=ForcesConfig)
    correction: CorrectionConfig = field(default_factory=CorrectionConfig.from_settings)
    output: OutputConfig = field(default_factory=OutputConfig)
    colliders: Tuple[Collider, ...] = ()
    deformer: DeformerConfig = field(default_factory=DeformerConfig)
    camera: Optional[PreviewCamera] = None
    source: Optional[Path] = None

    @property
    def material_names(self) -> List[str]:
        return list(self.materials)

    @property
    def material_table(self) -> List[MaterialParams]:
        """Materials in id order."""
        return list(self.materials.values())

    def material_id(self, name: str) -> int:
        return self.material_names.index(name)

    def with_overrides(
        self,
        alpha: Optional[float] = None,
        deterministic: Optional[bool] = None,
        kernel: Optional[str] = None,
        output_dir: Optional[str] = None,
        manifest_format: Optional[str] = None,
    ) -> "SceneConfig":
        """Copy with command-line overrides applied."""
        config = self
        if alpha is not None:
            try:
                correction = replace(config.correction, alpha=alpha)
            except ValueError as e:
                raise ConfigError(str(e), "correction.alpha") from e
            config = replace(config, correction=correction)
        if deterministic is not None:
            config = replace(config, simulation=replace(config.simulation, deterministic=deterministic))
        if kernel is not None:
            if kernel not in (KERNEL_CUBIC, KERNEL_QUADRATIC):
                raise ConfigError(f"expected one of {(KERNEL_CUBIC, KERNEL_QUADRATIC)}, got '{kernel}'",
                                  "simulation.kernel")
            config = replace(config, simulation=replace(config.simulation, kernel=kernel))
        if output_dir is not None:
            config = replace(config, output=replace(config.output, directory=output_dir))
        if manifest_format is not None:
            config = replace(config, output=replace(config.output, manifest_format=manifest_format))
        return config


# ---------------------------------------------------------------------------
# Typed accessors


def _join(path: str, key: Union[str, int]) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _table(value: Any, path: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"expected a table, got {type(value).__name__}", path)
    return value


def _check_keys(table: Dict[str, Any], allowed: Sequence[str], path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key, expected one of {sorted(allowed)}", _join(path, key))


def _float(table: Dict[str, Any], key: str, path: str, default: Any, positive: bool = False) -> Any:
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", _join(path, key))
    if not np.isfinite(value):
        raise ConfigError("expected a finite number", _join(path, key))
    if positive and value <= 0:
        raise ConfigError(f"expected a positive number, got {value}", _join(path, key))
    return float(value)


def _int(table: Dict[str, Any], key: str, path: str, default: Any, minimum: Optional[int] = None) -> Any:
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {type(value).__name__}", _join(path, key))
    if minimum is not None and value < minimum:
        raise ConfigError(f"expected an integer >= {minimum}, got {value}", _join(path, key))
    return value


def _bool(table: Dict[str, Any], key: str, path: str, default: bool) -> bool:
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, bool):
        raise ConfigError(f"expected a boolean, got {type(value).__name__}", _join(path, key))
    return value


def _str(
    table: Dict[str, Any], key: str, path: str, default: Any, choices: Optional[Sequence[str]] = None
) -> Any:
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, str):
        raise ConfigError(f"expected a string, got {type(value).__name__}", _join(path, key))
    if choices is not None and value not in choices:
        raise ConfigError(f"expected one of {list(choices)}, got '{value}'", _join(path, key))
    return value


def _vector(table: Dict[str, Any], key: str, path: str, default: Any, length: int = 3) -> Any:
    if key not in table:
        return default
    value = table[key]
    if (
        not isinstance(value, list)
        or len(value) != length
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"expected an array of {length} numbers", _join(path, key))
    return tuple(float(v) for v in value)


def _require(table: Dict[str, Any], key: str, path: str) -> None:
    if key not in table:
        raise ConfigError("required key is missing", _join(path, key))


# ---------------------------------------------------------------------------
# Sections


def _parse_simulation(doc: Dict[str, Any]) -> SimulationConfig:
    path = "simulation"
    t = _table(doc.get(path, {}), path)
    _check_keys(
        t, ("dt", "frame_rate", "duration", "kernel", "deterministic", "cfl", "fill_fraction", "damping"), path
    )
    defaults = SimulationConfig()
    fill = _float(t, "fill_fraction", path, defaults.fill_fraction, positive=True)
    if fill > 1.0:
        raise ConfigError(f"expected a value in (0, 1], got {fill}", _join(path, "fill_fraction"))
    damping = _float(t, "damping", path, defaults.damping)
    if damping < 0:
        raise ConfigError(f"expected a non-negative rate, got {damping}", _join(path, "damping"))
    return SimulationConfig(
        dt=_float(t, "dt", path, defaults.dt, positive=True),
        frame_rate=_float(t, "frame_rate", path, defaults.frame_rate, positive=True),
        duration=_float(t, "duration", path, defaults.duration, positive=True),
        kernel=_str(t, "kernel", path, defaults.kernel, (KERNEL_CUBIC, KERNEL_QUADRATIC)),
        deterministic=_bool(t, "deterministic", path, defaults.deterministic),
        cfl=_float(t, "cfl", path, defaults.cfl, positive=True),
        fill_fraction=fill,
        damping=damping,
    )


def _parse_grid(doc: Dict[str, Any]) -> GridConfig:
    path = "grid"
    t = _table(doc.get(path, {}), path)
    _check_keys(t, ("resolution", "padding", "boundary", "lower", "upper"), path)
    defaults = GridConfig()

    boundary = dict(defaults.boundary)
    if "boundary" in t:
        raw = t["boundary"]
        if isinstance(raw, str):
            boundary = {face: _str(t, "boundary", path, None, FACE_BEHAVIORS) for face in FACES}
        else:
            faces = _table(raw, _join(path, "boundary"))
            _check_keys(faces, FACES, _join(path, "boundary"))
            for face in faces:
                boundary[face] = _str(faces, face, _join(path, "boundary"), None, FACE_BEHAVIORS)

    lower = _vector(t, "lower", path, None)
    upper = _vector(t, "upper", path, None)
    if (lower is None) != (upper is None):
        raise ConfigError("lower and upper must be given together", _join(path, "lower" if lower is None else "upper"))
    if lower is not None and any(u <= l for l, u in zip(lower, upper)):
        raise ConfigError("upper corner must exceed lower corner", _join(path, "upper"))

    config = GridConfig(
        resolution=_int(t, "resolution", path, defaults.resolution, minimum=4),
        padding=_int(t, "padding", path, defaults.padding, minimum=0),
        boundary=boundary,
        lower=lower,
        upper=upper,
    )
    if config.resolution - 1 - 2 * config.padding < 1:
        raise ConfigError(f"resolution {config.resolution} leaves no cells inside padding {config.padding}",
                          _join(path, "padding"))
    return config


def _parse_wind(raw: Any, path: str) -> WindConfig:
    t = _table(raw, path)
    _check_keys(t, ("kind", "acceleration", "frequency", "phase", "period", "duty"), path)
    _require(t, "acceleration", path)
    duty = _float(t, "duty", path, 0.5)
    if not 0.0 <= duty <= 1.0:
        raise ConfigError(f"expected a value in [0, 1], got {duty}", _join(path, "duty"))
    return WindConfig(
        kind=_str(t, "kind", path, WIND_UNIFORM, WIND_KINDS),
        acceleration=_vector(t, "acceleration", path, None),
        frequency=_float(t, "frequency", path, 1.0),
        phase=_float(t, "phase", path, 0.0),
        period=_float(t, "period", path, 1.0, positive=True),
        duty=duty,
    )


def _parse_forces(doc: Dict[str, Any]) -> ForcesConfig:
    path = "forces"
    t = _table(doc.get(path, {}), path)
    _check_keys(t, ("gravity", "wind"), path)
    wind = _parse_wind(t["wind"], _join(path, "wind")) if "wind" in t else None
    return ForcesConfig(gravity=_vector(t, "gravity", path, ForcesConfig.gravity), wind=wind)


def _parse_correction(doc: Dict[str, Any]) -> CorrectionConfig:
    path = "correction"
    t = _table(doc.get(path, {}), path)
    _check_keys(t, ("alpha", "enabled"), path)
    alpha = _float(t, "alpha", path, settings.correction_alpha)
    try:
        return CorrectionConfig(alpha=alpha, enabled=_bool(t, "enabled", path, True))
    except ValueError as e:
        raise ConfigError(str(e), _join(path, "alpha")) from e


def _parse_output(doc: Dict[str, Any]) -> OutputConfig:
    path = "output"
    t = _table(doc.get(path, {}), path)
    _check_keys(t, ("directory", "ply", "obj", "preview", "manifest_format"), path)
    defaults = OutputConfig()
    return OutputConfig(
        directory=_str(t, "directory", path, defaults.directory),
        ply=_bool(t, "ply", path, defaults.ply),
        obj=_bool(t, "obj", path, defaults.obj),
        preview=_bool(t, "preview", path, defaults.preview),
        manifest_format=_str(
            t,
            "manifest_format",
            path,
            defaults.manifest_format,
            (MANIFEST_FORMAT_JSONL, MANIFEST_FORMAT_CSV, MANIFEST_FORMAT_PARQUET),
        ),
    )


_MATERIAL_KEYS = (
    "kind", "density", "youngs_modulus", "poisson_ratio", "critical_compression",
    "critical_stretch", "hardening", "friction_angle", "bulk_modulus", "gamma",
)


def _parse_materials(doc: Dict[str, Any]) -> Dict[str, MaterialParams]:
    path = "materials"
    if path not in doc:
        raise ConfigError("at least one material is required", path)
    t = _table(doc[path], path)
    if not t:
        raise ConfigError("at least one material is required", path)
    materials = {}
    for name, raw in t.items():
        mpath = _join(path, name)
        m = _table(raw, mpath)
        _check_keys(m, _MATERIAL_KEYS, mpath)
        values: Dict[str, Any] = {"name": name}
        values["kind"] = MaterialKind(
            _str(m, "kind", mpath, MaterialKind.ELASTIC.value, [k.value for k in MaterialKind])
        )
        for key in _MATERIAL_KEYS[1:]:
            value = _float(m, key, mpath, None)
            if value is not None:
                values[key] = value
        try:
            materials[name] = MaterialParams(**values)
        except ValueError as e:
            raise ConfigError(str(e), mpath) from e
    return materials


def _parse_region(raw: Any, path: str) -> Region:
    t = _table(raw, path)
    kind = _str(t, "kind", path, None, (SHAPE_BOX, SHAPE_SPHERE, SHAPE_HALFSPACE))
    if kind is None:
        raise ConfigError("required key is missing", _join(path, "kind"))
    if kind == SHAPE_BOX:
        _check_keys(t, ("kind", "lower", "upper"), path)
        _require(t, "lower", path)
        _require(t, "upper", path)
        try:
            return BoxRegion(_vector(t, "lower", path, None), _vector(t, "upper", path, None))
        except ValueError as e:
            raise ConfigError(str(e), _join(path, "upper")) from e
    if kind == SHAPE_SPHERE:
        _check_keys(t, ("kind", "center", "radius"), path)
        _require(t, "center", path)
        _require(t, "radius", path)
        radius = _float(t, "radius", path, None)
        if radius < 0:
            raise ConfigError("expected a non-negative radius", _join(path, "radius"))
        return SphereRegion(_vector(t, "center", path, None), radius)
    _check_keys(t, ("kind", "point", "normal"), path)
    _require(t, "point", path)
    _require(t, "normal", path)
    try:
        return HalfSpaceRegion(_vector(t, "point", path, None), _vector(t, "normal", path, None))
    except ValueError as e:
        raise ConfigError(str(e), _join(path, "normal")) from e


def _parse_procedural(raw: Any, path: str) -> ProceduralAsset:
    t = _table(raw, path)
    _check_keys(t, ("shape", "count", "center", "size", "scale_range", "color", "seed"), path)
    defaults = ProceduralAsset()
    scale_range = _vector(t, "scale_range", path, defaults.scale_range, length=2)
    if not 0.0 < scale_range[0] <= scale_range[1]:
        raise ConfigError("expected 0 < min <= max", _join(path, "scale_range"))
    return ProceduralAsset(
        shape=_str(t, "shape", path, defaults.shape, (SHAPE_BOX, SHAPE_SPHERE)),
        count=_int(t, "count", path, defaults.count, minimum=1),
        center=_vector(t, "center", path, defaults.center),
        size=_float(t, "size", path, defaults.size, positive=True),
        scale_range=scale_range,
        color=_vector(t, "color", path, None),
        seed=_int(t, "seed", path, defaults.seed),
    )


def _parse_transform(raw: Any, path: str) -> TransformConfig:
    t = _table(raw, path)
    _check_keys(t, ("translation", "rotation", "scale"), path)
    return TransformConfig(
        translation=_vector(t, "translation", path, TransformConfig.translation),
        rotation=_vector(t, "rotation", path, TransformConfig.rotation),
        scale=_float(t, "scale", path, 1.0, positive=True),
    )


_OBJECT_KEYS = (
    "name", "asset", "procedural", "material", "transform", "velocity",
    "pinned", "surface", "region", "velocity_regions",
)


def _parse_object(raw: Any, path: str, index: int, base_dir: Path, materials: Dict[str, MaterialParams]) -> ObjectConfig:
    t = _table(raw, path)
    _check_keys(t, _OBJECT_KEYS, path)
    name = _str(t, "name", path, f"object_{index}")

    _require(t, "material", path)
    material = _str(t, "material", path, None)
    if material not in materials:
        raise ConfigError(f"object '{name}' references unknown material '{material}'", _join(path, "material"))

    has_asset, has_procedural = "asset" in t, "procedural" in t
    if has_asset == has_procedural:
        raise ConfigError(f"object '{name}' needs exactly one of 'asset' or 'procedural'", path)
    asset = None
    if has_asset:
        asset = Path(_str(t, "asset", path, None))
        if not asset.is_absolute():
            asset = base_dir / asset
    procedural = _parse_procedural(t["procedural"], _join(path, "procedural")) if has_procedural else None

    velocity_regions = []
    if "velocity_regions" in t:
        vpath = _join(path, "velocity_regions")
        if not isinstance(t["velocity_regions"], list):
            raise ConfigError("expected an array of tables", vpath)
        for k, entry in enumerate(t["velocity_regions"]):
            epath = _join(vpath, k)
            e = _table(entry, epath)
            _check_keys(e, ("region", "velocity"), epath)
            _require(e, "region", epath)
            _require(e, "velocity", epath)
            velocity_regions.append(
                VelocityRegion(_parse_region(e["region"], _join(epath, "region")), _vector(e, "velocity", epath, None))
            )

    return ObjectConfig(
        name=name,
        material=material,
        asset=asset,
        procedural=procedural,
        transform=_parse_transform(t.get("transform", {}), _join(path, "transform")),
        velocity=_vector(t, "velocity", path, (0.0, 0.0, 0.0)),
        pinned=_bool(t, "pinned", path, False),
        surface=_str(t, "surface", path, SURFACE_STICKY, SURFACES),
        region=_parse_region(t["region"], _join(path, "region")) if "region" in t else None,
        velocity_regions=tuple(velocity_regions),
    )


def _parse_collider(raw: Any, path: str) -> Collider:
    t = _table(raw, path)
    kind = _str(t, "kind", path, None, (SHAPE_HALFSPACE, SHAPE_SPHERE, SHAPE_BOX))
    if kind is None:
        raise ConfigError("required key is missing", _join(path, "kind"))
    surface = _str(t, "surface", path, SURFACE_STICKY, SURFACES)
    if kind == SHAPE_HALFSPACE:
        _check_keys(t, ("kind", "surface", "point", "normal"), path)
        _require(t, "normal", path)
        normal = _vector(t, "normal", path, None)
        if not any(normal):
            raise ConfigError("expected a non-zero normal", _join(path, "normal"))
        return HalfSpaceCollider(_vector(t, "point", path, (0.0, 0.0, 0.0)), normal, surface)
    if kind == SHAPE_SPHERE:
        _check_keys(t, ("kind", "surface", "center", "radius"), path)
        _require(t, "center", path)
        _require(t, "radius", path)
        return SphereCollider(_vector(t, "center", path, None), _float(t, "radius", path, None, positive=True), surface)
    _check_keys(t, ("kind", "surface", "lower", "upper"), path)
    _require(t, "lower", path)
    _require(t, "upper", path)
    try:
        return BoxCollider(_vector(t, "lower", path, None), _vector(t, "upper", path, None), surface)
    except ValueError as e:
        raise ConfigError(str(e), _join(path, "upper")) from e


def _parse_deformer(doc: Dict[str, Any], base_dir: Path) -> DeformerConfig:
    path = "deformer"
    t = _table(doc.get(path, {}), path)
    kind = _str(t, "kind", path, DEFORMER_MPM, DEFORMER_KINDS)
    if kind == DEFORMER_MPM:
        _check_keys(t, ("kind",), path)
        return DeformerConfig()
    if kind == DEFORMER_RIGID:
        _check_keys(t, ("kind", "velocity", "angular_velocity", "pivot"), path)
        return DeformerConfig(
            kind=kind,
            velocity=_vector(t, "velocity", path, (0.0, 0.0, 0.0)),
            angular_velocity=_vector(t, "angular_velocity", path, (0.0, 0.0, 0.0)),
            pivot=_vector(t, "pivot", path, None),
        )

    _check_keys(t, ("kind", "keyframes", "keyframe_rate", "times"), path)
    _require(t, "keyframes", path)
    raw = t["keyframes"]
    if not isinstance(raw, list) or not raw or not all(isinstance(p, str) for p in raw):
        raise ConfigError("expected a non-empty array of OBJ paths", _join(path, "keyframes"))
    keyframes = tuple(p if p.is_absolute() else base_dir / p for p in map(Path, raw))

    if ("keyframe_rate" in t) == ("times" in t):
        raise ConfigError("sequence needs exactly one of 'keyframe_rate' or 'times'", path)
    keyframe_rate = _float(t, "keyframe_rate", path, None, positive=True)
    times = None
    if "times" in t:
        times = _vector(t, "times", path, None, length=len(keyframes))
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("keyframe times must be strictly increasing", _join(path, "times"))
    return DeformerConfig(kind=kind, keyframes=keyframes, keyframe_rate=keyframe_rate, times=times)


def parse_camera(raw: Any, path: str = "camera") -> PreviewCamera:
    """Validate a camera table."""
    t = _table(raw, path)
    _check_keys(t, ("position", "look_at", "up", "fov", "width", "height", "background"), path)
    defaults = PreviewCamera()
    try:
        return PreviewCamera(
            position=_vector(t, "position", path, defaults.position),
            look_at=_vector(t, "look_at", path, defaults.look_at),
            up=_vector(t, "up", path, defaults.up),
            fov_deg=_float(t, "fov", path, defaults.fov_deg),
            width=_int(t, "width", path, defaults.width),
            height=_int(t, "height", path, defaults.height),
            background=_vector(t, "background", path, defaults.background),
        )
    except ValueError as e:
        raise ConfigError(str(e), path) from e


def parse_scene_config(doc: Dict[str, Any], base_dir: Optional[Path] = None, source: Optional[Path] = None) -> SceneConfig:
    """
    Validate a decoded scene document.

    Args:
        doc: TOML document as nested dictionaries
        base_dir: Directory relative asset paths are resolved against
        source: File the document came from

    Returns:
        SceneConfig with defaults filled in
    """
    base_dir = base_dir or Path.cwd()
    _check_keys(
        doc,
        (
            "simulation", "grid", "forces", "correction", "output", "materials", "objects", "colliders",
            "deformer", "camera",
        ),
        "",
    )
    materials = _parse_materials(doc)

    if "objects" not in doc:
        raise ConfigError("at least one object is required", "objects")
    if not isinstance(doc["objects"], list) or not doc["objects"]:
        raise ConfigError("expected a non-empty array of tables", "objects")
    objects = tuple(
        _parse_object(raw, _join("objects", i), i, base_dir, materials) for i, raw in enumerate(doc["objects"])
    )
    names = [o.name for o in objects]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigError(f"duplicate object names {duplicates}", "objects")
    if all(o.pinned for o in objects):
        raise ConfigError("at least one object must not be pinned", "objects")

    colliders_raw = doc.get("colliders", [])
    if not isinstance(colliders_raw, list):
        raise ConfigError("expected an array of tables", "colliders")
    colliders = tuple(_parse_collider(raw, _join("colliders", i)) for i, raw in enumerate(colliders_raw))

    return SceneConfig(
        objects=objects,
        materials=materials,
        simulation=_parse_simulation(doc),
        grid=_parse_grid(doc),
        forces=_parse_forces(doc),
        correction=_parse_correction(doc),
        output=_parse_output(doc),
        colliders=colliders,
        deformer=_parse_deformer(doc, base_dir),
        camera=parse_camera(doc["camera"]) if "camera" in doc else None,
        source=source,
    )


def _load_toml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML: {e}") from e


def read_scene_config(path: Union[str, Path]) -> SceneConfig:
    """
    Load and validate a scene document.

    Args:
        path: TOML scene file; relative asset paths resolve against its directory

    Returns:
        SceneConfig

    Raises:
        ConfigError: Invalid document, located by key path
    """
    path = Path(path)
    return parse_scene_config(_load_toml(path), base_dir=path.parent, source=path)


def read_camera_config(path: Union[str, Path]) -> PreviewCamera:
    """Load a camera document: either a [camera] table or the camera keys at top level."""
    doc = _load_toml(path)
    if "camera" in doc:
        _check_keys(doc, ("camera",), "")
        return parse_camera(doc["camera"])
    return parse_camera(doc, "")
