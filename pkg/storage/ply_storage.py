"""
Reading and writing Gaussian Splatting PLY checkpoints.

Layout of the `vertex` element, binary little-endian, all float32, in order:

    x y z  nx ny nz  f_dc_0..2  f_rest_0..K-1  opacity  scale_0..2  rot_0..3

opacity is stored as a logit, scales as natural logs and rotations as
(w, x, y, z) quaternions. f_rest is channel-major: all coefficients of the
red channel first, then green, then blue.
"""

import math
import os
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from plyfile import PlyData, PlyElement, PlyParseError
from scipy.spatial.transform import Rotation
from scipy.special import expit, logit

from config.settings import settings
from splat.gaussian import GaussianScene, SceneMetadata
from splat.parametrization import flatten_arrays
from utils.error_handler import PlyFormatError, UnsupportedFormatError, retry_with_backoff
from utils.logger import logger

PathLike = Union[str, Path]

REQUIRED_PROPERTIES = (
    ["x", "y", "z"]
    + [f"f_dc_{i}" for i in range(3)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)

_PLY_TYPE_SIZES = {
    "char": 1, "int8": 1, "uchar": 1, "uint8": 1,
    "short": 2, "int16": 2, "ushort": 2, "uint16": 2,
    "int": 4, "int32": 4, "uint": 4, "uint32": 4,
    "float": 4, "float32": 4, "double": 8, "float64": 8,
}

# Quaternion components below this count as zero when picking a sign
_QUAT_SIGN_TOLERANCE = 1e-7


def gs_ply_property_names(sh_rest_count: int) -> List[str]:
    """Property names of the vertex element in file order."""
    return (
        ["x", "y", "z", "nx", "ny", "nz"]
        + [f"f_dc_{i}" for i in range(3)]
        + [f"f_rest_{i}" for i in range(sh_rest_count)]
        + ["opacity"]
        + [f"scale_{i}" for i in range(3)]
        + [f"rot_{i}" for i in range(4)]
    )


def gs_ply_record_dtype(sh_rest_count: int) -> np.dtype:
    """Structured dtype of one GS PLY record."""
    return np.dtype([(name, "<f4") for name in gs_ply_property_names(sh_rest_count)])


def sh_degree_from_rest_count(count: int) -> Optional[int]:
    """SH degree d with 3 * ((d + 1)^2 - 1) == count, or None."""
    if count % 3:
        return None
    degree = math.isqrt(count // 3 + 1) - 1
    return degree if 3 * ((degree + 1) ** 2 - 1) == count else None


def _canonical_quaternions(quats: np.ndarray) -> np.ndarray:
    """Pick the sign with w > 0, or the first component clearly away from zero positive."""
    quats = quats.copy()
    significant = np.abs(quats) > _QUAT_SIGN_TOLERANCE
    first = np.argmax(significant, axis=1)
    lead = quats[np.arange(len(quats)), first]
    quats[lead < 0] *= -1.0
    return quats


def encode_rotations(rotations: np.ndarray) -> np.ndarray:
    """
    Rotation matrices to stored float32 (w, x, y, z) quaternions.

    The float32 result is iterated to a fixed point of normalize-then-round,
    so decoding and re-encoding unmodified data reproduces the same bits.
    """
    if len(rotations) == 0:
        return np.zeros((0, 4), dtype=np.float32)
    xyzw = Rotation.from_matrix(rotations).as_quat()
    wxyz = _canonical_quaternions(xyzw[:, [3, 0, 1, 2]])
    q32 = wxyz.astype(np.float32)
    for _ in range(4):
        q64 = q32.astype(np.float64)
        stable = (q64 / np.linalg.norm(q64, axis=1, keepdims=True)).astype(np.float32)
        if np.array_equal(stable, q32):
            break
        q32 = stable
    return q32


def decode_rotations(quats: np.ndarray) -> np.ndarray:
    """Stored (w, x, y, z) quaternions, not necessarily unit, to rotation matrices."""
    if len(quats) == 0:
        return np.zeros((0, 3, 3))
    q = np.asarray(quats, dtype=np.float64)
    norm = np.linalg.norm(q, axis=1, keepdims=True)
    if np.any(norm == 0.0):
        bad = int(np.flatnonzero(norm[:, 0] == 0.0)[0])
        raise PlyFormatError(f"zero quaternion in record {bad}", property_name="rot_0")
    q = q / norm
    return Rotation.from_quat(q[:, [1, 2, 3, 0]]).as_matrix().reshape(-1, 3, 3)


def encode_opacities(opacities: np.ndarray, clamp: Optional[float] = None) -> np.ndarray:
    clamp = settings.opacity_logit_clamp if clamp is None else clamp
    with np.errstate(divide="ignore"):
        return np.clip(logit(np.asarray(opacities, dtype=np.float64)), -clamp, clamp)


def _scan_header(path: Path) -> Tuple[int, int, List[Tuple[str, int]]]:
    """
    Validate the header before handing the file to plyfile.

    Returns:
        Tuple of (header length in bytes, vertex count, vertex properties as (name, size))
    """
    with open(path, "rb") as f:
        magic = f.readline()
        if magic.strip() != b"ply":
            raise PlyFormatError("missing 'ply' magic", byte_offset=0)
        offset = len(magic)
        vertex_count = None
        vertex_offset = offset
        properties: List[Tuple[str, int]] = []
        current = None
        fmt = None
        while True:
            raw = f.readline()
            if not raw:
                raise PlyFormatError("header has no end_header line", byte_offset=offset)
            line = raw.decode("ascii", errors="replace").strip()
            words = line.split()
            if not words or words[0] in ("comment", "obj_info"):
                pass
            elif words[0] == "format":
                fmt = words[1] if len(words) > 1 else ""
                if fmt != "binary_little_endian":
                    raise UnsupportedFormatError(
                        f"{path}: PLY format '{fmt}' not supported, expected binary_little_endian"
                    )
            elif words[0] == "element":
                if len(words) != 3:
                    raise PlyFormatError(f"malformed element line '{line}'", byte_offset=offset)
                current = words[1]
                if current == "vertex":
                    if vertex_count is not None or properties:
                        raise PlyFormatError("duplicate vertex element", byte_offset=offset)
                    try:
                        vertex_count = int(words[2])
                    except ValueError:
                        raise PlyFormatError(f"bad vertex count '{words[2]}'", byte_offset=offset)
                    vertex_offset = offset
                elif vertex_count is None:
                    raise UnsupportedFormatError(f"{path}: elements before 'vertex' are not supported")
            elif words[0] == "property":
                if current == "vertex":
                    if words[1] == "list" or len(words) != 3 or words[1] not in _PLY_TYPE_SIZES:
                        raise PlyFormatError(f"unsupported vertex property '{line}'", byte_offset=offset,
                                             property_name=words[-1])
                    properties.append((words[2], _PLY_TYPE_SIZES[words[1]]))
            elif words[0] == "end_header":
                offset += len(raw)
                break
            else:
                raise PlyFormatError(f"unexpected header line '{line}'", byte_offset=offset)
            offset += len(raw)

    if fmt is None:
        raise PlyFormatError("header has no format line", byte_offset=len(magic))
    if vertex_count is None:
        raise PlyFormatError("no vertex element", byte_offset=offset)
    names = [name for name, _ in properties]
    for required in REQUIRED_PROPERTIES:
        if required not in names:
            raise PlyFormatError("missing required property", byte_offset=vertex_offset, property_name=required)
    return offset, vertex_count, properties


def _check_payload(path: Path, header_len: int, count: int, properties: List[Tuple[str, int]]) -> None:
    record = sum(size for _, size in properties)
    size = os.path.getsize(path)
    expected = header_len + count * record
    if size >= expected:
        return
    within = (size - header_len) % record
    position = 0
    for name, prop_size in properties:
        if within < position + prop_size:
            break
        position += prop_size
    raise PlyFormatError(
        f"truncated payload: {size} bytes, expected at least {expected}",
        byte_offset=size,
        property_name=name,
    )


def read_ply(path: PathLike, eps: Optional[float] = None) -> GaussianScene:
    """
    Load a Gaussian PLY checkpoint and flatten every Gaussian.

    Args:
        path: Path to a binary little-endian GS PLY
        eps: Flatness constant (default from settings)

    Returns:
        GaussianScene in file order

    Raises:
        UnsupportedFormatError: ASCII or big-endian files
        PlyFormatError: Malformed header, missing properties or truncated data
    """
    eps = settings.flat_epsilon if eps is None else eps
    path = Path(path)
    header_len, count, properties = _scan_header(path)
    _check_payload(path, header_len, count, properties)

    try:
        plydata = PlyData.read(str(path))
    except PlyParseError as e:
        raise PlyFormatError(f"{path}: {e}") from e
    vertex = plydata["vertex"].data

    def column(name: str) -> np.ndarray:
        return np.asarray(vertex[name], dtype=np.float64)

    names = [name for name, _ in properties]
    rest_names = sorted((n for n in names if n.startswith("f_rest_")), key=lambda n: int(n.split("_")[-1]))
    if rest_names != [f"f_rest_{i}" for i in range(len(rest_names))]:
        raise PlyFormatError("f_rest properties are not numbered 0..K-1", property_name=rest_names[-1])
    degree = sh_degree_from_rest_count(len(rest_names))
    if degree is None:
        raise PlyFormatError(f"{len(rest_names)} f_rest properties match no SH degree",
                             property_name=rest_names[-1] if rest_names else None)

    means = np.stack([column(c) for c in ("x", "y", "z")], axis=1)
    normals = (
        np.stack([column(c) for c in ("nx", "ny", "nz")], axis=1)
        if all(c in names for c in ("nx", "ny", "nz"))
        else np.zeros((count, 3))
    )
    sh_dc = np.stack([column(f"f_dc_{i}") for i in range(3)], axis=1)
    sh_rest = np.stack([column(n) for n in rest_names], axis=1) if rest_names else np.zeros((count, 0))
    opacities = expit(column("opacity"))
    scales = np.exp(np.stack([column(f"scale_{i}") for i in range(3)], axis=1))
    rotations = decode_rotations(np.stack([column(f"rot_{i}") for i in range(4)], axis=1))

    rotations, scales, already_flat = flatten_arrays(rotations, scales, eps)
    flat_count = int(np.sum(already_flat))
    logger.info(
        f"Loaded {count} Gaussians from {path} (SH degree {degree}, {flat_count} already flat)"
    )
    return GaussianScene(
        means=means,
        rotations=rotations,
        scales=scales,
        opacities=opacities,
        sh_dc=sh_dc,
        sh_rest=sh_rest,
        normals=normals,
        metadata=SceneMetadata(source=str(path), epsilon=eps, sh_degree=degree, already_flat=flat_count),
    )


def encode_scene(scene: GaussianScene) -> np.ndarray:
    """Structured float32 records of a scene, ready for PlyElement.describe."""
    records = np.empty(len(scene), dtype=gs_ply_record_dtype(scene.sh_rest_count))
    for axis, name in enumerate("xyz"):
        records[name] = scene.means[:, axis]
        records[f"n{name}"] = scene.normals[:, axis]
    for i in range(3):
        records[f"f_dc_{i}"] = scene.sh_dc[:, i]
    for i in range(scene.sh_rest_count):
        records[f"f_rest_{i}"] = scene.sh_rest[:, i]
    records["opacity"] = encode_opacities(scene.opacities)
    log_scales = np.log(scene.scales)
    for i in range(3):
        records[f"scale_{i}"] = log_scales[:, i]
    quats = encode_rotations(scene.rotations)
    for i in range(4):
        records[f"rot_{i}"] = quats[:, i]
    return records


@retry_with_backoff(
    max_retries=settings.io_retries,
    initial_delay=settings.io_retry_delay,
    exceptions=(OSError,),
)
def write_ply(scene: GaussianScene, path: PathLike) -> Path:
    """
    Save a scene as a binary little-endian GS PLY.

    Args:
        scene: Scene or frame to save
        path: Output file; parent directories are created

    Returns:
        Path to the written file
    """
    if scene.sh_rest_count and sh_degree_from_rest_count(scene.sh_rest_count) is None:
        raise ValueError(f"{scene.sh_rest_count} SH rest coefficients match no SH degree")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    element = PlyElement.describe(encode_scene(scene), "vertex")
    PlyData([element], text=False, byte_order="<").write(str(path))
    logger.debug(f"Wrote {len(scene)} Gaussians to {path}")
    return path
