"""File-based storage for simulated frame sequences."""

from concurrent.futures import Future, ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
import trimesh

from config.settings import (
    MANIFEST_FORMAT_CSV,
    MANIFEST_FORMAT_JSONL,
    MANIFEST_FORMAT_PARQUET,
    settings,
)
from preview.camera import PreviewCamera
from preview.renderer import render_preview, save_png
from storage.ply_storage import write_ply
from utils.error_handler import PartialOutputError, PipelineHaltedError, retry_with_backoff
from utils.logger import logger

MANIFEST_NAME = "manifest"
MANIFEST_FORMATS = (MANIFEST_FORMAT_JSONL, MANIFEST_FORMAT_CSV, MANIFEST_FORMAT_PARQUET)

PathLike = Union[str, Path]


def frame_filename(index: int, extension: str) -> str:
    return f"frame_{index:05d}.{extension}"


@retry_with_backoff(
    max_retries=settings.io_retries,
    initial_delay=settings.io_retry_delay,
    exceptions=(OSError,),
)
def write_obj_soup(vertices: np.ndarray, path: PathLike) -> Path:
    """
    Export triangles as an OBJ soup: three `v` lines and one `f` line per triangle.

    Args:
        vertices: (N, 3, 3) triangle vertices
        path: Output file

    Returns:
        Path to the written file
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mesh = trimesh.Trimesh(
        vertices=vertices.reshape(-1, 3),
        faces=np.arange(3 * len(vertices)).reshape(-1, 3),
        process=False,
    )
    text = trimesh.exchange.obj.export_obj(
        mesh, include_normals=False, include_color=False, include_texture=False, digits=15
    )
    path.write_text(text, encoding="utf-8")
    logger.debug(f"Wrote {len(vertices)} triangles to {path}")
    return path


def read_obj_soup(path: PathLike) -> np.ndarray:
    """
    Load an OBJ as a triangle soup.

    Returns:
        (N, 3, 3) vertices per face, in face order
    """
    mesh = trimesh.load_mesh(str(path), file_type="obj", process=False, maintain_order=True)
    return np.asarray(mesh.vertices, dtype=np.float64)[np.asarray(mesh.faces)]


class FrameStorage:
    """Saves frames of a run (PLY, OBJ, PNG) and their manifest."""

    def __init__(
        self,
        output_dir: Optional[PathLike] = None,
        ply: bool = True,
        obj: bool = False,
        camera: Optional[PreviewCamera] = None,
        manifest_format: Optional[str] = None,
        workers: Optional[int] = None,
    ):
        """
        Initialize frame storage.

        Args:
            output_dir: Output directory for saved files
            ply: Save one PLY per frame
            obj: Also save the frame's triangle soup as OBJ
            camera: When set, also render a PNG preview per frame
            manifest_format: Extra manifest format besides jsonl (csv or parquet)
            workers: Threads used for concurrent frame writes
        """
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.ply = ply
        self.obj = obj
        self.camera = camera
        self.manifest_format = manifest_format or settings.manifest_format
        if self.manifest_format not in MANIFEST_FORMATS:
            raise ValueError(f"unknown manifest format '{self.manifest_format}', expected one of {MANIFEST_FORMATS}")
        self.workers = workers or settings.io_workers
        logger.info(f"Frame storage initialized: {self.output_dir.absolute()}")

    def save_frame(self, frame: Any) -> Dict[str, Path]:
        """
        Save every enabled file type of one frame.

        Args:
            frame: FrameResult

        Returns:
            Dictionary mapping file type to path
        """
        saved = {}
        if self.ply:
            saved["ply"] = write_ply(frame.scene, self.output_dir / frame_filename(frame.index, "ply"))
        if self.obj:
            saved["obj"] = write_obj_soup(frame.vertices, self.output_dir / frame_filename(frame.index, "obj"))
        if self.camera is not None:
            image = render_preview(frame.scene, self.camera)
            saved["png"] = save_png(image, self.output_dir / frame_filename(frame.index, "png"))
        return saved

    def save_manifest(self, records: List[Dict[str, Any]]) -> Dict[str, Path]:
        """
        Save per-frame records as manifest.jsonl, plus CSV or Parquet if configured.

        Args:
            records: One dictionary per frame, in frame order

        Returns:
            Dictionary mapping format to file path
        """
        df = pd.DataFrame(records)
        saved = {}

        jsonl_path = self.output_dir / f"{MANIFEST_NAME}.jsonl"
        df.to_json(jsonl_path, orient="records", lines=True, double_precision=15)
        saved[MANIFEST_FORMAT_JSONL] = jsonl_path

        if self.manifest_format == MANIFEST_FORMAT_CSV:
            csv_path = self.output_dir / f"{MANIFEST_NAME}.csv"
            df.to_csv(csv_path, index=False)
            saved[MANIFEST_FORMAT_CSV] = csv_path
        elif self.manifest_format == MANIFEST_FORMAT_PARQUET:
            parquet_path = self.output_dir / f"{MANIFEST_NAME}.parquet"
            df.to_parquet(parquet_path, index=False, engine="pyarrow")
            saved[MANIFEST_FORMAT_PARQUET] = parquet_path

        logger.info(f"Saved manifest with {len(records)} frames: {jsonl_path.absolute()}")
        return saved


def write_frame_sequence(frames: Iterable[Any], storage: FrameStorage) -> List[Dict[str, Any]]:
    """
    Save an ordered stream of frames and the manifest.

    Files are written concurrently across frames; the manifest lists frames
    in order. If the stream halts early, the frames produced so far are still
    saved and the halt is re-raised afterwards.

    Args:
        frames: Iterable of FrameResult in frame order
        storage: Target storage

    Returns:
        Manifest records, one per frame

    Raises:
        PartialOutputError: A file could not be written
        PipelineHaltedError: Re-raised from the frame stream after saving
    """
    records: List[Dict[str, Any]] = []
    futures: Dict[int, Future] = {}
    halted: Optional[PipelineHaltedError] = None

    with ThreadPoolExecutor(max_workers=storage.workers) as executor:
        try:
            for frame in frames:
                record = frame.manifest_record()
                if storage.ply:
                    record["ply"] = frame_filename(frame.index, "ply")
                records.append(record)
                futures[frame.index] = executor.submit(storage.save_frame, frame)
        except PipelineHaltedError as e:
            halted = e

    completed, failed = [], []
    for index, future in futures.items():
        error = future.exception()
        if error is None:
            completed.append(index)
        else:
            failed.append((index, error))

    if records:
        try:
            storage.save_manifest(records)
        except OSError as e:
            raise PartialOutputError(f"could not write manifest: {e}", completed) from e

    if failed:
        index, error = failed[0]
        logger.error(f"Failed to write frame {index}: {error}")
        raise PartialOutputError(f"{len(failed)} frame(s) could not be written", completed) from error

    logger.info(f"Saved {len(completed)} frames to {storage.output_dir.absolute()}")
    if halted is not None:
        raise halted
    return records
