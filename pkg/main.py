"""Command-line entry point for the splat simulation pipeline."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from config.scene_config import SceneConfig, read_camera_config, read_scene_config
from config.settings import KERNEL_CUBIC, KERNEL_QUADRATIC
from deformers.factory import deformer_from_config
from pipeline.binder import bind, fit_grid, load_object_assets
from pipeline.runner import run
from preview.camera import PreviewCamera
from preview.renderer import render_preview, save_png
from splat.gaussian import SceneMetadata, TriangleSoup
from splat.parametrization import scene_to_soup, soup_to_scene
from storage.file_storage import MANIFEST_FORMATS, FrameStorage, read_obj_soup, write_frame_sequence, \
    write_obj_soup
from storage.ply_storage import read_ply, write_ply
from utils.error_handler import ConfigError, DegenerateTriangleError, PlyFormatError, SimulationError, \
    UnsupportedFormatError
from utils.logger import logger

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

# Appearance given to Gaussians rebuilt from a bare OBJ soup
DEFAULT_OBJ_OPACITY = 0.99


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the config-error code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def simulate(args: argparse.Namespace) -> int:
    """Run a scene and write its frame sequence."""
    config = read_scene_config(args.scene).with_overrides(
        alpha=args.alpha,
        deterministic=True if args.deterministic else None,
        kernel=args.kernel,
        output_dir=args.out,
        manifest_format=args.manifest_format,
    )
    logger.info(f"Starting simulation of {args.scene}")
    bound = bind(config, load_object_assets(config))

    camera = None
    if config.output.preview:
        camera = config.camera or PreviewCamera()
    storage = FrameStorage(
        config.output.directory,
        ply=config.output.ply,
        obj=config.output.obj,
        camera=camera,
        manifest_format=config.output.manifest_format,
    )
    with deformer_from_config(bound, config) as deformer:
        records = write_frame_sequence(run(bound, config, deformer), storage)

    banner("SIMULATION SUMMARY")
    print(f"Frames written: {len(records)}")
    print(f"Gaussians per frame: {len(bound.rest_frame)}")
    print(f"Simulated particles: {len(bound.particles)}")
    if records:
        print(f"Final time: {records[-1]['time']:.4f} s")
        print(f"Escaped particles: {records[-1].get('escaped', 0)}")
    print(f"Output directory: {storage.output_dir.absolute()}")
    logger.info("Simulation completed")
    return EXIT_OK


def _scene_from_obj(path: Path, appearance: Optional[Path]):
    vertices = read_obj_soup(path)
    n = len(vertices)
    if appearance is not None:
        reference = read_ply(appearance)
        if len(reference) != n:
            raise ConfigError(f"{appearance} holds {len(reference)} Gaussians, {path} holds {n} triangles",
                              "--appearance")
        opacities, sh_dc, sh_rest = reference.opacities, reference.sh_dc, reference.sh_rest
        metadata = SceneMetadata(source=str(path), epsilon=reference.metadata.epsilon,
                                 sh_degree=reference.metadata.sh_degree, already_flat=n)
    else:
        opacities, sh_dc, sh_rest = np.full(n, DEFAULT_OBJ_OPACITY), np.zeros((n, 3)), np.zeros((n, 0))
        metadata = SceneMetadata(source=str(path), already_flat=n)

    soup = TriangleSoup(
        vertices=vertices,
        rest_lengths=np.linalg.norm(vertices[:, 1:] - vertices[:, :1], axis=2),
        source_index=np.arange(n),
        opacities=opacities,
        sh_dc=sh_dc,
        sh_rest=sh_rest,
    )
    scene, degenerate = soup_to_scene(soup, eps=metadata.epsilon, metadata=metadata)
    if np.any(degenerate):
        raise DegenerateTriangleError(int(np.flatnonzero(degenerate)[0]), f"{path}: collinear triangle vertices")
    return scene


def convert(args: argparse.Namespace) -> int:
    """Convert between Gaussian PLY and triangle-soup OBJ."""
    source, target = Path(args.input), Path(args.out)
    kinds = (source.suffix.lower(), target.suffix.lower())
    if kinds == (".ply", ".obj"):
        soup = scene_to_soup(read_ply(source))
        write_obj_soup(soup.vertices, target)
        count = len(soup)
    elif kinds == (".obj", ".ply"):
        scene = _scene_from_obj(source, Path(args.appearance) if args.appearance else None)
        write_ply(scene, target)
        count = len(scene)
    elif kinds == (".ply", ".ply"):
        scene = read_ply(source)
        write_ply(scene, target)
        count = len(scene)
    else:
        raise UnsupportedFormatError(f"cannot convert {kinds[0] or 'unknown'} to {kinds[1] or 'unknown'}")

    banner("CONVERSION")
    print(f"{source} -> {target}: {count} Gaussians")
    return EXIT_OK


def validate(args: argparse.Namespace) -> int:
    """Parse a scene, bind it and size the grid without stepping."""
    config: SceneConfig = read_scene_config(args.scene)
    bound = bind(config, load_object_assets(config))
    grid = fit_grid(bound, config)
    nx, ny, nz = grid.resolution

    banner("SCENE VALID")
    print(f"Objects: {len(config.objects)}")
    print(f"Materials: {', '.join(config.material_names)}")
    print(f"Gaussians: {len(bound.rest_frame)}")
    print(f"Triangles: {len(bound.soup)}")
    print(f"Particles: {len(bound.particles)}")
    print(f"Grid: {nx}x{ny}x{nz} nodes ({grid.n_nodes} total), h={grid.h:.4e}")
    print(f"Frames: {config.simulation.frame_count} at {config.simulation.frame_rate:g} fps")
    return EXIT_OK


def preview(args: argparse.Namespace) -> int:
    """Render every frame PLY in a directory to PNG."""
    camera = read_camera_config(args.camera)
    frames = sorted(Path(args.frames).glob("frame_*.ply"))
    if not frames:
        raise ConfigError(f"no frame_*.ply files in {args.frames}", "--frames")
    out_dir = Path(args.out)
    for path in frames:
        save_png(render_preview(read_ply(path), camera), out_dir / f"{path.stem}.png")
        logger.info(f"Rendered {path.name}")

    banner("PREVIEW")
    print(f"Rendered {len(frames)} frame(s) to {out_dir.absolute()}")
    return EXIT_OK


def build_parser() -> CliParser:
    parser = CliParser(prog="splat-mpm", description="Physics simulation of flat Gaussian scenes.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = commands.add_parser("simulate", help="Run a scene and write frames")
    p.add_argument("--scene", required=True, help="Scene TOML file")
    p.add_argument("--out", help="Output directory (overrides the scene)")
    p.add_argument("--alpha", type=float, help="Scale correction bound, > 1")
    p.add_argument("--deterministic", action="store_true", help="Fixed reduction order")
    p.add_argument("--kernel", choices=(KERNEL_CUBIC, KERNEL_QUADRATIC), help="Interpolation kernel")
    p.add_argument("--manifest-format", choices=MANIFEST_FORMATS, help="Extra manifest format")
    p.set_defaults(handler=simulate)

    p = commands.add_parser("convert", help="Convert between Gaussian PLY and triangle-soup OBJ")
    p.add_argument("--in", dest="input", required=True, help="Input .ply or .obj")
    p.add_argument("--out", required=True, help="Output .ply or .obj")
    p.add_argument("--appearance", help="PLY supplying opacity and colour for OBJ input")
    p.set_defaults(handler=convert)

    p = commands.add_parser("validate", help="Check a scene without simulating")
    p.add_argument("--scene", required=True, help="Scene TOML file")
    p.set_defaults(handler=validate)

    p = commands.add_parser("preview", help="Render frame PLYs to PNG")
    p.add_argument("--frames", required=True, help="Directory of frame_*.ply files")
    p.add_argument("--camera", required=True, help="Camera TOML file")
    p.add_argument("--out", required=True, help="Output directory for PNGs")
    p.set_defaults(handler=preview)
    return parser


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on configuration or usage errors, 2 on runtime errors
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_CONFIG

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (PlyFormatError, UnsupportedFormatError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"Error in {args.command}: {e}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(cli_main())
