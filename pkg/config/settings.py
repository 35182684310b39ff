"""Configuration settings for the splat simulation pipeline."""

import os
from typing import Optional

# Scene representation
DEFAULT_FLAT_EPSILON = 1e-6
DEFAULT_OPACITY_LOGIT_CLAMP = 15.0

# Correction
DEFAULT_CORRECTION_ALPHA = 2.0

# Solver
KERNEL_CUBIC = "cubic"
KERNEL_QUADRATIC = "quadratic"
DEFAULT_KERNEL = KERNEL_CUBIC
DEFAULT_GRID_RESOLUTION = 64
DEFAULT_GRID_PADDING = 4
DEFAULT_FILL_FRACTION = 0.4
DEFAULT_CFL_NUMBER = 0.4

# Manifest formats
MANIFEST_FORMAT_JSONL = "jsonl"
MANIFEST_FORMAT_CSV = "csv"
MANIFEST_FORMAT_PARQUET = "parquet"

# I/O
DEFAULT_IO_RETRIES = 3
DEFAULT_IO_RETRY_DELAY = 0.1  # seconds before the first retry


class Settings:
    """Configuration settings loaded from environment variables or defaults."""

    def __init__(self):
        # Scene representation
        self.flat_epsilon: float = float(os.getenv("FLAT_EPSILON", str(DEFAULT_FLAT_EPSILON)))
        self.opacity_logit_clamp: float = float(
            os.getenv("OPACITY_LOGIT_CLAMP", str(DEFAULT_OPACITY_LOGIT_CLAMP))
        )

        # Correction
        self.correction_alpha: float = float(
            os.getenv("CORRECTION_ALPHA", str(DEFAULT_CORRECTION_ALPHA))
        )

        # Solver parameters
        self.kernel_degree: str = os.getenv("KERNEL_DEGREE", DEFAULT_KERNEL)
        self.grid_resolution: int = int(os.getenv("GRID_RESOLUTION", str(DEFAULT_GRID_RESOLUTION)))
        self.grid_padding: int = int(os.getenv("GRID_PADDING", str(DEFAULT_GRID_PADDING)))
        self.fill_fraction: float = float(os.getenv("FILL_FRACTION", str(DEFAULT_FILL_FRACTION)))
        self.cfl_number: float = float(os.getenv("CFL_NUMBER", str(DEFAULT_CFL_NUMBER)))
        self.deterministic: bool = os.getenv("DETERMINISTIC", "false").lower() == "true"
        self.p2g_workers: int = int(os.getenv("P2G_WORKERS", "4"))

        # Storage settings
        self.output_dir: str = os.getenv("OUTPUT_DIR", "output")
        self.manifest_format: str = os.getenv("MANIFEST_FORMAT", MANIFEST_FORMAT_JSONL)
        self.io_retries: int = int(os.getenv("IO_RETRIES", str(DEFAULT_IO_RETRIES)))
        self.io_retry_delay: float = float(os.getenv("IO_RETRY_DELAY", str(DEFAULT_IO_RETRY_DELAY)))
        self.io_workers: int = int(os.getenv("IO_WORKERS", "4"))

        # Logging
        self.log_level: str = os.getenv("LOG_LEVEL", "INFO")
        self.log_file: Optional[str] = os.getenv("LOG_FILE") or None


# Global settings instance
settings = Settings()
