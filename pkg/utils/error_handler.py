"""Error types and error handling utilities with retry logic."""

import time
from functools import wraps
from typing import Any, Callable, List, Optional, Sequence, TypeVar
from utils.logger import logger

T = TypeVar("T")


class SimulationError(Exception):
    """Base class for every error raised by the pipeline."""


class ConfigError(SimulationError):
    """Invalid scene or camera configuration, located by key path."""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class UnsupportedFormatError(SimulationError):
    """Input file uses a format variant the readers do not handle."""


class PlyFormatError(SimulationError):
    """Malformed or truncated Gaussian PLY file."""

    def __init__(
        self,
        message: str,
        byte_offset: Optional[int] = None,
        property_name: Optional[str] = None,
    ):
        self.byte_offset = byte_offset
        self.property_name = property_name
        details = []
        if property_name is not None:
            details.append(f"property '{property_name}'")
        if byte_offset is not None:
            details.append(f"byte offset {byte_offset}")
        suffix = f" ({', '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")


class DegenerateGaussianError(SimulationError):
    """A Gaussian has two or more vanishing scales and cannot be flattened."""

    def __init__(self, index: int, message: str = "degenerate Gaussian"):
        self.index = index
        super().__init__(f"{message} at index {index}")


class DegenerateTriangleError(SimulationError):
    """A soup triangle has collinear vertices."""

    def __init__(self, index: Any, message: str = "degenerate triangle"):
        self.index = index
        super().__init__(f"{message} (source index {index})")


class NumericalBlowupError(SimulationError):
    """Non-finite values appeared in the solver state."""

    def __init__(self, message: str, step: Optional[int] = None, particle: Optional[int] = None):
        self.step = step
        self.particle = particle
        super().__init__(f"{message} (step {step}, particle {particle})")


class PartialOutputError(SimulationError):
    """Writing a frame sequence failed part way through."""

    def __init__(self, message: str, completed: Sequence[int]):
        self.completed: List[int] = list(completed)
        super().__init__(f"{message}; completed frames: {self.completed}")


class PipelineHaltedError(SimulationError):
    """The run stopped early; frames produced so far are kept."""

    def __init__(self, message: str, last_good_frame: Optional[int], frames: Sequence[Any] = ()):
        self.last_good_frame = last_good_frame
        self.frames = list(frames)
        super().__init__(f"{message} (last good frame: {last_good_frame})")


def retry_with_backoff(
    max_retries: int = 3,
    initial_delay: float = 1.0,
    backoff_factor: float = 2.0,
    exceptions: tuple = (Exception,),
):
    """
    Decorator for retrying functions with exponential backoff.

    Args:
        max_retries: Maximum number of attempts
        initial_delay: Initial delay in seconds
        backoff_factor: Multiplier for delay after each retry
        exceptions: Tuple of exceptions to catch and retry on
    """

    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> T:
            delay = initial_delay
            last_exception = None

            for attempt in range(max(1, max_retries)):
                try:
                    return func(*args, **kwargs)
                except exceptions as e:
                    last_exception = e
                    if attempt < max_retries - 1:
                        logger.warning(
                            f"Attempt {attempt + 1}/{max_retries} failed for {func.__name__}: {e}. "
                            f"Retrying in {delay:.2f} seconds..."
                        )
                        time.sleep(delay)
                        delay *= backoff_factor
                    else:
                        logger.error(f"All {max_retries} attempts failed for {func.__name__}")

            raise last_exception

        return wrapper

    return decorator
