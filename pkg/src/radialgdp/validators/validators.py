import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from properpath import ProperPath
from properpath.validators import PathValidationError, PathWriteValidator

from ..surface import DiskSurface
from .base import ValidationError, Validator

default_err_logger = logging.getLogger(__name__)


class WorkdirValidationError(ValidationError):
    """
    Raised when none of the candidate working directories is writable.

    Attributes:
        errno (Optional[int]): The errno of the last failed attempt, if any.
    """

    def __init__(self, *args, errno: Optional[int] = None) -> None:
        super().__init__(*args)
        self.errno = errno


class WorkdirValidator(Validator):
    """
    Picks the first writable working directory out of one or more candidates with
    `PathWriteValidator`. Candidates are always treated as directories, so a run directory
    named like `run.v2` is not mistaken for a file.

    Example:
        ```python
        workdir = WorkdirValidator(["/mnt/shared/runs", "~/radialgdp-runs"]).validate()
        ```
    """

    def __init__(
        self,
        path: Union[Iterable[str | Path], str, Path],
        err_logger: Optional[logging.Logger] = None,
    ):
        self.err_logger = err_logger or default_err_logger
        self.path = path

    @property
    def path(self) -> tuple[ProperPath, ...]:
        return self._path

    @path.setter
    def path(self, value):
        if isinstance(value, (str, Path)):
            value = (value,)
        try:
            self._path = tuple(
                ProperPath(p, kind="dir", err_logger=self.err_logger) for p in value
            )
        except TypeError as e:
            raise ValueError(
                f"{value!r} must be a str or Path, or an iterable of them."
            ) from e

    def validate(self) -> ProperPath:
        """
        Returns:
            (ProperPath): The first writable candidate. A missing candidate is created.

        Raises:
            WorkdirValidationError: If no candidate is writable.
        """
        try:
            return PathWriteValidator(self.path, err_logger=self.err_logger).validate()
        except PathValidationError as e:
            raise WorkdirValidationError(
                f"None of the working directories {[str(p) for p in self.path]} is writable.",
                errno=e.errno,
            ) from e


class DatasetValidationError(ValidationError):
    exit_code = 3


class DatasetValidator(Validator):
    """
    Checks that a dataset of surfaces is registered: every surface is sampled on the same
    `(r, theta)` grid, so point `k` of one surface corresponds to point `k` of every other.
    """

    def __init__(
        self,
        surfaces: Sequence[DiskSurface],
        min_size: int = 1,
        err_logger: Optional[logging.Logger] = None,
    ):
        self.surfaces = surfaces
        self.min_size = min_size
        self.err_logger = err_logger or default_err_logger

    def validate(self) -> Sequence[DiskSurface]:
        """
        Raises:
            DatasetValidationError: If the dataset is too small or not registered.
        """
        if len(self.surfaces) < self.min_size:
            raise DatasetValidationError(
                f"Dataset has {len(self.surfaces)} surfaces, at least "
                f"{self.min_size} needed."
            )
        first = self.surfaces[0]
        for index, surface in enumerate(self.surfaces[1:], start=1):
            if surface.angles != first.angles or not np.array_equal(
                surface.radii, first.radii
            ):
                message = f"Surface {index} is not sampled on the grid of surface 0."
                self.err_logger.debug(message)
                raise DatasetValidationError(message)
        return self.surfaces
