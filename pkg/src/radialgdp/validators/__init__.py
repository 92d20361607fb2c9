from .base import ValidationError, Validator
from .validators import (
    DatasetValidationError,
    DatasetValidator,
    WorkdirValidationError,
    WorkdirValidator,
)

__all__ = [
    "ValidationError",
    "Validator",
    "DatasetValidationError",
    "DatasetValidator",
    "WorkdirValidationError",
    "WorkdirValidator",
]
