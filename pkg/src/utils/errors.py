"""
Errors - What Can Go Wrong, By Name
===================================

Every failure the library raises derives from CdaeError, so the CLI can
catch one type and still write a precise, machine-readable error document.
"""

from typing import Any, Dict, Optional


class CdaeError(Exception):
    """Base class for all library errors"""

    kind = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_document(self) -> Dict[str, Any]:
        """Machine-readable form written as error.json by the CLI"""
        return {
            "error": self.kind,
            "message": self.message,
            "details": {k: _jsonable(v) for k, v in sorted(self.details.items())},
        }


class DimensionError(CdaeError, ValueError):
    """Shapes do not conform"""
    kind = "dimension_error"


class IndexOutOfBoundsError(CdaeError, IndexError):
    kind = "index_error"


class DomainError(CdaeError, ValueError):
    """Input outside the domain of a function (e.g. log of a non-probability)"""
    kind = "domain_error"


class TrainingError(CdaeError):
    """Loss became non-finite during training"""
    kind = "training_error"

    def __init__(self, message: str, epoch: int, layer: Optional[int] = None, **details: Any):
        super().__init__(message, epoch=epoch, layer=layer, **details)
        self.epoch = epoch
        self.layer = layer


class ConvergenceError(CdaeError):
    """SMO ran out of passes with KKT violators left"""
    kind = "convergence_error"

    def __init__(self, message: str, violations: int, **details: Any):
        super().__init__(message, violations=violations, **details)
        self.violations = violations


class FormatError(CdaeError, ValueError):
    kind = "format_error"

    def __init__(self, message: str, expected: Any = None, found: Any = None, **details: Any):
        super().__init__(message, expected=expected, found=found, **details)
        self.expected = expected
        self.found = found


class LengthError(CdaeError, ValueError):
    """File shorter than its header promises"""
    kind = "length_error"


class ShapeError(CdaeError, ValueError):
    kind = "shape_error"


class DataError(CdaeError, ValueError):
    """Dataset content cannot support the requested operation"""
    kind = "data_error"


class ConfigError(CdaeError, ValueError):
    kind = "config_error"


class GradcheckFailedError(CdaeError):
    """Analytic and numeric gradients disagree beyond the tolerance"""
    kind = "gradcheck_failed"


def _jsonable(value: Any) -> Any:
    if hasattr(value, "item") and hasattr(value, "dtype"):
        value = value.tolist()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return str(value)
