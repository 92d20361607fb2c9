from properpath.validators import Validator

from ..errors import RadialGdpError

__all__ = ["ValidationError", "Validator"]


class ValidationError(RadialGdpError):
    exit_code = 2
