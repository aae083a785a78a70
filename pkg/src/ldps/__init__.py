"""Power-series distribution families, Prabhakar functions and deviation rates at finite t."""

__version__ = "0.1.0"

from .errors import ConfigError, LdpsError, NumericError  # noqa: E402
from .special import PrabhakarParams, prabhakar_eval  # noqa: E402

__all__ = ["ConfigError", "LdpsError", "NumericError", "PrabhakarParams", "__version__", "prabhakar_eval"]
