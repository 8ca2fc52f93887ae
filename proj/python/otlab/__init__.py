"""Python access to the otlab solvers and experiments."""

import json as _json

from ._core import (
    DomainError,
    Error,
    NumericalError,
    ValidationError,
    __version__,
    delta_h,
    diffusion_tensor,
    gegenbauer,
    gradient_bracket_min,
    k_admissible_ranges,
    leading_term,
    run_cli,
)
from ._core import Config as _Config
from ._core import default_config as _default_config


def default_config():
    """The bundled default configuration as a dict."""
    return _json.loads(_default_config())


def Config(cfg=None):
    """Validated run configuration from a dict, a JSON string, or the default."""
    if cfg is None:
        cfg = default_config()
    if not isinstance(cfg, str):
        cfg = _json.dumps(cfg)
    return _Config(cfg)


__all__ = [
    "Config",
    "DomainError",
    "Error",
    "NumericalError",
    "ValidationError",
    "__version__",
    "default_config",
    "delta_h",
    "diffusion_tensor",
    "gegenbauer",
    "gradient_bracket_min",
    "k_admissible_ranges",
    "leading_term",
    "run_cli",
]
