"""Frame-to-frame image registration and incremental mosaicking."""

from ._core import (
    RegistrationError,
    __version__,
    build_mosaic,
    compose,
    corner_error,
    erode_mask,
    exhaustive_match,
    generate_sequence,
    invert,
    log_search,
    ncc,
    register_pair,
    run_kourogi,
)

__all__ = [
    "RegistrationError",
    "__version__",
    "build_mosaic",
    "compose",
    "corner_error",
    "erode_mask",
    "exhaustive_match",
    "generate_sequence",
    "invert",
    "log_search",
    "ncc",
    "register_pair",
    "run_kourogi",
]
