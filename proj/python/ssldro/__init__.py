"""Semi-supervised distributionally robust training toolkit."""

try:
    from ._ssldro import *  # noqa: F401,F403  packaged layout
except ImportError:  # build-tree layout: _ssldro sits on sys.path directly
    from _ssldro import *  # noqa: F401,F403

__all__ = [
    "train",
    "evaluate",
    "dual_value",
    "worst_case",
    "rwp_value",
    "select_delta_cv",
    "select_delta_rwp",
    "ConfigError",
    "DataError",
    "NumericError",
]
