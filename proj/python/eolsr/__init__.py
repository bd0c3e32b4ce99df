"""Energy-aware OLSR simulation and parameter tuning for vehicular networks."""

from ._core import *  # noqa: F401,F403
from ._core import EolsrError, ConfigError, ValidationError, ParseError, NodeLookupError  # noqa: F401

__version__ = "0.1.0"
