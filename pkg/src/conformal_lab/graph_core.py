"""Alias of :mod:`conformal_lab.graph` under its long name."""

from .graph import *  # noqa: F401,F403
from .graph import __all__  # noqa: F401
