"""Python bindings for the laq C++ library."""

from ._laq import *  # noqa: F401,F403
from ._laq import __doc__  # noqa: F401
