"""Python bindings for the keywatch C++ core."""

from ._keywatch import *  # noqa: F401,F403
from ._keywatch import __doc__  # noqa: F401

__version__ = "0.1.0"
