"""Gain-scheduled leader-follower tracking toolkit."""

from lfgs._core import *  # noqa: F401,F403
from lfgs._core import __doc__  # noqa: F401

__version__ = "0.1.0"
