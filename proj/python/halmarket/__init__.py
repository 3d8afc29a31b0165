"""Relational-contract market model for AI answer services under hallucination risk."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
