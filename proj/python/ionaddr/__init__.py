"""Individual-addressing beam design and Rabi-scan fitting."""

from ._ionaddr import *  # noqa: F401,F403
from ._ionaddr import __version__  # noqa: F401
