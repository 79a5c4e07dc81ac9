"""gidx: ellipticity and index computations for operators associated with group actions."""
from .constants import TOOL_VERSION

__version__ = TOOL_VERSION
