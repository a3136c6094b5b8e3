"""Earthmoving force model and soil-parameter calibration."""

from ._feecal import *  # noqa: F401,F403
from ._feecal import FeecalError, __doc__  # noqa: F401

__version__ = "0.1.0"
