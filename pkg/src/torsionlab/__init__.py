"""Numerical toolkit for the Saint Venant torsion function and its negative powers."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .geometry import *  # noqa: E402,F401,F403
from .specfun import *  # noqa: E402,F401,F403
from .barriers import *  # noqa: E402,F401,F403
from .solver import *  # noqa: E402,F401,F403
from .measures import *  # noqa: E402,F401,F403
