"""Decoupling machinery: phases, caps, extension operators and decoupled norms."""

from displab.decoupling.phases import *  # noqa: F401,F403
from displab.decoupling.operators import *  # noqa: F401,F403
from displab.decoupling.approximation import *  # noqa: F401,F403
