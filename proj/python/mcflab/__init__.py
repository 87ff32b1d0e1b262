"""Mean curvature flow through Riemannian submersions."""

from ._core import *  # noqa: F401,F403
from ._core import McflabError, run_scenario, catalog

__all__ = [name for name in dir() if not name.startswith("_")]
