"""Benchmark orchestration, scaling analysis and procurement evaluation."""

from ._benchkit import *  # noqa: F401,F403
from ._benchkit import __version__  # noqa: F401
