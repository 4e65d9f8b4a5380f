"""
Execution engines for GANDALF program images.
"""

from .simulator import Simulator, run_image

__all__ = ["Simulator", "run_image"]
