"""
Utility functions for the GANDALF toolchain.
"""

from .logging_utils import hex_word, signed_word
from .error_utils import create_result_dict, handle_step_error
from . import constants

__all__ = ["hex_word", "signed_word", "create_result_dict", "handle_step_error", "constants"]
