"""
Helpers for collecting harness failures without aborting a run.
"""

import logging
from typing import Any, Dict, List, Optional


def create_result_dict(success: bool, errors: Optional[List[str]] = None, **kwargs: Any) -> Dict[str, Any]:
    """
    Build the result dictionary returned by harness steps.

    Args:
        success: Whether every expectation held
        errors: Failure messages collected along the way
        **kwargs: Step-specific fields (seed, entry name, counts, ...)

    Returns:
        Dictionary with ``success``, ``errors`` and the extra fields
    """
    return {"success": success, "errors": list(errors or []), **kwargs}


def handle_step_error(error_msg: str, errors: List[str], logger: logging.Logger) -> None:
    """Log a failed expectation and append it to the running failure list."""
    logger.warning(error_msg)
    errors.append(error_msg)


def expect_equal(label: str, expected: Any, actual: Any, errors: List[str], logger: logging.Logger) -> bool:
    """
    Compare one expectation, recording a failure message on mismatch.

    Returns:
        True when ``expected == actual``
    """
    if expected == actual:
        return True
    handle_step_error(f"{label}: expected {expected!r}, got {actual!r}", errors, logger)
    return False
