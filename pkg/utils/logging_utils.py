"""
Formatting helpers for log and trace lines.
"""


def hex_word(value: int) -> str:
    """
    Format a machine word as fixed-width hex for logs and traces.

    Args:
        value: Word value (masked to 32 bits)

    Returns:
        String such as ``0x80012340``
    """
    return f"0x{value & 0xFFFFFFFF:08x}"


def signed_word(value: int) -> int:
    """Interpret a 32-bit word as a two's-complement integer."""
    value &= 0xFFFFFFFF
    return value - 0x100000000 if value & 0x80000000 else value
