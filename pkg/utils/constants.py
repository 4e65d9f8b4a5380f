"""
Constants used throughout the GANDALF simulator and toolchain.
"""

# Word geometry
WORD_BYTES = 4
WORD_MASK = 0xFFFFFFFF
IMM16_MIN = -0x8000
IMM16_MAX = 0x7FFF
NUM_REGISTERS = 32

# SPR bits
GEB_BIT = 17  # Gandalf enable bit
PHWE_BIT = 18  # protection-header write enable bit

# Protection-Header geometry (three words prepended to every block)
HEADER_WORDS = 3
HEADER_BYTES = HEADER_WORDS * WORD_BYTES
MAGIC_OFFSET = -12
BASE_OFFSET = -8
BOUND_OFFSET = -4

# ABI registers
REG_ZERO = 0
REG_SP = 1
REG_FP = 2
ARG_REGISTERS = (3, 4, 5, 6, 7, 8)
REG_LINK = 9
REG_SCRATCH = 10
REG_RETURN = 11
TEMP_REGISTERS = tuple(range(12, 29))
REG_ADDR = 29
REG_ADDR2 = 30

# Program image
CODE_BASE = 0x00001000
INITIAL_SP = 0x80020000
IMAGE_HEADER_WORDS = 3
ENTRY_LABEL = "_start"

# Default cost model (cycles)
DEFAULT_BASE_COST = 1
DEFAULT_HIT_CYCLES = 1
DEFAULT_MISS_CYCLES = 10
DEFAULT_CACHE_SIZE = 4096
DEFAULT_CACHE_LINE = 32
DEFAULT_STOREBUF_CAPACITY = 8
DEFAULT_STOREBUF_DRAIN = 1

# Run limits
DEFAULT_MAX_INSTRUCTIONS = 50_000_000

# Harness
REFERENCE_BLOAT_RATIO = 0.30
DEFAULT_SWEEP_CACHE_SIZES = (0, 256, 1024, 4096, 16384)
TIGHT_LOOP_ENTRY = "tight_loop"
HEADER_REG_BENEFIT_THRESHOLD = 0.90

# CLI exit codes
EXIT_OK = 0
EXIT_TRAPPED = 1
EXIT_USAGE = 2
EXIT_EXPECTATION = 3
