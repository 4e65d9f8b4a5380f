"""
Corpus entry and harness report models.
"""

from datetime import datetime
from enum import Enum
from statistics import mean, median
from typing import List, Optional

from pydantic import BaseModel, Field, validator

from models.memsys import CostModel
from models.run import RunOutcome
from utils.constants import HEADER_REG_BENEFIT_THRESHOLD, REFERENCE_BLOAT_RATIO


class EntryCategory(str, Enum):
    """Corpus entry kinds."""
    EXPLOIT = "exploit"
    BENIGN = "benign"


class WithVerdict(str, Enum):
    """Expected result of the instrumented build."""
    TRAPPED = "trapped"
    COMPLETED = "completed"


class WithoutVerdict(str, Enum):
    """Expected result of the plain build."""
    COMPLETED = "completed"
    CORRUPTED = "corrupted"


class CorpusEntry(BaseModel):
    """One mini-G program plus its expectation manifest."""

    name: str
    source: str
    category: EntryCategory
    expected_with: WithVerdict
    expected_reason: Optional[str] = Field(None, description="Mismatch reason when trapped")
    expected_exit: Optional[int] = Field(None, description="Exit value when completed")
    expected_without: WithoutVerdict = WithoutVerdict.COMPLETED
    without_exit: Optional[int] = Field(None, description="Exit value of the plain build")
    clean_exit: Optional[int] = Field(None, description="Exit value an uncorrupted plain run would give")
    description: str = ""

    @validator('expected_reason', always=True)
    def validate_reason(cls, v, values):
        if values.get('expected_with') == WithVerdict.TRAPPED and not v:
            raise ValueError('trapped entries must name the mismatch reason')
        return v

    @validator('expected_exit', always=True)
    def validate_exit(cls, v, values):
        if values.get('expected_with') == WithVerdict.COMPLETED and v is None:
            raise ValueError('completed entries must give the exit value')
        return v

    @validator('clean_exit', always=True)
    def validate_clean_exit(cls, v, values):
        if values.get('expected_without') == WithoutVerdict.CORRUPTED:
            if v is None or values.get('without_exit') is None:
                raise ValueError('corrupted entries need without_exit and clean_exit')
            if v == values['without_exit']:
                raise ValueError('corruption must flip the observable exit value')
        return v

    @property
    def is_exploit(self) -> bool:
        return self.category == EntryCategory.EXPLOIT


class EntryResult(BaseModel):
    """Both-mode results of one entry under one cost model."""

    name: str
    category: EntryCategory
    cost_model: str
    with_gandalf: RunOutcome
    without_gandalf: RunOutcome
    passed: bool
    failures: List[str] = Field(default_factory=list)
    instrumented_instructions: int
    plain_instructions: int
    size_bloat: float
    cycle_overhead: Optional[float] = Field(None, description="Instrumented / plain cycles, completed runs only")
    header_blocks_checked: int = 0
    header_blocks_well_formed: int = 0


class OverheadRow(BaseModel):
    """One benign entry under one point of the cache x header-register sweep."""

    entry: str
    cache_size: int = Field(..., description="0 means the cache is disabled")
    headerregs: bool
    plain_cycles: int
    gandalf_cycles: int
    ratio: float
    header_reads: int
    plain_header_reads: int
    checked_accesses: int
    header_reg_hits: int
    gandalf_hit_rate: float
    plain_hit_rate: float


class BloatRow(BaseModel):
    """Static instruction counts of one entry."""

    entry: str
    variables: int
    instrumented: int
    plain: int
    bloat: float


class BloatStats(BaseModel):
    """Per-entry and aggregate static-instruction bloat."""

    rows: List[BloatRow] = Field(default_factory=list)
    mean_bloat: float = 0.0
    median_bloat: float = 0.0
    reference_ratio: float = REFERENCE_BLOAT_RATIO
    compiler_regime: str = "naive three-address codegen, no register allocation, one header per block"

    @classmethod
    def from_rows(cls, rows: List[BloatRow]) -> "BloatStats":
        values = [row.bloat for row in rows]
        return cls(
            rows=rows,
            mean_bloat=mean(values) if values else 0.0,
            median_bloat=median(values) if values else 0.0,
        )

    def row(self, entry: str) -> BloatRow:
        return next(r for r in self.rows if r.entry == entry)


class HeaderRegBenefit(BaseModel):
    """Header reads of the single-array loop with and without header registers."""

    entry: str
    header_reads_off: int
    header_reads_on: int
    threshold: float = HEADER_REG_BENEFIT_THRESHOLD

    @property
    def reduction(self) -> float:
        if not self.header_reads_off:
            return 0.0
        return 1 - self.header_reads_on / self.header_reads_off

    @property
    def passed(self) -> bool:
        return self.reduction >= self.threshold


class RunReport(BaseModel):
    """Everything the corpus and bench commands produce."""

    generated_at: datetime = Field(default_factory=datetime.utcnow)
    cost_models: List[CostModel] = Field(default_factory=list)
    entries: List[EntryResult] = Field(default_factory=list)
    bloat: BloatStats = Field(default_factory=BloatStats)
    overheads: List[OverheadRow] = Field(default_factory=list)
    header_reg_benefit: Optional[HeaderRegBenefit] = None
    suite_errors: List[str] = Field(default_factory=list)

    class Config:
        json_encoders = {
            datetime: lambda v: v.isoformat()
        }

    def _rate(self, category: EntryCategory, predicate) -> float:
        chosen = [e for e in self.entries if e.category == category]
        if not chosen:
            return 0.0
        return sum(1 for e in chosen if predicate(e)) / len(chosen)

    @property
    def pass_rate(self) -> float:
        if not self.entries:
            return 0.0
        return sum(1 for e in self.entries if e.passed) / len(self.entries)

    @property
    def exploit_trap_rate(self) -> float:
        return self._rate(EntryCategory.EXPLOIT, lambda e: e.with_gandalf.trap is not None)

    @property
    def exploit_plain_trap_rate(self) -> float:
        return self._rate(EntryCategory.EXPLOIT, lambda e: e.without_gandalf.trap is not None)

    @property
    def benign_trap_rate(self) -> float:
        return self._rate(EntryCategory.BENIGN, lambda e: e.with_gandalf.trap is not None)

    @property
    def mean_cycle_overhead(self) -> float:
        ratios = [e.cycle_overhead for e in self.entries if e.cycle_overhead is not None]
        return mean(ratios) if ratios else 0.0

    @property
    def passed(self) -> bool:
        return not self.suite_errors and all(e.passed for e in self.entries)

    def summary(self) -> dict:
        """Aggregate figures for printing."""
        return {
            "entries": len(self.entries),
            "pass_rate": round(self.pass_rate, 4),
            "exploit_trap_rate": round(self.exploit_trap_rate, 4),
            "exploit_plain_trap_rate": round(self.exploit_plain_trap_rate, 4),
            "benign_trap_rate": round(self.benign_trap_rate, 4),
            "mean_cycle_overhead": round(self.mean_cycle_overhead, 4),
            "median_bloat": round(self.bloat.median_bloat, 4),
            "reference_bloat": self.bloat.reference_ratio,
        }
