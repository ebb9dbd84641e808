from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from .settings import DEFAULT_SIGNIFICANCE, MAX_WORKERS


class RunState(str, Enum):
    PENDING = "PENDING"
    RUNNING = "RUNNING"
    SUCCEEDED = "SUCCEEDED"
    FAILED = "FAILED"


class CipherName(str, Enum):
    AES128 = "aes128"
    PRESENT80 = "present80"
    SERPENT_LINEAR = "serpent-linear"
    REDUCED = "reduced"


class EmbeddingKind(str, Enum):
    EPS = "eps"
    ALPHA = "alpha"


class MatrixPolicy(str, Enum):
    LOW_RANK = "low-rank"
    UNIFORM_ADMISSIBLE = "uniform-admissible"
    UNIFORM_IN_T = "uniform-in-T"


class KeyMode(str, Enum):
    SINGLE = "single-key"
    RELATED = "related-key"
    INDEPENDENT = "independent-round-keys"


class Suite(str, Enum):
    DIMS = "dims"
    ORDERS = "orders"
    COUNTEREXAMPLES = "counterexamples"
    RANKSTATS = "rankstats"
    EXTEND = "extend"
    BOUNDS = "bounds"
    ALL = "all"


class ExperimentConfig(BaseModel):
    kind: str = Field("distinguisher", description="Experiment kind; only the rank distinguisher is runnable")
    cipher: CipherName
    m: int = Field(4, ge=2, le=8, description="Brick width of the reduced cipher")
    b: int = Field(4, ge=1, le=16, description="Brick count of the reduced cipher")
    rounds: int = Field(4, ge=1, description="Rounds of the reduced cipher")
    embedding: EmbeddingKind = EmbeddingKind.EPS
    n_matrices: int = Field(..., gt=0, description="Size N of the matrix set S")
    matrix_rows: Optional[int] = Field(default=None, gt=0, description="Rows per matrix; defaults to the admissible dimension")
    policy: MatrixPolicy = MatrixPolicy.UNIFORM_ADMISSIBLE
    rank_target: int = Field(2, ge=1, description="Active bricks of the plaintext subspace for the low-rank policy")
    key_mode: KeyMode = KeyMode.SINGLE
    related_keys: int = Field(1, ge=1, description="Number n_k of related keys in related-key mode")
    trials: Optional[int] = Field(default=None, gt=0, description="Baseline Monte Carlo matrices; defaults to BASELINE_FACTOR * N")
    seed: int = Field(..., ge=0, description="Philox key for every random draw of the run")
    significance: float = Field(DEFAULT_SIGNIFICANCE, gt=0.0, lt=1.0)
    workers: int = Field(MAX_WORKERS, ge=1)
    allow_large: bool = Field(False, description="Skip the memory budget check")
    output: Optional[str] = Field(default=None, description="Results directory override")

    @model_validator(mode="after")
    def _check_combination(self) -> "ExperimentConfig":
        if self.cipher == CipherName.SERPENT_LINEAR:
            raise ValueError("serpent-linear has no encryption; it is available for verification suites only")
        if self.key_mode != KeyMode.RELATED and self.related_keys != 1:
            raise ValueError("related_keys > 1 requires key_mode = related-key")
        return self


class HistogramModel(BaseModel):
    source: str
    total: int
    bins: dict[int, int]


class ChiSquareResult(BaseModel):
    statistic: float
    p_value: float
    dof: int
    distinguished: bool


class ExperimentReport(BaseModel):
    config: ExperimentConfig
    version: str
    rng: str = Field("numpy.random.Philox", description="Counter-based generator keyed by config.seed")
    ranks: list[int] = Field(default_factory=list, description="Per-matrix ranks ordered by matrix index")
    rank_cap: int = Field(0, description="Admissible dimension bounding every rank")
    observed: Optional[HistogramModel] = None
    expected: Optional[HistogramModel] = None
    comparison: Optional[ChiSquareResult] = None
    validation: Optional[ChiSquareResult] = None
    verdict: Optional[bool] = Field(default=None, description="None when the data cannot support a verdict")
    notes: list[str] = Field(default_factory=list)
    started_at: str = ""
    wall_seconds: float = 0.0


class CheckResult(BaseModel):
    suite: Suite
    claim: str
    expected: str
    computed: str
    passed: bool
    seconds: float = 0.0


class VerificationReport(BaseModel):
    suite: Suite
    version: str
    checks: list[CheckResult] = Field(default_factory=list)
    passed: bool = True
    started_at: str = ""
    wall_seconds: float = 0.0


class BoundReport(BaseModel):
    claim: str
    left: str = Field(description="Left-hand quantity: exact integer, log or certified interval")
    right: str
    verdict: bool
    method: str
    informational: bool = Field(False, description="Reported only, never asserted")
    details: dict[str, str] = Field(default_factory=dict)


class CounterexampleReport(BaseModel):
    layer: str
    blocks: list[int] = Field(description="Block indices touched by the counterexample")
    inputs_consistent: bool = Field(description="w1 + w2 + w3 = w4 in W")
    image_values: list[list[int]] = Field(description="Field elements encoded by each image on the listed blocks")
    image_exponents: list[list[Optional[int]]] = Field(description="Discrete logs of image_values, None for 0")
    sum_block_weights: list[int]
    offending_block: Optional[int] = None
    offending_weight: int = 0
    linear: bool = Field(description="True when the lifted map respected the relation")


class RunInfo(BaseModel):
    run_id: str
    kind: str
    state: RunState
    progress: float = Field(0.0, ge=0.0, le=1.0, description="0.0 to 1.0 fraction complete")
    matrices_done: int = Field(0, description="Number of matrices ranked")
    matrices_total: int = Field(0, description="Total number of matrices")
    result_path: Optional[str] = Field(default=None, description="Path of report.json or error.json")
