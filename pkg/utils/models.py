"""
Pydantic records shared by the library, the harness and the CLI.
"""
import json
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ArtifactIOError, ParameterError
from .rng import MAX_SEED


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")

    @classmethod
    def from_dict(cls, data):
        """
        Create a record instance from a dictionary.
        """
        return cls.model_validate(data)

    def to_json(self, **kwargs):
        """Byte-stable JSON: keys sorted, no whitespace variation."""
        return json.dumps(self.model_dump(mode="json", **kwargs), sort_keys=True)


class GaussianModelSpec(_Record):
    """
    Gaussian-Wigner model: standard normal hyperedge weights, correlated with
    coefficient rho under the planted alternative.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: Literal["gaussian"] = "gaussian"
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    rho: float = Field(ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_uniformity(self):
        if self.m > self.n:
            raise ValueError(f"uniformity m={self.m} exceeds n={self.n}")
        return self


class ERModelSpec(_Record):
    """
    Correlated Erdos-Renyi model: parent edge probability p, subsampling
    probability s.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: Literal["er"] = "er"
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    p: float = Field(gt=0.0, lt=1.0)
    s: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_uniformity(self):
        if self.m > self.n:
            raise ValueError(f"uniformity m={self.m} exceeds n={self.n}")
        return self

    @property
    def edge_probability(self):
        return self.p * self.s

    @property
    def eta(self):
        """Bernoulli parameter of A2 on edges absent from A1 under H1."""
        ps = self.p * self.s
        return ps * (1.0 - self.s) / (1.0 - ps)


ModelSpec = Annotated[Union[GaussianModelSpec, ERModelSpec], Field(discriminator="model")]


class StatisticSpec(_Record):
    method: Literal["exact", "heuristic"] = "exact"
    restarts: int = Field(default=10, ge=0)


class ThresholdSpec(_Record):
    kind: Literal["asymptotic", "calibrated"] = "calibrated"
    level: float = Field(default=0.05, gt=0.0, lt=1.0)
    null_trials: int = Field(default=400, ge=20)


class ExperimentConfig(_Record):
    """
    A Monte Carlo power experiment.

    `sweep` lists multiples c of the model's threshold (rho^2 = c * threshold,
    or s^2 = c * threshold for ER); `sweep_values` lists absolute rho (or s)
    values. With neither, the model's own rho (or s) is the single grid point.
    """
    model: ModelSpec
    trials: int = Field(ge=1)
    statistic: StatisticSpec = Field(default_factory=StatisticSpec)
    threshold: ThresholdSpec = Field(default_factory=ThresholdSpec)
    sweep: Optional[List[float]] = None
    sweep_values: Optional[List[float]] = None
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    workers: int = Field(default=1, ge=1)
    deterministic_order: bool = True

    @field_validator("sweep")
    @classmethod
    def _positive_multiples(cls, values):
        if values is not None and any(c <= 0 for c in values):
            raise ValueError("grid multiples c must be > 0")
        return values

    @field_validator("sweep_values")
    @classmethod
    def _nonnegative_values(cls, values):
        if values is not None and any(v < 0 for v in values):
            raise ValueError("absolute grid values must be >= 0")
        return values

    @model_validator(mode="after")
    def _one_grid(self):
        if self.sweep is not None and self.sweep_values is not None:
            raise ValueError("sweep and sweep_values are mutually exclusive")
        return self

    @classmethod
    def from_json_file(cls, path):
        """
        Load and validate a JSON experiment configuration.

        Parameters:
            path (str | Path): Config file location

        Returns:
            ExperimentConfig: The validated configuration
        """
        path = Path(path)
        try:
            raw = path.read_text()
        except OSError as e:
            raise ArtifactIOError(f"cannot read config {path}: {e}") from e
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParameterError(f"config {path} is not valid JSON: {e}") from e
        return cls.from_dict(data)


class TestOutcome(_Record):
    """Result of maximizing T over permutations, with the decision against a threshold."""
    __test__ = False

    n: int
    m: int
    statistic: float
    threshold: Optional[float] = None
    reject_h0: Optional[bool] = None
    argmax: List[int]
    method: Literal["exact", "heuristic"]
    threshold_kind: Optional[Literal["asymptotic", "calibrated"]] = None
    degenerate: bool = False
    permutations_evaluated: int = 0

    @model_validator(mode="after")
    def _decision_matches(self):
        if self.threshold is None:
            if self.reject_h0 is not None:
                raise ValueError("reject_h0 given without a threshold")
        elif self.reject_h0 is None:
            self.reject_h0 = bool(self.statistic >= self.threshold)
        elif self.reject_h0 != (self.statistic >= self.threshold):
            raise ValueError("reject_h0 must equal statistic >= threshold")
        return self


class ThresholdResult(_Record):
    value: float
    kind: Literal["asymptotic", "calibrated"]
    degenerate: bool = False


class SecondMomentResult(_Record):
    value: float
    n: int
    m: int
    rho: float
    model: Literal["gaussian", "er"]
    permutations_enumerated: int
    method: Literal["cycle_type", "traversal"] = "cycle_type"
    quantity: Literal["second_moment", "fixed_orbit_exponential", "fixed_orbit_factor"] = "second_moment"


class CycleComparisonResult(_Record):
    n: int
    L: int
    effective_L: int
    g: dict
    lhs: float
    rhs: float
    holds: bool
    truncated: bool = True


class TailBoundReport(_Record):
    mu: float
    deviation: float
    deviation_kind: Literal["delta", "t"] = "delta"
    side: Literal["upper", "lower"]
    bound: float
    exact: Optional[float] = None
    trials: Optional[int] = None

    @model_validator(mode="after")
    def _exact_dominated(self):
        if self.exact is not None and self.exact > self.bound * (1.0 + 1e-12):
            raise ValueError(f"exact tail {self.exact} exceeds bound {self.bound}")
        return self


class GridPointReport(_Record):
    index: int
    model: Literal["gaussian", "er"]
    n: int
    m: int
    c: Optional[float] = None
    rho_or_s: float
    correlation: float
    threshold_kind: Literal["asymptotic", "calibrated"]
    threshold: Optional[float] = None
    asymptotic_threshold: Optional[float] = None
    degenerate: bool = False
    skipped: bool = False
    skip_reason: Optional[str] = None
    trials: int = 0
    reject_rate_h0: Optional[float] = None
    reject_rate_h1: Optional[float] = None
    ci_h0: Optional[Tuple[float, float]] = None
    ci_h1: Optional[Tuple[float, float]] = None
    mean_h0: Optional[float] = None
    sd_h0: Optional[float] = None
    mean_h1: Optional[float] = None
    sd_h1: Optional[float] = None
    tv_lower_bound: Optional[float] = None

    @model_validator(mode="after")
    def _rates_in_intervals(self):
        for rate, ci in ((self.reject_rate_h0, self.ci_h0), (self.reject_rate_h1, self.ci_h1)):
            if rate is None:
                continue
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"rejection rate {rate} outside [0, 1]")
            if ci is not None and not ci[0] - 1e-12 <= rate <= ci[1] + 1e-12:
                raise ValueError(f"interval {ci} does not contain {rate}")
        return self


class ExperimentReport(_Record):
    config: ExperimentConfig
    points: List[GridPointReport]
    runtime_seconds: float = 0.0

    def canonical_json(self):
        """JSON without wall-clock fields, identical across reruns and worker counts."""
        return self.to_json(exclude={"runtime_seconds"})
