"""JSON experiment configuration (pydantic models, unknown keys rejected)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TfimModel(_Strict):
    kind: Literal["tfim"] = "tfim"
    n: int = Field(6, ge=2, le=12)
    J: float = Field(1.0, gt=0)
    h: float = Field(0.1, gt=0)


class PauliTerm(_Strict):
    label: str | None = None
    weight: float = Field(gt=0)
    paulis: list[str] = Field(min_length=1)


class PauliModel(_Strict):
    kind: Literal["pauli"]
    terms: list[PauliTerm] = Field(min_length=1)

    @model_validator(mode="after")
    def _same_width(self):
        widths = {len(p) for term in self.terms for p in term.paulis}
        if len(widths) != 1:
            raise ValueError(f"Pauli strings have differing lengths {sorted(widths)}")
        return self

    @property
    def n_qubits(self) -> int:
        return len(self.terms[0].paulis[0])


class SumZObservable(_Strict):
    kind: Literal["sum_z"] = "sum_z"


class PauliSummand(_Strict):
    coeff: float
    string: str


class PauliObservable(_Strict):
    kind: Literal["pauli"]
    terms: list[PauliSummand] = Field(min_length=1)


class ExactProtocol(_Strict):
    kind: Literal["exact"]


class TrotterProtocol(_Strict):
    kind: Literal["trotter"]
    order: Literal[1, 2] = 1
    N: int = Field(1, ge=1)


class QdriftProtocol(_Strict):
    kind: Literal["qdrift"]
    N: int = Field(ge=1)


class QshiftProtocol(_Strict):
    kind: Literal["qshift"]
    N: int = Field(ge=1)
    r: int | None = Field(None, ge=1)
    schedule: list[int] | None = None

    @model_validator(mode="after")
    def _r_or_schedule(self):
        if (self.r is None) == (self.schedule is None):
            raise ValueError("qshift needs exactly one of 'r' or 'schedule'")
        if self.schedule is not None and (any(s < 1 for s in self.schedule) or sum(self.schedule) != self.N):
            raise ValueError(f"schedule {self.schedule} must have entries >= 1 summing to N={self.N}")
        if self.r is not None and self.N % self.r:
            raise ValueError(f"N={self.N} is not a multiple of r={self.r}")
        return self


class TGrid(_Strict):
    min: float = Field(0.02, gt=0)
    max: float = 0.4
    count: int = Field(12, ge=1)
    log_spaced: bool = True
    include_zero: bool = False

    @model_validator(mode="after")
    def _ordered(self):
        if self.count > 1 and not self.max > self.min:
            raise ValueError(f"t_grid.max ({self.max}) must exceed t_grid.min ({self.min})")
        return self


class Shots(_Strict):
    shots: int = Field(ge=1)


class EnsembleMode(_Strict):
    kind: Literal["ensemble"] = "ensemble"


class MonteCarloMode(_Strict):
    kind: Literal["monte_carlo"]
    samples: int = Field(ge=1)
    measurement: Union[Literal["exact"], Shots] = "exact"


Model = Annotated[Union[TfimModel, PauliModel], Field(discriminator="kind")]
Observable = Annotated[Union[SumZObservable, PauliObservable], Field(discriminator="kind")]
Protocol = Annotated[Union[ExactProtocol, TrotterProtocol, QdriftProtocol, QshiftProtocol], Field(discriminator="kind")]
Mode = Annotated[Union[EnsembleMode, MonteCarloMode], Field(discriminator="kind")]


class ExperimentConfig(_Strict):
    model: Model = Field(default_factory=TfimModel)
    observable: Observable = Field(default_factory=SumZObservable)
    seed: int = Field(ge=0, lt=2**64)
    protocol: Protocol
    t_grid: TGrid = Field(default_factory=TGrid)
    mode: Mode = Field(default_factory=EnsembleMode)
    output: str | None = None

    @model_validator(mode="after")
    def _mode_fits_protocol(self):
        if isinstance(self.mode, MonteCarloMode) and self.protocol.kind not in ("qdrift", "qshift"):
            raise ValueError(f"monte_carlo mode needs a sampling protocol, got {self.protocol.kind!r}")
        if isinstance(self.observable, PauliObservable):
            n = self.model.n if isinstance(self.model, TfimModel) else self.model.n_qubits
            bad = [s.string for s in self.observable.terms if len(s.string) != n]
            if bad:
                raise ValueError(f"observable strings {bad} do not act on {n} qubits")
        return self


def load_config(source: str | Path | dict) -> ExperimentConfig:
    """Parse and validate a config from a path, JSON text, or dict."""
    try:
        if isinstance(source, dict):
            return ExperimentConfig.model_validate(source)
        text = Path(source).read_text(encoding="utf-8")
        return ExperimentConfig.model_validate(json.loads(text))
    except (ValidationError, json.JSONDecodeError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
