import logging
import os
from fractions import Fraction

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from metriq.errors import ConfigError, MetricError
from metriq.metric import INF, ExtReal

log = logging.getLogger(__name__)

DEPTH_ENV: str = "METRIQ_DEPTH"

DEFAULT_GRID: tuple[ExtReal, ...] = (
    ExtReal(Fraction(0)),
    ExtReal(Fraction(1, 4)),
    ExtReal(Fraction(1, 2)),
    ExtReal(Fraction(1)),
    ExtReal(Fraction(2)),
    INF,
)


class ProverConfig(BaseModel):
    """Resource bounds shared by saturation, model search and free models."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    depth: int = Field(3, ge=1, description="Maximal term depth of the universe")
    max_iterations: int = Field(1000, ge=1, description="Saturation round cap")
    stream_prefix_cap: int = Field(
        2, ge=1, description="Longest stream prefix generated or sampled"
    )
    max_terms: int = Field(300, ge=1, description="Universe size cap")
    model_size: int = Field(4, ge=1, description="Largest countermodel carrier")
    grid: tuple[ExtReal, ...] = Field(DEFAULT_GRID, description="Distance grid")
    model_budget: int = Field(
        50000, ge=1, description="Models examined per countermodel search"
    )

    @field_validator("grid", mode="before")
    @classmethod
    def _coerce_grid(cls, value: object) -> tuple[ExtReal, ...]:
        if isinstance(value, str):
            value = [part for part in value.split(",") if part.strip()]
        try:
            grid = tuple(sorted({ExtReal.of(v) for v in value}))  # type: ignore[union-attr]
        except MetricError as exc:
            raise ValueError(exc.message) from None
        if not grid:
            raise ValueError("grid must not be empty")
        return grid

    @classmethod
    def from_env(cls, **overrides: object) -> "ProverConfig":
        """Defaults, then `METRIQ_DEPTH` (a .env file is honoured), then overrides.

        Raises ConfigError when a value does not validate.
        """
        load_dotenv()
        values: dict[str, object] = {}
        depth = os.environ.get(DEPTH_ENV)
        if depth:
            try:
                values["depth"] = int(depth)
            except ValueError:
                raise ConfigError(f"{DEPTH_ENV} must be an integer, got {depth!r}") from None
            log.debug("%s=%s", DEPTH_ENV, depth)
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls.model_validate(values)
        except ValidationError as exc:
            err = exc.errors()[0]
            field = str(err["loc"][0]) if err["loc"] else "config"
            raise ConfigError(f"{field}: {err['msg']}") from None

    def with_depth(self, depth: int) -> "ProverConfig":
        return self.model_copy(update={"depth": depth})
