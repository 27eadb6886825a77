from fractions import Fraction

import pytest
from pydantic import ValidationError

from metriq.config import DEFAULT_GRID, ProverConfig
from metriq.errors import ConfigError
from metriq.metric import INF, ExtReal


def test_defaults() -> None:
    cfg = ProverConfig()
    assert cfg.depth == 3
    assert cfg.grid == DEFAULT_GRID


def test_depth_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("METRIQ_DEPTH", "5")
    assert ProverConfig.from_env().depth == 5
    assert ProverConfig.from_env(depth=2).depth == 2
    assert ProverConfig.from_env(depth=None).depth == 5


def test_grid_is_sorted_and_deduplicated() -> None:
    cfg = ProverConfig(grid="inf, 1/2,0, 1/2")
    assert cfg.grid == (ExtReal(Fraction(0)), ExtReal(Fraction(1, 2)), INF)


@pytest.mark.parametrize(
    "overrides",
    [{"depth": 0}, {"grid": ""}, {"grid": "-1"}, {"model_budget": 0}],
)
def test_rejects_bad_values(overrides: dict) -> None:
    with pytest.raises(ValidationError):
        ProverConfig(**overrides)


def test_configs_are_frozen() -> None:
    cfg = ProverConfig()
    with pytest.raises(ValidationError):
        cfg.depth = 9  # type: ignore[misc]
    assert cfg.with_depth(9).depth == 9 and cfg.depth == 3


@pytest.mark.parametrize("raw", ["abc", "2.5", "0"])
def test_bad_environment_depth(monkeypatch: pytest.MonkeyPatch, raw: str) -> None:
    monkeypatch.setenv("METRIQ_DEPTH", raw)
    with pytest.raises(ConfigError, match="METRIQ_DEPTH|depth"):
        ProverConfig.from_env()


@pytest.mark.parametrize("grid", ["1/0", "0,x", ","])
def test_bad_grid_overrides(grid: str) -> None:
    with pytest.raises(ConfigError, match="grid"):
        ProverConfig.from_env(grid=grid)
