import os

import pytest
from hypothesis import HealthCheck, settings

from metriq.config import ProverConfig
from metriq.metric import FinMetric
from metriq.theories import BUILTINS, Theory, builtin

settings.register_profile("dev", max_examples=25, deadline=None)
settings.register_profile(
    "ci",
    max_examples=100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture(autouse=True)
def no_depth_override(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("METRIQ_DEPTH", raising=False)


@pytest.fixture
def cfg() -> ProverConfig:
    """Small resource bounds that keep a saturation run well under a second."""
    return ProverConfig(
        depth=2,
        stream_prefix_cap=1,
        max_terms=120,
        model_size=3,
        grid=("0", "1/2", "1", "inf"),
        model_budget=20000,
    )


@pytest.fixture(params=sorted(BUILTINS))
def any_builtin(request: pytest.FixtureRequest) -> Theory:
    return builtin(request.param)


@pytest.fixture
def pair() -> FinMetric:
    return FinMetric.from_matrix(["a", "b"], [[0, 1], [1, 0]])  # type: ignore[return-value]


@pytest.fixture
def far_pair() -> FinMetric:
    return FinMetric.discrete(["a", "b"])


@pytest.fixture
def triangle() -> FinMetric:
    return FinMetric.from_matrix(  # type: ignore[return-value]
        ["p", "q", "r"],
        [[0, 1, "3/2"], [1, 0, "1/2"], ["3/2", "1/2", 0]],
    )
