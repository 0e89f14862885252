from __future__ import annotations

import json
from pathlib import Path

import pytest

from longdisp.config import ConstructionConfig
from longdisp.engine import Engine, RunResult, State

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load_config(name: str, **overrides) -> ConstructionConfig:
    obj = json.loads((CONFIGS / f"{name}.json").read_text())
    obj.update(overrides)
    return ConstructionConfig.from_json(obj)


def run(cfg: ConstructionConfig, out_dir: Path | None = None) -> tuple[Engine, RunResult]:
    cfg.validate()
    engine = Engine.from_config(cfg)
    return engine, engine.run(None if out_dir is None else str(out_dir))


@pytest.fixture(scope="session")
def euclid(tmp_path_factory):
    """The Euclidean demo: theta = pi/4, delta = 0.3, I = [1/2, 3/5], six steps."""
    out = tmp_path_factory.mktemp("euclid")
    engine, result = run(load_config("euclidean_demo"), out)
    return engine, result, out


@pytest.fixture(scope="session")
def maximum(tmp_path_factory):
    out = tmp_path_factory.mktemp("maximum")
    engine, result = run(load_config("maximum_demo"), out)
    return engine, result, out


@pytest.fixture(scope="session")
def congruence(tmp_path_factory):
    out = tmp_path_factory.mktemp("m5")
    engine, result = run(load_config("congruence_m5"), out)
    return engine, result, out


@pytest.fixture(scope="session")
def rising():
    return run(load_config("rising"))


@pytest.fixture(scope="session")
def frames(euclid, maximum):
    """Frames of both signs at every step of the two demo runs."""
    out = []
    for engine, result, _ in (euclid, maximum):
        st = result.state
        for n in range(1, st.n + 1):
            prefix = State(st.ws[: n + 2])
            for sign in (1, -1):
                out.append((engine, prefix, engine.frame_for(prefix, sign)))
    return out
