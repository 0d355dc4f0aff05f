import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from faker import Faker

from app.models import Arrow, ExtensionData, Quiver
from app.motive import A2GammaOracle
from app.oracle.probes import ProbeGammaOracle
from app.schemas import QmodConfig
from config import Settings

FIXTURES = Path(__file__).parent / "fixtures"

Faker.seed(20240607)

@pytest.fixture(autouse=True)
def _no_env_budget(monkeypatch):
    """Keeps a developer's QMOD_* environment out of the tests."""
    for name in ("QMOD_BUDGET", "QMOD_SEED", "QMOD_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)

@pytest.fixture
def settings() -> Settings:
    """Settings with defaults only, no .env file."""
    return Settings(_env_file=None)

@pytest.fixture(scope="session")
def config_path() -> Path:
    """The running example: Q = 1 -> 2, T = (k^3 -[1 0 0]-> k)."""
    return FIXTURES / "a2ext.json"

@pytest.fixture(scope="session")
def running_config(config_path: Path) -> QmodConfig:
    return QmodConfig.model_validate(json.loads(config_path.read_text(encoding="utf-8")))

@pytest.fixture(scope="session")
def running_ext(running_config: QmodConfig) -> ExtensionData:
    return running_config.to_extension()

@pytest.fixture(scope="session")
def a2_quiver() -> Quiver:
    return Quiver(vertices=("1", "2"), arrows=(Arrow(name="m", source="1", target="2"),))

@pytest.fixture(scope="session")
def simple_ext(a2_quiver: Quiver) -> ExtensionData:
    """T = S_1 over 1 -> 2."""
    return ExtensionData(quiver=a2_quiver, t=a2_quiver.dim_vector([1, 0]), t_matrices={"m": ()},
                         assume_rigid=True)

@pytest.fixture(scope="session")
def kronecker_config() -> dict:
    """Two arrows 1 -> 2; no symbolic engine applies."""
    return {
        "quiver": {"vertices": ["1", "2"],
                   "arrows": [{"name": "a", "source": "1", "target": "2"},
                              {"name": "b", "source": "1", "target": "2"}]},
        "extension": {"t": [1, 0], "matrices": {"a": [], "b": []}, "assume_rigid": True},
    }

@pytest.fixture(scope="session")
def symbolic_gamma() -> A2GammaOracle:
    return A2GammaOracle()

@pytest.fixture(scope="session")
def probe_gamma() -> ProbeGammaOracle:
    return ProbeGammaOracle(prime=101, trials=8, seed=7)

@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()

@pytest.fixture
def write_config(tmp_path: Path):
    """Writes a config dict to a temporary file and returns its path."""
    def write(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write
