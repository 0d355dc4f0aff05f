import json
import logging
from pathlib import Path
from typing import Dict, Union

from pydantic import ValidationError

from app.exceptions import ConfigError
from app.schemas import QmodConfig

logger = logging.getLogger(__name__)

class ConfigRepository:
    """
    Handles the JSON documents the CLI reads: the config file and
    user-supplied Rep^full tables.
    """
    def __init__(self, path: Union[str, Path, None] = None):
        self.path = Path(path) if path is not None else None

    def _read_json(self, path: Path):
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e.strerror or e}")
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e.msg} at line {e.lineno}")

    def load(self) -> QmodConfig:
        """
        Reads and validates the config document. Schema violations surface
        as pydantic's ValidationError; a quiver that fails its own
        invariants is reported as a ConfigError.
        """
        if self.path is None:
            raise ConfigError("a config file is required: pass --quiver")
        config = QmodConfig.model_validate(self._read_json(self.path))
        try:
            config.to_extension()
        except ValidationError as e:
            raise ConfigError(f"{self.path}: {e.errors()[0]['msg']}")
        logger.info("loaded %s (%d vertices, %d arrows)", self.path,
                    len(config.quiver.vertices), len(config.quiver.arrows))
        return config

    def load_table(self, path: Union[str, Path]) -> Dict[str, str]:
        """A Rep^full table: a JSON object mapping "s:d1,d2,..." to a motive expression."""
        data = self._read_json(Path(path))
        if not isinstance(data, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in data.items()):
            raise ConfigError(f"{path} must map dimension types to motive expressions")
        return data
