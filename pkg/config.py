from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    """
    Engine settings, loaded from QMOD_* environment variables or a .env file.
    """
    BUDGET: int = Field(10**8, ge=1, description="Maximum number of candidate points an enumeration may visit")
    SEED: int = Field(20240607, description="Default seed for every randomized probe")
    PROBE_PRIME: int = Field(101, ge=2, description="Prime used for genericity probes")
    PROBE_TRIALS: int = Field(8, ge=1, description="Random samples drawn by genericity probes")
    CENSUS_PRIMES: List[int] = Field(default_factory=lambda: [2, 3], description="Primes used for exact point counts")
    LOG_LEVEL: str = Field("WARNING", description="Root logging level for the CLI")

    model_config = SettingsConfigDict(env_prefix="QMOD_", env_file=".env", extra="ignore")

    def budget_is_pinned(self) -> bool:
        """True when QMOD_BUDGET was given explicitly and must win over config files."""
        return "BUDGET" in self.model_fields_set

settings = Settings()
