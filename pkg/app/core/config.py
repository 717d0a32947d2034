from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Parallelism cap for per-sample work (env JFORGE_THREADS)
    THREADS: int = 4

    # Pass/fail threshold for numeric residuals
    TOL: float = 1e-6
    SEED: int = 0

    # Primitive decomposition: largest allowed time subdivision (2^10)
    MAX_STEPS: int = 1024

    # Numeric flow settings
    GRID_NODES: int = 5
    RK_STEP: float = 1e-3
    FD_STEP: float = 1e-5
    CONTACT_TOL: float = 1e-9
    RANK_TOL: float = 1e-9
    EPSILON: float = 0.5
    PLATEAU_INNER: float = 0.1
    PLATEAU_OUTER: float = 0.4

    # Random exact samples drawn when a task lists none
    SAMPLE_COUNT: int = 8

    LOG_LEVEL: str = "WARNING"
    DEBUG: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="JFORGE_",
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
