"""
Environment-driven defaults for UVDS.

Values are read from the process environment (and a `.env` file if present).
Explicit CLI flags always take precedence over these.
"""
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class Settings(BaseModel):
    log_level: str = "INFO"
    trace_inner: bool = False
    default_seed: int = Field(default=0, ge=0)
    default_k: int = Field(default=10, ge=1)
    cv_repeats: int = Field(default=10, ge=1)
    max_workers: int = Field(default=1, ge=1)


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).lower() == "true"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Build the settings record once per process"""
    return Settings(
        log_level=os.getenv("UVDS_LOG_LEVEL", "INFO"),
        trace_inner=_env_bool("UVDS_TRACE_INNER"),
        default_seed=int(os.getenv("UVDS_DEFAULT_SEED", "0")),
        default_k=int(os.getenv("UVDS_DEFAULT_K", "10")),
        cv_repeats=int(os.getenv("UVDS_CV_REPEATS", "10")),
        max_workers=int(os.getenv("UVDS_MAX_WORKERS", "1")),
    )
