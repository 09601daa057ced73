"""Library configuration using pydantic settings."""
from __future__ import annotations

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Central numeric tolerances and defaults.

    Every value can be overridden with an ``HMMFRAG_``-prefixed environment
    variable or a ``.env`` file.
    """

    model_config = SettingsConfigDict(env_file=".env", env_prefix="HMMFRAG_")

    log_level: str = "WARNING"

    row_sum_tol: float = 1e-9
    row_sum_repair_tol: float = 1e-5
    stationary_rank_tol: float = 1e-8
    kronecker_max_entries: int = 1_000_000

    eigen_tol: float = 1e-12
    eigen_max_iters: int = 10_000

    verify_operators: bool = True
    operator_check_tol: float = 1e-12
    negative_variance_tol: float = 1e-14

    sparsity_warning_ratio: float = 0.1
    p_value_floor: float = 1e-300

    fit_max_iters: int = 1000
    fit_tol: float = 1e-6


settings = Settings()
