from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix HLSP_)."""

    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"

    admm_max_iters: int = Field(default=50_000, ge=1)
    admm_chi: float = Field(default=1e-6, gt=0)
    ipm_max_iters: int = Field(default=200, ge=1)
    ipm_chi: float = Field(default=1e-8, gt=0)
    rank_tol: float = Field(default=1e-10, gt=0)

    output_dir: str = "results"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="HLSP_",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
