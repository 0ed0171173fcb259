from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class ToleranceConfig(BaseModel):
    """Numeric tolerances shared by every matrix computation."""

    model_config = ConfigDict(frozen=True)

    rank_rtol: float = Field(default=1e-10, gt=0, lt=1)
    residual_tol: float = Field(default=1e-8, gt=0)
    quadrature_tol: float = Field(default=1e-10, gt=0)

    def cluster_gap(self, scale: float) -> float:
        # eigenvalues closer than this belong to one single-linkage group
        return 10.0 * self.rank_rtol * scale


class Settings(BaseSettings):
    # Project
    PROJECT_NAME: str = "gzspec"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "WARNING"

    # Tolerance profile, selected by environment
    GZSPEC_TOL_PROFILE: Literal["default", "strict"] = "default"

    RANK_RTOL: float = Field(default=1e-10, gt=0, lt=1)
    RESIDUAL_TOL: float = Field(default=1e-8, gt=0)
    QUADRATURE_TOL: float = Field(default=1e-10, gt=0)
    CONDITION_LIMIT: float = Field(default=1e12, gt=1)

    # Contour quadrature
    CONTOUR_INITIAL_NODES: int = Field(default=32, ge=4)
    CONTOUR_MAX_NODES: int = Field(default=4096, ge=8)
    CONTOUR_CLEARANCE: float = Field(default=1e-3, gt=0, lt=1)

    # Exact spectral sets
    MAX_BOUNDARY_MOVES: int = Field(default=64, ge=0)
    MEMBERSHIP_SEARCH_LIMIT: int = Field(default=200_000, ge=1)
    RATIONALIZE_MAX_DENOMINATOR: int = Field(default=10**6, ge=1)

    # Verify suites
    VERIFY_TRUNCATION: int = Field(default=8, ge=1)
    VERIFY_SAMPLES: int = Field(default=8, ge=1)
    RANDOM_SEED: int = 20240229
    MAX_WORKERS: int = Field(default=4, ge=1)

    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")

    @field_validator("LOG_LEVEL")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return level

    @model_validator(mode="after")
    def check_node_budget(self) -> "Settings":
        if self.CONTOUR_MAX_NODES < self.CONTOUR_INITIAL_NODES:
            raise ValueError("CONTOUR_MAX_NODES must be at least CONTOUR_INITIAL_NODES")
        return self

    def tolerances(
        self,
        profile: str | None = None,
        rank_rtol: float | None = None,
        residual_tol: float | None = None,
    ) -> ToleranceConfig:
        profile = profile or self.GZSPEC_TOL_PROFILE
        scale = 1e-2 if profile == "strict" else 1.0
        return ToleranceConfig(
            rank_rtol=rank_rtol if rank_rtol is not None else self.RANK_RTOL * scale,
            residual_tol=residual_tol if residual_tol is not None else self.RESIDUAL_TOL * scale,
            quadrature_tol=self.QUADRATURE_TOL * scale,
        )


settings = Settings()
