"""
BNSL - Configuration
Environment defaults, numeric tolerances and validated parameter objects.
"""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, field_validator

# Load environment variables
load_dotenv()

# Simplex tolerances
FEAS_TOL = 1e-6
OPT_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-9
BLAND_AFTER = 1000
REFACTOR_EVERY = 100
MAX_PIVOTS = 200_000

# Separation
VIOL_TOL = 1e-6
MAX_CLUSTER_CUTS = 50
MAX_CONVEX4B_CUTS = 20
MAX_GOMORY_CUTS = 10
GOMORY_MIN_FRAC = 0.01

# Search
GAP_TOL = 1e-9
ROOT_CUT_ROUNDS = 30
NODE_CUT_ROUNDS = 5
TAILING_OFF = 1e-4


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    return int(value)


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    return float(value)


DEFAULT_PALIM = _env_int("BNSL_PALIM", 3)
DEFAULT_ESS = _env_float("BNSL_ESS", 1.0)
DEFAULT_TIME_LIMIT = _env_float("BNSL_TIME_LIMIT", 7200.0)
DEFAULT_NODE_LIMIT = _env_int("BNSL_NODE_LIMIT", None)
DEFAULT_WORKERS = _env_int("BNSL_WORKERS", 1)
DEFAULT_LOG_LEVEL = os.getenv("BNSL_LOG_LEVEL", "WARNING")


class SolverParams(BaseModel):
    """Limits and feature toggles for branch-and-cut."""
    time_limit: float = DEFAULT_TIME_LIMIT
    node_limit: Optional[int] = DEFAULT_NODE_LIMIT
    set_packing: bool = True
    sink_heuristic: bool = True
    propagation: bool = True
    gomory: bool = True
    convex4b: bool = False
    static_convex4b: bool = False
    audit: bool = False
    progress_interval: float = 5.0

    @field_validator('time_limit')
    @classmethod
    def validate_time_limit(cls, v):
        if v <= 0:
            raise ValueError('Time limit must be positive')
        return v

    @field_validator('node_limit')
    @classmethod
    def validate_node_limit(cls, v):
        if v is not None and v < 1:
            raise ValueError('Node limit must be at least 1')
        return v
