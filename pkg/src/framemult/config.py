"""Numerical tolerances shared across modules."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

ORACLE_CAP_ENV = "FRAMEMULT_ORACLE_CAP"


@dataclass(frozen=True)
class Tolerances:
    tol_lin: float = 1e-9
    tol_inv: float = 1e-9
    # None -> 1e-8 * sqrt(d), resolved per call by dual_tol()
    tol_dual: float | None = None
    tol_sign: float = 1e-12
    oracle_dim_cap: int = 512
    growth_factor: float = 8.0
    power_tol: float = 1e-12
    power_max_iters: int = 20000

    def __post_init__(self):
        for name in ("tol_lin", "tol_inv", "tol_sign", "growth_factor", "power_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.tol_dual is not None and not self.tol_dual > 0:
            raise ValueError("tol_dual must be positive")
        if self.oracle_dim_cap < 1:
            raise ValueError("oracle_dim_cap must be >= 1")

    def dual_tol(self, d: int) -> float:
        if self.tol_dual is not None:
            return self.tol_dual
        return 1e-8 * math.sqrt(d)

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


def _from_env() -> Tolerances:
    cap = os.environ.get(ORACLE_CAP_ENV)
    if cap:
        return Tolerances(oracle_dim_cap=int(cap))
    return Tolerances()


DEFAULT_TOLERANCES = _from_env()


def oracle_dim_cap() -> int:
    """Current oracle cap; the environment variable wins over the default."""
    cap = os.environ.get(ORACLE_CAP_ENV)
    return int(cap) if cap else DEFAULT_TOLERANCES.oracle_dim_cap
