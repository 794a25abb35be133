"""Radius and regularity schedules of the iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass

CHI = 1.5


@dataclass(frozen=True)
class KamSchedule:
    """Budgets ``r0, rho, p0, delta`` and the per-step sequences built from them.

    ``rho_n = (rho/6) 2^-n``, ``delta_0 = delta/8``, ``delta_n = 9 delta/(4 pi^2 n^2)``.
    The raw sequence sums to ``sum 3 delta_n = 3 delta/2``; with
    ``normalize_delta`` every ``delta_n`` is scaled by ``2/3`` so that
    ``p_n`` climbs to exactly ``p0 + delta``.
    """

    r0: float = 1.0
    rho: float = 0.5
    p0: float = 2.0
    delta: float = 1.0
    normalize_delta: bool = True

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if not 0 < self.rho <= self.r0 / 2:
            raise ValueError(f"rho={self.rho} must lie in (0, r0/2] with r0={self.r0}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def chi(self) -> float:
        return CHI

    @property
    def torus_radius(self) -> float:
        """Largest admissible torus radius ``r0 / (2 sqrt 2)``."""
        return self.r0 / (2 * math.sqrt(2))

    def rho_n(self, n: int) -> float:
        return self.rho / 6 * 2.0**-n

    def delta_n(self, n: int) -> float:
        raw = self.delta / 8 if n == 0 else 9 * self.delta / (4 * math.pi**2 * n * n)
        return raw * (2 / 3 if self.normalize_delta else 1.0)

    def r(self, n: int) -> float:
        """``r_n = r0 - 3 sum_{k<n} rho_k = r0 - rho (1 - 2^-n)``."""
        return self.r0 - self.rho * (1 - 2.0**-n)

    def p(self, n: int) -> float:
        return self.p0 + 3 * sum(self.delta_n(k) for k in range(n))

    @property
    def r_inf(self) -> float:
        return self.r0 - self.rho

    @property
    def p_inf(self) -> float:
        total = self.delta / 8 + 9 * self.delta / (4 * math.pi**2) * math.pi**2 / 6
        return self.p0 + 3 * total * (2 / 3 if self.normalize_delta else 1.0)

    def to_json(self) -> dict:
        return {
            "r0": self.r0,
            "rho": self.rho,
            "p0": self.p0,
            "delta": self.delta,
            "normalize_delta": self.normalize_delta,
        }
