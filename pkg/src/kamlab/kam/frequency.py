"""Normal frequencies ``Omega(nu)`` and the potential ``V`` that realizes them."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from ..hamiltonian import FrequencyVector
from ..indices import ModeSet
from ..small_divisors import DiophParams
from ..torus import CenteredPoly, CounterTerm
from .pipeline import PipelineResult, run_kam
from .schedule import KamSchedule
from .step import KamSettings


class FrequencyMapDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class FrequencyMap:
    """Fixed point ``Omega_j + lam_j(nu, Omega) = j^2 + W_j`` on normal modes."""

    omega: FrequencyVector
    V: dict[int, float]
    iterations: int
    residual: float
    steps: tuple[float, ...]

    def shift(self, W: Mapping[int, float]) -> dict[int, float]:
        """``Omega_j - j^2 - W_j`` per normal mode."""
        ms = self.omega.mode_set
        return {j: self.omega[j] - j * j - W.get(j, 0.0) for j in ms.normal}

    def fit_constant(self, W: Mapping[int, float], gamma: float, eps: float) -> float:
        """Smallest ``C`` with ``|Omega_j - j^2 - W_j| <= C gamma eps`` for every normal ``j``."""
        worst = max((abs(v) for v in self.shift(W).values()), default=0.0)
        return worst / (gamma * eps) if eps > 0 else 0.0

    def to_json(self) -> dict:
        return {
            "omega": self.omega.to_json(),
            "V": {str(j): v for j, v in sorted(self.V.items())},
            "iterations": self.iterations,
            "residual": self.residual,
        }


def solve_frequency_map(
    lam: Callable[[FrequencyVector], CounterTerm],
    nu: Mapping[int, float],
    W: Mapping[int, float],
    mode_set: ModeSet,
    tol: float = 1e-12,
    max_iter: int = 20,
) -> FrequencyMap:
    """Iterate ``Omega <- j^2 + W_j - lam_j(nu, Omega)`` until the update is below ``tol``.

    ``nu`` holds the full tangential frequencies. On tangential modes
    ``V_j = nu_j + lam_j - j^2``; on normal modes ``V_j = W_j``.
    """
    missing = set(mode_set.tangential) - set(nu)
    if missing:
        raise ValueError(f"nu is missing tangential modes {sorted(missing)}")
    modes = np.array(mode_set.modes, dtype=float)
    normal = np.array([mode_set.index[j] for j in mode_set.normal], dtype=int)
    base = modes**2
    for j in mode_set.normal:
        base[mode_set.index[j]] += W.get(j, 0.0)
    for j in mode_set.tangential:
        base[mode_set.index[j]] = nu[j]
    values = base.copy()
    steps: list[float] = []
    for it in range(1, max_iter + 1):
        shift = lam(FrequencyVector(mode_set, values)).lam
        new = values.copy()
        new[normal] = base[normal] - shift[normal]
        step = float(np.max(np.abs(new - values), initial=0.0))
        steps.append(step)
        values = new
        if step <= tol:
            break
        if len(steps) >= 3 and steps[-1] >= steps[-2]:
            raise FrequencyMapDivergence(f"fixed-point updates stopped shrinking: {steps}")
    else:
        raise FrequencyMapDivergence(f"no convergence in {max_iter} iterations: {steps}")
    omega = FrequencyVector(mode_set, values)
    final = lam(omega).lam
    V = {j: float(W.get(j, 0.0)) for j in mode_set.normal}
    for j in mode_set.tangential:
        V[j] = float(nu[j] + final[mode_set.index[j]] - j * j)
    residual = float(np.max(np.abs(values[normal] + final[normal] - base[normal]), initial=0.0))
    return FrequencyMap(omega, V, it, residual, tuple(steps))


class CountertermMap:
    """``omega -> Lambda(omega)`` through full KAM runs on a fixed ``G_0``, cached per frequency vector."""

    def __init__(
        self,
        G0: CenteredPoly,
        schedule: KamSchedule,
        params: DiophParams,
        n_steps: int = 4,
        settings: KamSettings | None = None,
    ):
        self.G0 = G0
        self.schedule = schedule
        self.params = params
        self.n_steps = n_steps
        self.settings = settings
        self.runs: dict[bytes, PipelineResult] = {}

    def seed(self, result: PipelineResult) -> None:
        """Reuse an existing run at its frequency vector."""
        self.runs[result.omega.values.tobytes()] = result

    def run(self, omega: FrequencyVector) -> PipelineResult:
        key = omega.values.tobytes()
        if key not in self.runs:
            self.runs[key] = run_kam(self.G0, omega, self.schedule, self.params, self.n_steps, self.settings)
        return self.runs[key]

    def __call__(self, omega: FrequencyVector) -> CounterTerm:
        return self.run(omega).counterterm
