"""Seeds, the n-step loop, decay fits and the flow-based conjugacy audit."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..hamiltonian import (
    FrequencyVector,
    HamiltonianPoly,
    NonlinearityModel,
    PolyEvaluator,
    build_nls,
    diagonal,
)
from ..small_divisors import DiophParams, ResonanceBudget, verify_dc
from ..torus import CenteredPoly, CounterTerm, TorusData, to_centered, to_plain
from .schedule import KamSchedule
from .step import KamSettings, KamState, kam_step, measure_smallness

log = logging.getLogger(__name__)

CSV_HEADER = ("n", "r_n", "p_n", "eps_n", "theta_n", "lam_n", "min_div")


def draw_frequencies(
    mode_set, params: DiophParams, budget: ResonanceBudget, seed: int, max_tries: int = 100
) -> tuple[FrequencyVector, dict[int, float]]:
    """Random ``nu`` in the tangential box and ``W`` in ``[-1/4, 1/4]`` with ``W_0 != 0``, kept once Diophantine."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        nu = {j: float(rng.uniform(-0.5, 0.5)) for j in mode_set.tangential}
        W = {j: float(rng.uniform(-0.25, 0.25)) for j in mode_set.normal}
        if W.get(0, 1.0) == 0.0:
            continue
        omega = FrequencyVector.from_offsets(mode_set, {**nu, **W})
        if verify_dc(omega, params, budget).ok:
            return omega, W
    raise RuntimeError(f"no Diophantine frequency found in {max_tries} draws")


@dataclass(frozen=True)
class NlsSeed:
    """An NLS perturbation centered at a power-law torus, scaled to a target ``eps0``."""

    omega: FrequencyVector
    W: dict
    torus: TorusData
    model: NonlinearityModel
    nonlinearity: HamiltonianPoly
    G0: CenteredPoly
    scale: float

    @property
    def eps_target(self) -> float:
        return self.scale


def nls_seed(
    schedule: KamSchedule,
    params: DiophParams,
    budget: ResonanceBudget,
    eps0: float = 1e-4,
    coeffs=(1.0,),
    seed: int = 0,
    settings: KamSettings | None = None,
    torus_radius: float | None = None,
    omega: FrequencyVector | None = None,
    W: dict | None = None,
    torus: TorusData | None = None,
) -> NlsSeed:
    """Build ``G_0`` from ``mean F(|u|^2)`` with ``f`` rescaled so that ``eps_0`` equals ``eps0``.

    The torus defaults to the power law of radius ``torus_radius`` (or the
    schedule's) in the limiting weight ``p_inf``.
    """
    settings = settings or KamSettings()
    ms = budget.mode_set
    if omega is None:
        omega, W = draw_frequencies(ms, params, budget, seed)
    if torus is None:
        radius = schedule.torus_radius if torus_radius is None else torus_radius
        torus = TorusData.power_law(ms, radius, schedule.p_inf)
    model = NonlinearityModel(tuple(coeffs))
    cap = max(4, 2 * (len(model.coeffs) + 1))
    full = build_nls(model, None, ms, degree_cap=cap)
    P = full.filter(full.degrees() > 2)
    G_unit = to_centered(P, torus, settings.size_cap, settings.max_degree)
    eps_unit = measure_smallness(G_unit, schedule.r(0), schedule.p(0), params.gamma).eps
    if eps_unit == 0:
        raise ValueError("the nonlinearity has no degree <= 0 part at this torus")
    factor = eps0 / eps_unit
    return NlsSeed(omega, dict(W or {}), torus, model.scaled(factor), P * factor, G_unit * factor, factor)


@dataclass
class PipelineResult:
    """Normal form ``N = D(omega) + G_n``, the generators ``S_i`` and the total counterterm."""

    state: KamState
    omega: FrequencyVector
    schedule: KamSchedule
    params: DiophParams
    final_smallness: dict
    converged: bool
    elapsed: float
    frequency_map: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def normal_form(self) -> CenteredPoly:
        return self.state.G

    @property
    def generators(self) -> list[CenteredPoly]:
        return self.state.generators

    @property
    def counterterm(self) -> CounterTerm:
        return self.state.counterterm

    def table(self) -> list[list]:
        """Convergence rows, closed by the final ``eps`` and ``Theta``."""
        rows = [rec.row() for rec in self.state.records]
        n = self.state.n
        rows.append(
            [
                n,
                self.schedule.r(n),
                self.schedule.p(n),
                self.state.eps,
                self.state.theta,
                0.0,
                math.nan,
            ]
        )
        return rows

    @property
    def eps_history(self) -> list[float]:
        return [rec.eps_n for rec in self.state.records] + [self.state.eps]

    def normal_form_plain(self) -> HamiltonianPoly:
        return diagonal(self.omega, self.state.G.size_cap) + to_plain(self.state.G)


def run_kam(
    G0: CenteredPoly,
    omega: FrequencyVector,
    schedule: KamSchedule,
    params: DiophParams,
    n_steps: int = 4,
    settings: KamSettings | None = None,
    floor: float = 1e-13,
) -> PipelineResult:
    """Iterate ``kam_step`` up to ``n_steps`` times or until ``eps`` drops below ``floor``."""
    settings = settings or KamSettings()
    start = time.perf_counter()
    state = KamState.initial(G0, schedule, params.gamma)
    for _ in range(n_steps):
        if state.eps < floor:
            break
        state = kam_step(state, omega, schedule, params, settings)
        log.info("step %d: eps=%.3e theta=%.3e", state.n, state.eps, state.theta)
    return PipelineResult(
        state,
        omega,
        schedule,
        params,
        state.smallness.to_json(),
        state.eps < floor or state.n == n_steps,
        time.perf_counter() - start,
    )


# decay audits


def decay_exponents(eps: list[float], floor: float = 1e-13) -> list[float]:
    """``log eps_{n+1} / log eps_n`` for consecutive steps that both sit above the floor."""
    out = []
    for a, b in zip(eps, eps[1:]):
        if a >= 1 or b <= floor:
            break
        out.append(math.log(b) / math.log(a))
    return out


def fit_decay_offset(eps: list[float], chi: float = 1.5, floor: float = 1e-13) -> float:
    """Smallest ``C`` with ``log eps_{n+1} <= chi log eps_n + C`` along the run."""
    c = -math.inf
    for a, b in zip(eps, eps[1:]):
        if a <= floor:
            break
        c = max(c, math.log(max(b, floor)) - chi * math.log(a))
    return c


def fit_counterterm_constant(result: PipelineResult) -> float:
    """Smallest ``K`` with ``||lam_bar_n|| <= K gamma eps_n (1 + Theta_0)^2``."""
    recs = result.state.records
    if not recs:
        return 0.0
    theta0 = recs[0].theta_n
    g = result.params.gamma
    return max(r.lam_n / (g * r.eps_n * (1 + theta0) ** 2) for r in recs if r.eps_n > 0)


def fit_quadratic_constant(result: PipelineResult) -> float:
    """Largest ``eps_{n+1} / (eps_n^2 (1 + Theta_0)^5)`` along the run."""
    eps = result.eps_history
    recs = result.state.records
    if not recs:
        return 0.0
    theta0 = recs[0].theta_n
    return max(b / (a * a * (1 + theta0) ** 5) for a, b in zip(eps, eps[1:]) if a > 0)


# conjugacy audit by direct flow integration


def _flow_rhs(evaluator: PolyEvaluator, n_points: int, n_modes: int):
    def rhs(_t, y):
        u = y.view(complex).reshape(n_points, n_modes)
        _, _, dub = evaluator(u)
        return (1j * dub).reshape(-1).view(float)

    return rhs


def flow(S: HamiltonianPoly, points: np.ndarray, rtol: float = 1e-13, atol: float = 1e-15) -> np.ndarray:
    """Time-1 map of ``du/dt = i dS/dū`` applied to each row of ``points``."""
    if len(S) == 0:
        return points.copy()
    pts = np.ascontiguousarray(points, dtype=complex)
    n_points, n_modes = pts.shape
    ev = PolyEvaluator(S)
    sol = solve_ivp(
        _flow_rhs(ev, n_points, n_modes),
        (0.0, 1.0),
        pts.reshape(-1).view(float).copy(),
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"flow integration failed: {sol.message}")
    return sol.y[:, -1].copy().view(complex).reshape(n_points, n_modes)


def ball_points(mode_set, radius: float, p: float, n_points: int, seed: int) -> np.ndarray:
    """Random points with ``|u_j| <= radius <<j>>^-p``."""
    from ..hamiltonian import weight_bracket

    rng = np.random.default_rng(seed)
    w = radius * weight_bracket(mode_set.modes) ** (-p)
    mag = w[None, :] * rng.uniform(0, 1, size=(n_points, len(w)))
    return mag * np.exp(2j * np.pi * rng.uniform(size=(n_points, len(w))))


@dataclass(frozen=True)
class ConjugacyReport:
    """``scale`` is ``max |N|`` over the points, ``perturbation`` is ``max |N - D(omega)|``."""

    max_error: float
    scale: float
    n_points: int
    perturbation: float = 0.0

    @property
    def relative(self) -> float:
        return self.max_error / self.scale if self.scale > 0 else 0.0

    @property
    def relative_to_perturbation(self) -> float:
        return self.max_error / self.perturbation if self.perturbation > 0 else 0.0

    def to_json(self) -> dict:
        return {
            "max_error": self.max_error,
            "scale": self.scale,
            "relative": self.relative,
            "perturbation": self.perturbation,
            "relative_to_perturbation": self.relative_to_perturbation,
            "n_points": self.n_points,
        }


def conjugacy_audit(
    result: PipelineResult,
    original: HamiltonianPoly,
    n_points: int = 10,
    seed: int = 0,
    radius: float | None = None,
) -> ConjugacyReport:
    """Compare ``(Lambda + H)(Psi(u))`` with ``N(u)`` where ``Psi`` comes from integrating each ``S_i``.

    ``original`` is the plain ``H - D(omega)``; points are drawn in the ball
    of half the final radius.
    """
    sched = result.schedule
    ms = result.omega.mode_set
    n = result.state.n
    radius = sched.r(n) / 2 if radius is None else radius
    pts = ball_points(ms, radius, sched.p(n), n_points, seed)
    moved = pts
    for S in reversed(result.generators):
        moved = flow(to_plain(S), moved)
    cap = max(original.degree_cap, result.state.G.size_cap)
    H = diagonal(result.omega, cap) + original + result.counterterm.hamiltonian(cap)
    N = result.normal_form_plain()
    lhs = PolyEvaluator(H)(moved, gradient=False)[0]
    rhs = PolyEvaluator(N)(pts, gradient=False)[0]
    pert = PolyEvaluator(to_plain(result.state.G))(pts, gradient=False)[0]
    err = float(np.max(np.abs(lhs - rhs)))
    scale = float(np.max(np.abs(rhs)))
    return ConjugacyReport(err, scale, n_points, float(np.max(np.abs(pert))))
