"""One step of the counterterm iteration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..hamiltonian import FrequencyVector, NormParams, weighted_norm
from ..homological import apply_Lw, invert_Lw
from ..small_divisors import DiophParams
from ..torus import CenteredPoly, CounterTerm, extract_counterterm
from .lie import phi_series
from .schedule import KamSchedule

log = logging.getLogger(__name__)


class CounterTermDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class KamSettings:
    """Truncation and series controls shared by every step.

    Beyond the first order of each Lie series, and in the counterterm
    columns, only degrees up to ``tail_degree`` are kept: the discarded parts
    are second order in ``eps`` and of positive degree.
    """

    size_cap: int = 6
    max_degree: int = 2
    tail_degree: int = 0
    lie_order: int = 8
    lie_tol: float = 1e-16
    check_dc: bool = True


@dataclass(frozen=True)
class Smallness:
    eps: float
    theta: float
    parts: dict

    def to_json(self) -> dict:
        return {"eps": self.eps, "theta": self.theta, **self.parts}


def _by_degree(G: CenteredPoly, degree: int, kernel: bool | None = None) -> CenteredPoly:
    mask = G.degrees() == degree
    if kernel is not None:
        ker = G.kernel_mask()
        mask &= ker if kernel else ~ker
    return G.filter(mask)


def _at_least(G: CenteredPoly, degree: int) -> CenteredPoly:
    return G.filter(G.degrees() >= degree)


def measure_smallness(G: CenteredPoly, r: float, p: float, gamma: float) -> Smallness:
    """``eps`` and ``Theta`` of ``G`` at ``(r, p)``; constants carry no norm."""
    norm = NormParams(r, p)
    parts = {
        "zero_kernel": extract_counterterm(_by_degree(G, 0, kernel=True)).norm(),
        "zero_range": weighted_norm(_by_degree(G, 0, kernel=False), norm),
        "minus_two": weighted_norm(_by_degree(G, -2), norm),
        "minus_one": weighted_norm(_by_degree(G, -1), norm),
        "positive": weighted_norm(_at_least(G, 1), norm),
    }
    eps = (parts["zero_kernel"] + parts["zero_range"] + parts["minus_two"] + parts["minus_one"]) / gamma
    return Smallness(eps, parts["positive"] / gamma + eps, parts)


@dataclass
class StepRecord:
    n: int
    r_n: float
    p_n: float
    eps_n: float
    theta_n: float
    lam_n: float
    min_div: float
    m_norm: float
    s_size: float
    column_change: float
    lie_orders: int

    def row(self) -> list:
        return [self.n, self.r_n, self.p_n, self.eps_n, self.theta_n, self.lam_n, self.min_div]


@dataclass
class KamState:
    """``H_n = D(omega) + G_n + (Id + L_n) Lambda_n``.

    ``columns[i]`` holds ``L_n e_i`` for mode index ``i`` (absent means zero),
    ``counterterm`` the sum of the corrections fixed so far.
    """

    n: int
    G: CenteredPoly
    columns: dict[int, CenteredPoly]
    counterterm: CounterTerm
    generators: list[CenteredPoly] = field(default_factory=list)
    lam_bars: list[CounterTerm] = field(default_factory=list)
    records: list[StepRecord] = field(default_factory=list)
    smallness: Smallness | None = None

    @property
    def eps(self) -> float:
        return self.smallness.eps

    @property
    def theta(self) -> float:
        return self.smallness.theta

    @classmethod
    def initial(cls, G0: CenteredPoly, schedule: KamSchedule, gamma: float) -> "KamState":
        return cls(
            0,
            G0,
            {},
            CounterTerm.zero(G0.torus),
            smallness=measure_smallness(G0, schedule.r(0), schedule.p(0), gamma),
        )


def solve_counterterm(M: np.ndarray, rhs: np.ndarray, torus) -> CounterTerm:
    """Solve ``(Id + M) lam = rhs`` directly after checking ``||M||_inf < 1``."""
    M = np.asarray(M, dtype=float)
    norm = float(np.abs(M).sum(axis=1).max()) if M.size else 0.0
    if norm >= 1:
        raise CounterTermDivergence(f"||M||_inf = {norm:.3e} >= 1, the Neumann series diverges")
    if norm > 0.5:
        log.warning("||M||_inf = %.3e exceeds 1/2", norm)
    lam = np.linalg.solve(np.eye(len(rhs)) + M, rhs) if norm > 0 else np.asarray(rhs, dtype=float).copy()
    return CounterTerm(torus, lam)


@dataclass
class _Affine:
    """Pieces of the triangular solve that depend linearly on one column."""

    S2: CenteredPoly
    S1: CenteredPoly
    zero: CenteredPoly


def _triangular(source: CenteredPoly, Gge1: CenteredPoly, invert) -> _Affine:
    """Solve the degree -2 and -1 equations for ``source`` and collect its degree-0 residue."""
    S2 = invert(_by_degree(source, -2))
    B2 = S2.with_caps(max_degree=0).bracket(Gge1) if len(S2) else S2
    S1 = invert(_by_degree(source, -1) + _by_degree(B2, -1))
    B1 = S1.with_caps(max_degree=0).bracket(Gge1) if len(S1) else S1
    zero = _by_degree(source, 0) + _by_degree(B2, 0) + _by_degree(B1, 0)
    return _Affine(S2, S1, zero)


def _combine(polys: list[CenteredPoly], weights, base: CenteredPoly) -> CenteredPoly:
    out = base
    for P, w in zip(polys, weights):
        if w != 0 and len(P):
            out = out + P * float(w)
    return out


def kam_step(
    state: KamState,
    omega: FrequencyVector,
    schedule: KamSchedule,
    params: DiophParams,
    settings: KamSettings | None = None,
) -> KamState:
    """Fix ``S_n`` and the correction ``lam_bar_n``, then conjugate by ``exp({S_n, .})``."""
    settings = settings or KamSettings()
    G = state.G
    torus = G.torus
    n = state.n
    lay = G.layout

    def invert(X):
        return invert_Lw(X, omega, params, settings.check_dc)

    Gge1 = _at_least(G, 1)
    homog = _triangular(G, Gge1, invert)
    modes = sorted(state.columns)
    cols = {i: _triangular(state.columns[i], Gge1, invert) for i in modes}

    M = np.zeros((lay.n, lay.n))
    for i in modes:
        M[:, i] = extract_counterterm(cols[i].zero).lam
    rhs = -extract_counterterm(homog.zero).lam
    lam_bar = solve_counterterm(M, rhs, torus)
    m_norm = float(np.abs(M).sum(axis=1).max())

    w = [lam_bar.lam[i] for i in modes]
    S2 = _combine([cols[i].S2 for i in modes], w, homog.S2)
    S1 = _combine([cols[i].S1 for i in modes], w, homog.S1)
    zero = _combine([cols[i].zero for i in modes], w, homog.zero)
    S0 = invert(zero.filter(~zero.kernel_mask()))
    S = S2 + S1 + S0
    residual_kernel = extract_counterterm(zero).lam + lam_bar.lam
    if np.max(np.abs(residual_kernel), initial=0.0) > 1e-9 * max(1.0, lam_bar.norm()):
        log.warning("counterterm equation residual %.3e", np.max(np.abs(residual_kernel)))

    correction = lam_bar.centered(settings.size_cap, settings.max_degree)
    H_prime = _combine([state.columns[i] for i in modes], w, G + correction)
    S_tail = S.with_caps(max_degree=settings.tail_degree)
    if len(S):
        Y1 = S.bracket(H_prime) - apply_Lw(S, omega)
        series = phi_series(S_tail, Y1, settings.lie_order, settings.lie_tol, scale=H_prime.l1())
        G_next = H_prime + series.result
        orders = series.orders
    else:
        G_next, orders = H_prime, 0

    columns = {}
    change = 0.0
    if len(S):
        for i, mode in enumerate(torus.mode_set.modes):
            first = S_tail.bracket_with_action(mode)
            if i in state.columns:
                first = first + S_tail.bracket(state.columns[i])
            if len(first) == 0:
                if i in state.columns:
                    columns[i] = state.columns[i]
                continue
            delta_col = phi_series(S_tail, first, settings.lie_order, settings.lie_tol, scale=1.0).result
            old = state.columns.get(i)
            columns[i] = delta_col if old is None else old + delta_col
            change = max(change, weighted_norm(delta_col, NormParams(schedule.r(n + 1), schedule.p(n + 1))))
    else:
        columns = dict(state.columns)

    divisors = np.abs(S.divisors(omega)) if len(S) else np.zeros(0)
    record = StepRecord(
        n,
        schedule.r(n),
        schedule.p(n),
        state.eps,
        state.theta,
        lam_bar.norm(),
        float(divisors.min()) if divisors.size else math.inf,
        m_norm,
        S.l1(),
        change,
        orders,
    )
    smallness = measure_smallness(G_next, schedule.r(n + 1), schedule.p(n + 1), params.gamma)
    return replace(
        state,
        n=n + 1,
        G=G_next,
        columns=columns,
        counterterm=state.counterterm + lam_bar,
        generators=state.generators + [S],
        lam_bars=state.lam_bars + [lam_bar],
        records=state.records + [record],
        smallness=smallness,
    )
