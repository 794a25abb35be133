"""Diophantine weights, resonance enumeration, the K0 audit and measure estimates."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hamiltonian import FrequencyVector, weight_bracket
from .indices import Entries, ModeSet, MultiIndex, SignedIndexVector


@dataclass(frozen=True)
class DiophParams:
    """Diophantine constants ``gamma`` and ``tau``.

    ``bracket`` selects ``<x> = max(1, |x|)`` (``"max"``) or ``sqrt(1 + x^2)`` (``"sqrt"``).
    """

    gamma: float = 0.01
    tau: float = 2.0
    bracket: str = "max"

    def __post_init__(self):
        if not 0 < self.gamma <= 0.5:
            raise ValueError("gamma must lie in (0, 1/2]")
        if self.tau < 1.5:
            raise ValueError("tau must be at least 3/2")
        if self.bracket not in ("max", "sqrt"):
            raise ValueError("bracket must be 'max' or 'sqrt'")

    def angle(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return np.maximum(1.0, x) if self.bracket == "max" else np.sqrt(1.0 + x * x)

    def tangential_factor(self, mode_set: ModeSet) -> np.ndarray:
        """``<log2 j>^2`` for each tangential mode."""
        return self.angle(np.log2(np.array(mode_set.tangential, dtype=float))) ** 2


@dataclass(frozen=True)
class ResonanceBudget:
    mode_set: ModeSet = field(default_factory=ModeSet)
    l_max: int = 8
    normal_cap: int = 2

    def __post_init__(self):
        if self.normal_cap != 2:
            raise ValueError("the resonance constraint fixes at most two normal sites")


def _tangential_vector(ell: SignedIndexVector, mode_set: ModeSet) -> np.ndarray:
    return np.array([ell[j] for j in mode_set.tangential], dtype=float)


def dioph_weight(ell: Entries, params: DiophParams, mode_set: ModeSet | None = None) -> float:
    """``gamma * prod_{j in S} (1 + l_j^2 <log2 j>^2)^(-tau)``."""
    ell = SignedIndexVector(ell)
    if not ell:
        raise ValueError("the zero vector has no Diophantine weight")
    mode_set = mode_set or ModeSet()
    k = _tangential_vector(ell, mode_set)
    return float(params.gamma * np.prod((1 + k * k * params.tangential_factor(mode_set)) ** (-params.tau)))


def dioph_weights(k: np.ndarray, params: DiophParams, mode_set: ModeSet) -> np.ndarray:
    """Vectorized weights from tangential parts ``k`` of shape ``(N, nt)``."""
    fac = params.tangential_factor(mode_set)
    k = np.asarray(k, dtype=float)
    return params.gamma * np.prod((1 + k * k * fac) ** (-params.tau), axis=1)


# enumeration


@dataclass(frozen=True)
class ResonanceSet:
    """All ``l = k + s1 e_j1 + s2 e_j2`` in a budget that pass a moment filter.

    ``ells`` holds the vectors as dense rows over the mode set. ``ks`` lists
    the tangential parts and ``k_index`` points each vector at its part;
    ``normal`` holds ``(s1, j1, s2, j2)`` with ``s = 0`` for an absent site.
    """

    budget: ResonanceBudget
    moment_filter: str
    ells: np.ndarray
    ks: np.ndarray
    k_index: np.ndarray
    normal: np.ndarray
    completions_per_k: np.ndarray
    truncated_by_m: int

    def __len__(self) -> int:
        return self.ells.shape[0]

    @property
    def norm1(self) -> np.ndarray:
        return np.abs(self.ells).sum(axis=1)

    @property
    def tangential_parts(self) -> np.ndarray:
        return self.ks[self.k_index]

    def vectors(self):
        modes = self.budget.mode_set.modes
        for row in self.ells:
            yield SignedIndexVector((modes[i], int(row[i])) for i in np.flatnonzero(row))

    def recombine(self) -> np.ndarray:
        """Rebuild dense rows from the tangential part and normal sites."""
        ms = self.budget.mode_set
        out = np.zeros_like(self.ells)
        tan_idx = [ms.index[j] for j in ms.tangential]
        out[:, tan_idx] = self.ks[self.k_index]
        for col_s, col_j in ((0, 1), (2, 3)):
            s = self.normal[:, col_s]
            has = np.flatnonzero(s)
            np.add.at(out, (has, [ms.index[int(j)] for j in self.normal[has, col_j]]), s[has])
        return out


_FILTERS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    # |d(l)| < |l|, the measure-estimate filter
    "strict": lambda d, n1: np.abs(d) < n1,
    # |d(l)| <= 2|l|, the constraint of the K0 supremum
    "k0": lambda d, n1: np.abs(d) <= 2 * n1,
    "none": lambda d, n1: np.ones_like(d, dtype=bool),
}


def _tangential_parts(nt: int, l_max: int) -> np.ndarray:
    rng = np.arange(-l_max, l_max + 1)
    grid = np.array(np.meshgrid(*([rng] * nt), indexing="ij")).reshape(nt, -1).T if nt else np.zeros((1, 0), int)
    grid = grid[np.abs(grid).sum(axis=1) <= l_max]
    order = np.lexsort(grid.T[::-1]) if nt else np.arange(1)
    return grid[order]


@lru_cache(maxsize=16)
def resonance_set(budget: ResonanceBudget, moment_filter: str = "strict") -> ResonanceSet:
    """Exhaustive enumeration of the resonance vectors of a budget."""
    if moment_filter not in _FILTERS:
        raise ValueError(f"unknown moment filter {moment_filter!r}")
    keep_moment = _FILTERS[moment_filter]
    ms = budget.mode_set
    L = budget.l_max
    tang = np.array(ms.tangential, dtype=np.int64)
    ks = _tangential_parts(len(tang), L)
    k1 = np.abs(ks).sum(axis=1)
    km = ks.sum(axis=1)
    kp = ks @ tang
    kd = ks @ (tang * tang)
    normal_set = set(ms.normal)
    # search normal sites beyond M so that the truncation effect can be counted
    reach = int(math.isqrt(int(np.abs(kd).max(initial=0)) + 3 * L)) + 2
    span = max(reach, ms.m)
    wide = [j for j in range(-span, span + 1) if j not in ms.tangential]
    wide_set = set(wide)
    rows_k, rows_n = [], []
    truncated = 0
    counts = np.zeros(len(ks), dtype=np.int64)

    def accept(ki, s1, j1, s2, j2):
        nonlocal truncated
        n1 = k1[ki] + abs(s1) + abs(s2)
        if n1 == 0 or n1 > L:
            return
        d = kd[ki] + s1 * j1 * j1 + s2 * j2 * j2
        if not keep_moment(np.array(d), np.array(n1)):
            return
        if (s1 and j1 not in normal_set) or (s2 and j2 not in normal_set):
            truncated += 1
            return
        rows_k.append(ki)
        rows_n.append((s1, j1, s2, j2))
        counts[ki] += 1

    for ki in range(len(ks)):
        m, p = km[ki], kp[ki]
        if k1[ki] + abs(m) > L:
            continue
        if m == 0 and p == 0:
            accept(ki, 0, 0, 0, 0)
        if abs(m) == 1:
            s = -int(m)
            j = -s * int(p)
            if j not in ms.tangential:
                accept(ki, s, j, 0, 0)
        if m == 0 and p != 0 and k1[ki] + 2 <= L:
            # opposite signs on j_low < j_high
            s_low, s_high = (1, -1) if p > 0 else (-1, 1)
            shift = abs(int(p))
            for j in wide:
                if j + shift in wide_set:
                    accept(ki, s_low, j, s_high, j + shift)
        if abs(m) == 2 and k1[ki] + 2 <= L:
            s = -int(m) // 2
            total = -s * int(p)
            for j in wide:
                j2 = total - j
                if j <= j2 and j2 in wide_set:
                    accept(ki, s, j, s, j2)

    n = len(ms.modes)
    ells = np.zeros((len(rows_k), n), dtype=np.int16)
    k_index = np.array(rows_k, dtype=np.int64)
    normal = np.array(rows_n, dtype=np.int64).reshape(-1, 4)
    tan_idx = [ms.index[j] for j in ms.tangential]
    if len(rows_k):
        ells[:, tan_idx] = ks[k_index]
        for cs, cj in ((0, 1), (2, 3)):
            has = np.flatnonzero(normal[:, cs])
            cols = np.array([ms.index[int(j)] for j in normal[has, cj]], dtype=np.int64)
            np.add.at(ells, (has, cols), normal[has, cs].astype(np.int16))
    return ResonanceSet(budget, moment_filter, ells, ks, k_index, normal, counts, truncated)


def enumerate_resonant_indices(budget: ResonanceBudget, moment_filter: str = "strict"):
    """Yield every admissible resonance vector of ``budget`` once, in canonical order."""
    yield from resonance_set(budget, moment_filter).vectors()


# Diophantine verification


@dataclass(frozen=True)
class DCReport:
    ok: bool
    n_checked: int
    n_prefiltered: int
    worst: SignedIndexVector | None
    worst_divisor: float
    worst_weight: float

    @property
    def worst_ratio(self) -> float:
        """``|omega.l| / weight(l)`` at the witness; the condition holds when >= 1."""
        return self.worst_divisor / self.worst_weight if self.worst is not None else math.inf

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "n_checked": self.n_checked,
            "n_prefiltered": self.n_prefiltered,
            "worst_witness": self.worst.to_json() if self.worst is not None else None,
            "worst_divisor": self.worst_divisor,
            "worst_weight": self.worst_weight,
            "worst_ratio": self.worst_ratio,
        }


def verify_dc(omega: FrequencyVector, params: DiophParams, budget: ResonanceBudget) -> DCReport:
    """Check ``|omega.l| >= weight(l)`` over the budget.

    Vectors with ``|d(l)| >= |l|`` are skipped: for ``omega`` in the box they
    satisfy ``|omega.l| >= |l|/2 >= 2 > gamma``.
    """
    full = resonance_set(budget, "none")
    res = resonance_set(budget, "strict")
    if len(res) == 0:
        return DCReport(True, 0, len(full), None, math.inf, 0.0)
    div = np.abs(res.ells @ omega.values)
    w = dioph_weights(res.tangential_parts, params, budget.mode_set)
    ratio = div / w
    worst = int(np.argmin(ratio))
    modes = budget.mode_set.modes
    row = res.ells[worst]
    vec = SignedIndexVector((modes[i], int(row[i])) for i in np.flatnonzero(row))
    return DCReport(
        bool(ratio[worst] >= 1.0), len(res), len(full) - len(res), vec, float(div[worst]), float(w[worst])
    )


# K0 audit


@dataclass(frozen=True)
class K0Audit:
    delta: float
    measured_sup: float
    witness_alpha: MultiIndex | None
    witness_beta: MultiIndex | None
    witness_q: int | None
    divisor: float
    n_pairs: int
    gamma: float

    @property
    def empty(self) -> bool:
        return self.witness_alpha is None

    def recompute(self) -> float:
        """Re-evaluate the supremand at the witness."""
        if self.empty:
            return 0.0
        prod = 1.0
        for j, e in self.witness_alpha.entries + self.witness_beta.entries:
            prod *= max(2, abs(j)) ** e
        return (max(2, abs(self.witness_q)) ** 2 / prod) ** self.delta * self.gamma / self.divisor

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "measured_sup": self.measured_sup,
            "witness": None
            if self.empty
            else {
                "alpha": self.witness_alpha.to_json(),
                "beta": self.witness_beta.to_json(),
                "q": self.witness_q,
            },
            "divisor": self.divisor,
            "n_pairs": self.n_pairs,
        }


def _k0_ingredients(budget: ResonanceBudget, omega: FrequencyVector):
    res = resonance_set(budget, "k0")
    ms = budget.mode_set
    if len(res) == 0:
        return res, np.zeros(0), np.zeros(0), np.zeros(0, dtype=int)
    brk = weight_bracket(ms.modes)
    absl = np.abs(res.ells).astype(float)
    log_prod = absl @ np.log(brk)
    # the best q is the support mode with the largest weight
    support_w = np.where(absl > 0, brk[None, :], 0.0)
    q_idx = np.argmax(support_w, axis=1)
    log_ratio = 2 * np.log(brk[q_idx]) - log_prod
    div = np.abs(res.ells @ omega.values)
    return res, log_ratio, div, q_idx


def k0_supremum(delta: float, params: DiophParams, budget: ResonanceBudget, omega: FrequencyVector) -> K0Audit:
    """Maximize ``(<<q>>^2 / prod <<j>>^(a_j+b_j))^delta * gamma / |omega.(a-b)|``.

    For a given ``l = a - b`` the supremand only shrinks when a common part is
    added to ``a`` and ``b``, so the maximum sits at ``a = l+``, ``b = l-``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    res, log_ratio, div, q_idx = _k0_ingredients(budget, omega)
    if len(res) == 0:
        return K0Audit(delta, 0.0, None, None, None, math.nan, 0, params.gamma)
    if np.any(div == 0):
        raise ValueError("omega is exactly resonant inside the budget")
    vals = np.exp(delta * log_ratio) * params.gamma / div
    best = int(np.argmax(vals))
    ms = budget.mode_set
    row = res.ells[best]
    ell = SignedIndexVector((ms.modes[i], int(row[i])) for i in np.flatnonzero(row))
    return K0Audit(
        float(delta),
        float(vals[best]),
        ell.plus,
        ell.minus,
        int(ms.modes[q_idx[best]]),
        float(div[best]),
        len(res),
        params.gamma,
    )


def k0_dc_bound(delta: float, params: DiophParams, budget: ResonanceBudget) -> float:
    """``sup (<<q>>^2/prod)^delta * prod (1 + <log2 i>^2 l_i^2)^tau``: the DC-implied ceiling."""
    res = resonance_set(budget, "k0")
    if len(res) == 0:
        return 0.0
    ms = budget.mode_set
    brk = weight_bracket(ms.modes)
    absl = np.abs(res.ells).astype(float)
    q = np.max(np.where(absl > 0, brk[None, :], 0.0), axis=1)
    ratio = q**2 / np.exp(absl @ np.log(brk))
    w = dioph_weights(res.tangential_parts, params, ms) / params.gamma
    return float(np.max(ratio**delta / w))


def fit_k0_constant(audits: list[K0Audit]) -> float:
    """Smallest ``c >= 0`` with ``log K0(delta) <= (c/delta) ln^2(1/delta)`` on the audits."""
    c = 0.0
    for a in audits:
        if a.empty or a.measured_sup <= 0:
            continue
        shape = math.log(1 / a.delta) ** 2 / a.delta
        c = max(c, math.log(a.measured_sup) / shape)
    return c


# measure estimates


@dataclass(frozen=True)
class MeasureReport:
    gamma: float
    tau: float
    l_max: int
    n_samples: int
    excluded: int
    excluded_fraction: float
    ci: tuple[float, float]
    analytic_sum: float
    analytic_bound: float
    n_resonances: int

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "tau": self.tau,
            "budget": {"l_max": self.l_max},
            "n_samples": self.n_samples,
            "excluded": self.excluded,
            "excluded_fraction": self.excluded_fraction,
            "ci": list(self.ci),
            "analytic_sum": self.analytic_sum,
            "analytic_bound": self.analytic_bound,
            "n_resonances": self.n_resonances,
        }


def wilson_interval(hits: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    p = hits / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


def analytic_measure_sum(params: DiophParams, budget: ResonanceBudget) -> float:
    """Truncated ``sum_{l in A} gamma prod (1 + l_{2^i}^2 <i>^2)^(-tau)``."""
    res = resonance_set(budget, "strict")
    if len(res) == 0:
        return 0.0
    return float(dioph_weights(res.tangential_parts, params, budget.mode_set).sum())


def analytic_measure_bound(params: DiophParams, budget: ResonanceBudget, k_max: int | None = None) -> float:
    """``72 gamma sum_{0<|k|<=k_max} prod_i (1 + k_i^2 <i>^2)^(-(tau - 1/2))``."""
    ms = budget.mode_set
    ks = _tangential_parts(len(ms.tangential), budget.l_max if k_max is None else k_max)
    ks = ks[np.abs(ks).sum(axis=1) > 0]
    fac = params.tangential_factor(ms)
    terms = np.prod((1 + ks * ks * fac) ** (-(params.tau - 0.5)), axis=1)
    return float(72 * params.gamma * terms.sum())


def default_normal_map(mode_set: ModeSet, W: dict[int, float]) -> Callable[[np.ndarray], np.ndarray]:
    """``Omega_j = j^2 + W_j`` independent of ``nu``."""
    base = np.array([j * j + W.get(j, 0.0) for j in mode_set.normal], dtype=float)

    def omega_map(nu: np.ndarray) -> np.ndarray:
        return np.broadcast_to(base, (np.atleast_2d(nu).shape[0], base.size))

    return omega_map


def measure_estimate(
    params: DiophParams,
    budget: ResonanceBudget,
    n_samples: int,
    seed: int,
    omega_map: Callable[[np.ndarray], np.ndarray] | None = None,
    chunk: int = 2000,
) -> MeasureReport:
    """Monte Carlo excluded fraction of the tangential box next to the analytic sums.

    ``omega_map`` takes an ``(N, nt)`` array of tangential frequencies and
    returns the ``(N, n_normal)`` normal frequencies.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    ms = budget.mode_set
    omega_map = omega_map or default_normal_map(ms, {})
    res = resonance_set(budget, "strict")
    rng = np.random.default_rng(seed)
    tang = np.array(ms.tangential, dtype=float)
    nu = tang**2 + rng.uniform(-0.5, 0.5, size=(n_samples, tang.size))
    excluded = 0
    if len(res):
        w = dioph_weights(res.tangential_parts, params, ms)
        tan_cols = [ms.index[j] for j in ms.tangential]
        nor_cols = [ms.index[j] for j in ms.normal]
        Lt = res.ells[:, tan_cols].astype(float)
        Ln = res.ells[:, nor_cols].astype(float)
        for a in range(0, n_samples, chunk):
            nus = nu[a : a + chunk]
            om = np.asarray(omega_map(nus), dtype=float)
            div = np.abs(nus @ Lt.T + om @ Ln.T)
            excluded += int(np.any(div < w[None, :], axis=1).sum())
    return MeasureReport(
        params.gamma,
        params.tau,
        budget.l_max,
        n_samples,
        excluded,
        excluded / n_samples,
        wilson_interval(excluded, n_samples),
        analytic_measure_sum(params, budget),
        analytic_measure_bound(params, budget),
        len(res),
    )


# auxiliary inequalities


def _sum_over_product_trials(trials: int, rng: np.random.Generator, a_range, max_len: int = 12):
    a = rng.uniform(*a_range, size=trials)
    lengths = rng.integers(1, max_len + 1, size=trials)
    x = np.exp(rng.uniform(math.log(2.0), math.log(1e4), size=(trials, max_len)))
    x = -np.sort(-x, axis=1)
    mask = np.arange(max_len)[None, :] < lengths[:, None]
    total = np.where(mask, x, 0.0).sum(axis=1)
    log_prod = np.where(mask, np.log(x), 0.0).sum(axis=1)
    lhs = total * np.exp(-a * log_prod)
    x1 = x[:, 0]
    rhs = x1 ** (1 - a) + 2 / (a * x1**a)
    witness = lambda i: {"a": float(a[i]), "x": [float(v) for v in x[i, : lengths[i]]]}
    return lhs, rhs, witness


def _log_versus_linear_trials(trials: int, rng: np.random.Generator, a_range):
    delta = np.exp(-rng.uniform(3.0, 20.0, size=trials))
    y0 = 4 / delta * np.log(1 / delta)
    y = y0 * (1 + rng.exponential(1.0, size=trials) * (rng.random(trials) < 0.8))
    lhs = -delta * y + np.log1p(y * y)
    witness = lambda i: {"delta": float(delta[i]), "y": float(y[i])}
    return lhs, np.zeros(trials), witness


def aux_lemma_validators(trials: int, seed: int, a_range: tuple[float, float] = (0.0, 1.0)) -> dict:
    """Randomized checks of the two elementary inequalities.

    * ``sum x / prod x^a <= x1^(1-a) + 2/(a x1^a)`` for ``x1 >= ... >= xN >= 2``,
      with ``a`` uniform in ``a_range`` and ``x`` log-uniform in ``[2, 1e4]``.
    * ``-delta y + log(1 + y^2) <= 0`` for ``delta < e^-3``, ``y >= 4 log(1/delta)/delta``.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(seed)
    out = {}
    for name, fn in (
        ("sum_over_product", _sum_over_product_trials),
        ("log_versus_linear", _log_versus_linear_trials),
    ):
        lhs, rhs, witness = fn(trials, rng, a_range)
        margin = rhs - lhs
        worst = int(np.argmin(margin))
        out[name] = {
            "trials": int(trials),
            "violations": int(np.sum(margin < 0)),
            "worst_margin": float(margin[worst]),
            "worst_case": witness(worst),
        }
    out["passed"] = all(v["violations"] == 0 for v in out.values() if isinstance(v, dict))
    return out


# exact slab measures


def _uniform_sum_cdf(x: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """CDF of a sum of independent uniforms on ``[0, c_i]`` (rows of ``widths``, zeros ignored)."""
    out = np.zeros_like(x)
    for row in range(widths.shape[0]):
        c = widths[row][widths[row] > 0]
        n = c.size
        total = 0.0
        for mask in range(1 << n):
            chosen = [c[i] for i in range(n) if mask >> i & 1]
            shift = x[row] - sum(chosen)
            if shift > 0:
                total += (-1) ** len(chosen) * shift**n
        out[row] = total / (math.factorial(n) * np.prod(c))
    return np.clip(out, 0.0, 1.0)


def slab_measure_sum(
    params: DiophParams,
    budget: ResonanceBudget,
    omega_map: Callable[[np.ndarray], np.ndarray],
    identify_sign: bool = True,
) -> float:
    """``sum_l meas(R_l)`` computed exactly for a normal map independent of ``nu``.

    Each ``R_l`` is a slab ``|a_l + k.u| < w_l`` in the unit cube of offsets ``u``;
    its volume comes from the piecewise polynomial law of ``k.u``. ``l`` and
    ``-l`` cut the same slab, so by default each pair is counted once.
    """
    ms = budget.mode_set
    res = resonance_set(budget, "strict")
    if len(res) == 0:
        return 0.0
    tang = np.array(ms.tangential, dtype=float)
    om = np.asarray(omega_map(tang[None, :] ** 2), dtype=float)[0]
    nor_cols = [ms.index[j] for j in ms.normal]
    ells = res.ells
    k = res.tangential_parts.astype(float)
    if identify_sign:
        first = ells[np.arange(len(ells)), np.argmax(ells != 0, axis=1)]
        ells, k = ells[first > 0], k[first > 0]
    a = k @ tang**2 + ells[:, nor_cols] @ om
    w = dioph_weights(k, params, ms)
    widths = np.abs(k)
    # k.u ranges over [-|k|/2, |k|/2]; shift to sums of uniforms on [0, |k_i|]
    half = widths.sum(axis=1) / 2
    hi = _uniform_sum_cdf(-a + w + half, widths)
    lo = _uniform_sum_cdf(-a - w + half, widths)
    return float(np.sum(hi - lo))


def tangential_only(res: ResonanceSet) -> np.ndarray:
    """Mask of vectors without normal sites."""
    return ~res.normal[:, [0, 2]].any(axis=1)


__all__ = [
    "DiophParams",
    "ResonanceBudget",
    "ResonanceSet",
    "DCReport",
    "K0Audit",
    "MeasureReport",
    "dioph_weight",
    "dioph_weights",
    "resonance_set",
    "enumerate_resonant_indices",
    "verify_dc",
    "k0_supremum",
    "k0_dc_bound",
    "fit_k0_constant",
    "measure_estimate",
    "default_normal_map",
    "analytic_measure_sum",
    "analytic_measure_bound",
    "aux_lemma_validators",
    "slab_measure_sum",
    "wilson_interval",
]
