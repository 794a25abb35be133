"""The Lie derivative ``L_omega = {D(omega), .}``, its inverse on the range and norm audits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine as eng
from .hamiltonian import FrequencyVector, HamiltonianPoly, NormParams, weighted_norm
from .indices import MultiIndex, SignedIndexVector
from .small_divisors import (
    DiophParams,
    ResonanceBudget,
    dioph_weights,
    k0_supremum,
    resonance_set,
    verify_dc,
)


class KernelTermError(ValueError):
    """A term with ``omega.(alpha - beta)`` identically zero reached the solver."""

    def __init__(self, key):
        self.key = key
        super().__init__(f"kernel term {key} cannot be inverted")


class NonDiophantineError(ValueError):
    """A divisor fell below its Diophantine weight."""

    def __init__(self, ell: SignedIndexVector, divisor: float, weight: float):
        self.ell = ell
        self.divisor = divisor
        self.weight = weight
        super().__init__(f"not Diophantine for this term: l={ell}, |omega.l|={divisor:.3e} < {weight:.3e}")


def _ell_rows(F) -> np.ndarray:
    return F.layout.ell(F.table.rows)


def apply_Lw(F, omega: FrequencyVector):
    """Multiply each coefficient by ``i omega.(alpha - beta)``; works on plain and centered polynomials."""
    div = _ell_rows(F) @ omega.values
    return F._derive(F.table.with_coef(1j * div * F.table.coef))


def _describe(F, row) -> tuple:
    if isinstance(F, HamiltonianPoly):
        return F._decode(row)
    lay, modes, n = F.layout, F.mode_set.modes, F.layout.n
    delta = MultiIndex((lay.tangential[t], int(row[2 * n + t])) for t in range(lay.nt))
    alpha = MultiIndex((modes[i], int(row[i])) for i in np.flatnonzero(row[:n]))
    beta = MultiIndex((modes[i], int(row[n + i])) for i in np.flatnonzero(row[n : 2 * n]))
    return delta, alpha, beta


@dataclass(frozen=True)
class HomologicalSolution:
    F: object
    min_divisor: float
    divisor_histogram: dict[int, int]
    norm_ratio: float

    def to_json(self) -> dict:
        return {
            "n_terms": len(self.F),
            "min_divisor": self.min_divisor,
            "divisor_histogram": {str(k): v for k, v in sorted(self.divisor_histogram.items())},
            "norm_ratio": self.norm_ratio,
        }


def divisor_histogram(divisors: np.ndarray) -> dict[int, int]:
    """Counts of ``floor(log10 |divisor|)``."""
    if divisors.size == 0:
        return {}
    bins, counts = np.unique(np.floor(np.log10(np.abs(divisors))).astype(int), return_counts=True)
    return {int(b): int(c) for b, c in zip(bins, counts)}


def normal_exponents(F) -> np.ndarray:
    lay = F.layout
    return F.table.rows[:, lay.normal_ab].sum(axis=1, dtype=np.int64)


def solve_homological(
    G,
    omega: FrequencyVector,
    params: DiophParams,
    delta: float = 0.1,
    norm: NormParams | None = None,
    check_dc: bool = True,
) -> HomologicalSolution:
    """Solve ``L_omega F = G`` termwise: ``F_ab = G_ab / (i omega.(alpha - beta))``.

    ``G`` must be a pure range polynomial with at most two normal exponents
    per term. The constant slot is ignored. ``norm_ratio`` compares
    ``||F||`` at ``(r, p + delta)`` with ``||G||`` at ``(r, p)``.
    """
    if G.mode_set != omega.mode_set:
        raise ValueError("omega and G live on different mode sets")
    if len(G):
        too_many = normal_exponents(G) > 2
        if too_many.any():
            key = _describe(G, G.table.rows[int(np.argmax(too_many))])
            raise ValueError(f"term {key} has more than two normal exponents")
    div = _checked_divisors(G, omega, params, check_dc)
    F = G._derive(G.table.with_coef(G.table.coef / (1j * div)))
    norm = norm or NormParams(1.0, 1.0)
    g_norm = weighted_norm(G, norm)
    ratio = weighted_norm(F, NormParams(norm.r, norm.p + delta)) / g_norm if g_norm > 0 else 0.0
    return HomologicalSolution(
        F,
        float(np.abs(div).min()) if len(G) else math.inf,
        divisor_histogram(div),
        ratio,
    )


def _checked_divisors(G, omega: FrequencyVector, params: DiophParams, check_dc: bool) -> np.ndarray:
    ell = _ell_rows(G)
    div = ell @ omega.values
    kernel = ~ell.any(axis=1) | (div == 0)
    if kernel.any():
        raise KernelTermError(_describe(G, G.table.rows[int(np.argmax(kernel))]))
    if check_dc and len(G):
        w = dioph_weights(ell[:, G.layout.tan_idx], params, G.mode_set)
        bad = np.abs(div) < w
        if bad.any():
            k = int(np.argmax(bad))
            modes = G.mode_set.modes
            vec = SignedIndexVector((modes[i], int(ell[k, i])) for i in np.flatnonzero(ell[k]))
            raise NonDiophantineError(vec, float(abs(div[k])), float(w[k]))
    return div


def invert_Lw(G, omega: FrequencyVector, params: DiophParams, check_dc: bool = True):
    """``L_omega^{-1}`` on a range polynomial without the norm bookkeeping."""
    div = _checked_divisors(G, omega, params, check_dc)
    return G._derive(G.table.with_coef(G.table.coef / (1j * div)))


# norm audit


def sample_range_polys(
    omega: FrequencyVector,
    budget: ResonanceBudget,
    n_samples: int,
    seed: int,
    max_terms: int = 4,
    max_common: int = 2,
) -> list[HamiltonianPoly]:
    """Random range polynomials whose index vectors lie in the K0 constraint set.

    Each term is ``u^(l+ + c) ū^(l- + c)`` for an ``l`` from the set and a
    random common part ``c``; normal sites in ``c`` are added only while the
    term keeps at most two normal exponents.
    """
    ms = budget.mode_set
    res = resonance_set(budget, "k0")
    if len(res) == 0 or n_samples <= 0:
        return []
    rng = np.random.default_rng(seed)
    lay = eng.layout_for(ms)
    n = lay.n
    out = []
    for _ in range(n_samples):
        k = int(rng.integers(1, max_terms + 1))
        rows = np.zeros((k, lay.width), dtype=eng.ROW_DTYPE)
        picks = rng.integers(0, len(res), size=k)
        for t, idx in enumerate(picks):
            ell = res.ells[idx].astype(np.int64)
            a, b = np.maximum(ell, 0), np.maximum(-ell, 0)
            for _ in range(int(rng.integers(0, max_common + 1))):
                j = int(rng.integers(0, n))
                normal_now = (a + b)[lay.normal_idx].sum()
                if not lay.is_tan[j] and normal_now + 2 > 2:
                    continue
                a[j] += 1
                b[j] += 1
            rows[t, :n], rows[t, n : 2 * n] = a, b
        coef = rng.normal(size=k) + 1j * rng.normal(size=k)
        table = eng.combine(rows, lay.keys_of(rows), coef)
        out.append(HamiltonianPoly(ms, table, 0j, degree_cap=64))
    return out


def solver_norm_audit(
    omega: FrequencyVector,
    params: DiophParams,
    budget: ResonanceBudget,
    delta_grid=(0.1, 0.2, 0.4, 0.8),
    n_samples: int = 200,
    seed: int = 0,
    norm: NormParams | None = None,
) -> list[dict]:
    """Worst realized ``||L^-1 G||_{r,p+delta} / ||G||_{r,p}`` against ``K0(delta) / gamma``."""
    report = verify_dc(omega, params, budget)
    if not report.ok:
        raise NonDiophantineError(report.worst, report.worst_divisor, report.worst_weight)
    norm = norm or NormParams(1.0, 1.0)
    samples = sample_range_polys(omega, budget, n_samples, seed)
    rows = []
    for delta in delta_grid:
        audit = k0_supremum(delta, params, budget, omega)
        bound = audit.measured_sup / params.gamma
        worst = 0.0
        violations = 0
        for G in samples:
            ratio = solve_homological(G, omega, params, delta, norm).norm_ratio
            worst = max(worst, ratio)
            violations += ratio > bound * (1 + 1e-12)
        rows.append(
            {
                "delta": float(delta),
                "n_samples": len(samples),
                "worst_ratio": worst,
                "bound": bound,
                "violations": int(violations),
                "k0": audit.measured_sup,
            }
        )
    return rows


def single_term_ratio(alpha, beta, omega: FrequencyVector, delta: float, p: float = 1.0) -> float:
    """Closed form of the norm ratio for a one-term ``G = c u^alpha ū^beta``.

    With ``t = alpha + beta`` the radius cancels and the ratio is
    ``sup_j t_j <<j>>^(2p+2delta) / sup_j t_j <<j>>^(2p) * prod <<k>>^(-delta t_k) / |omega.l|``.
    """
    tot = MultiIndex(alpha) + MultiIndex(beta)
    w = {j: max(2, abs(j)) for j, _ in tot}
    top = max(e * w[j] ** (2 * p + 2 * delta) for j, e in tot)
    bottom = max(e * w[j] ** (2 * p) for j, e in tot)
    shrink = math.prod(w[j] ** (-delta * e) for j, e in tot)
    return top / bottom * shrink / abs(omega.dot(SignedIndexVector(alpha) - SignedIndexVector(beta)))
