"""Torus-centered polynomials and their degree decomposition.

Around the torus ``|u_j|^2 = I_j`` (tangential ``j``) every monomial is
rewritten in ``y_j = |v_j|^2 - I_j``, angular factors ``v^A v̄^B`` with
disjoint supports, and normal factors ``z^a z̄^b``. The degree
``2|delta| + |a| + |b| - 2`` is then a filter on keys.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from . import _engine as eng
from .hamiltonian import DEFAULT_PRUNE, FrequencyVector, HamiltonianPoly, NormParams, weight_bracket, weighted_norm
from .indices import ModeSet, MultiIndex

NO_DEGREE_CAP = 10**6


@dataclass(frozen=True)
class TorusData:
    """Actions ``I_j >= 0`` on tangential modes, zero on normal modes."""

    mode_set: ModeSet
    actions: tuple[tuple[int, float], ...] = field(default=())

    def __init__(self, mode_set: ModeSet, actions: Mapping[int, float] | None = None):
        actions = dict(actions or {})
        for j, v in actions.items():
            if j not in mode_set.tangential:
                raise ValueError(f"action on non-tangential mode {j}")
            if v < 0:
                raise ValueError(f"negative action I_{j} = {v}")
        object.__setattr__(self, "mode_set", mode_set)
        object.__setattr__(
            self, "actions", tuple((j, float(actions.get(j, 0.0))) for j in mode_set.tangential)
        )

    @classmethod
    def power_law(
        cls, mode_set: ModeSet, r: float, p: float, exponent: float | None = None, amplitude: float = 1.0
    ) -> "TorusData":
        """``sqrt(I_j) = amplitude * r * <<j>>**(-exponent)``, exponent defaults to ``p``."""
        q = p if exponent is None else exponent
        if q < p:
            raise ValueError("power-law exponent below p leaves the ball")
        tang = np.array(mode_set.tangential)
        amp = amplitude * r * weight_bracket(tang) ** (-q)
        return cls(mode_set, dict(zip(mode_set.tangential, amp**2)))

    @classmethod
    def flat(cls, mode_set: ModeSet, r: float, p: float, amplitude: float = 1.0) -> "TorusData":
        """Equal actions, as large as the ball of radius ``r`` in weight ``p`` allows."""
        top = weight_bracket(mode_set.tangential).max()
        amp = amplitude * r * top ** (-p)
        return cls(mode_set, {j: amp**2 for j in mode_set.tangential})

    @property
    def vector(self) -> np.ndarray:
        """Actions in tangential order."""
        return np.array([v for _, v in self.actions])

    def __getitem__(self, mode: int) -> float:
        return dict(self.actions).get(mode, 0.0)

    def radius(self, p: float) -> float:
        """``sup_j sqrt(I_j) <<j>>**p``."""
        tang = np.array(self.mode_set.tangential)
        return float(np.max(np.sqrt(self.vector) * weight_bracket(tang) ** p))

    def in_ball(self, r: float, p: float) -> bool:
        return self.radius(p) <= r * (1 + 1e-12)

    def point(self, phases: np.ndarray) -> np.ndarray:
        """The torus point ``u_j = sqrt(I_j) e^{i phi_j}`` as a full mode vector."""
        vec = np.zeros(len(self.mode_set.modes), dtype=complex)
        idx = [self.mode_set.index[j] for j in self.mode_set.tangential]
        vec[idx] = np.sqrt(self.vector) * np.exp(1j * np.asarray(phases))
        return vec

    def to_json(self) -> dict:
        return {"mode_set": self.mode_set.to_json(), "actions": [[j, v] for j, v in self.actions]}


class CenteredPoly:
    """Polynomial in ``y_j``, angular ``v, v̄`` and normal ``z, z̄`` around a torus.

    ``size_cap`` bounds ``2|delta| + |A| + |B| + |a| + |b|`` and ``max_degree``
    bounds the degree; both are key filters, so they commute with every
    degree projection and with the homological operator.
    """

    __slots__ = ("torus", "layout", "table", "const", "size_cap", "max_degree", "prune_eps", "_cache")

    def __init__(
        self,
        torus: TorusData,
        table: eng.Table | None = None,
        const: complex = 0j,
        size_cap: int = 8,
        max_degree: int | None = None,
        prune_eps: float = DEFAULT_PRUNE,
    ):
        self.torus = torus
        self.layout = eng.layout_for(torus.mode_set)
        self.size_cap = int(size_cap)
        self.max_degree = max_degree
        self.prune_eps = prune_eps
        if table is None:
            table = eng.empty_table(self.layout)
        table, c0 = eng.split_constant(table)
        if len(table):
            keep = self.layout.centered_size(table.rows) <= self.size_cap
            if max_degree is not None:
                keep &= self.layout.centered_order(table.rows) - 2 <= max_degree
            if not keep.all():
                table = table.take(keep)
        self.table = eng.prune(table, prune_eps)
        self.const = complex(const) + c0
        self._cache = {}

    def _derive(self, table: eng.Table, const: complex = 0j) -> "CenteredPoly":
        return CenteredPoly(self.torus, table, const, self.size_cap, self.max_degree, self.prune_eps)

    def with_caps(self, size_cap: int | None = None, max_degree: int | None = None) -> "CenteredPoly":
        return CenteredPoly(
            self.torus,
            self.table,
            self.const,
            self.size_cap if size_cap is None else size_cap,
            max_degree,
            self.prune_eps,
        )

    @property
    def mode_set(self) -> ModeSet:
        return self.torus.mode_set

    def __len__(self) -> int:
        return len(self.table)

    # bookkeeping

    def degrees(self) -> np.ndarray:
        return self.layout.centered_order(self.table.rows) - 2

    def sizes(self) -> np.ndarray:
        return self.layout.centered_size(self.table.rows)

    def kernel_mask(self) -> np.ndarray:
        return ~self.layout.ell(self.table.rows).any(axis=1)

    def max_abs(self) -> float:
        return float(np.abs(self.table.coef).max()) if len(self) else 0.0

    def l1(self) -> float:
        return float(np.abs(self.table.coef).sum())

    def degree_histogram(self) -> dict[int, int]:
        d, c = np.unique(self.degrees(), return_counts=True)
        return {int(a): int(b) for a, b in zip(d, c)}

    def filter(self, mask: np.ndarray, keep_const: bool = False) -> "CenteredPoly":
        return self._derive(self.table.take(mask), self.const if keep_const else 0j)

    @property
    def terms(self) -> dict[tuple[MultiIndex, ...], complex]:
        """Keys ``(delta, A, B, a, b)`` in lexicographic order."""
        if "terms" not in self._cache:
            lay = self.layout
            modes = self.mode_set.modes
            n = lay.n
            out = []
            for row, c in zip(self.table.rows, self.table.coef):
                delta = MultiIndex((lay.tangential[t], int(row[2 * n + t])) for t in range(lay.nt))
                A = MultiIndex((modes[i], int(row[i])) for i in lay.tan_idx)
                B = MultiIndex((modes[i], int(row[n + i])) for i in lay.tan_idx)
                a = MultiIndex((modes[i], int(row[i])) for i in lay.normal_idx)
                b = MultiIndex((modes[i], int(row[n + i])) for i in lay.normal_idx)
                out.append(((delta, A, B, a, b), complex(c)))
            out.sort(key=lambda kv: tuple(m.entries for m in kv[0]))
            self._cache["terms"] = dict(out)
        return self._cache["terms"]

    @classmethod
    def from_terms(
        cls,
        torus: TorusData,
        terms: Mapping[tuple, complex],
        const: complex = 0j,
        size_cap: int = 8,
        max_degree: int | None = None,
    ) -> "CenteredPoly":
        """Build from keys ``(delta, A, B, a, b)``; angular parts must be disjoint."""
        lay = eng.layout_for(torus.mode_set)
        ms = torus.mode_set
        rows = np.zeros((len(terms), lay.width), dtype=eng.ROW_DTYPE)
        coef = np.zeros(len(terms), dtype=complex)
        for k, (key, c) in enumerate(terms.items()):
            delta, A, B, a, b = (MultiIndex(x) for x in key)
            if set(A.support) & set(B.support):
                raise ValueError("angular exponents must have disjoint supports")
            for j, e in delta:
                if not ms.is_tangential(j):
                    raise ValueError(f"action factor on normal mode {j}")
                rows[k, 2 * lay.n + ms.tangential.index(j)] += e
            for part, off, allowed in ((A, 0, True), (B, lay.n, True), (a, 0, False), (b, lay.n, False)):
                for j, e in part:
                    if ms.is_tangential(j) != allowed:
                        raise ValueError(f"mode {j} in the wrong factor group")
                    rows[k, off + ms.index[j]] += e
            ell = lay.ell(rows[k : k + 1])[0]
            if ell.sum() != 0 or int(ell @ lay.modes) != 0:
                raise ValueError("key violates mass or momentum conservation")
            coef[k] = c
        table = eng.combine(rows, lay.keys_of(rows), coef)
        return cls(torus, table, const, size_cap, max_degree)

    # algebra

    def __add__(self, other: "CenteredPoly") -> "CenteredPoly":
        if not isinstance(other, CenteredPoly):
            return NotImplemented
        if other.torus != self.torus:
            raise ValueError("centered polynomials around different tori")
        return self._derive(eng.concat([self.table, other.table], self.layout), self.const + other.const)

    def __neg__(self) -> "CenteredPoly":
        return self._derive(self.table.scaled(-1), -self.const)

    def __sub__(self, other: "CenteredPoly") -> "CenteredPoly":
        return self + (-other)

    def __mul__(self, k) -> "CenteredPoly":
        if not np.isscalar(k):
            return NotImplemented
        return self._derive(self.table.scaled(k), self.const * k)

    __rmul__ = __mul__

    def derivatives(self) -> dict:
        if "d" not in self._cache:
            self._cache["d"] = eng.derivative_tables(self.layout, self.table, centered=True)
        return self._cache["d"]

    def bracket(self, other: "CenteredPoly") -> "CenteredPoly":
        """Poisson bracket computed natively on centered keys, then filtered."""
        if other.torus != self.torus:
            raise ValueError("centered polynomials around different tori")
        degs = [d for d in (self.max_degree, other.max_degree) if d is not None]
        o_max = (min(degs) + 2) if degs else NO_DEGREE_CAP
        s_max = min(self.size_cap, other.size_cap)
        table = eng.bracket_tables(
            self.layout, self.derivatives(), other.derivatives(), o_max, s_max, True, self.torus.vector
        )
        return CenteredPoly(self.torus, table, 0j, s_max, min(degs) if degs else None, self.prune_eps)

    def bracket_with_action(self, mode: int) -> "CenteredPoly":
        """``{self, |u_j|^2} = -i (alpha_j - beta_j) self``."""
        i = self.mode_set.index[mode]
        ell = self.table.rows[:, i].astype(float) - self.table.rows[:, self.layout.n + i]
        return self._derive(self.table.with_coef(-1j * ell * self.table.coef))

    def divisors(self, omega: FrequencyVector) -> np.ndarray:
        """``omega . (alpha - beta)`` per stored key."""
        return self.layout.ell(self.table.rows) @ omega.values

    def to_plain(self) -> HamiltonianPoly:
        return to_plain(self)

    def to_json(self) -> dict:
        return {
            "torus": self.torus.to_json(),
            "size_cap": self.size_cap,
            "max_degree": self.max_degree,
            "const": [self.const.real, self.const.imag],
            "terms": [
                {
                    "delta": k[0].to_json(),
                    "alpha": k[1].to_json(),
                    "beta": k[2].to_json(),
                    "a": k[3].to_json(),
                    "b": k[4].to_json(),
                    "re": c.real,
                    "im": c.imag,
                }
                for k, c in self.terms.items()
            ],
        }

    def __repr__(self) -> str:
        return f"CenteredPoly({len(self)} terms, degrees {self.degree_histogram()})"


@dataclass(frozen=True)
class CounterTerm:
    """``sum_{j in S} lam_j (|v_j|^2 - I_j) + sum_{j not in S} lam_j |z_j|^2``."""

    torus: TorusData
    lam: np.ndarray = field(compare=False)

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).copy()
        if lam.shape != (len(self.torus.mode_set.modes),):
            raise ValueError("one counterterm coefficient per mode expected")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def zero(cls, torus: TorusData) -> "CounterTerm":
        return cls(torus, np.zeros(len(torus.mode_set.modes)))

    @classmethod
    def from_dict(cls, torus: TorusData, lam: Mapping[int, float]) -> "CounterTerm":
        vec = np.zeros(len(torus.mode_set.modes))
        for j, v in lam.items():
            vec[torus.mode_set.index[j]] = v
        return cls(torus, vec)

    def __getitem__(self, mode: int) -> float:
        return float(self.lam[self.torus.mode_set.index[mode]])

    def __add__(self, other: "CounterTerm") -> "CounterTerm":
        return CounterTerm(self.torus, self.lam + other.lam)

    def __sub__(self, other: "CounterTerm") -> "CounterTerm":
        return CounterTerm(self.torus, self.lam - other.lam)

    def norm(self) -> float:
        return float(np.max(np.abs(self.lam))) if self.lam.size else 0.0

    def as_dict(self) -> dict[int, float]:
        return {j: float(v) for j, v in zip(self.torus.mode_set.modes, self.lam) if v != 0}

    def hamiltonian(self, degree_cap: int = 8) -> HamiltonianPoly:
        ms = self.torus.mode_set
        const = -sum(self[j] * self.torus[j] for j in ms.tangential)
        return HamiltonianPoly.quadratic(ms, self.lam, degree_cap=degree_cap) + HamiltonianPoly(
            ms, const=const, degree_cap=degree_cap
        )

    def centered(self, size_cap: int = 8, max_degree: int | None = None) -> CenteredPoly:
        lay = eng.layout_for(self.torus.mode_set)
        rows = unit_counterterm_rows(lay)
        sel = np.flatnonzero(self.lam)
        table = eng.combine(rows[sel], lay.keys_of(rows[sel]), self.lam[sel].astype(complex))
        return CenteredPoly(self.torus, table, 0j, size_cap, max_degree)

    def to_json(self) -> dict:
        return {str(j): float(v) for j, v in zip(self.torus.mode_set.modes, self.lam)}


def unit_counterterm_rows(layout: eng.Layout) -> np.ndarray:
    """One centered key per mode: ``y_j`` on tangential, ``|z_j|^2`` on normal modes."""
    n = layout.n
    rows = np.zeros((n, layout.width), dtype=eng.ROW_DTYPE)
    for i in range(n):
        if layout.is_tan[i]:
            rows[i, 2 * n + layout.tan_pos[i]] = 1
        else:
            rows[i, i] = 1
            rows[i, n + i] = 1
    return rows


def to_centered(
    H: HamiltonianPoly, torus: TorusData, size_cap: int | None = None, max_degree: int | None = None
) -> CenteredPoly:
    """Peel ``min(alpha_j, beta_j)`` pairs on tangential modes and expand around ``I_j``."""
    if H.mode_set != torus.mode_set:
        raise ValueError("torus and Hamiltonian live on different mode sets")
    table = eng.center_rows(H.layout, H.table, torus.vector)
    cap = H.degree_cap if size_cap is None else size_cap
    table, c0 = eng.split_constant(table)
    return CenteredPoly(torus, table, H.const + c0, cap, max_degree, H.prune_eps)


def to_plain(C: CenteredPoly) -> HamiltonianPoly:
    """Expand every ``(|v_j|^2 - I_j)^d`` back into plain monomials."""
    table = eng.uncenter_rows(C.layout, C.table, C.torus.vector)
    return HamiltonianPoly(C.mode_set, table, C.const, C.size_cap, C.prune_eps)


def _degree_mask(C: CenteredPoly, selector) -> tuple[np.ndarray, bool]:
    deg = C.degrees()
    if isinstance(selector, (int, np.integer)):
        if selector < -2:
            raise ValueError(f"degree {selector} below -2 does not exist")
        return deg == selector, selector == -2
    sel = str(selector).replace(" ", "")
    for prefix, op in (("<=", np.less_equal), (">=", np.greater_equal)):
        if sel.startswith(prefix):
            k = int(sel[len(prefix) :])
            if k < -2 and prefix == "<=":
                raise ValueError(f"degree bound {k} below -2 selects nothing")
            return op(deg, k), op(-2, k)
    raise ValueError(f"unknown degree selector {selector!r}")


def project_degree(C: CenteredPoly, selector) -> CenteredPoly:
    """Keep the keys of degree ``d`` (int) or ``'<=k'`` / ``'>=k'``.

    The scalar slot belongs to degree -2 and travels with any selector that
    contains -2.
    """
    mask, with_const = _degree_mask(C, selector)
    return C.filter(mask, keep_const=with_const)


def project_kernel(H, mode: str):
    """Kernel (``'K'``), range (``'R'``) or degree-0 kernel counterterm (``'0K'``)."""
    mode = mode.upper()
    if mode == "0K":
        if not isinstance(H, CenteredPoly):
            raise TypeError("the 0K projection needs a centered polynomial")
        return extract_counterterm(H)
    ker = ~H.layout.ell(H.table.rows).any(axis=1)
    if mode == "K":
        return H.filter(ker, keep_const=True)
    if mode == "R":
        return H.filter(~ker)
    raise ValueError(f"unknown kernel mode {mode!r}")


def counterterm_mask(C: CenteredPoly) -> tuple[np.ndarray, np.ndarray]:
    """Rows that are degree-0 kernel keys and the mode index each one carries."""
    lay = C.layout
    rows = C.table.rows
    n = lay.n
    d = rows[:, lay.d_cols]
    ab = rows[:, : 2 * n]
    single_y = (d.sum(axis=1) == 1) & ~ab.any(axis=1)
    z_pair = ~d.any(axis=1) & (ab.sum(axis=1) == 2) & ~lay.ell(rows).any(axis=1)
    y_mode = lay.tan_idx[np.argmax(d, axis=1)] if lay.nt else np.zeros(len(rows), dtype=int)
    mode_idx = np.where(single_y, y_mode, np.argmax(ab[:, :n], axis=1))
    mask = single_y | z_pair
    return mask, mode_idx


def extract_counterterm(C: CenteredPoly) -> CounterTerm:
    mask, mode_idx = counterterm_mask(C)
    lam = np.zeros(C.layout.n)
    np.add.at(lam, mode_idx[mask], C.table.coef[mask].real)
    return CounterTerm(C.torus, lam)


def is_normal_form(
    N: HamiltonianPoly,
    omega: FrequencyVector,
    torus: TorusData,
    tol: float,
    params: NormParams | None = None,
) -> bool:
    """True when ``Pi^{<=0}(N - D(omega))`` has weighted norm at most ``tol``."""
    params = params or NormParams(1.0, 1.0)
    diag = HamiltonianPoly.quadratic(N.mode_set, omega.values, degree_cap=N.degree_cap)
    low = project_degree(to_centered(N - diag, torus), "<=0")
    return weighted_norm(low, params) <= tol
