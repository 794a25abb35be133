"""Sparse Hamiltonian polynomials in the complex variables ``u_j, ū_j``."""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement
from math import factorial, prod

import numpy as np
from scipy import sparse

from . import _engine as eng
from .indices import Entries, ModeSet, MultiIndex, SignedIndexVector, is_admissible_pair

DEFAULT_PRUNE = 1e-14


def weight_bracket(modes) -> np.ndarray:
    """``<<j>> = max(2, |j|)``."""
    return np.maximum(2, np.abs(np.asarray(modes, dtype=float)))


@dataclass(frozen=True)
class NormParams:
    """Radius ``r`` and Sobolev exponent ``p`` of the weighted majorant norm."""

    r: float
    p: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")

    def weights(self, modes) -> np.ndarray:
        """``u_{p,j}(r) = r * <<j>>**(-p)``."""
        return self.r * weight_bracket(modes) ** (-self.p)


@dataclass(frozen=True)
class NonlinearityModel:
    """Polynomial nonlinearity ``f(y) = sum_d coeffs[d-1] * y**d``."""

    coeffs: tuple[float, ...]
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def scaled(self, factor: float) -> "NonlinearityModel":
        return NonlinearityModel(tuple(factor * c for c in self.coeffs), self.radius)

    def primitive(self, y):
        """``F(y) = int_0^y f``."""
        return sum(c * y ** (d + 1) / (d + 1) for d, c in enumerate(self.coeffs, start=1))

    def smallness(self, gamma: float, r: float) -> float:
        """``|f|_R * r**2 / (gamma * R)``."""
        return f_majorant(self) * r * r / (gamma * self.radius)


def f_majorant(model: NonlinearityModel) -> float:
    """``|f|_R = sum_d |f^(d)| R**d``."""
    return float(sum(abs(c) * model.radius**d for d, c in enumerate(model.coeffs, start=1)))


@dataclass(frozen=True)
class FrequencyVector:
    """Frequencies ``omega_j`` on every mode of a mode set."""

    mode_set: ModeSet
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        if vals.shape != (len(self.mode_set.modes),):
            raise ValueError("one frequency per mode expected")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def squares(cls, mode_set: ModeSet) -> "FrequencyVector":
        return cls(mode_set, np.array(mode_set.modes, dtype=float) ** 2)

    @classmethod
    def from_offsets(cls, mode_set: ModeSet, offsets: Mapping[int, float]) -> "FrequencyVector":
        base = np.array(mode_set.modes, dtype=float) ** 2
        for j, v in offsets.items():
            base[mode_set.index[j]] += v
        return cls(mode_set, base)

    def __getitem__(self, mode: int) -> float:
        return float(self.values[self.mode_set.index[mode]])

    def offsets(self) -> np.ndarray:
        return self.values - np.array(self.mode_set.modes, dtype=float) ** 2

    def in_box(self) -> bool:
        return bool(np.all(np.abs(self.offsets()) < 0.5))

    def dot(self, ell: Entries) -> float:
        return float(sum(v * self[j] for j, v in SignedIndexVector(ell)))

    def as_dict(self) -> dict[int, float]:
        return {j: float(v) for j, v in zip(self.mode_set.modes, self.values)}

    def to_json(self) -> dict:
        return {str(j): float(v) for j, v in zip(self.mode_set.modes, self.values)}


class HamiltonianPoly:
    """Finite sum ``sum H_{ab} u^a ū^b`` over mass and momentum conserving pairs.

    The constant term is held apart in ``const`` and never enters a norm.
    Instances are immutable.
    """

    __slots__ = ("mode_set", "layout", "table", "const", "degree_cap", "prune_eps", "_cache")

    def __init__(
        self,
        mode_set: ModeSet,
        table: eng.Table | None = None,
        const: complex = 0j,
        degree_cap: int = 8,
        prune_eps: float = DEFAULT_PRUNE,
    ):
        self.mode_set = mode_set
        self.layout = eng.layout_for(mode_set)
        self.degree_cap = int(degree_cap)
        self.prune_eps = prune_eps
        if table is None:
            table = eng.empty_table(self.layout)
        table, c0 = eng.split_constant(table)
        if len(table):
            keep = self.layout.plain_degree(table.rows) <= self.degree_cap
            if not keep.all():
                table = table.take(keep)
        self.table = eng.prune(table, prune_eps)
        self.const = complex(const) + c0
        self._cache = {}

    # construction

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[tuple[Entries, Entries], complex],
        mode_set: ModeSet | None = None,
        const: complex = 0j,
        degree_cap: int = 8,
        prune_eps: float = DEFAULT_PRUNE,
    ) -> "HamiltonianPoly":
        mode_set = mode_set or ModeSet()
        layout = eng.layout_for(mode_set)
        rows = np.zeros((len(terms), layout.width), dtype=eng.ROW_DTYPE)
        coef = np.zeros(len(terms), dtype=complex)
        for k, ((alpha, beta), c) in enumerate(terms.items()):
            alpha, beta = MultiIndex(alpha), MultiIndex(beta)
            if not (mode_set.covers(alpha) and mode_set.covers(beta)):
                raise ValueError(f"monomial ({alpha}, {beta}) leaves the mode set")
            if not is_admissible_pair(alpha, beta):
                raise ValueError(f"monomial ({alpha}, {beta}) violates mass or momentum conservation")
            for j, e in alpha:
                rows[k, layout.index[j]] += e
            for j, e in beta:
                rows[k, layout.n + layout.index[j]] += e
            coef[k] = c
        table = eng.combine(rows, layout.keys_of(rows), coef)
        return cls(mode_set, table, const, degree_cap, prune_eps)

    @classmethod
    def quadratic(cls, mode_set: ModeSet, lam: Mapping[int, float] | np.ndarray, **kw) -> "HamiltonianPoly":
        """``sum_j lam_j |u_j|^2``."""
        items = lam.items() if isinstance(lam, Mapping) else zip(mode_set.modes, lam)
        terms = {(((j, 1),), ((j, 1),)): v for j, v in items if v != 0}
        return cls.from_terms(terms, mode_set, **kw)

    def _derive(self, table: eng.Table, const: complex = 0j, degree_cap: int | None = None) -> "HamiltonianPoly":
        return HamiltonianPoly(
            self.mode_set, table, const, self.degree_cap if degree_cap is None else degree_cap, self.prune_eps
        )

    # inspection

    def __len__(self) -> int:
        return len(self.table)

    def _decode(self, row) -> tuple[MultiIndex, MultiIndex]:
        n, modes = self.layout.n, self.mode_set.modes
        alpha = MultiIndex((modes[i], int(row[i])) for i in np.flatnonzero(row[:n]))
        beta = MultiIndex((modes[i], int(row[n + i])) for i in np.flatnonzero(row[n : 2 * n]))
        return alpha, beta

    @property
    def terms(self) -> dict[tuple[MultiIndex, MultiIndex], complex]:
        """Monomials in canonical lexicographic order."""
        if "terms" not in self._cache:
            items = [(self._decode(r), complex(c)) for r, c in zip(self.table.rows, self.table.coef)]
            items.sort(key=lambda kv: (kv[0][0].entries, kv[0][1].entries))
            self._cache["terms"] = dict(items)
        return self._cache["terms"]

    def coefficient(self, alpha: Entries, beta: Entries) -> complex:
        return self.terms.get((MultiIndex(alpha), MultiIndex(beta)), 0j)

    def max_abs(self) -> float:
        return float(np.abs(self.table.coef).max()) if len(self) else 0.0

    def is_real(self, tol: float = 1e-12) -> bool:
        """``H_{ab} = conj(H_{ba})`` up to ``tol`` times the largest coefficient."""
        if len(self) == 0:
            return abs(self.const.imag) <= tol
        n = self.layout.n
        swapped = self.table.rows.copy()
        swapped[:, :n], swapped[:, n : 2 * n] = self.table.rows[:, n : 2 * n], self.table.rows[:, :n]
        skeys = self.layout.keys_of(swapped)
        pos = np.searchsorted(self.table.keys, skeys)
        pos = np.minimum(pos, len(self) - 1)
        found = self.table.keys[pos] == skeys
        scale = tol * max(self.max_abs(), 1e-300)
        partner = np.where(found, self.table.coef[pos], 0)
        return bool(np.all(np.abs(self.table.coef - np.conj(partner)) <= scale))

    def allclose(self, other: "HamiltonianPoly", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        diff = self - other
        scale = max(self.max_abs(), other.max_abs(), abs(self.const), abs(other.const))
        return diff.max_abs() <= atol + rtol * scale and abs(diff.const) <= atol + rtol * scale

    def degrees(self) -> np.ndarray:
        return self.layout.plain_degree(self.table.rows)

    def filter(self, mask: np.ndarray, keep_const: bool = False) -> "HamiltonianPoly":
        return self._derive(self.table.take(mask), self.const if keep_const else 0j)

    # algebra

    def __add__(self, other: "HamiltonianPoly") -> "HamiltonianPoly":
        if not isinstance(other, HamiltonianPoly):
            return NotImplemented
        _check_compatible(self, other)
        table = eng.concat([self.table, other.table], self.layout)
        return self._derive(table, self.const + other.const, max(self.degree_cap, other.degree_cap))

    def __neg__(self) -> "HamiltonianPoly":
        return self._derive(self.table.scaled(-1), -self.const)

    def __sub__(self, other: "HamiltonianPoly") -> "HamiltonianPoly":
        return self + (-other)

    def __mul__(self, k) -> "HamiltonianPoly":
        if not np.isscalar(k):
            return NotImplemented
        return self._derive(self.table.scaled(k), self.const * k)

    __rmul__ = __mul__

    def derivatives(self) -> dict:
        if "d" not in self._cache:
            self._cache["d"] = eng.derivative_tables(self.layout, self.table, centered=False)
        return self._cache["d"]

    def bracket(self, other: "HamiltonianPoly", degree_cap: int | None = None) -> "HamiltonianPoly":
        _check_compatible(self, other)
        cap = max(self.degree_cap, other.degree_cap) if degree_cap is None else degree_cap
        table = eng.bracket_tables(
            self.layout, self.derivatives(), other.derivatives(), cap, cap, centered=False, actions=None
        )
        return self._derive(table, 0j, cap)

    # serialization

    def to_json(self) -> dict:
        return {
            "mode_set": self.mode_set.to_json(),
            "degree_cap": self.degree_cap,
            "const": [self.const.real, self.const.imag],
            "terms": [
                {"alpha": a.to_json(), "beta": b.to_json(), "re": c.real, "im": c.imag}
                for (a, b), c in self.terms.items()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "HamiltonianPoly":
        ms = ModeSet(**data["mode_set"])
        terms = {
            (tuple(map(tuple, t["alpha"])), tuple(map(tuple, t["beta"]))): complex(t["re"], t["im"])
            for t in data["terms"]
        }
        return cls.from_terms(terms, ms, complex(*data["const"]), data["degree_cap"])

    def __repr__(self) -> str:
        return f"HamiltonianPoly({len(self)} terms, degree_cap={self.degree_cap})"


def _check_compatible(a, b):
    if a.mode_set != b.mode_set:
        raise ValueError("polynomials live on different mode sets")


def poisson_bracket(F: HamiltonianPoly, G: HamiltonianPoly) -> HamiltonianPoly:
    """``{F, G} = i sum_j (dF/dū_j dG/du_j - dF/du_j dG/dū_j)``.

    With this sign ``{sum w_j |u_j|^2, u^a ū^b} = i w.(a-b) u^a ū^b``.
    """
    return F.bracket(G)


def diagonal(omega: FrequencyVector, degree_cap: int = 8) -> HamiltonianPoly:
    """``D(omega) = sum_j omega_j |u_j|^2``."""
    return HamiltonianPoly.quadratic(omega.mode_set, omega.values, degree_cap=degree_cap)


def _multisets(mode_set: ModeSet, k: int):
    """All exponent vectors of total ``k`` with their momentum and ``k!/a!``."""
    modes = mode_set.modes
    n = len(modes)
    picks = np.array(list(combinations_with_replacement(range(n), k)), dtype=np.intp).reshape(-1, k)
    rows = np.zeros((picks.shape[0], n), dtype=eng.ROW_DTYPE)
    np.add.at(rows, (np.repeat(np.arange(picks.shape[0]), k), picks.ravel()), 1)
    mom = rows.astype(np.int64) @ np.array(modes, dtype=np.int64)
    fact = np.array([factorial(e) for e in range(k + 1)], dtype=float)
    multinom = factorial(k) / np.prod(fact[rows], axis=1)
    return rows, mom, multinom


def build_nls(
    model: NonlinearityModel,
    V: Mapping[int, float] | np.ndarray | None,
    mode_set: ModeSet | None = None,
    degree_cap: int = 4,
) -> HamiltonianPoly:
    """``sum_j (j^2 + V_j)|u_j|^2 + mean_x F(|u(x)|^2)`` restricted to ``mode_set``.

    ``F`` is the primitive of ``f`` and the mean is over the circle, so the
    monomial ``u^a ū^b`` with ``|a| = |b| = d+1`` and zero momentum carries
    ``f^(d)/(d+1) * (d+1)!/a! * (d+1)!/b!``.
    """
    mode_set = mode_set or ModeSet()
    if degree_cap < 4 or degree_cap % 2:
        raise ValueError("degree_cap must be even and at least 4")
    layout = eng.layout_for(mode_set)
    n = layout.n
    pot = np.zeros(n)
    if V is not None:
        items = V.items() if isinstance(V, Mapping) else zip(mode_set.modes, V)
        for j, v in items:
            pot[mode_set.index[j]] = v
    if np.any(np.abs(pot) > 0.5):
        raise ValueError("potential must lie in [-1/2, 1/2]")
    tables = []
    quad = np.zeros((n, layout.width), dtype=eng.ROW_DTYPE)
    quad[np.arange(n), np.arange(n)] = 1
    quad[np.arange(n), n + np.arange(n)] = 1
    tables.append(eng.Table(quad, layout.keys_of(quad), (np.array(mode_set.modes, dtype=float) ** 2 + pot).astype(complex)))
    for d, fd in enumerate(model.coeffs, start=1):
        k = d + 1
        if 2 * k > degree_cap or fd == 0:
            continue
        rows, mom, multinom = _multisets(mode_set, k)
        order = np.argsort(mom, kind="stable")
        rows, mom, multinom = rows[order], mom[order], multinom[order]
        bounds = np.flatnonzero(np.diff(mom)) + 1
        starts = np.concatenate([[0], bounds])
        ends = np.concatenate([bounds, [len(mom)]])
        for a, b in zip(starts, ends):
            ia = np.repeat(np.arange(a, b), b - a)
            ib = np.tile(np.arange(a, b), b - a)
            block = np.zeros((ia.size, layout.width), dtype=eng.ROW_DTYPE)
            block[:, :n] = rows[ia]
            block[:, n : 2 * n] = rows[ib]
            c = fd / k * multinom[ia] * multinom[ib]
            tables.append(eng.Table(block, layout.keys_of(block), c.astype(complex)))
    table = eng.concat(tables, layout)
    return HamiltonianPoly(mode_set, table, 0j, degree_cap)


def weighted_norm(H, params: NormParams) -> float:
    """``1/2 sup_j sum |H_ab| (a_j + b_j) u_p^{a+b-2e_j}``, constants excluded.

    Centered polynomials are expanded to plain form first.
    """
    if not isinstance(H, HamiltonianPoly):
        H = H.to_plain()
    if len(H) == 0:
        return 0.0
    layout = H.layout
    n = layout.n
    rows = H.table.rows
    X = (rows[:, :n] + rows[:, n : 2 * n]).astype(np.int64)
    cols = np.flatnonzero(X.any(axis=0))
    X = X[:, cols]
    u = params.weights(layout.modes[cols])
    P = u[None, :] ** X
    # leave-one-out products so that quadratic terms stay exact
    ones = np.ones((P.shape[0], 1))
    prefix = np.cumprod(np.hstack([ones, P[:, :-1]]), axis=1)
    suffix = np.cumprod(np.hstack([ones, P[:, :0:-1]]), axis=1)[:, ::-1]
    loo = prefix * suffix
    own = np.where(X > 0, u[None, :] ** (X - 2.0), 0.0)
    contrib = (np.abs(H.table.coef)[:, None] * X * loo * own).sum(axis=0)
    return 0.5 * float(contrib.max())


def lipschitz_norm(
    family: Callable[[np.ndarray], HamiltonianPoly],
    samples: Sequence[np.ndarray],
    gamma: float,
    params: NormParams,
) -> float:
    """Sampled ``sup_w ||H(w)|| + gamma * max |H(w)-H(w')| / |w-w'|_inf``."""
    if len(samples) < 2:
        raise ValueError("at least two frequency samples are required")
    pts = [np.asarray(getattr(s, "values", s), dtype=float) for s in samples]
    polys = [family(s) for s in samples]
    sup = max(weighted_norm(h, params) for h in polys)
    quot = 0.0
    for (wa, ha), (wb, hb) in combinations(zip(pts, polys), 2):
        dist = float(np.max(np.abs(wa - wb)))
        if dist > 0:
            quot = max(quot, weighted_norm(ha - hb, params) / dist)
    return sup + gamma * quot


class PolyEvaluator:
    """Vectorized values and gradients of a plain polynomial at many points."""

    def __init__(self, H: HamiltonianPoly, block: int = 4_000_000):
        layout = H.layout
        n = self.n = layout.n
        self.const = H.const
        self.coef = H.table.coef
        self.block = block
        ab = H.table.rows[:, : 2 * n].astype(np.int64)
        deg = ab.sum(axis=1)
        self.dmax = dmax = int(deg.max()) if deg.size else 0
        r, c = np.nonzero(ab)
        reps = ab[r, c]
        rr = np.repeat(r, reps)
        cc = np.repeat(c, reps)
        start = np.concatenate([[0], np.cumsum(deg)[:-1]]) if deg.size else np.zeros(0, int)
        pos = np.arange(rr.size) - start[rr]
        self.factors = np.full((ab.shape[0], max(dmax, 1)), 2 * n, dtype=np.intp)
        self.factors[rr, pos] = cc
        width = max(dmax, 1)
        flat = np.arange(ab.shape[0] * width)
        self.scatter = sparse.csr_matrix(
            (np.ones(flat.size), (flat, self.factors.ravel())), shape=(flat.size, 2 * n + 1)
        )

    def __call__(self, u: np.ndarray, gradient: bool = True):
        """Values and gradients ``(dH/du, dH/dū)`` at points ``u`` of shape ``(P, n)``."""
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        npts = u.shape[0]
        n = self.n
        X = np.hstack([u, np.conj(u), np.ones((npts, 1))])
        value = np.full(npts, self.const, dtype=complex)
        grad = np.zeros((npts, 2 * n + 1), dtype=complex)
        nterms = self.coef.size
        width = self.factors.shape[1]
        if nterms == 0:
            return value, grad[:, :n], grad[:, n : 2 * n]
        step = max(1, self.block // max(1, npts * width))
        for a in range(0, nterms, step):
            b = min(nterms, a + step)
            V = X[:, self.factors[a:b]]
            c = self.coef[a:b]
            full = np.prod(V, axis=2)
            value += full @ c
            if gradient:
                ones = np.ones(V.shape[:2] + (1,), dtype=complex)
                pre = np.cumprod(np.concatenate([ones, V[:, :, :-1]], axis=2), axis=2)
                suf = np.cumprod(np.concatenate([ones, V[:, :, :0:-1]], axis=2), axis=2)[:, :, ::-1]
                loo = (pre * suf) * c[None, :, None]
                grad += loo.reshape(npts, -1) @ self.scatter[a * width : b * width]
        return value, grad[:, :n], grad[:, n : 2 * n]


def _evaluator(H: HamiltonianPoly) -> PolyEvaluator:
    if "eval" not in H._cache:
        H._cache["eval"] = PolyEvaluator(H)
    return H._cache["eval"]


def evaluate_and_field(H: HamiltonianPoly, u) -> tuple[complex, np.ndarray]:
    """Value of ``H`` at ``u`` and the Hamiltonian field ``-i dH/dū``.

    ``u`` is a mapping mode -> complex or an array over ``H.mode_set.modes``.
    """
    vec = _as_vector(H.mode_set, u)
    value, _, d_bar = _evaluator(H)(vec[None, :])
    return complex(value[0]), -1j * d_bar[0]


def evaluate_many(H: HamiltonianPoly, points: np.ndarray, gradient: bool = True):
    return _evaluator(H)(points, gradient)


def _as_vector(mode_set: ModeSet, u) -> np.ndarray:
    if isinstance(u, Mapping):
        vec = np.zeros(len(mode_set.modes), dtype=complex)
        for j, z in u.items():
            vec[mode_set.index[j]] = z
        return vec
    vec = np.asarray(u, dtype=complex)
    if vec.shape != (len(mode_set.modes),):
        raise ValueError("point must have one entry per mode")
    return vec


def nls_quadrature(
    model: NonlinearityModel,
    V: Mapping[int, float] | None,
    mode_set: ModeSet,
    u,
    n_x: int | None = None,
) -> float:
    """``sum_j (j^2 + V_j)|u_j|^2 + mean_x F(|u(x)|^2)`` with the trapezoidal rule on ``n_x`` nodes.

    The rule is exact once ``n_x`` exceeds the trigonometric degree of the
    integrand; the default picks such an ``n_x``.
    """
    vec = _as_vector(mode_set, u)
    modes = np.array(mode_set.modes)
    pot = np.array([(V or {}).get(j, 0.0) for j in mode_set.modes])
    quad = float(np.sum((modes**2 + pot) * np.abs(vec) ** 2))
    if n_x is None:
        n_x = 2 * (len(model.coeffs) + 1) * 2 * int(np.max(np.abs(modes))) + 1
    x = 2 * np.pi * np.arange(n_x) / n_x
    field_x = np.exp(1j * np.outer(x, modes)) @ vec
    return quad + float(np.mean(model.primitive(np.abs(field_x) ** 2)))
