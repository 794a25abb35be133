"""Vectorized sparse monomial tables.

A polynomial is a table of dense exponent rows plus complex coefficients.
Rows have ``2n + nt`` columns: u-exponents, ū-exponents, then the powers of
the centered actions ``y_j = |v_j|^2 - I_j`` on the ``nt`` tangential modes.
Plain polynomials keep the last block at zero.

Each row carries a 64-bit key, a random linear hash of the row. Linearity
means the key of a product is the sum of the keys, so brackets are formed
on keys alone and exponent rows are only rebuilt for distinct outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .indices import ModeSet

_HASH_SEED = 0x6B616D6C6162
_MAX_EXP = 40
_BINOM = np.array([[comb(m, q) for q in range(_MAX_EXP + 1)] for m in range(_MAX_EXP + 1)], dtype=float)

ROW_DTYPE = np.int16
# pairs formed per vectorized batch in a bracket
PAIR_CHUNK = 1 << 21


class Layout:
    """Column layout and hash weights for one mode set."""

    def __init__(self, mode_set: ModeSet):
        self.mode_set = mode_set
        self.modes = np.array(mode_set.modes, dtype=np.int64)
        n = self.n = len(self.modes)
        self.index = mode_set.index
        self.tangential = mode_set.tangential
        self.nt = nt = len(self.tangential)
        self.tan_idx = np.array([self.index[j] for j in self.tangential], dtype=np.intp)
        self.is_tan = np.zeros(n, dtype=bool)
        self.is_tan[self.tan_idx] = True
        self.tan_pos = {int(i): t for t, i in enumerate(self.tan_idx)}
        self.normal_idx = np.flatnonzero(~self.is_tan)
        self.width = 2 * n + nt
        self.a_cols = np.arange(n)
        self.b_cols = np.arange(n, 2 * n)
        self.ab_cols = np.arange(2 * n)
        self.d_cols = np.arange(2 * n, 2 * n + nt)
        self.tan_a = self.tan_idx
        self.tan_b = self.tan_idx + n
        self.normal_ab = np.concatenate([self.normal_idx, self.normal_idx + n])
        self.tan_ab = np.concatenate([self.tan_a, self.tan_b])
        rng = np.random.default_rng(_HASH_SEED)
        self.weights = rng.integers(0, 2**62, size=self.width, dtype=np.uint64) * np.uint64(2) + np.uint64(1)

    def keys_of(self, rows: np.ndarray) -> np.ndarray:
        if rows.shape[0] == 0:
            return np.zeros(0, dtype=np.uint64)
        return rows.astype(np.uint64) @ self.weights

    def ell(self, rows: np.ndarray) -> np.ndarray:
        """Rows of ``alpha - beta``."""
        return rows[:, : self.n].astype(np.int64) - rows[:, self.n : 2 * self.n]

    def plain_degree(self, rows: np.ndarray) -> np.ndarray:
        return rows[:, : 2 * self.n].sum(axis=1, dtype=np.int64)

    def centered_order(self, rows: np.ndarray) -> np.ndarray:
        """``2|delta| + |a| + |b|``: the order of vanishing on the torus."""
        return 2 * rows[:, self.d_cols].sum(axis=1, dtype=np.int64) + rows[:, self.normal_ab].sum(
            axis=1, dtype=np.int64
        )

    def centered_size(self, rows: np.ndarray) -> np.ndarray:
        return self.centered_order(rows) + rows[:, self.tan_ab].sum(axis=1, dtype=np.int64)


@lru_cache(maxsize=None)
def layout_for(mode_set: ModeSet) -> Layout:
    return Layout(mode_set)


@dataclass(frozen=True)
class Table:
    rows: np.ndarray
    keys: np.ndarray
    coef: np.ndarray

    def __len__(self) -> int:
        return self.coef.shape[0]

    def take(self, idx) -> "Table":
        return Table(self.rows[idx], self.keys[idx], self.coef[idx])

    def scaled(self, factor) -> "Table":
        return Table(self.rows, self.keys, self.coef * factor)

    def with_coef(self, coef: np.ndarray) -> "Table":
        return Table(self.rows, self.keys, coef)


def empty_table(layout: Layout) -> Table:
    return Table(
        np.zeros((0, layout.width), dtype=ROW_DTYPE),
        np.zeros(0, dtype=np.uint64),
        np.zeros(0, dtype=complex),
    )


def _sum_by_key(keys: np.ndarray, coef: np.ndarray):
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    inv = inv.ravel()
    re = np.bincount(inv, weights=coef.real, minlength=uniq.size)
    im = np.bincount(inv, weights=coef.imag, minlength=uniq.size)
    return uniq, first, re + 1j * im


def combine(rows: np.ndarray, keys: np.ndarray, coef: np.ndarray) -> Table:
    """Merge duplicate monomials; output is sorted by key."""
    if keys.size == 0:
        return Table(rows[:0], keys[:0], coef[:0].astype(complex))
    uniq, first, total = _sum_by_key(keys, coef)
    return Table(rows[first], uniq, total)


def concat(tables: list[Table], layout: Layout) -> Table:
    tables = [t for t in tables if len(t)]
    if not tables:
        return empty_table(layout)
    if len(tables) == 1:
        return tables[0]
    return combine(
        np.concatenate([t.rows for t in tables]),
        np.concatenate([t.keys for t in tables]),
        np.concatenate([t.coef for t in tables]),
    )


def split_constant(table: Table) -> tuple[Table, complex]:
    """Remove the empty monomial, returning its coefficient separately."""
    is_const = ~table.rows.any(axis=1)
    if not is_const.any():
        return table, 0j
    const = complex(table.coef[is_const].sum())
    return table.take(~is_const), const


def prune(table: Table, rel_eps: float, abs_eps: float = 0.0) -> Table:
    """Drop coefficients below ``max(abs_eps, rel_eps * max|c|)`` and exact zeros."""
    if len(table) == 0:
        return table
    mag = np.abs(table.coef)
    cut = max(abs_eps, rel_eps * float(mag.max()))
    keep = mag > cut
    if keep.all():
        return table
    return table.take(keep)


# binomial re-expansion of tangential pairs


def _expand(layout: Layout, amount: np.ndarray, actions: np.ndarray, sign: float):
    """Expand ``(y + I)**m`` (sign=+1) or ``(|v|^2 - I)**m`` (sign=-1) columnwise.

    ``amount`` is an ``(N, nt)`` array of powers. Returns the parent index of
    every output entry, the chosen power ``q`` per tangential column, and the
    coefficient multiplier ``binom(m, q) * (sign*I)**(m-q)``.
    """
    idx = np.arange(amount.shape[0])
    qs = np.zeros_like(amount)
    fac = np.ones(amount.shape[0])
    for t in range(layout.nt):
        mt = amount[idx, t]
        if not mt.any():
            continue
        top = int(mt.max())
        pieces_idx, pieces_q, pieces_f = [], [], []
        base = sign * actions[t]
        for q in range(top + 1):
            sel = np.flatnonzero(mt >= q)
            if sel.size == 0:
                continue
            pw = mt[sel] - q
            pieces_idx.append(sel)
            pieces_q.append(np.full(sel.size, q, dtype=amount.dtype))
            pieces_f.append(_BINOM[mt[sel], q] * np.power(base, pw))
        sel = np.concatenate(pieces_idx)
        idx = idx[sel]
        qs = qs[sel]
        qs[:, t] = np.concatenate(pieces_q)
        fac = fac[sel] * np.concatenate(pieces_f)
    return idx, qs, fac


def center_rows(layout: Layout, table: Table, actions: np.ndarray) -> Table:
    """Rewrite every ``|v_j|^{2m}`` as ``sum_q binom(m,q) I_j^{m-q} y_j^q``."""
    if len(table) == 0 or layout.nt == 0:
        return table
    rows = table.rows
    m = np.minimum(rows[:, layout.tan_a], rows[:, layout.tan_b])
    if not m.any():
        return table
    idx, qs, fac = _expand(layout, m, actions, 1.0)
    out = rows[idx].copy()
    mm = m[idx]
    out[:, layout.tan_a] -= mm
    out[:, layout.tan_b] -= mm
    out[:, layout.d_cols] += qs
    return combine(out, layout.keys_of(out), table.coef[idx] * fac)


def uncenter_rows(layout: Layout, table: Table, actions: np.ndarray) -> Table:
    """Expand every ``y_j^d = (|v_j|^2 - I_j)^d`` back into plain monomials."""
    if len(table) == 0 or layout.nt == 0:
        return table
    rows = table.rows
    d = rows[:, layout.d_cols]
    if not d.any():
        return table
    idx, qs, fac = _expand(layout, d, actions, -1.0)
    out = rows[idx].copy()
    out[:, layout.d_cols] = 0
    out[:, layout.tan_a] += qs
    out[:, layout.tan_b] += qs
    return combine(out, layout.keys_of(out), table.coef[idx] * fac)


# brackets


@dataclass
class _Derivs:
    """One-mode partial derivative of a table, sorted by order."""

    rows: np.ndarray
    keys: np.ndarray
    coef: np.ndarray
    order: np.ndarray
    size: np.ndarray
    tan_a: np.ndarray
    tan_b: np.ndarray
    from_action: np.ndarray

    def __len__(self):
        return self.coef.shape[0]


def _build_derivs(layout: Layout, parts: list, centered: bool) -> _Derivs | None:
    parts = [p for p in parts if p[0].shape[0]]
    if not parts:
        return None
    rows = np.concatenate([p[0] for p in parts])
    keys = np.concatenate([p[1] for p in parts])
    coef = np.concatenate([p[2] for p in parts])
    flag = np.concatenate([np.full(p[0].shape[0], p[3]) for p in parts])
    if centered:
        order = layout.centered_order(rows)
        size = layout.centered_size(rows)
    else:
        order = layout.plain_degree(rows)
        size = order
    perm = np.argsort(order, kind="stable")
    return _Derivs(
        rows[perm],
        keys[perm],
        coef[perm],
        order[perm],
        size[perm],
        rows[perm][:, layout.tan_a].astype(np.int32),
        rows[perm][:, layout.tan_b].astype(np.int32),
        flag[perm],
    )


def derivative_tables(layout: Layout, table: Table, centered: bool) -> dict[int, tuple]:
    """Per mode index, the derivatives with respect to ``u_j`` and ``ū_j``.

    In centered form the action factor is differentiated without merging
    ``v_j * v̄_j`` back into ``y_j + I_j``; those pairs are normalized when
    products are formed, and products of two action derivatives on the same
    mode cancel identically between the two halves of the bracket.
    """
    out = {}
    rows, keys, coef = table.rows, table.keys, table.coef
    w = layout.weights
    n = layout.n
    for i in range(n):
        du_parts, dub_parts = [], []
        for col, target in ((i, du_parts), (n + i, dub_parts)):
            sel = np.flatnonzero(rows[:, col] > 0)
            if sel.size:
                r = rows[sel].copy()
                e = r[:, col].astype(float)
                r[:, col] -= 1
                target.append((r, keys[sel] - w[col], coef[sel] * e, False))
        if centered and layout.is_tan[i]:
            t = layout.tan_pos[i]
            dcol = 2 * n + t
            sel = np.flatnonzero(rows[:, dcol] > 0)
            if sel.size:
                e = rows[sel, dcol].astype(float)
                for plus_col, target in ((n + i, du_parts), (i, dub_parts)):
                    r = rows[sel].copy()
                    r[:, dcol] -= 1
                    r[:, plus_col] += 1
                    target.append((r, keys[sel] - w[dcol] + w[plus_col], coef[sel] * e, True))
        du = _build_derivs(layout, du_parts, centered)
        dub = _build_derivs(layout, dub_parts, centered)
        if du is not None or dub is not None:
            out[i] = (du, dub)
    return out


def _pair_products(layout, F: _Derivs, G: _Derivs, factor, o_max, s_max, centered, actions):
    """All products ``factor * F[p] * G[q]`` that survive the truncation filter."""
    results = []
    if F is None or G is None:
        return results
    # F and G are sorted by order; restrict G to the admissible prefix per F-group
    groups, starts = np.unique(F.order, return_index=True)
    ends = np.append(starts[1:], len(F))
    for o_f, a, b in zip(groups, starts, ends):
        qlim = int(np.searchsorted(G.order, o_max - o_f, side="right"))
        if qlim == 0:
            break
        step = max(1, PAIR_CHUNK // qlim)
        for lo in range(a, b, step):
            hi = min(b, lo + step)
            pf = np.repeat(np.arange(lo, hi), qlim)
            pg = np.tile(np.arange(qlim), hi - lo)
            results += _products(layout, F, G, pf, pg, factor, o_max, s_max, centered, actions)
    return results


def _products(layout, F: _Derivs, G: _Derivs, pf, pg, factor, o_max, s_max, centered, actions):
    keep = ~(F.from_action[pf] & G.from_action[pg])
    if not np.all(keep):
        pf, pg = pf[keep], pg[keep]
    if pf.size == 0:
        return []
    out = []
    keys = F.keys[pf] + G.keys[pg]
    coef = factor * F.coef[pf] * G.coef[pg]
    order = F.order[pf] + G.order[pg]
    size = F.size[pf] + G.size[pg]
    if centered and layout.nt:
        m = np.minimum(F.tan_a[pf] + G.tan_a[pg], F.tan_b[pf] + G.tan_b[pg])
        ov = m.any(axis=1)
    else:
        ov = np.zeros(pf.size, dtype=bool)
    flat = np.flatnonzero(~ov & (size <= s_max))
    if flat.size:
        uk, first, total = _sum_by_key(keys[flat], coef[flat])
        sel = flat[first]
        rows = F.rows[pf[sel]] + G.rows[pg[sel]]
        out.append(Table(rows, uk, total))
    over = np.flatnonzero(ov)
    if over.size:
        mo = m[over]
        idx, qs, fac = _expand(layout, mo, actions, 1.0)
        src = over[idx]
        mm = mo[idx]
        w = layout.weights
        shift = mm.astype(np.uint64) @ (w[layout.tan_a] + w[layout.tan_b])
        k2 = keys[src] - shift + qs.astype(np.uint64) @ w[layout.d_cols]
        c2 = coef[src] * fac
        dq = 2 * qs.sum(axis=1)
        o2 = order[src] + dq
        s2 = size[src] - 2 * mm.sum(axis=1) + dq
        ok = np.flatnonzero((o2 <= o_max) & (s2 <= s_max))
        if ok.size:
            uk, first, total = _sum_by_key(k2[ok], c2[ok])
            pick = ok[first]
            rows = F.rows[pf[src[pick]]] + G.rows[pg[src[pick]]]
            rows[:, layout.tan_a] -= mm[pick].astype(ROW_DTYPE)
            rows[:, layout.tan_b] -= mm[pick].astype(ROW_DTYPE)
            rows[:, layout.d_cols] += qs[pick].astype(ROW_DTYPE)
            out.append(Table(rows, uk, total))
    return out


def bracket_tables(
    layout: Layout,
    dF: dict,
    dG: dict,
    o_max: int,
    s_max: int,
    centered: bool,
    actions: np.ndarray | None,
) -> Table:
    """``{F, G} = i * sum_j (dF/dū_j * dG/du_j - dF/du_j * dG/dū_j)`` with truncation."""
    if actions is None:
        actions = np.zeros(layout.nt)
    pieces: list[Table] = []
    pending = 0
    for i in sorted(set(dF) & set(dG)):
        f_u, f_ub = dF[i]
        g_u, g_ub = dG[i]
        new = _pair_products(layout, f_ub, g_u, 1j, o_max, s_max, centered, actions)
        new += _pair_products(layout, f_u, g_ub, -1j, o_max, s_max, centered, actions)
        pieces += new
        pending += sum(len(t) for t in new)
        if pending > PAIR_CHUNK:
            pieces = [concat(pieces, layout)]
            pending = 0
    return concat(pieces, layout)
