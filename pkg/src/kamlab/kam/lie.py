"""Lie series ``exp(ad_S)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hamiltonian import HamiltonianPoly


class LieSeriesDivergence(RuntimeError):
    pass


def _size(P) -> float:
    return float(np.abs(P.table.coef).sum())


def _bracket(S, X):
    if isinstance(S, HamiltonianPoly):
        return S.bracket(X, degree_cap=max(S.degree_cap, X.degree_cap))
    return S.bracket(X)


@dataclass(frozen=True)
class LieSeries:
    result: object
    orders: int
    term_sizes: tuple[float, ...]

    @property
    def tail(self) -> float:
        """Coefficient l1 size of the last term kept."""
        return self.term_sizes[-1] if self.term_sizes else 0.0


def phi_series(S, X, order_cap: int = 8, tol: float = 1e-16, scale: float | None = None) -> LieSeries:
    """``sum_{h>=1} ad_S^(h-1) X / h!``, so that ``exp(ad_S) H = H + phi(S, {S, H})``.

    Stops once a term drops below ``tol * scale``; a term that fails to shrink
    after the second order signals divergence.
    """
    scale = _size(X) if scale is None else scale
    floor = tol * max(scale, np.finfo(float).tiny)
    term = X
    total = X
    sizes = [_size(X)]
    h = 1
    while sizes[-1] > floor and h < order_cap:
        h += 1
        term = _bracket(S, term) * (1.0 / h)
        size = _size(term)
        if h >= 3 and size >= sizes[-1] and size > floor:
            raise LieSeriesDivergence(
                f"Lie series term sizes stopped shrinking at order {h}: {sizes + [size]}"
            )
        sizes.append(size)
        total = total + term
    return LieSeries(total, h, tuple(sizes))


def lie_series(H, S, order_cap: int = 8, tol: float = 1e-16) -> LieSeries:
    """``sum_{h=0}^{order_cap} ad_S^h H / h!`` with its term sizes."""
    if S.const != 0:
        raise ValueError("the generating function must have no constant part")
    if len(S) == 0:
        return LieSeries(H, 0, ())
    first = _bracket(S, H)
    inner = phi_series(S, first, order_cap, tol, scale=_size(H))
    return LieSeries(H + inner.result, inner.orders, inner.term_sizes)


def lie_transform(H, S, order_cap: int = 8, tol: float = 1e-16):
    """``exp({S, .}) H``, i.e. ``H`` composed with the time-1 flow of ``S``."""
    return lie_series(H, S, order_cap, tol).result
