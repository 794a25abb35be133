"""Sparse integer exponent vectors over Fourier modes.

Index vectors are stored as sorted tuples of ``(mode, value)`` pairs with
zero entries dropped, so equality and hashing are structural.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

Entries = Union[Mapping[int, int], Iterable[tuple[int, int]], "SignedIndexVector"]


def _canonical(entries: Entries) -> tuple[tuple[int, int], ...]:
    if isinstance(entries, SignedIndexVector):
        return entries.entries
    items = entries.items() if isinstance(entries, Mapping) else entries
    acc: dict[int, int] = {}
    for mode, value in items:
        acc[int(mode)] = acc.get(int(mode), 0) + int(value)
    return tuple(sorted((j, v) for j, v in acc.items() if v != 0))


class SignedIndexVector:
    """Finitely supported integer vector ``l`` indexed by modes."""

    __slots__ = ("entries",)

    def __init__(self, entries: Entries = ()):
        object.__setattr__(self, "entries", _canonical(entries))

    def __setattr__(self, name, value):
        raise AttributeError("index vectors are immutable")

    def __eq__(self, other) -> bool:
        if isinstance(other, SignedIndexVector):
            return self.entries == other.entries
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.entries)

    def __lt__(self, other: "SignedIndexVector") -> bool:
        return self.entries < other.entries

    @classmethod
    def unit(cls, mode: int, value: int = 1) -> "SignedIndexVector":
        return cls({mode: value})

    def __getitem__(self, mode: int) -> int:
        for j, v in self.entries:
            if j == mode:
                return v
        return 0

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __add__(self, other: "SignedIndexVector") -> "SignedIndexVector":
        return SignedIndexVector(self.entries + _canonical(other))

    def __sub__(self, other: "SignedIndexVector") -> "SignedIndexVector":
        return SignedIndexVector(self.entries + tuple((j, -v) for j, v in _canonical(other)))

    def __neg__(self) -> "SignedIndexVector":
        return SignedIndexVector((j, -v) for j, v in self.entries)

    def __rmul__(self, k: int) -> "SignedIndexVector":
        return SignedIndexVector((j, k * v) for j, v in self.entries)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.entries)

    @property
    def norm1(self) -> int:
        """``|l| = sum_j |l_j|``."""
        return sum(abs(v) for _, v in self.entries)

    @property
    def plus(self) -> "MultiIndex":
        return MultiIndex((j, v) for j, v in self.entries if v > 0)

    @property
    def minus(self) -> "MultiIndex":
        return MultiIndex((j, -v) for j, v in self.entries if v < 0)

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def to_json(self) -> list[list[int]]:
        return [[j, v] for j, v in self.entries]

    def __repr__(self) -> str:
        body = " + ".join(f"{v}e_{j}" for j, v in self.entries)
        return f"{type(self).__name__}({body or '0'})"


class MultiIndex(SignedIndexVector):
    """Sparse exponent vector with non-negative entries."""

    __slots__ = ()

    def __init__(self, entries: Entries = ()):
        super().__init__(entries)
        if any(v < 0 for _, v in self.entries):
            raise ValueError(f"negative exponent in {self.entries}")

    @property
    def total(self) -> int:
        return sum(v for _, v in self.entries)

    def __add__(self, other):
        out = SignedIndexVector.__add__(self, other)
        return MultiIndex(out) if isinstance(other, MultiIndex) else out


def mass(ell: Entries) -> int:
    """Sum of the entries."""
    return sum(v for _, v in _canonical(ell))


def momentum(ell: Entries) -> int:
    """Sum of ``j * l_j``."""
    return sum(j * v for j, v in _canonical(ell))


def quad_moment(ell: Entries) -> int:
    """Sum of ``j**2 * l_j``."""
    return sum(j * j * v for j, v in _canonical(ell))


def is_admissible_pair(alpha: Entries, beta: Entries) -> bool:
    """True when ``alpha - beta`` conserves both mass and momentum."""
    ell = SignedIndexVector(alpha) - SignedIndexVector(beta)
    return mass(ell) == 0 and momentum(ell) == 0


@dataclass(frozen=True)
class ModeSet:
    """Finite set of Fourier modes split into tangential and normal sites.

    Tangential modes are the powers of two ``1, 2, ..., 2**h_max``; every
    other mode of ``[-m, m]`` is normal.
    """

    h_max: int = 4
    m: int = 16
    tangential: tuple[int, ...] = field(init=False)
    normal: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.h_max < 0:
            raise ValueError("h_max must be non-negative")
        top = 2 ** self.h_max
        if not top <= self.m < 2 * top:
            raise ValueError(
                f"m={self.m} must satisfy 2**h_max <= m < 2**(h_max+1) so that the "
                "tangential modes are exactly the powers of two up to m"
            )
        tang = tuple(2**h for h in range(self.h_max + 1))
        object.__setattr__(self, "tangential", tang)
        object.__setattr__(
            self, "normal", tuple(j for j in range(-self.m, self.m + 1) if j not in tang)
        )

    @cached_property
    def modes(self) -> tuple[int, ...]:
        return tuple(range(-self.m, self.m + 1))

    @cached_property
    def index(self) -> dict[int, int]:
        return {j: i for i, j in enumerate(self.modes)}

    def __contains__(self, mode: int) -> bool:
        return -self.m <= mode <= self.m

    def is_tangential(self, mode: int) -> bool:
        return mode in self.tangential

    def covers(self, vec: Entries) -> bool:
        return all(j in self for j, _ in _canonical(vec))

    def to_json(self) -> dict:
        return {"h_max": self.h_max, "m": self.m}
