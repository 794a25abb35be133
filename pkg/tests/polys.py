"""Random admissible polynomials and hypothesis strategies shared by the tests."""

import numpy as np
from hypothesis import strategies as st

from kamlab.hamiltonian import HamiltonianPoly
from kamlab.indices import ModeSet, SignedIndexVector

DEFAULT_MODES = ModeSet()


def random_pair(mode_set: ModeSet, rng: np.random.Generator, half_degree: int, max_tries: int = 200):
    """``(alpha, beta)`` with ``|alpha| = |beta| = half_degree`` and zero momentum."""
    modes = np.array(mode_set.modes)
    for _ in range(max_tries):
        alpha = rng.choice(modes, size=half_degree)
        beta = rng.choice(modes, size=half_degree - 1)
        last = int(alpha.sum() - beta.sum())
        if abs(last) <= mode_set.m:
            return {int(j): int((alpha == j).sum()) for j in set(alpha.tolist())}, _counts(list(beta) + [last])
    raise RuntimeError("no admissible pair found")


def _counts(values) -> dict[int, int]:
    out: dict[int, int] = {}
    for v in values:
        out[int(v)] = out.get(int(v), 0) + 1
    return out


def random_hamiltonian(
    mode_set: ModeSet,
    rng: np.random.Generator,
    n_terms: int = 8,
    max_degree: int = 6,
    real: bool = True,
    degree_cap: int = 8,
) -> HamiltonianPoly:
    """Sum of random admissible monomials of plain degree ``<= max_degree``."""
    terms: dict = {}
    for _ in range(n_terms):
        k = int(rng.integers(1, max_degree // 2 + 1))
        alpha, beta = random_pair(mode_set, rng, k)
        c = complex(rng.normal(), rng.normal())
        key = (tuple(sorted(alpha.items())), tuple(sorted(beta.items())))
        terms[key] = terms.get(key, 0) + c
        if real:
            mirror = (key[1], key[0])
            terms[mirror] = terms.get(mirror, 0) + c.conjugate()
    return HamiltonianPoly.from_terms(terms, mode_set, degree_cap=degree_cap)


def sparse_vectors(modes=range(-16, 17), max_entries: int = 5, bound: int = 4):
    """Hypothesis strategy for small signed index vectors."""
    pairs = st.lists(
        st.tuples(st.sampled_from(list(modes)), st.integers(-bound, bound)), max_size=max_entries
    )
    return pairs.map(SignedIndexVector)
