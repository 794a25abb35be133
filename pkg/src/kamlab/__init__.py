"""Counterterm KAM normal forms for NLS on the circle at finite truncation.

Submodules: ``indices`` (multi-indices, mode sets), ``hamiltonian`` (sparse
polynomials, brackets, norms), ``torus`` (torus-centered degree
decomposition and counterterms), ``small_divisors`` (Diophantine audits,
resonance enumeration, measure estimates), ``homological`` (the inverse
of ``L_omega``), ``kam`` (the iteration and its verification) and ``cli``.
"""

from .hamiltonian import FrequencyVector, HamiltonianPoly, NonlinearityModel, NormParams, build_nls, weighted_norm
from .indices import ModeSet, MultiIndex, SignedIndexVector
from .small_divisors import DiophParams, ResonanceBudget
from .torus import CenteredPoly, CounterTerm, TorusData

__version__ = "0.1.0"
