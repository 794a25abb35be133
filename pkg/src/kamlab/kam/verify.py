"""Checks on the final torus: field residual, explicit trajectories and their time regularity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hamiltonian import FrequencyVector, HamiltonianPoly, NormParams, PolyEvaluator, diagonal, weight_bracket, weighted_norm
from ..torus import CenteredPoly, TorusData, project_degree, to_centered, to_plain


class NotNormalFormError(ValueError):
    pass


def _perturbation(N, omega: FrequencyVector, torus: TorusData) -> tuple[HamiltonianPoly, CenteredPoly]:
    """Plain and centered forms of ``N - D(omega)``; a centered ``N`` already omits ``D``."""
    if isinstance(N, CenteredPoly):
        return to_plain(N), N
    plain = N - diagonal(omega, N.degree_cap)
    return plain, to_centered(plain, torus)


def torus_residual(
    N,
    omega: FrequencyVector,
    torus: TorusData,
    n_phase_samples: int = 16,
    seed: int = 0,
    norm: NormParams | None = None,
    normal_tol: float = 1e-9,
    check_normal_form: bool = True,
) -> float:
    """``sup_phi sup_j |field_j| <<j>>^p / r`` for ``N - D(omega)`` at random points of the torus.

    The field is ``-i dN/dū``. Zero means the flow on the torus rotates
    each ``u_j`` at the constant frequency ``omega_j``. With ``check_normal_form`` the
    degree <= 0 part of ``N`` (constants aside) must be below ``normal_tol``.
    """
    norm = norm or NormParams(1.0, 1.0)
    plain, centered = _perturbation(N, omega, torus)
    if check_normal_form:
        low = weighted_norm(project_degree(centered, "<=0"), norm)
        if low > normal_tol:
            raise NotNormalFormError(f"degree <= 0 part has norm {low:.3e} > {normal_tol:.1e}")
    if len(plain) == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    ms = omega.mode_set
    phases = rng.uniform(0, 2 * np.pi, size=(n_phase_samples, len(ms.tangential)))
    points = np.array([torus.point(ph) for ph in phases])
    _, _, dub = PolyEvaluator(plain)(points)
    weights = weight_bracket(ms.modes) ** norm.p / norm.r
    return float(np.max(np.abs(dub) * weights[None, :]))


def sample_trajectory(
    torus: TorusData,
    omega: FrequencyVector,
    phases: np.ndarray | None,
    times: np.ndarray,
    x: np.ndarray,
) -> np.ndarray:
    """``u(t, x) = sum_j sqrt(I_j) e^{i(omega_j t + phi_j + j x)}``, shape ``(len(times), len(x))``."""
    ms = torus.mode_set
    tang = np.array(ms.tangential)
    amp = np.sqrt(torus.vector)
    freq = np.array([omega[j] for j in ms.tangential])
    phi = np.zeros(len(tang)) if phases is None else np.asarray(phases, dtype=float)
    t = np.asarray(times, dtype=float)[:, None, None]
    xx = np.asarray(x, dtype=float)[None, :, None]
    waves = amp * np.exp(1j * (freq * t + phi + tang * xx))
    return waves.sum(axis=-1)


@dataclass(frozen=True)
class HolderFit:
    """Least-squares slope of ``log sup |u(t + h) - u(t)|`` against ``log h``."""

    exponent: float
    steps: tuple[float, ...]
    increments: tuple[float, ...]


def holder_diagnostic(
    torus: TorusData,
    omega: FrequencyVector,
    steps: np.ndarray | None = None,
    n_times: int = 8,
    n_x: int = 64,
    seed: int = 0,
) -> HolderFit:
    """Finite-difference Hölder exponent in time, taken over the step range ``steps``.

    At finite truncation the trajectory is smooth, so the slope only tracks
    the decay of the actions inside the range between the fastest and the
    slowest tangential frequency.
    """
    if steps is None:
        top = max(abs(omega[j]) for j in torus.mode_set.tangential)
        steps = np.geomspace(1.0 / top, 1.0, 12)
    steps = np.asarray(steps, dtype=float)
    rng = np.random.default_rng(seed)
    t0 = rng.uniform(0, 2 * np.pi, size=n_times)
    x = np.linspace(0, 2 * np.pi, n_x, endpoint=False)
    base = sample_trajectory(torus, omega, None, t0, x)
    incs = []
    for h in steps:
        moved = sample_trajectory(torus, omega, None, t0 + h, x)
        incs.append(float(np.max(np.abs(moved - base))))
    slope = np.polyfit(np.log(steps), np.log(incs), 1)[0]
    return HolderFit(float(slope), tuple(steps.tolist()), tuple(incs))
