"""Resource estimates for magic-state preparation and Gibbs-state cooling."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from .channels import gibbs_state
from .denoiser import denoise, noisy_ae_model, train_population
from .qstate import DimensionError, phase_fix

__all__ = [
    "MsdIterationMap",
    "MsdConvergenceError",
    "CostReport",
    "CoolingResult",
    "quadratic_msd_map",
    "DEFAULT_MSD_MAP",
    "msd_expected_copies",
    "denoiser_expected_copies",
    "cool_gibbs",
]

INPUTS_PER_ROUND = 5  # five noisy qutrits per distillation attempt
MAX_ROUNDS = 64


class MsdConvergenceError(RuntimeError):
    def __init__(self, msg: str, trace: list[float]):
        super().__init__(f"{msg}; error trace: {trace}")
        self.trace = trace


@dataclass(frozen=True)
class MsdIterationMap:
    """One distillation round acting on the depolarizing error of the input copies.

    ``output_error`` must push errors below ``threshold`` down and those
    above it up.
    """

    success_probability: Callable[[float], float]
    output_error: Callable[[float], float]
    threshold: float


def quadratic_msd_map(threshold: float = 0.233, success: float = 0.04) -> MsdIterationMap:
    """eps -> eps^2 / threshold with a constant per-round acceptance rate."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if not 0 < success <= 1:
        raise ValueError("success probability must lie in (0, 1]")
    a = 1.0 / threshold
    return MsdIterationMap(lambda e: success, lambda e: min(a * e * e, 1.0), threshold)


DEFAULT_MSD_MAP = quadratic_msd_map()


class CostReport(NamedTuple):
    method: str  # "msd" or "denoiser"
    expected_copies: float  # inf when the target cannot be reached
    achieved_fidelity: float

    @property
    def infinite(self) -> bool:
        return not np.isfinite(self.expected_copies)


def _error_to_fidelity(eps: float, n: int) -> float:
    return 1 - (n - 1) * eps / n


def msd_expected_copies(
    iteration_map: MsdIterationMap, p_in: float, target_fidelity: float, n: int = 3
) -> CostReport:
    """Expected noisy inputs consumed by repeated distillation rounds.

    Errors are depolarizing probabilities of a qudit of dimension ``n``; the
    target fidelity is converted to that scale as (1 - F) n / (n - 1).  Each
    round needs five accepted inputs, so C_k = 5 C_{k-1} / s(eps_{k-1}).
    """
    if not 0 <= p_in <= 1:
        raise ValueError("p_in must lie in [0, 1]")
    if n < 2:
        raise DimensionError("need n >= 2")
    eps_target = (1 - target_fidelity) * n / (n - 1)
    if p_in >= iteration_map.threshold and p_in > eps_target:
        return CostReport("msd", float("inf"), _error_to_fidelity(p_in, n))
    eps, copies = float(p_in), 1.0
    trace = [eps]
    while eps > eps_target:
        if len(trace) > MAX_ROUNDS:
            raise MsdConvergenceError(f"target error {eps_target:.3g} not reached in {MAX_ROUNDS} rounds", trace)
        s = iteration_map.success_probability(eps)
        if s <= 0:
            raise MsdConvergenceError("distillation round never succeeds", trace)
        copies = INPUTS_PER_ROUND * copies / s
        eps = float(iteration_map.output_error(eps))
        trace.append(eps)
    return CostReport("msd", copies, _error_to_fidelity(eps, n))


def denoiser_expected_copies(p_in: float, p_ae: float, n: int) -> CostReport:
    """Repeat-until-accepted cost of a noisy K=1 denoiser on a depolarized input."""
    if n < 2:
        raise DimensionError("need n >= 2")
    if not (0 <= p_in <= 1 and 0 <= p_ae <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    p_denoise, fid = noisy_ae_model(p_ae, p_in, n)
    if p_denoise <= 0:
        raise ValueError("denoiser never accepts")
    return CostReport("denoiser", 1.0 / p_denoise, fid)


class CoolingResult(NamedTuple):
    ground: np.ndarray
    fidelity_vs_exact: float
    success_probability: float
    degenerate: bool


def cool_gibbs(h: np.ndarray, beta: float, degeneracy_tol: float = 1e-10) -> CoolingResult:
    """Extract the ground state from a thermal state with a K=1 denoiser.

    If the ground energy is degenerate a warning is issued and the fidelity
    is measured against the whole ground eigenspace.
    """
    h = np.asarray(h, dtype=complex)
    rho = gibbs_state(h, beta)
    den, _ = train_population(rho, 1)
    out = denoise(den, rho)
    ground = phase_fix(den.decoder[:, 0])
    energies, vecs = scipy.linalg.eigh(h)
    n_ground = int(np.sum(energies - energies[0] < degeneracy_tol))
    degenerate = n_ground > 1
    if degenerate:
        warnings.warn(f"ground energy is {n_ground}-fold degenerate; reporting overlap with the ground eigenspace")
    g = vecs[:, :n_ground]
    fid = float(np.sum(np.abs(g.conj().T @ ground) ** 2))
    return CoolingResult(ground, fid, out.success_probability, degenerate)
