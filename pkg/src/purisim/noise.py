"""Time-distributed error channels and the calibrated baseline imperfection.

Bit-flip and phase-flip errors are injected as convex mixtures of the four
error-generation configurations (none / polarization / spatial / both), by
default at Bob's side only.  Baseline hardware imperfection is a per-degree-
of-freedom white-noise admixture whose visibility is calibrated to a target
Bell-state fidelity via F = v + (1 - v)/4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import circuits
from .states import HyperState

BIT_FLIP = "bit_flip"
PHASE_FLIP = "phase_flip"

_BF_CONFIGS = ("EGC_F", "EGC_G", "EGC_H", "EGC_I")
_PF_CONFIGS = ("EGC_B", "EGC_C", "EGC_D", "EGC_E")

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class ErrorDistribution:
    """Branch weights (w_none, w_pol, w_spa, w_both) of one error kind."""

    kind: str
    weights: tuple[float, float, float, float]

    def __post_init__(self):
        if self.kind not in (BIT_FLIP, PHASE_FLIP):
            raise ValueError(f"kind must be {BIT_FLIP!r} or {PHASE_FLIP!r}, got {self.kind!r}")
        w = tuple(float(x) for x in self.weights)
        if len(w) != 4 or any(x < 0 for x in w):
            raise ValueError(f"need 4 non-negative weights, got {self.weights}")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {sum(w)}, expected 1 within 1e-12")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class BaselineNoise:
    """White-noise visibilities per degree of freedom (1.0 = ideal)."""

    visibility_pol: float = 1.0
    visibility_spa: float = 1.0

    def __post_init__(self):
        for v in (self.visibility_pol, self.visibility_spa):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"visibility must be in [0, 1], got {v}")


def independent_rates(p_pol: float, p_spa: float, kind: str = BIT_FLIP) -> ErrorDistribution:
    """Independent per-dof flip probabilities expanded to branch weights."""
    for p in (p_pol, p_spa):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {p}")
    return ErrorDistribution(
        kind=kind,
        weights=(
            (1 - p_pol) * (1 - p_spa),
            p_pol * (1 - p_spa),
            (1 - p_pol) * p_spa,
            p_pol * p_spa,
        ),
    )


def error_configs(kind: str) -> tuple[str, str, str, str]:
    """Configuration names for the (none, pol, spa, both) branches of a kind."""
    if kind == BIT_FLIP:
        return _BF_CONFIGS
    if kind == PHASE_FLIP:
        return _PF_CONFIGS
    raise ValueError(f"unknown error kind {kind!r}")


def apply_error_mixture(state: HyperState, dist: ErrorDistribution,
                        side: str = circuits.BOB) -> HyperState:
    """Convex mixture of the four error branches applied on one side."""
    acc = np.zeros((16, 16), dtype=complex)
    for weight, name in zip(dist.weights, error_configs(dist.kind)):
        if weight == 0.0:
            continue
        branch = apply_error_branch(state, name, side=side)
        acc += weight * branch.rho
    return HyperState(acc)


def apply_error_branch(state: HyperState, config_name: str,
                       side: str = circuits.BOB) -> HyperState:
    """A single deterministic error configuration (one time slot)."""
    lu = circuits.compile_config(config_name, side=side)
    return circuits.apply_unitary(state, lu)


def _dof_pauli_16(pauli_a: np.ndarray, pauli_b: np.ndarray, dof_is_pol: bool) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    if dof_is_pol:
        a = np.kron(eye, pauli_a)  # per-photon mode order is (spatial, pol)
        b = np.kron(eye, pauli_b)
    else:
        a = np.kron(pauli_a, eye)
        b = np.kron(pauli_b, eye)
    return np.kron(a, b)


def _depolarize_dof(rho: np.ndarray, visibility: float, dof_is_pol: bool) -> np.ndarray:
    if visibility == 1.0:
        return rho
    acc = visibility * rho
    w = (1.0 - visibility) / 16.0
    for pa in _PAULIS:
        for pb in _PAULIS:
            k = _dof_pauli_16(pa, pb, dof_is_pol)
            acc = acc + w * (k @ rho @ k.conj().T)
    return acc


def apply_baseline(state: HyperState, noise: BaselineNoise) -> HyperState:
    """Per-dof depolarization via the uniform two-qubit Pauli mixing set.

    For each degree of freedom, with probability (1 - v) the pair of qubits
    carried by that dof (one per photon) is replaced by the maximally mixed
    state; the other dof is untouched.
    """
    rho = _depolarize_dof(state.rho, noise.visibility_pol, dof_is_pol=True)
    rho = _depolarize_dof(rho, noise.visibility_spa, dof_is_pol=False)
    return HyperState(rho)


def calibrate_visibility(target_fidelity: float) -> float:
    """Invert F = v + (1 - v)/4 for the visibility hitting a Bell fidelity."""
    if not 0.25 <= target_fidelity <= 1.0:
        raise ValueError(f"target fidelity must be in [0.25, 1], got {target_fidelity}")
    return (4.0 * target_fidelity - 1.0) / 3.0
