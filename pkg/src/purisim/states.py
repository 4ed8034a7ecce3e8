"""Two-photon hyperentangled states over four waveguide modes per photon.

Each photon (A = Alice, B = Bob) occupies one of four path modes.  A mode
encodes two qubits at once: a spatial (rail) bit s and a polarization bit p
(H = 0, V = 1), with

    mode = 2*s + p        (0 = |0H>, 1 = |0V>, 2 = |1H>, 3 = |1V>)

The joint space is 16-dimensional with basis index 4*m_A + m_B, equivalently
bit order (s_A, p_A, s_B, p_B) from most to least significant.

Density matrices are the canonical representation throughout: error channels
are time-distributed mixtures, so states are generally mixed.  All operations
are pure functions on immutable state objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_EIGENVALUE_FLOOR = -1e-10
COINCIDENCE_FLOOR = 1e-15

POLARIZATION = "polarization"
SPATIAL = "spatial"
DOFS = (POLARIZATION, SPATIAL)

MODE_LABELS = ("0H", "0V", "1H", "1V")


@dataclass(frozen=True)
class ModeMap:
    """Bijection between a waveguide mode index and its (spatial, pol) bits."""

    mode: int
    spatial: int
    polarization: int

    def __post_init__(self):
        if self.mode != 2 * self.spatial + self.polarization:
            raise ValueError(
                f"inconsistent mode map: mode={self.mode}, "
                f"spatial={self.spatial}, polarization={self.polarization}"
            )
        if self.mode not in (0, 1, 2, 3):
            raise ValueError(f"mode must be in 0..3, got {self.mode}")

    @classmethod
    def from_mode(cls, mode: int) -> "ModeMap":
        return cls(mode=mode, spatial=mode >> 1, polarization=mode & 1)

    @classmethod
    def from_bits(cls, spatial: int, polarization: int) -> "ModeMap":
        return cls(mode=2 * spatial + polarization, spatial=spatial,
                   polarization=polarization)


def _validate_density(rho: np.ndarray, dim: int, check_psd: bool = True) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"expected {dim}x{dim} matrix, got {rho.shape}")
    if not np.all(np.isfinite(rho.view(float))):
        raise ValueError("density matrix contains NaN/Inf entries")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise ValueError("density matrix is not Hermitian within 1e-12")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL or abs(np.trace(rho).imag) > TRACE_TOL:
        raise ValueError(f"trace {np.trace(rho)} differs from 1 beyond 1e-12")
    if check_psd:
        lo = float(np.linalg.eigvalsh(rho)[0])
        if lo < PSD_EIGENVALUE_FLOOR:
            raise ValueError(f"smallest eigenvalue {lo:.3e} below PSD tolerance")
    out = rho.copy()
    out.setflags(write=False)
    return out


class HyperState:
    """Immutable 16x16 two-photon density matrix over modes 0..3 per photon."""

    __slots__ = ("rho",)

    def __init__(self, rho):
        object.__setattr__(self, "rho", _validate_density(rho, 16))

    def __setattr__(self, name, value):
        raise AttributeError("HyperState is immutable")

    def __repr__(self):
        return f"HyperState(trace={np.trace(self.rho).real:.6f}, purity={purity(self):.6f})"


class TwoQubitState:
    """Immutable 4x4 density matrix of one degree of freedom of both photons.

    ``check_psd=False`` is reserved for linear-inversion tomography output,
    which is Hermitian and unit-trace but may carry small negative eigenvalues.
    """

    __slots__ = ("rho",)

    def __init__(self, rho, check_psd: bool = True):
        object.__setattr__(self, "rho", _validate_density(rho, 4, check_psd=check_psd))

    def __setattr__(self, name, value):
        raise AttributeError("TwoQubitState is immutable")

    def __repr__(self):
        return f"TwoQubitState(purity={np.trace(self.rho @ self.rho).real:.6f})"


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, (HyperState, TwoQubitState)):
        return state.rho
    return np.asarray(state, dtype=complex)


# ---------------------------------------------------------------------------
# Constructors

def make_initial_state() -> HyperState:
    """Pure hyperentangled pair: equal superposition of |mm> over m = 0..3.

    Factorizes as the product of a spatial Bell pair and a polarization Bell
    pair under the mode convention above.
    """
    vec = np.zeros(16, dtype=complex)
    for m in range(4):
        vec[4 * m + m] = 0.5
    return HyperState(np.outer(vec, vec.conj()))


def bell_phi_plus() -> np.ndarray:
    """(|00> + |11>)/sqrt(2) as a 4-vector; the fidelity target everywhere."""
    return np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)


def maximally_mixed(dim: int = 4) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def werner(visibility: float) -> TwoQubitState:
    """Bell state mixed with white noise: v*|Phi+><Phi+| + (1-v)*I/4."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must be in [0, 1], got {visibility}")
    phi = bell_phi_plus()
    rho = visibility * np.outer(phi, phi.conj()) + (1.0 - visibility) * maximally_mixed(4)
    return TwoQubitState(rho)


# ---------------------------------------------------------------------------
# Operations

def reduced(state: HyperState, dof: str) -> TwoQubitState:
    """Partial trace down to one degree of freedom of both photons.

    dof="polarization" keeps the (p_A, p_B) pair, dof="spatial" the
    (s_A, s_B) pair; the other pair is traced out.
    """
    r = state.rho.reshape(2, 2, 2, 2, 2, 2, 2, 2)  # (sA,pA,sB,pB | primes)
    if dof == POLARIZATION:
        out = np.einsum("apbqarbs->pqrs", r)
    elif dof == SPATIAL:
        out = np.einsum("apbqcpdq->abcd", r)
    else:
        raise ValueError(f"unknown dof {dof!r}, expected one of {DOFS}")
    return TwoQubitState(out.reshape(4, 4))


def fidelity(rho2, target: np.ndarray) -> float:
    """Overlap <target| rho |target> with a normalized pure target state."""
    rho = _as_matrix(rho2)
    t = np.asarray(target, dtype=complex).reshape(-1)
    if rho.shape != (t.size, t.size):
        raise ValueError(f"state {rho.shape} and target dim {t.size} mismatch")
    if abs(np.vdot(t, t).real - 1.0) > 1e-10:
        raise ValueError("target state is not normalized")
    val = complex(t.conj() @ rho @ t)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"fidelity has non-negligible imaginary part {val.imag:.3e}")
    return float(min(max(val.real, 0.0), 1.0))


def purity(state) -> float:
    rho = _as_matrix(state)
    return float(np.trace(rho @ rho).real)


def trace_distance(a, b) -> float:
    """Half the trace norm of the (Hermitian) difference a - b."""
    diff = _as_matrix(a) - _as_matrix(b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def post_select(state: HyperState, modes) -> tuple[HyperState | None, float]:
    """Project both photons onto a mode subset and renormalize.

    Returns (state, success_probability).  The state is None when the
    coincidence probability is below 1e-15 ("no coincidence").
    """
    modes = frozenset(modes)
    if not modes:
        raise ValueError("mode subset must be nonempty")
    if not modes <= {0, 1, 2, 3}:
        raise ValueError(f"modes must be a subset of {{0,1,2,3}}, got {sorted(modes)}")
    keep = np.array([(i // 4 in modes) and (i % 4 in modes) for i in range(16)])
    projected = np.where(np.outer(keep, keep), state.rho, 0.0)
    prob = float(np.trace(projected).real)
    if prob < COINCIDENCE_FLOOR:
        return None, prob
    return HyperState(projected / prob), prob


def mix(states_and_weights) -> HyperState:
    """Convex mixture of HyperStates; weights must sum to 1 within 1e-12."""
    total = sum(w for _, w in states_and_weights)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"mixture weights sum to {total}, expected 1")
    acc = np.zeros((16, 16), dtype=complex)
    for state, w in states_and_weights:
        acc += w * state.rho
    return HyperState(acc)


# ---------------------------------------------------------------------------
# Serialization: sparse JSON listing applies to any density matrix

def density_to_json(state) -> dict:
    """{dim, entries: [[row, col, re, im], ...]} over nonzeros, row-major."""
    rho = _as_matrix(state)
    dim = rho.shape[0]
    entries = []
    for r in range(dim):
        for c in range(dim):
            z = rho[r, c]
            if z.real != 0.0 or z.imag != 0.0:
                entries.append([r, c, float(z.real), float(z.imag)])
    return {"dim": dim, "entries": entries}


def density_from_json(obj: dict) -> np.ndarray:
    dim = int(obj["dim"])
    rho = np.zeros((dim, dim), dtype=complex)
    for r, c, re, im in obj["entries"]:
        rho[int(r), int(c)] = complex(re, im)
    return rho


def save_density_json(state, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(density_to_json(state), fh, sort_keys=True)
        fh.write("\n")


def load_density_json(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return density_from_json(json.load(fh))
