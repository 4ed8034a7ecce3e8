"""Reconfigurable circuit configurations compiled to per-photon 4x4 unitaries.

Named configurations (mode action under mode = 2*spatial + polarization):

    EGC_B          identity                 (phase-error set, no error)
    EGC_C          Z_pol  = diag(1,-1,1,-1) (phase error, polarization)
    EGC_D          Z_spa  = diag(1,1,-1,-1) (phase error, spatial)
    EGC_E          Z_pol . Z_spa            (phase error, both)
    EGC_F          identity                 (bit-error set, no error)
    EGC_G          X_pol  = swap 0<->1, 2<->3
    EGC_H          X_spa  = swap 0<->2, 1<->3
    EGC_I          X_pol . X_spa
    HADAMARD_BANK  H_spa (x) H_pol          (converts phase errors to bit errors)
    PURIFY_ON      mode permutation 0->1, 1->3, 2->2, 3->0
    MEASURE_POL    identity at state level (selects tomography routing)
    MEASURE_SPATIAL identity at state level
    IDENTITY       identity

Configurations compile to their exact ideal unitaries.  The single hardware
imperfection knob is ``splitting_error``: the deviation of every constituent
directional coupler from 50/50 splitting, applied through the MZI model below.
Phase-only configurations and bar-state MZIs are exactly robust to it; cross
and Hadamard states leak.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import HyperState

UNITARITY_TOL = 1e-12

ALICE = "alice"
BOB = "bob"
BOTH = "both"
SIDES = (ALICE, BOB, BOTH)

CONFIG_NAMES = (
    "EGC_B", "EGC_C", "EGC_D", "EGC_E",
    "EGC_F", "EGC_G", "EGC_H", "EGC_I",
    "HADAMARD_BANK", "PURIFY_ON", "MEASURE_POL", "MEASURE_SPATIAL", "IDENTITY",
)

PURIFY_PERMUTATION = (1, 3, 2, 0)  # image of modes 0..3


@dataclass(frozen=True)
class MziSetting:
    """Mach-Zehnder interferometer phases and coupler splitting deviation.

    theta is the internal phase (between the two couplers), phi the external
    one.  splitting_error shifts both couplers' power splitting to
    (0.5 + eps, 0.5 - eps).
    """

    theta: float
    phi: float = 0.0
    splitting_error: float = 0.0

    def __post_init__(self):
        if not -0.5 < self.splitting_error < 0.5:
            raise ValueError(
                f"splitting_error must lie in (-0.5, 0.5), got {self.splitting_error}"
            )


def directional_coupler(splitting_error: float = 0.0) -> np.ndarray:
    """2x2 coupler with power splitting (0.5+eps, 0.5-eps), cross phase i."""
    if not -0.5 < splitting_error < 0.5:
        raise ValueError(f"splitting_error must lie in (-0.5, 0.5), got {splitting_error}")
    t = np.sqrt(0.5 + splitting_error)
    k = np.sqrt(0.5 - splitting_error)
    return np.array([[t, 1j * k], [1j * k, t]], dtype=complex)


def _phase(alpha: float) -> np.ndarray:
    return np.diag([np.exp(1j * alpha), 1.0]).astype(complex)


def mzi_unitary(setting: MziSetting) -> np.ndarray:
    """U = DC(eps) . P(theta) . DC(eps) . P(phi) with P(a) = diag(e^{ia}, 1).

    For eps = 0 the cross-port power is cos^2(theta/2): theta = 0 is the
    cross state, theta = pi the bar state (exactly, for any eps), and
    theta = pi/2 with phi = 0 is a Hadamard up to global phase.
    """
    dc = directional_coupler(setting.splitting_error)
    return dc @ _phase(setting.theta) @ dc @ _phase(setting.phi)


@dataclass(frozen=True)
class LocalUnitary:
    """A compiled per-photon 4x4 unitary tagged with the side it acts on."""

    u4: np.ndarray
    side: str
    name: str = ""

    def __post_init__(self):
        u = np.asarray(self.u4, dtype=complex)
        if u.shape != (4, 4):
            raise ValueError(f"expected 4x4 matrix, got {u.shape}")
        if np.max(np.abs(u @ u.conj().T - np.eye(4))) > UNITARITY_TOL:
            raise ValueError("matrix is not unitary within 1e-12")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "u4", u)


# ---------------------------------------------------------------------------
# Building blocks for the physical (imperfect-coupler) realizations

def _pair_block(u2: np.ndarray, pair: tuple[int, int]) -> np.ndarray:
    """Embed a 2x2 matrix on a mode pair, identity elsewhere."""
    a, b = pair
    out = np.eye(4, dtype=complex)
    out[a, a], out[a, b] = u2[0, 0], u2[0, 1]
    out[b, a], out[b, b] = u2[1, 0], u2[1, 1]
    return out


def _cross(eps: float) -> np.ndarray:
    # -i correction makes the ideal (eps=0) cross an exact real swap
    return -1j * mzi_unitary(MziSetting(theta=0.0, splitting_error=eps))


def _hadamard2(eps: float) -> np.ndarray:
    # mzi(pi/2, 0) = exp(3i*pi/4) H at eps=0; strip the phase
    return np.exp(-3j * np.pi / 4) * mzi_unitary(MziSetting(theta=np.pi / 2, splitting_error=eps))


def _x_pol(eps: float) -> np.ndarray:
    c = _cross(eps)
    return _pair_block(c, (0, 1)) @ _pair_block(c, (2, 3))


def _x_spa(eps: float) -> np.ndarray:
    c = _cross(eps)
    return _pair_block(c, (0, 2)) @ _pair_block(c, (1, 3))


def _hadamard_bank(eps: float) -> np.ndarray:
    h = _hadamard2(eps)
    pol_stage = _pair_block(h, (0, 1)) @ _pair_block(h, (2, 3))
    spa_stage = _pair_block(h, (0, 2)) @ _pair_block(h, (1, 3))
    return spa_stage @ pol_stage


def _purify(eps: float) -> np.ndarray:
    # MZI cross on rail-0 pair, passive waveguide crossing 0<->3, then the
    # calibrated phase mask that makes the eps=0 matrix an exact permutation
    swap03 = np.eye(4, dtype=complex)[[3, 1, 2, 0]]
    stage = swap03 @ _pair_block(1j * _cross(eps), (0, 1))
    return np.diag([1.0, -1j, 1.0, -1j]).astype(complex) @ stage


def compile_config(name: str, side: str = BOTH, splitting_error: float = 0.0) -> LocalUnitary:
    """Compile a named configuration to its per-photon 4x4 unitary.

    Names are case-insensitive.  splitting_error = 0 yields the exact ideal
    matrices listed in the module docstring.
    """
    key = str(name).strip().upper()
    if key not in CONFIG_NAMES:
        raise ValueError(f"unknown circuit configuration {name!r}")
    eps = splitting_error
    if key in ("EGC_B", "EGC_F", "MEASURE_POL", "MEASURE_SPATIAL", "IDENTITY"):
        # bar-state MZIs plus phase calibration: exactly identity for any eps
        u = np.eye(4, dtype=complex)
    elif key == "EGC_C":
        u = np.diag([1.0, -1.0, 1.0, -1.0]).astype(complex)
    elif key == "EGC_D":
        u = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    elif key == "EGC_E":
        u = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)
    elif key == "EGC_G":
        u = _x_pol(eps)
    elif key == "EGC_H":
        u = _x_spa(eps)
    elif key == "EGC_I":
        u = _x_pol(eps) @ _x_spa(eps)
    elif key == "HADAMARD_BANK":
        u = _hadamard_bank(eps)
    else:  # PURIFY_ON
        u = _purify(eps)
    return LocalUnitary(u4=u, side=side, name=key)


def apply_unitary(state: HyperState, lu: LocalUnitary) -> HyperState:
    """rho -> (U_A (x) U_B) rho (U_A (x) U_B)^dagger per the unitary's side."""
    eye = np.eye(4, dtype=complex)
    if lu.side == ALICE:
        u16 = np.kron(lu.u4, eye)
    elif lu.side == BOB:
        u16 = np.kron(eye, lu.u4)
    else:
        u16 = np.kron(lu.u4, lu.u4)
    return HyperState(u16 @ state.rho @ u16.conj().T)


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max entrywise deviation between u and v after optimal global phase."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    overlap = np.trace(v.conj().T @ u)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(u - phase * v)))
