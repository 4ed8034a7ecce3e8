"""CHSH inequality evaluation, exact and from finite counts.

Correlations are E(a, b) = Tr[rho (a.sigma)(x)(b.sigma)] for unit Bloch
vectors; the combination is

    S = E(a,b) - E(a,b') + E(a',b) + E(a',b')

(minus on the (a,b') term).  The canonical settings put the maximum 2*sqrt(2)
on the spatial/polarization Bell state targeted everywhere in this package.
A deterministic grid-plus-refinement optimizer finds state-specific optimal
settings for noisy states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import TwoQubitState
from .tomography import CountRecord, DetectionParams, sample_counts

TSIRELSON = 2.0 * np.sqrt(2.0)

PAIR_KEYS = ("ab", "abp", "apb", "apbp")

_SIGMA = np.stack([
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
])

_STREAM_CHSH = 1


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError(f"direction {v} is not unit length within 1e-12")
    return v


@dataclass(frozen=True, eq=False)
class ChshSettings:
    """Four measurement directions on the Bloch sphere."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray

    def __post_init__(self):
        for name in ("a", "a_prime", "b", "b_prime"):
            v = _unit(getattr(self, name))
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    def pairs(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        return {"ab": (self.a, self.b), "abp": (self.a, self.b_prime),
                "apb": (self.a_prime, self.b), "apbp": (self.a_prime, self.b_prime)}


@dataclass(frozen=True)
class ChshResult:
    S: float
    correlations: tuple[float, float, float, float]  # E(ab), E(ab'), E(a'b), E(a'b')
    standard_error: float = 0.0

    def __post_init__(self):
        if abs(self.S) > TSIRELSON + 4.0 * self.standard_error + 1e-9:
            raise ValueError(f"|S| = {abs(self.S)} exceeds the quantum bound")


def canonical_settings() -> ChshSettings:
    """a = z, a' = x, b = (z+x)/sqrt2, b' = (x-z)/sqrt2: S = 2*sqrt(2) on the
    Bell state under this sign convention."""
    s = 1.0 / np.sqrt(2.0)
    return ChshSettings(a=np.array([0.0, 0.0, 1.0]),
                        a_prime=np.array([1.0, 0.0, 0.0]),
                        b=np.array([s, 0.0, s]),
                        b_prime=np.array([s, 0.0, -s]))


def _as4(rho2) -> np.ndarray:
    return rho2.rho if isinstance(rho2, TwoQubitState) else np.asarray(rho2, dtype=complex)


def correlation(rho2, dir_a, dir_b) -> float:
    """E(a, b) = Tr[rho (a.sigma)(x)(b.sigma)], exact from the state."""
    na, nb = _unit(dir_a), _unit(dir_b)
    op = np.kron(np.einsum("i,ijk->jk", na, _SIGMA), np.einsum("i,ijk->jk", nb, _SIGMA))
    val = float(np.trace(_as4(rho2) @ op).real)
    return val


def correlation_matrix(rho2) -> np.ndarray:
    """T_ij = Tr[rho sigma_i (x) sigma_j] over (x, y, z)."""
    rho = _as4(rho2)
    return np.array([[np.trace(rho @ np.kron(_SIGMA[i], _SIGMA[j])).real
                      for j in range(3)] for i in range(3)])


def chsh_value(rho2, settings: ChshSettings | None = None) -> ChshResult:
    """Exact S for a state at given settings (canonical by default)."""
    settings = settings or canonical_settings()
    e = [correlation(rho2, *settings.pairs()[k]) for k in PAIR_KEYS]
    return ChshResult(S=e[0] - e[1] + e[2] + e[3], correlations=tuple(e))


def pair_outcome_probs(rho2, dir_a, dir_b) -> np.ndarray:
    """Joint +/- outcome probabilities for one direction pair (++,+-,-+,--)."""
    na, nb = _unit(dir_a), _unit(dir_b)
    rho = _as4(rho2)
    eye = np.eye(2, dtype=complex)
    pa = [0.5 * (eye + np.einsum("i,ijk->jk", na, _SIGMA)),
          0.5 * (eye - np.einsum("i,ijk->jk", na, _SIGMA))]
    pb = [0.5 * (eye + np.einsum("i,ijk->jk", nb, _SIGMA)),
          0.5 * (eye - np.einsum("i,ijk->jk", nb, _SIGMA))]
    p = np.array([np.trace(rho @ np.kron(pa[i], pb[j])).real
                  for i in (0, 1) for j in (0, 1)])
    p = np.clip(p, 0.0, None)
    return p / np.sum(p)


def sample_chsh(rho2, settings: ChshSettings, params: DetectionParams,
                integration_s: float, rate_scale: float = 1.0) -> dict[str, CountRecord]:
    """Seeded Poisson counts for the four CHSH direction pairs."""
    records = {}
    for idx, key in enumerate(PAIR_KEYS):
        probs = pair_outcome_probs(rho2, *settings.pairs()[key])
        records[key] = sample_counts(probs, None, params, integration_s,
                                     rate_scale=rate_scale, pair=key,
                                     stream_key=(_STREAM_CHSH, idx))
    return records


def chsh_from_counts(records: dict[str, CountRecord]) -> ChshResult:
    """S and its standard error from measured counts.

    E = (n_pp + n_mm - n_pm - n_mp)/n_total per pair; the uncertainty uses
    binomial propagation per correlation, summed in quadrature.
    """
    missing = [k for k in PAIR_KEYS if k not in records]
    if missing:
        raise ValueError(f"missing CHSH pairs: {missing}")
    e = []
    var = 0.0
    for key in PAIR_KEYS:
        rec = records[key]
        n = np.array(rec.counts, dtype=float)
        total = rec.total
        if total == 0:
            raise ValueError(f"pair {key} has zero total counts")
        ek = (n[0] + n[3] - n[1] - n[2]) / total
        e.append(float(ek))
        var += (1.0 - ek**2) / total
    return ChshResult(S=e[0] - e[1] + e[2] + e[3], correlations=tuple(e),
                      standard_error=float(np.sqrt(var)))


# ---------------------------------------------------------------------------
# Deterministic settings optimizer

def _sphere_grid(n_polar: int, n_azimuth: int) -> np.ndarray:
    thetas = np.linspace(0.0, np.pi, n_polar)
    phis = np.linspace(0.0, 2.0 * np.pi, n_azimuth, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    grid = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp),
                     np.cos(tt)], axis=-1).reshape(-1, 3)
    norms = np.linalg.norm(grid, axis=1, keepdims=True)
    return grid / norms


def _safe_dir(v: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        return fallback
    return v / norm


def optimize_settings(rho2, n_polar: int = 9, n_azimuth: int = 16,
                      refine_iters: int = 60) -> tuple[ChshSettings, ChshResult]:
    """Grid search over (b, b') with closed-form best (a, a'), then
    alternating refinement.  Deterministic: fixed grid order, a new maximum
    must exceed the old one, and the first (lexicographically smallest) grid
    point wins ties.
    """
    t = correlation_matrix(rho2)
    grid = _sphere_grid(n_polar, n_azimuth)
    tg = grid @ t.T  # row i: T b_i

    # S(b, b') = |T(b - b')| + |T(b + b')| once a, a' are chosen optimally
    best_val = -np.inf
    best_pair = (0, 0)
    for i in range(len(grid)):
        diff = np.linalg.norm(tg[i] - tg, axis=1)
        summ = np.linalg.norm(tg[i] + tg, axis=1)
        vals = diff + summ
        j = int(np.argmax(vals))
        if vals[j] > best_val + 1e-15:
            best_val = float(vals[j])
            best_pair = (i, j)

    b, bp = grid[best_pair[0]], grid[best_pair[1]]
    z = np.array([0.0, 0.0, 1.0])
    x = np.array([1.0, 0.0, 0.0])
    for _ in range(refine_iters):
        a = _safe_dir(t @ (b - bp), z)
        ap = _safe_dir(t @ (b + bp), x)
        b = _safe_dir(t.T @ (a + ap), b)
        bp = _safe_dir(t.T @ (ap - a), bp)
    a = _safe_dir(t @ (b - bp), z)
    ap = _safe_dir(t @ (b + bp), x)

    settings = ChshSettings(a=a, a_prime=ap, b=b, b_prime=bp)
    return settings, chsh_value(rho2, settings)
