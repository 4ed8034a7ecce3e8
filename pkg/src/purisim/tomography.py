"""Two-qubit state tomography from simulated coincidence counts.

Nine measurement settings (both sides in Z, X or Y) form the minimal complete
Pauli set.  Counts are Poisson-sampled from Born-rule probabilities at a
configurable coincidence rate, with an optional flat dark-count floor.
Reconstruction is by linear inversion (exact on exact frequencies, not
guaranteed positive) or by maximum-likelihood iteration in the style of
Hradil's R*rho*R fixed point, with step dilution to keep the log-likelihood
non-decreasing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .circuits import MziSetting, mzi_unitary
from .states import POLARIZATION, SPATIAL, TwoQubitState

BASES = ("Z", "X", "Y")
OUTCOME_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))  # ++, +-, -+, --

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_DOF_INDEX = {POLARIZATION: 0, SPATIAL: 1}

# stream-domain tags keeping tomography and CHSH sampling independent
_STREAM_TOMOGRAPHY = 0
_STREAM_CHSH = 1


@dataclass(frozen=True)
class MeasurementSetting:
    basis_a: str
    basis_b: str
    dof: str = POLARIZATION

    def __post_init__(self):
        if self.basis_a not in BASES or self.basis_b not in BASES:
            raise ValueError(f"bases must be in {BASES}, got "
                             f"({self.basis_a!r}, {self.basis_b!r})")
        if self.dof not in _DOF_INDEX:
            raise ValueError(f"unknown dof {self.dof!r}")

    @property
    def index(self) -> int:
        return 3 * BASES.index(self.basis_a) + BASES.index(self.basis_b)


def all_settings(dof: str = POLARIZATION) -> tuple[MeasurementSetting, ...]:
    """The tomographically complete 9-setting grid for one dof."""
    return tuple(MeasurementSetting(a, b, dof) for a in BASES for b in BASES)


@dataclass(frozen=True)
class DetectionParams:
    """Coincidence-rate model: Poisson counting at a detected pair rate.

    pair_rate is the detected coincidence rate unless pair_rate_is_generated
    is set, in which case both detectors' efficiency is applied.
    Dark coincidences add a flat basis-independent floor split over the four
    outcomes.
    """

    pair_rate: float = 40.0
    efficiency: float = 0.25
    dark_coincidence_rate: float = 0.0
    seed: int = 0
    pair_rate_is_generated: bool = False

    def __post_init__(self):
        if self.pair_rate < 0 or self.dark_coincidence_rate < 0:
            raise ValueError("rates must be non-negative")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")

    @property
    def detected_rate(self) -> float:
        if self.pair_rate_is_generated:
            return self.pair_rate * self.efficiency ** 2
        return self.pair_rate


@dataclass(frozen=True)
class CountRecord:
    """Outcome counts (++, +-, -+, --) for one measurement setting.

    ``setting`` is None for CHSH records, which are keyed by ``pair``
    ("ab", "abp", "apb" or "apbp") instead.
    """

    setting: MeasurementSetting | None
    counts: tuple[int, int, int, int]
    integration_s: float
    pair: str = ""

    def __post_init__(self):
        c = tuple(int(x) for x in self.counts)
        if len(c) != 4 or any(x < 0 for x in c):
            raise ValueError(f"need 4 non-negative integer counts, got {self.counts}")
        object.__setattr__(self, "counts", c)
        if self.integration_s < 0:
            raise ValueError("integration time must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class TomographyResult:
    rho_hat: TwoQubitState
    method: str
    iterations: int = 0
    converged: bool = True
    log_likelihood: float | None = None
    min_eigenvalue: float = 0.0
    ll_trace: tuple[float, ...] = field(default=(), repr=False)


# ---------------------------------------------------------------------------
# Projectors and probabilities

def _rotation(basis: str, splitting_error: float) -> np.ndarray:
    """Per-qubit unitary mapping the basis eigenvectors onto Z eigenvectors.

    Realized with the MZI model so the splitting_error knob distorts X and Y
    measurements the way an imperfect interferometer would; the bar state
    used for Z is exactly robust.
    """
    if basis == "Z":
        return np.eye(2, dtype=complex)
    if basis == "X":
        return mzi_unitary(MziSetting(theta=np.pi / 2, phi=0.0,
                                      splitting_error=splitting_error))
    return mzi_unitary(MziSetting(theta=np.pi / 2, phi=np.pi / 2,
                                  splitting_error=splitting_error))


def projectors(setting: MeasurementSetting, splitting_error: float = 0.0) -> np.ndarray:
    """The four outcome projectors of a setting, stacked (4, 4, 4).

    Outcome order ++, +-, -+, --.  They are orthogonal and complete for any
    splitting_error; at 0 they are the exact Pauli eigenprojectors.
    """
    va = _rotation(setting.basis_a, splitting_error)
    vb = _rotation(setting.basis_b, splitting_error)
    outs = []
    for sa, sb in OUTCOME_SIGNS:
        ka = va.conj().T[:, 0 if sa > 0 else 1]
        kb = vb.conj().T[:, 0 if sb > 0 else 1]
        k = np.kron(ka, kb)
        outs.append(np.outer(k, k.conj()))
    return np.stack(outs)


def outcome_probs(rho2, setting: MeasurementSetting,
                  splitting_error: float = 0.0) -> np.ndarray:
    """Born-rule outcome probabilities, clipped at 0 and renormalized."""
    rho = rho2.rho if isinstance(rho2, TwoQubitState) else np.asarray(rho2, dtype=complex)
    p = np.einsum("kij,ji->k", projectors(setting, splitting_error), rho).real
    if np.min(p) < -1e-12:
        raise ValueError(f"negative outcome probability {np.min(p):.3e}")
    p = np.clip(p, 0.0, None)
    return p / np.sum(p)


# ---------------------------------------------------------------------------
# Count simulation

def _stream_rng(params: DetectionParams, stream_key: tuple[int, ...]) -> np.random.Generator:
    # per-setting derivation: outcomes are independent across settings and
    # bit-identical regardless of sampling order
    return np.random.default_rng([int(params.seed) & (2**64 - 1), *stream_key])


def sample_counts(probs, setting: MeasurementSetting | None, params: DetectionParams,
                  integration_s: float, rate_scale: float = 1.0,
                  pair: str = "", stream_key: tuple[int, ...] | None = None) -> CountRecord:
    """Poisson counts with mean rate*T*p_k + dark*T/4 per outcome.

    Deterministic for a given (seed, setting/stream) pair.  rate_scale folds
    in post-selection success probability when sampling a purified state.
    """
    if integration_s < 0:
        raise ValueError("integration time must be non-negative")
    p = np.asarray(probs, dtype=float)
    if stream_key is None:
        if setting is None:
            raise ValueError("need a setting or an explicit stream_key")
        stream_key = (_STREAM_TOMOGRAPHY, _DOF_INDEX[setting.dof], setting.index)
    mean = (params.detected_rate * rate_scale * integration_s * p
            + params.dark_coincidence_rate * integration_s / 4.0)
    counts = _stream_rng(params, stream_key).poisson(mean)
    return CountRecord(setting=setting, counts=tuple(int(c) for c in counts),
                       integration_s=integration_s, pair=pair)


def sample_tomography(rho2, dof: str, params: DetectionParams, integration_s: float,
                      rate_scale: float = 1.0, splitting_error: float = 0.0
                      ) -> list[CountRecord]:
    """CountRecords for the full 9-setting grid of one dof."""
    return [
        sample_counts(outcome_probs(rho2, s, splitting_error), s, params,
                      integration_s, rate_scale=rate_scale)
        for s in all_settings(dof)
    ]


# ---------------------------------------------------------------------------
# Reconstruction

def _indexed(records) -> dict[tuple[str, str], CountRecord]:
    by_key: dict[tuple[str, str], CountRecord] = {}
    for rec in records:
        if rec.setting is None:
            raise ValueError("tomography records need a MeasurementSetting")
        key = (rec.setting.basis_a, rec.setting.basis_b)
        if key in by_key:
            raise ValueError(f"duplicate setting {key}")
        by_key[key] = rec
    missing = [(a, b) for a in BASES for b in BASES if (a, b) not in by_key]
    if missing:
        raise ValueError(f"missing settings: {missing}")
    for key, rec in by_key.items():
        if rec.total == 0:
            raise ValueError(f"setting {key} has zero total counts")
    return by_key


def linear_inversion(records) -> TomographyResult:
    """Pauli-expectation inversion: exact on exact frequencies.

    Two-qubit correlators come from the matching setting; single-qubit terms
    average the marginals of the three settings sharing that basis.  The
    result is Hermitian with unit trace but may have negative eigenvalues at
    finite statistics (flagged via min_eigenvalue, not repaired).
    """
    by_key = _indexed(records)
    freq = {k: np.array(r.counts, dtype=float) / r.total for k, r in by_key.items()}
    sa = np.array([s[0] for s in OUTCOME_SIGNS], dtype=float)
    sb = np.array([s[1] for s in OUTCOME_SIGNS], dtype=float)

    e_ab = {(a, b): float(freq[(a, b)] @ (sa * sb)) for a in BASES for b in BASES}
    e_a = {a: float(np.mean([freq[(a, b)] @ sa for b in BASES])) for a in BASES}
    e_b = {b: float(np.mean([freq[(a, b)] @ sb for a in BASES])) for b in BASES}

    eye = np.eye(2, dtype=complex)
    rho = np.kron(eye, eye).astype(complex)
    for a in BASES:
        rho += e_a[a] * np.kron(_PAULI[a], eye)
    for b in BASES:
        rho += e_b[b] * np.kron(eye, _PAULI[b])
    for a in BASES:
        for b in BASES:
            rho += e_ab[(a, b)] * np.kron(_PAULI[a], _PAULI[b])
    rho /= 4.0
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    return TomographyResult(
        rho_hat=TwoQubitState(rho, check_psd=False),
        method="linear_inversion",
        min_eigenvalue=min_eig,
    )


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> float:
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log(np.clip(probs[mask], 1e-300, None))))


def mle_reconstruct(records, tol: float = 1e-10, max_iter: int = 10000) -> TomographyResult:
    """Maximum-likelihood reconstruction by iterated R*rho*R.

    R = sum_k (n_k / p_k) Pi_k / N.  A plain step can occasionally lower the
    likelihood; when it does, the step is diluted towards the identity until
    the likelihood is non-decreasing, so the recorded trace is monotone.
    The output is positive semidefinite with unit trace by construction.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    by_key = _indexed(records)
    pis = np.concatenate([projectors(by_key[(a, b)].setting)
                          for a in BASES for b in BASES])
    counts = np.concatenate([np.array(by_key[(a, b)].counts, dtype=float)
                             for a in BASES for b in BASES])
    n_total = float(np.sum(counts))

    rho = np.eye(4, dtype=complex) / 4.0
    probs = np.einsum("kij,ji->k", pis, rho).real
    ll = _log_likelihood(counts, probs)
    trace = [ll]
    converged = False
    iterations = 0
    eye = np.eye(4, dtype=complex)

    for iterations in range(1, max_iter + 1):
        weights = np.where(counts > 0, counts / np.clip(probs, 1e-300, None), 0.0)
        r_op = np.einsum("k,kij->ij", weights / n_total, pis)

        factor = 1.0
        accepted = False
        while factor >= 1e-8:
            step = r_op if factor == 1.0 else (1.0 - factor) * eye + factor * r_op
            cand = step @ rho @ step.conj().T
            cand = cand / np.trace(cand).real
            cand = 0.5 * (cand + cand.conj().T)
            cand_probs = np.einsum("kij,ji->k", pis, cand).real
            cand_ll = _log_likelihood(counts, cand_probs)
            if cand_ll >= ll:
                accepted = True
                break
            factor *= 0.5
        if not accepted:
            # numerical fixed point: no ascending step exists at any dilution
            converged = True
            break

        gain = cand_ll - ll
        rho, probs, ll = cand, cand_probs, cand_ll
        trace.append(ll)
        if gain < tol:
            converged = True
            break

    min_eig = float(np.linalg.eigvalsh(rho)[0])
    return TomographyResult(
        rho_hat=TwoQubitState(rho),
        method="mle",
        iterations=iterations,
        converged=converged,
        log_likelihood=ll,
        min_eigenvalue=min_eig,
        ll_trace=tuple(trace),
    )


def fidelity_standard_error(records, target: np.ndarray) -> float:
    """Poisson-propagated uncertainty of the linear-inversion fidelity.

    The linear-inversion fidelity is linear in the outcome frequencies, so
    each count's contribution propagates exactly; used as the quoted
    uncertainty for reconstructed fidelities.
    """
    by_key = _indexed(records)
    t = np.asarray(target, dtype=complex).reshape(-1)
    tmat = np.outer(t, t.conj())
    eye = np.eye(2, dtype=complex)
    sa = np.array([s[0] for s in OUTCOME_SIGNS], dtype=float)
    sb = np.array([s[1] for s in OUTCOME_SIGNS], dtype=float)

    var = 0.0
    for a in BASES:
        for b in BASES:
            rec = by_key[(a, b)]
            w_ab = float(np.trace(tmat @ np.kron(_PAULI[a], _PAULI[b])).real) / 4.0
            w_a = float(np.trace(tmat @ np.kron(_PAULI[a], eye)).real) / 12.0
            w_b = float(np.trace(tmat @ np.kron(eye, _PAULI[b])).real) / 12.0
            coef = w_ab * sa * sb + w_a * sa + w_b * sb
            n = np.array(rec.counts, dtype=float)
            total = rec.total
            # d(freq_k)/d(n_j) of n_k/N propagated with Var(n_j) = n_j
            f = n / total
            grad = (coef - coef @ f) / total
            var += float(np.sum(grad**2 * n))
    return float(np.sqrt(var))


# ---------------------------------------------------------------------------
# CSV interchange

CSV_HEADER = ("setting_a", "setting_b", "dof", "n_pp", "n_pm", "n_mp", "n_mm",
              "integration_s")

_CHSH_CSV_NAMES = {"ab": ("A", "B"), "abp": ("A", "BP"),
                   "apb": ("AP", "B"), "apbp": ("AP", "BP")}
_CHSH_CSV_PAIRS = {v: k for k, v in _CHSH_CSV_NAMES.items()}


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            if rec.setting is not None:
                a, b, dof = rec.setting.basis_a, rec.setting.basis_b, rec.setting.dof
            else:
                a, b = _CHSH_CSV_NAMES[rec.pair]
                dof = POLARIZATION
            writer.writerow([a, b, dof, *rec.counts, repr(rec.integration_s)])


def read_records_csv(path) -> list[CountRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for row in reader:
            a, b, dof = row[0], row[1], row[2]
            counts = tuple(int(x) for x in row[3:7])
            t = float(row[7])
            if a in BASES:
                records.append(CountRecord(MeasurementSetting(a, b, dof), counts, t))
            else:
                records.append(CountRecord(None, counts, t, pair=_CHSH_CSV_PAIRS[(a, b)]))
    return records
