import numpy as np
import pytest

from conftest import random_density
from purisim.bell import (
    PAIR_KEYS, ChshResult, ChshSettings, TSIRELSON, canonical_settings,
    chsh_from_counts, chsh_value, correlation, correlation_matrix,
    optimize_settings, pair_outcome_probs, sample_chsh,
)
from purisim.states import bell_phi_plus, maximally_mixed, werner
from purisim.tomography import CountRecord, DetectionParams

PHI = bell_phi_plus()
RHO_BELL = np.outer(PHI, PHI.conj())

X = np.array([1.0, 0, 0])
Y = np.array([0, 1.0, 0])
Z = np.array([0, 0, 1.0])


def correlation_oracle(rho, na, nb):
    """Independent route: joint +- probabilities from explicit projectors."""
    sig = [np.array([[0, 1], [1, 0]], dtype=complex),
           np.array([[0, -1j], [1j, 0]], dtype=complex),
           np.array([[1, 0], [0, -1]], dtype=complex)]
    oa = sum(c * s for c, s in zip(na, sig))
    ob = sum(c * s for c, s in zip(nb, sig))
    eye = np.eye(2)
    e = 0.0
    for sa in (1, -1):
        for sb in (1, -1):
            proj = np.kron((eye + sa * oa) / 2, (eye + sb * ob) / 2)
            e += sa * sb * np.trace(rho @ proj).real
    return e


def horodecki_max(rho):
    """Spectral oracle: S_max = 2 sqrt(t1^2 + t2^2) of the correlation matrix."""
    t = correlation_matrix(rho)
    sv = np.sort(np.linalg.svd(t, compute_uv=False))[::-1]
    return 2.0 * np.sqrt(sv[0] ** 2 + sv[1] ** 2)


class TestCorrelation:
    def test_bell_zz(self):
        assert correlation(RHO_BELL, Z, Z) == pytest.approx(1.0, abs=1e-12)

    def test_bell_orthogonal_settings(self):
        assert correlation(RHO_BELL, Z, X) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        rng = np.random.default_rng(51)
        for _ in range(5):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            assert correlation(maximally_mixed(4), n, Z) == pytest.approx(0.0, abs=1e-12)

    def test_matches_projector_oracle(self):
        rng = np.random.default_rng(52)
        for _ in range(20):
            rho = random_density(rng, 4)
            na, nb = rng.normal(size=3), rng.normal(size=3)
            na /= np.linalg.norm(na)
            nb /= np.linalg.norm(nb)
            assert correlation(rho, na, nb) == pytest.approx(
                correlation_oracle(rho, na, nb), abs=1e-12)

    def test_bounded(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            rho = random_density(rng, 4)
            na, nb = rng.normal(size=3), rng.normal(size=3)
            na /= np.linalg.norm(na)
            nb /= np.linalg.norm(nb)
            assert abs(correlation(rho, na, nb)) <= 1.0 + 1e-12

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            correlation(RHO_BELL, np.array([1.0, 1.0, 0.0]), Z)


class TestChshValue:
    def test_tsirelson_on_bell(self):
        res = chsh_value(RHO_BELL)
        assert res.S == pytest.approx(TSIRELSON, abs=1e-9)

    def test_werner_linearity(self):
        # oracle: each correlation term computed independently, then combined
        s = canonical_settings()
        for v in np.linspace(0.0, 1.0, 20):
            rho = werner(v).rho
            e = [correlation_oracle(rho, *s.pairs()[k]) for k in PAIR_KEYS]
            s_oracle = e[0] - e[1] + e[2] + e[3]
            res = chsh_value(werner(v))
            assert res.S == pytest.approx(s_oracle, abs=1e-12)
            assert res.S == pytest.approx(TSIRELSON * v, abs=1e-9)

    def test_maximally_mixed(self):
        assert chsh_value(maximally_mixed(4)).S == pytest.approx(0.0, abs=1e-12)

    def test_quantum_bound_holds_on_random_states(self):
        rng = np.random.default_rng(54)
        s = canonical_settings()
        for _ in range(30):
            res = chsh_value(random_density(rng, 4), s)
            assert abs(res.S) <= TSIRELSON + 1e-9

    def test_rotation_invariance(self):
        # simultaneous SU(2) rotation of each side's state and settings
        rng = np.random.default_rng(55)
        base = canonical_settings()
        for _ in range(10):
            rho = random_density(rng, 4)

            def rand_su2():
                a = rng.normal(size=4)
                a /= np.linalg.norm(a)
                return np.array([[a[0] + 1j * a[1], a[2] + 1j * a[3]],
                                 [-a[2] + 1j * a[3], a[0] - 1j * a[1]]])

            sig = [np.array([[0, 1], [1, 0]], dtype=complex),
                   np.array([[0, -1j], [1j, 0]], dtype=complex),
                   np.array([[1, 0], [0, -1]], dtype=complex)]

            def bloch_rotation(u):
                return np.array([[0.5 * np.trace(sig[i] @ u @ sig[j] @ u.conj().T).real
                                  for j in range(3)] for i in range(3)])

            ua, ub = rand_su2(), rand_su2()
            ra, rb = bloch_rotation(ua), bloch_rotation(ub)
            rho_rot = np.kron(ua, ub) @ rho @ np.kron(ua, ub).conj().T
            rotated = ChshSettings(a=ra @ base.a, a_prime=ra @ base.a_prime,
                                   b=rb @ base.b, b_prime=rb @ base.b_prime)
            assert chsh_value(rho_rot, rotated).S == pytest.approx(
                chsh_value(rho, base).S, abs=1e-9)


class TestChshFromCounts:
    def test_exact_frequencies_match_exact_value(self):
        rng = np.random.default_rng(56)
        settings = canonical_settings()
        for _ in range(10):
            rho = random_density(rng, 4)
            records = {}
            for key in PAIR_KEYS:
                p = pair_outcome_probs(rho, *settings.pairs()[key])
                records[key] = CountRecord(None, tuple(int(round(x * 1e12)) for x in p),
                                           1.0, pair=key)
            got = chsh_from_counts(records)
            assert got.S == pytest.approx(chsh_value(rho, settings).S, abs=1e-9)

    def test_all_equal_counts(self):
        recs = {k: CountRecord(None, (100, 100, 100, 100), 1.0, pair=k)
                for k in PAIR_KEYS}
        res = chsh_from_counts(recs)
        assert res.S == pytest.approx(0.0, abs=1e-12)
        assert res.standard_error > 0

    def test_zero_total_rejected(self):
        recs = {k: CountRecord(None, (100, 100, 100, 100), 1.0, pair=k)
                for k in PAIR_KEYS}
        recs["abp"] = CountRecord(None, (0, 0, 0, 0), 1.0, pair="abp")
        with pytest.raises(ValueError, match="zero total"):
            chsh_from_counts(recs)

    def test_missing_pair_rejected(self):
        recs = {k: CountRecord(None, (100, 100, 100, 100), 1.0, pair=k)
                for k in ("ab", "abp")}
        with pytest.raises(ValueError, match="missing"):
            chsh_from_counts(recs)

    def test_seeded_sampling_recovers_exact_within_3_sigma(self):
        state = werner(0.9)
        exact = chsh_value(state).S
        params = DetectionParams(pair_rate=40.0, seed=77)
        recs = sample_chsh(state, canonical_settings(), params, 60.0)
        res = chsh_from_counts(recs)
        assert abs(res.S - exact) <= 3 * res.standard_error
        assert abs(res.S) <= 4.0

    def test_sampling_deterministic(self):
        params = DetectionParams(pair_rate=40.0, seed=78)
        a = sample_chsh(werner(0.8), canonical_settings(), params, 60.0)
        b = sample_chsh(werner(0.8), canonical_settings(), params, 60.0)
        assert all(a[k].counts == b[k].counts for k in PAIR_KEYS)


class TestOptimizer:
    def test_reaches_spectral_bound_on_random_states(self):
        rng = np.random.default_rng(57)
        for _ in range(15):
            rho = random_density(rng, 4)
            _, res = optimize_settings(rho)
            assert res.S == pytest.approx(horodecki_max(rho), abs=1e-6)

    def test_werner(self):
        for v in (0.2, 0.5, 0.9):
            settings, res = optimize_settings(werner(v))
            assert res.S == pytest.approx(TSIRELSON * v, abs=1e-6)
            for d in (settings.a, settings.a_prime, settings.b, settings.b_prime):
                assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(58)
        rho = random_density(rng, 4)
        s1, r1 = optimize_settings(rho)
        s2, r2 = optimize_settings(rho)
        assert r1.S == r2.S
        assert np.array_equal(s1.a, s2.a)
        assert np.array_equal(s1.b_prime, s2.b_prime)

    def test_degenerate_state(self):
        _, res = optimize_settings(maximally_mixed(4))
        assert res.S == pytest.approx(0.0, abs=1e-9)


class TestResultValidation:
    def test_settings_require_unit_vectors(self):
        with pytest.raises(ValueError):
            ChshSettings(a=np.array([1.0, 1.0, 0.0]), a_prime=X, b=Z, b_prime=Y)

    def test_unphysical_s_rejected(self):
        with pytest.raises(ValueError, match="bound"):
            ChshResult(S=3.5, correlations=(1, -1, 1, 1), standard_error=0.0)
