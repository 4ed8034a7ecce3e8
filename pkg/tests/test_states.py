import json

import numpy as np
import pytest

from conftest import ket16, random_density, random_pure
from purisim.states import (
    HyperState, ModeMap, TwoQubitState, bell_phi_plus, density_from_json,
    density_to_json, fidelity, load_density_json, make_initial_state,
    maximally_mixed, mix, post_select, purity, reduced, save_density_json,
    trace_distance, werner, POLARIZATION, SPATIAL,
)


def partial_trace_oracle(rho16: np.ndarray, dof: str) -> np.ndarray:
    """Loop-based partial trace, independent of the library's einsum path.

    Joint index = 8*s_A + 4*p_A + 2*s_B + p_B.
    """
    out = np.zeros((4, 4), dtype=complex)
    for pa in range(2):
        for pb in range(2):
            for qa in range(2):
                for qb in range(2):
                    acc = 0.0 + 0.0j
                    for sa in range(2):
                        for sb in range(2):
                            if dof == POLARIZATION:
                                i = 8 * sa + 4 * pa + 2 * sb + pb
                                j = 8 * sa + 4 * qa + 2 * sb + qb
                            else:
                                i = 8 * pa + 4 * sa + 2 * pb + sb
                                j = 8 * qa + 4 * sa + 2 * qb + sb
                            acc += rho16[i, j]
                    out[2 * pa + pb, 2 * qa + qb] = acc
    return out


class TestModeMap:
    def test_convention(self):
        assert ModeMap.from_mode(0) == ModeMap(0, 0, 0)
        assert ModeMap.from_mode(1) == ModeMap(1, 0, 1)
        assert ModeMap.from_mode(2) == ModeMap(2, 1, 0)
        assert ModeMap.from_mode(3) == ModeMap(3, 1, 1)

    def test_bijection(self):
        seen = set()
        for s in range(2):
            for p in range(2):
                m = ModeMap.from_bits(s, p)
                assert ModeMap.from_mode(m.mode) == m
                seen.add(m.mode)
        assert seen == {0, 1, 2, 3}

    def test_inconsistent_rejected(self):
        with pytest.raises(ValueError):
            ModeMap(mode=0, spatial=1, polarization=0)


class TestInitialState:
    def test_entries(self):
        rho = make_initial_state().rho
        diag_modes = [4 * m + m for m in range(4)]
        for i in range(16):
            for j in range(16):
                expected = 0.25 if (i in diag_modes and j in diag_modes) else 0.0
                assert rho[i, j] == pytest.approx(expected, abs=1e-15)

    def test_pure(self):
        assert purity(make_initial_state()) == pytest.approx(1.0, abs=1e-12)

    def test_factorizes_into_bell_pairs(self):
        state = make_initial_state()
        phi = bell_phi_plus()
        target = np.outer(phi, phi.conj())
        for dof in (POLARIZATION, SPATIAL):
            assert np.allclose(reduced(state, dof).rho, target, atol=1e-12)


class TestValidation:
    def test_nan_rejected(self):
        rho = np.eye(16, dtype=complex) / 16
        rho = rho.copy()
        rho[0, 0] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            HyperState(rho)

    def test_non_hermitian_rejected(self):
        rho = np.eye(16, dtype=complex) / 16
        rho[0, 1] = 1e-6
        with pytest.raises(ValueError, match="Hermitian"):
            HyperState(rho)

    def test_trace_rejected(self):
        with pytest.raises(ValueError, match="trace"):
            HyperState(np.eye(16, dtype=complex) / 15)

    def test_negative_eigenvalue_rejected(self):
        rho = np.diag([0.7, 0.3, 0.1, -0.1]).astype(complex)
        with pytest.raises(ValueError, match="eigenvalue"):
            TwoQubitState(rho)

    def test_check_psd_escape_keeps_hermiticity_check(self):
        rho = np.diag([0.7, 0.3, 0.1, -0.1]).astype(complex)
        TwoQubitState(rho, check_psd=False)  # allowed
        rho2 = rho.copy()
        rho2[0, 1] = 1e-3
        with pytest.raises(ValueError):
            TwoQubitState(rho2, check_psd=False)

    def test_immutable(self):
        state = make_initial_state()
        with pytest.raises(AttributeError):
            state.rho = np.eye(16) / 16
        with pytest.raises(ValueError):
            state.rho[0, 0] = 1.0


class TestReduced:
    def test_matches_loop_oracle_on_random_states(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            rho = random_density(rng, 16)
            state = HyperState(rho)
            for dof in (POLARIZATION, SPATIAL):
                assert np.allclose(reduced(state, dof).rho,
                                   partial_trace_oracle(rho, dof), atol=1e-12)

    def test_maximally_mixed(self):
        state = HyperState(maximally_mixed(16))
        for dof in (POLARIZATION, SPATIAL):
            assert np.allclose(reduced(state, dof).rho, maximally_mixed(4), atol=1e-14)

    def test_pol_bit_flip_error_state_gives_psi_plus(self):
        # 1/2 (|00>+|11>)(|HV>+|VH>): modes |01>+|10>+|23>+|32>
        vec = (ket16(0, 1) + ket16(1, 0) + ket16(2, 3) + ket16(3, 2)) / 2.0
        state = HyperState(np.outer(vec, vec.conj()))
        psi_plus = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
        assert np.allclose(reduced(state, POLARIZATION).rho,
                           np.outer(psi_plus, psi_plus.conj()), atol=1e-12)
        # spatial part stays the clean Bell pair
        phi = bell_phi_plus()
        assert np.allclose(reduced(state, SPATIAL).rho,
                           np.outer(phi, phi.conj()), atol=1e-12)

    def test_commutes_with_convex_mixture(self):
        rng = np.random.default_rng(8)
        states = [HyperState(random_density(rng, 16)) for _ in range(4)]
        w = rng.random(4)
        w /= w.sum()
        mixed = mix(list(zip(states, w)))
        for dof in (POLARIZATION, SPATIAL):
            direct = reduced(mixed, dof).rho
            parts = sum(wi * reduced(s, dof).rho for s, wi in zip(states, w))
            assert np.allclose(direct, parts, atol=1e-12)

    def test_unknown_dof(self):
        with pytest.raises(ValueError):
            reduced(make_initial_state(), "frequency")

    def test_trace_preserved(self):
        rng = np.random.default_rng(9)
        state = HyperState(random_density(rng, 16))
        for dof in (POLARIZATION, SPATIAL):
            assert np.trace(reduced(state, dof).rho).real == pytest.approx(1.0, abs=1e-12)


class TestFidelity:
    def test_bell_with_itself(self):
        phi = bell_phi_plus()
        assert fidelity(np.outer(phi, phi.conj()), phi) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed(self):
        assert fidelity(maximally_mixed(4), bell_phi_plus()) == pytest.approx(0.25, abs=1e-12)

    def test_werner_calibrated_to_090(self):
        # closed form: F = v + (1 - v)/4, v = 13/15 gives 0.90
        v = 13.0 / 15.0
        assert v + (1 - v) / 4 == pytest.approx(0.90, abs=1e-15)
        assert fidelity(werner(v), bell_phi_plus()) == pytest.approx(0.90, abs=1e-12)

    def test_rejects_unnormalized_target(self):
        with pytest.raises(ValueError, match="normalized"):
            fidelity(maximally_mixed(4), np.array([1.0, 0, 0, 1.0]))

    def test_linear_and_bounded(self):
        rng = np.random.default_rng(10)
        t = random_pure(rng, 4)
        a, b = random_density(rng, 4), random_density(rng, 4)
        for lam in (0.0, 0.3, 0.7, 1.0):
            mixed = lam * a + (1 - lam) * b
            expect = lam * fidelity(a, t) + (1 - lam) * fidelity(b, t)
            got = fidelity(mixed, t)
            assert got == pytest.approx(expect, abs=1e-12)
            assert 0.0 <= got <= 1.0


class TestPostSelect:
    def test_identity_selection(self):
        rng = np.random.default_rng(11)
        rho = random_density(rng, 16)
        out, prob = post_select(HyperState(rho), {0, 1, 2, 3})
        assert prob == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(out.rho, rho, atol=1e-12)

    def test_purified_good_state(self):
        # oracle: apply the purification mode permutation 0->1,1->3,2->2,3->0
        # to |psi0> by hand; surviving terms in {0,1} are |00> and |11>
        perm = {0: 1, 1: 3, 2: 2, 3: 0}
        vec = sum(ket16(perm[m], perm[m]) for m in range(4)) / 2.0
        state = HyperState(np.outer(vec, vec.conj()))
        out, prob = post_select(state, {0, 1})
        assert prob == pytest.approx(0.5, abs=1e-12)
        expected = (ket16(0, 0) + ket16(1, 1)) / np.sqrt(2)
        assert np.allclose(out.rho, np.outer(expected, expected.conj()), atol=1e-12)
        # and that is the polarization Bell state on spatial rail 0
        assert fidelity(reduced(out, POLARIZATION), bell_phi_plus()) == pytest.approx(1.0, abs=1e-12)

    def test_error_state_no_coincidence(self):
        vec = (ket16(1, 3) + ket16(3, 1) + ket16(2, 0) + ket16(0, 2)) / 2.0
        state = HyperState(np.outer(vec, vec.conj()))
        out, prob = post_select(state, {0, 1})
        assert out is None
        assert prob == pytest.approx(0.0, abs=1e-15)

    def test_empty_modes_rejected(self):
        with pytest.raises(ValueError):
            post_select(make_initial_state(), set())

    def test_complementary_probabilities_bounded(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            state = HyperState(random_density(rng, 16))
            _, p01 = post_select(state, {0, 1})
            _, p23 = post_select(state, {2, 3})
            assert p01 + p23 <= 1.0 + 1e-12

    def test_complementary_probabilities_sum_to_one_for_purified_ideal(self):
        perm = {0: 1, 1: 3, 2: 2, 3: 0}
        vec = sum(ket16(perm[m], perm[m]) for m in range(4)) / 2.0
        state = HyperState(np.outer(vec, vec.conj()))
        _, p01 = post_select(state, {0, 1})
        _, p23 = post_select(state, {2, 3})
        assert p01 + p23 == pytest.approx(1.0, abs=1e-12)


class TestMetrics:
    def test_purity_range(self):
        rng = np.random.default_rng(13)
        rho = random_density(rng, 16)
        assert 1 / 16 <= purity(HyperState(rho)) <= 1.0 + 1e-12
        assert purity(HyperState(maximally_mixed(16))) == pytest.approx(1 / 16, abs=1e-12)

    def test_trace_distance(self):
        phi = bell_phi_plus()
        rho = np.outer(phi, phi.conj())
        assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
        psi = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
        # orthogonal pure states are at maximal distance 1
        assert trace_distance(rho, np.outer(psi, psi.conj())) == pytest.approx(1.0, abs=1e-12)
        assert trace_distance(werner(0.5), werner(0.5)) == pytest.approx(0.0, abs=1e-14)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(14)
        rho = random_density(rng, 16)
        obj = density_to_json(rho)
        assert obj["dim"] == 16
        assert np.allclose(density_from_json(obj), rho, atol=0)
        path = tmp_path / "rho.json"
        save_density_json(HyperState(rho), path)
        assert np.allclose(load_density_json(path), rho, atol=0)

    def test_sparse_and_row_major(self):
        obj = density_to_json(make_initial_state())
        assert len(obj["entries"]) == 16  # 4x4 block of 1/4 entries
        keys = [(r, c) for r, c, _, _ in obj["entries"]]
        assert keys == sorted(keys)

    def test_json_stable(self):
        a = json.dumps(density_to_json(werner(0.7)), sort_keys=True)
        b = json.dumps(density_to_json(werner(0.7)), sort_keys=True)
        assert a == b
