import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlstm_rc import statevector as sv
from qlstm_rc.exceptions import ConfigurationError, OracleSizeError, UsageError
from qlstm_rc.gradcheck import random_circuit


@pytest.mark.parametrize("n", [1, 2, 8])
def test_init_zero(n):
    amps = sv.init_zero(n).amplitudes
    assert amps.shape == (2**n,)
    assert amps[0] == 1 + 0j
    assert np.all(amps[1:] == 0)


@pytest.mark.parametrize("n", [0, 13, -1])
def test_init_zero_out_of_range(n):
    with pytest.raises(ConfigurationError):
        sv.init_zero(n)


def test_hadamard():
    out = sv.apply_gate(sv.init_zero(1), sv.H(0)).amplitudes
    np.testing.assert_allclose(out, [2**-0.5, 2**-0.5], atol=1e-15)


def test_ry_pi_flips():
    out = sv.apply_gate(sv.init_zero(1), sv.RY(np.pi, 0)).amplitudes
    np.testing.assert_allclose(np.abs(out), [0, 1], atol=1e-15)


def test_cnot_on_basis_state():
    # |10> in ket notation: qubit 1 set, index 2
    state = sv.StateVector(2, np.array([0, 0, 1, 0], dtype=complex))
    out = sv.apply_gate(state, sv.CNOT(1, 0)).amplitudes
    np.testing.assert_array_equal(out, [0, 0, 0, 1])


def test_cnot_respects_control():
    state = sv.StateVector(2, np.array([0, 1, 0, 0], dtype=complex))  # qubit 0 set only
    out = sv.apply_gate(state, sv.CNOT(1, 0)).amplitudes
    np.testing.assert_array_equal(out, [0, 1, 0, 0])


def test_qubit_zero_is_least_significant():
    out = sv.apply_gate(sv.init_zero(3), sv.RY(np.pi, 0)).amplitudes
    assert abs(out[1]) == pytest.approx(1.0)


def test_expect_z_values():
    assert sv.expect_z(sv.init_zero(1), 0) == 1.0
    assert sv.expect_z(sv.apply_gate(sv.init_zero(1), sv.H(0)), 0) == pytest.approx(0.0, abs=1e-15)
    theta = 0.7
    state = sv.apply_gate(sv.init_zero(1), sv.RY(theta, 0))
    assert sv.expect_z(state, 0) == pytest.approx(np.cos(theta), abs=1e-14)
    assert sv.expect_z(state, 0) == pytest.approx(0.7648421872844885, abs=1e-14)
    oracle = sv.oracle_unitary([sv.RY(theta, 0)], 1)[:, 0]
    assert sv.expect_z(state, 0) == pytest.approx(abs(oracle[0]) ** 2 - abs(oracle[1]) ** 2, abs=1e-14)


def test_expect_z_of_basis_states_is_exact():
    for b in range(8):
        amps = np.zeros(8, dtype=complex)
        amps[b] = 1
        state = sv.StateVector(3, amps)
        for q in range(3):
            assert sv.expect_z(state, q) == (-1.0 if (b >> q) & 1 else 1.0)


def test_invalid_indices():
    state = sv.init_zero(2)
    with pytest.raises(UsageError):
        sv.apply_gate(state, sv.H(2))
    with pytest.raises(UsageError):
        sv.apply_gate(state, sv.CNOT(0, 5))
    with pytest.raises(UsageError):
        sv.expect_z(state, 2)
    with pytest.raises(UsageError):
        sv.CNOT(1, 1)
    with pytest.raises(UsageError):
        sv.Gate("RY", 0, ())


def test_rot_decomposition_order():
    a, b, g = 0.3, -1.1, 2.0
    expected = sv.rz_matrix(a) @ sv.ry_matrix(b) @ sv.rz_matrix(g)
    np.testing.assert_allclose(sv.rot_matrix(a, b, g), expected, atol=1e-15)
    np.testing.assert_allclose(sv.rot_matrix(0, 0, 0), np.eye(2), atol=1e-15)
    # time order: RZ(gamma) acts first
    circuit = [sv.RZ(g, 0), sv.RY(b, 0), sv.RZ(a, 0)]
    np.testing.assert_allclose(sv.oracle_unitary([sv.ROT(a, b, g, 0)], 1),
                               sv.oracle_unitary(circuit, 1), atol=1e-15)


def test_oracle_empty_and_single():
    np.testing.assert_array_equal(sv.oracle_unitary([], 1), np.eye(2))
    np.testing.assert_allclose(sv.oracle_unitary([sv.H(0)], 1),
                               np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)


def test_oracle_size_limit():
    with pytest.raises(OracleSizeError):
        sv.oracle_unitary([], 5)


def test_cnot_self_inverse(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        state = sv.StateVector(n, amps / np.linalg.norm(amps))
        c, t = rng.choice(n, size=2, replace=False)
        twice = sv.apply_gate(sv.apply_gate(state, sv.CNOT(int(c), int(t))), sv.CNOT(int(c), int(t)))
        np.testing.assert_allclose(twice.amplitudes, state.amplitudes, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 100), st.integers(0, 2**32 - 1))
def test_norm_preserved(n, length, seed):
    gates = random_circuit(np.random.default_rng(seed), n, length)
    state = sv.init_zero(n)
    for gate in gates:
        state = sv.apply_gate(state, gate)
        assert abs(state.norm_squared() - 1.0) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_statevector_matches_oracle(n, length, seed):
    gates = random_circuit(np.random.default_rng(seed), n, length)
    direct = sv.run_circuit(gates, n).amplitudes
    np.testing.assert_allclose(direct, sv.oracle_unitary(gates, n)[:, 0], atol=1e-10, rtol=0)


def test_batched_apply_matches_single(rng):
    n = 5
    batch = rng.normal(size=(7, 2**n)) + 0j
    m = sv.ry_matrix(0.4)
    out = sv.apply_single(batch, m, 2, n)
    for row, got in zip(batch, out):
        np.testing.assert_allclose(got, sv.apply_single(row, m, 2, n), atol=1e-15)
