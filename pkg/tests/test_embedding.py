import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statswitch import _pykernels
from statswitch.embedding import (BOSONIC, FERMIONIC, apply_plan, brute_force_spinor, build_plan,
                                  build_two_particle_spinor, ceil_log2, map_to_physical,
                                  particle_state, resources, rotate_pair_ancilla, sector_vector,
                                  swap_particles_vector, switch_statistics, symmetrization_layout)
from statswitch.errors import DegenerateInputError, LayoutError, PreconditionError, SizeError


def random_orthonormal(n, d, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, n)) + 1j * rng.normal(size=(d, n)))
    return [q[:, k] for k in range(n)]


def parity(perm):
    inv = sum(1 for a, b in itertools.combinations(range(len(perm)), 2) if perm[a] > perm[b])
    return -1 if inv % 2 else 1


def permanent_vector(inputs, signed):
    """Explicit (anti)symmetrized product, normalized by 1/sqrt(N!)."""
    n = len(inputs)
    out = 0
    for perm in itertools.permutations(range(n)):
        vec = inputs[perm[0]]
        for k in perm[1:]:
            vec = np.kron(vec, inputs[k])
        out = out + (parity(perm) if signed else 1) * vec
    return out / math.sqrt(math.factorial(n))


@pytest.mark.parametrize("n,kappa", [(2, 1), (3, 3), (4, 5), (5, 8), (8, 17)])
def test_kappa(n, kappa):
    assert symmetrization_layout((None,) * n, True).ancilla_qubits == kappa


def test_ceil_log2():
    assert [ceil_log2(n) for n in range(2, 10)] == [1, 2, 2, 3, 3, 3, 3, 4]


def test_two_particle_spinor_components():
    up, down = particle_state("up"), particle_state("down")
    psi = build_two_particle_spinor(up, down).to_dense()
    expected = np.concatenate([np.kron(up, down), np.kron(down, up)]) / math.sqrt(2)
    np.testing.assert_allclose(psi, expected, atol=1e-15)


def test_identical_orbitals_rejected_for_fermions():
    up = particle_state("up")
    with pytest.raises(DegenerateInputError):
        build_two_particle_spinor(up, up, intent=FERMIONIC)
    sp = build_two_particle_spinor(up, up)
    assert map_to_physical(sp, FERMIONIC).degenerate
    assert not map_to_physical(sp, BOSONIC).degenerate


def test_unnormalized_input_rejected():
    with pytest.raises(PreconditionError):
        build_two_particle_spinor(np.array([1.0, 1.0]), particle_state("down"))


def test_three_particle_spinor_rows():
    # rows are (orbital carried by particle 1, 2, 3); the printed table lists
    # rows 4 and 6 the other way round, with identical signs
    inputs = random_orthonormal(3, 4, 7)
    blocks = apply_plan(build_plan(3), inputs).control_blocks()
    physical_rows = [(0, 1, 2), (1, 0, 2), (2, 1, 0), (2, 0, 1), (0, 2, 1), (1, 2, 0)]
    prefactor = 1 / math.sqrt(12)
    for a, perm in enumerate(physical_rows):
        vec = np.kron(np.kron(inputs[perm[0]], inputs[perm[1]]), inputs[perm[2]])
        np.testing.assert_allclose(blocks[0, a], prefactor * vec, atol=1e-14)
        np.testing.assert_allclose(blocks[1, a], prefactor * parity(perm) * vec, atol=1e-14)
    np.testing.assert_array_equal(blocks[:, 6:], 0)
    assert [parity(p) for p in physical_rows] == [1, -1, -1, 1, -1, 1]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_plan_matches_brute_force(n):
    for seed in range(5):
        inputs = random_orthonormal(n, 4, seed)
        for qc in (True, False):
            a = apply_plan(build_plan(n), inputs, with_stat_control=qc).to_dense()
            b = brute_force_spinor(inputs, with_stat_control=qc).to_dense()
            np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_branch_representation_matches_dense(n):
    inputs = random_orthonormal(n, 4, n)
    plan = build_plan(n)
    dense = apply_plan(plan, inputs).to_dense()
    branch = apply_plan(plan, inputs, representation="branch")
    np.testing.assert_allclose(branch.to_dense(), dense, atol=1e-14)


def test_fallback_kernel_gives_same_spinor():
    inputs = random_orthonormal(4, 6, 11)
    plan = build_plan(4)
    a = apply_plan(plan, inputs).to_dense()
    b = apply_plan(plan, inputs, kernel_impl=_pykernels).to_dense()
    np.testing.assert_array_equal(a, b)


def test_plan_rejects_non_orthogonal():
    inputs = random_orthonormal(3, 4, 0)
    inputs[2] = inputs[0]
    with pytest.raises(PreconditionError):
        apply_plan(build_plan(3), inputs)
    state = apply_plan(build_plan(3), inputs, allow_nonorthogonal=True)
    assert map_to_physical(state, FERMIONIC).degenerate


def test_plan_rejects_mismatched_inputs():
    with pytest.raises(LayoutError):
        apply_plan(build_plan(3), random_orthonormal(2, 4, 0))
    with pytest.raises(ValueError):
        build_plan(1)


def test_brute_force_cap():
    with pytest.raises(SizeError):
        brute_force_spinor([particle_state("up")] * 9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_mapped_states_are_permanent_and_determinant(n):
    inputs = random_orthonormal(n, 4, 20 + n)
    state = apply_plan(build_plan(n), inputs)
    for sector, signed in ((BOSONIC, False), (FERMIONIC, True)):
        phys = map_to_physical(state, sector)
        assert abs(phys.norm - 1 / math.sqrt(2)) < 1e-12
        np.testing.assert_allclose(phys.amplitudes, permanent_vector(inputs, signed), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10_000))
def test_exchange_symmetry_of_mapped_states(n, seed):
    inputs = random_orthonormal(n, 4, seed)
    state = apply_plan(build_plan(n), inputs)
    psi_b = map_to_physical(state, BOSONIC).amplitudes
    psi_f = map_to_physical(state, FERMIONIC).amplitudes
    for i, j in itertools.combinations(range(n), 2):
        np.testing.assert_allclose(swap_particles_vector(psi_b, n, 4, i, j), psi_b, atol=1e-12)
        np.testing.assert_allclose(swap_particles_vector(psi_f, n, 4, i, j), -psi_f, atol=1e-12)


@pytest.mark.parametrize("qc", [True, False])
def test_switch_is_an_involution_that_exchanges_sectors(qc):
    inputs = random_orthonormal(3 if qc else 2, 4, 4)
    if qc:
        state = apply_plan(build_plan(3), inputs)
    else:
        state = build_two_particle_spinor(*inputs)
    once = switch_statistics(state)
    np.testing.assert_allclose(switch_statistics(once).to_dense(), state.to_dense(), atol=0)
    np.testing.assert_allclose(sector_vector(once, BOSONIC), sector_vector(state, FERMIONIC), atol=1e-15)
    np.testing.assert_allclose(sector_vector(once, FERMIONIC), sector_vector(state, BOSONIC), atol=1e-15)
    dense_switched = switch_statistics(state.as_dense()).to_dense()
    np.testing.assert_allclose(once.to_dense(), dense_switched, atol=1e-15)


def test_pair_ancilla_rotation():
    inputs = random_orthonormal(2, 4, 9)
    state = build_two_particle_spinor(*inputs)
    rot = rotate_pair_ancilla(state)
    np.testing.assert_allclose(rot[0], sector_vector(state, BOSONIC) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(rot[1], sector_vector(state, FERMIONIC) / math.sqrt(2), atol=1e-15)


def test_resources_small_cases():
    r3 = resources(build_plan(3))
    assert (r3.cswap_count, r3.kappa, r3.closed_form_gates) == (3, 3, 1)
    r2 = resources(build_plan(2))
    assert (r2.cswap_count, r2.closed_form_gates, r2.formula_discrepancy) == (1, 0, True)
    # step 3 uses a two-qubit register: two cswaps with one extra control each
    assert (r3.toffoli_count, r3.working_qubits) == (4, 1)


def test_dense_size_cap():
    inputs = [particle_state("up", 0, 64), particle_state("down", 0, 64), particle_state("up", 1, 64)]
    state = apply_plan(build_plan(3), inputs, representation="branch")
    assert state.layout.total_dim > 2**25
    with pytest.raises(SizeError):
        state.to_dense()
    with pytest.raises(SizeError):
        apply_plan(build_plan(3), inputs)
