import math

import numpy as np
import pytest

from statswitch.dynamics import (EvolutionRequest, Propagator, cross_validate, evolve,
                                 evolve_with_switches)
from statswitch.embedding import (BOSONIC, FERMIONIC, apply_plan, build_plan,
                                  build_two_particle_spinor, map_to_physical, particle_state,
                                  sector_vector, swap_particles_vector, switch_statistics)
from statswitch.errors import CapabilityError
from statswitch.measurement import sector_probability
from statswitch.models import ModelSpec, embed_model

UP, DOWN = particle_state("up"), particle_state("down")


def pair(spec, s1, s2, rep="branch"):
    nm = spec.n_max
    state = build_two_particle_spinor(particle_state(*s1, n_max=nm) if nm else particle_state(s1),
                                      particle_state(*s2, n_max=nm) if nm else particle_state(s2))
    state = state if rep == "branch" else state.as_dense()
    return state, embed_model(spec, state.layout)


def test_exchange_closed_form():
    state, ham = pair(ModelSpec("exchange", g=1.0), "up", "down", "dense")
    t = math.pi / 4
    out = evolve(EvolutionRequest(state, ham, (t,)))[0].to_dense()
    c, s = math.cos(t), math.sin(t)
    ud, du = np.kron(UP, DOWN), np.kron(DOWN, UP)
    expected = np.concatenate([c * ud - 1j * s * du, c * du - 1j * s * ud]) / math.sqrt(2)
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_heisenberg_branch_components():
    state, ham = pair(ModelSpec("heisenberg", g=1.0), "up", "down", "dense")
    t = math.pi / 8
    out = Propagator(ham).apply(state, t).control_blocks()[0]
    ud, du = np.kron(UP, DOWN), np.kron(DOWN, UP)
    ph = np.exp(1j * t)
    np.testing.assert_allclose(out[0], ph * (math.cos(2 * t) * ud - 1j * math.sin(2 * t) * du) / math.sqrt(2),
                               atol=1e-12)


def test_jc_rabi_oscillation():
    spec = ModelSpec("jaynes_cummings", g=1.0, n_max=3)
    state, ham = pair(spec, ("up", 0), ("down", 0))
    t = 0.9
    out = Propagator(ham, "branch").apply(state, t)
    u0, d0, d1 = (particle_state(s, k, 3) for s, k in (("up", 0), ("down", 0), ("down", 1)))
    first = math.cos(t) * np.kron(u0, d0) - 1j * math.sin(t) * np.kron(d1, d0)
    np.testing.assert_allclose(out.control_blocks()[0, 0], first / math.sqrt(2), atol=1e-12)


def test_branch_requires_one_body_hamiltonian():
    state, ham = pair(ModelSpec("exchange"), "up", "down")
    with pytest.raises(CapabilityError):
        EvolutionRequest(state, ham, (1.0,), backend="branch")


def test_branch_requires_branch_state():
    state, ham = pair(ModelSpec("rabi", n_max=3), ("up", 0), ("down", 0), rep="dense")
    with pytest.raises(CapabilityError):
        EvolutionRequest(state, ham, (1.0,), backend="branch")


@pytest.mark.parametrize("times", [(), (1.0, 0.5), (-1.0,), (0.3, 0.3)])
def test_invalid_times(times):
    state, ham = pair(ModelSpec("exchange"), "up", "down")
    with pytest.raises(ValueError):
        EvolutionRequest(state, ham, times)


@pytest.mark.parametrize("kind,nmax,t,tol", [("jaynes_cummings", 3, 1.0, 1e-10), ("rabi", 8, 0.5, 1e-9)])
def test_cross_validate(kind, nmax, t, tol):
    state, ham = pair(ModelSpec(kind, n_max=nmax), ("up", 0), ("down", 1))
    req = EvolutionRequest(state, ham, (t,), backend="branch")
    assert cross_validate(req, t) <= tol
    assert cross_validate(req, 0.0) == 0.0


def test_threaded_evolution_matches_serial():
    state, ham = pair(ModelSpec("rabi", n_max=6), ("up", 0), ("down", 0))
    req = EvolutionRequest(state, ham, (0.1, 0.7, 1.3), backend="branch")
    for a, b in zip(evolve(req), evolve(req, threads=3)):
        np.testing.assert_array_equal(a.to_dense(), b.to_dense())


def test_three_particle_symmetry_preserved_under_truncation():
    nm = 6
    spec = ModelSpec("rabi", n_particles=3, n_max=nm)
    inputs = [particle_state("up", 0, nm), particle_state("down", 0, nm), particle_state("down", 1, nm)]
    state = apply_plan(build_plan(3), inputs, representation="branch")
    ham = embed_model(spec, state.layout)
    d = 2 * (nm + 1)
    for out in evolve(EvolutionRequest(state, ham, (0.4, 1.9, 3.3), backend="branch")):
        assert abs(sector_probability(out, BOSONIC) - 0.5) < 1e-12
        assert abs(sector_probability(out, FERMIONIC) - 0.5) < 1e-12
        psi_b = sector_vector(out, BOSONIC)
        psi_f = sector_vector(out, FERMIONIC)
        for i, j in ((0, 1), (0, 2), (1, 2)):
            np.testing.assert_allclose(swap_particles_vector(psi_b, 3, d, i, j), psi_b, atol=1e-12)
            np.testing.assert_allclose(swap_particles_vector(psi_f, 3, d, i, j), -psi_f, atol=1e-12)


@pytest.mark.parametrize("backend", ["dense", "branch"])
def test_switch_commutes_with_evolution(backend):
    spec = ModelSpec("jaynes_cummings", n_max=3)
    state, ham = pair(spec, ("up", 0), ("down", 1), rep=backend)
    prop = Propagator(ham, backend)
    a = switch_statistics(prop.apply(state, 1.1)).to_dense()
    b = prop.apply(switch_statistics(state), 1.1).to_dense()
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_evolve_with_switches_applies_from_event_time():
    spec = ModelSpec("jaynes_cummings", n_max=3)
    state, ham = pair(spec, ("up", 0), ("down", 1))
    times = [0.2, 0.5, 0.8, 1.2]
    plain = [Propagator(ham, "branch").apply(state, t) for t in times]
    switched = evolve_with_switches(state, ham, times, switch_events=[0.5, 1.0], backend="branch")
    for t, p, s in zip(times, plain, switched):
        expected = switch_statistics(p) if 0.5 <= t < 1.0 else p
        np.testing.assert_allclose(s.to_dense(), expected.to_dense(), atol=1e-12)


def test_event_on_rounded_grid_time_counts_as_reached():
    spec = ModelSpec("jaynes_cummings", n_max=3)
    state, ham = pair(spec, ("up", 0), ("down", 0))
    event = 1.3 * math.pi
    grid_t = float(np.nextafter(event, 0.0))  # one ulp early, as from a rounded time grid
    out = evolve_with_switches(state, ham, [grid_t], switch_events=[event], backend="branch")[0]
    expected = switch_statistics(Propagator(ham, "branch").apply(state, grid_t))
    np.testing.assert_allclose(out.to_dense(), expected.to_dense(), atol=1e-12)


def test_krylov_path_above_dense_threshold():
    spec = ModelSpec("rabi", n_max=45)
    state, ham = pair(spec, ("up", 0), ("down", 0), rep="dense")
    assert ham.physical_operator.shape[0] > 8192
    dense_out = Propagator(ham, "dense").apply(state, 0.6).to_dense()
    branch_out = Propagator(ham, "branch").apply(pair(spec, ("up", 0), ("down", 0))[0], 0.6).to_dense()
    np.testing.assert_allclose(dense_out, branch_out, atol=1e-9)
    assert abs(map_to_physical(Propagator(ham).apply(state, 0.6), BOSONIC).norm - 1) < 1e-9
