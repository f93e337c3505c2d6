import math

import numpy as np
import pytest
from scipy.integrate import quad

from statswitch.dynamics import Propagator
from statswitch.embedding import BOSONIC, FERMIONIC, build_two_particle_spinor, map_to_physical, particle_state
from statswitch.errors import LayoutError
from statswitch.models import ModelSpec, embed_model
from statswitch.wavefield import GridSpec, eigenfunction, eigenfunction_table, joint_density


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.3])
def test_ground_state_value_and_variance(delta):
    assert abs(eigenfunction(0, 0.0, delta) - (2 * math.pi * delta**2) ** -0.25) < 1e-15
    var, _ = quad(lambda x: x**2 * eigenfunction(0, x, delta) ** 2, -np.inf, np.inf, epsabs=1e-13)
    assert abs(var - delta**2) < 1e-8


def test_odd_parity_zero():
    assert eigenfunction(1, 0.0) == 0.0


def test_orthonormality_by_quadrature():
    x = np.linspace(-14, 14, 8001)
    table = eigenfunction_table(12, x, 1.3)
    gram = (table * (x[1] - x[0])) @ table.T
    np.testing.assert_allclose(gram, np.eye(13), atol=1e-8)


def test_matrix_elements_of_position():
    # <n|x|n+1> = delta sqrt(n + 1)
    x = np.linspace(-15, 15, 6001)
    table = eigenfunction_table(5, x, 0.7)
    h = x[1] - x[0]
    for n in range(5):
        assert abs(np.sum(table[n] * x * table[n + 1]) * h - 0.7 * math.sqrt(n + 1)) < 1e-8


def test_range_and_argument_errors():
    with pytest.raises(ValueError):
        eigenfunction(501, 0.0)
    with pytest.raises(ValueError):
        eigenfunction(-1, 0.0)
    with pytest.raises(ValueError):
        eigenfunction(0, 0.0, delta=0.0)


def rabi_pair(t, nm=24):
    state = build_two_particle_spinor(particle_state("up", 0, nm), particle_state("down", 0, nm))
    ham = embed_model(ModelSpec("rabi", n_max=nm), state.layout)
    return Propagator(ham, "branch").apply(state, t)


def test_density_exchange_symmetry():
    out = rabi_pair(1.0)
    grid = GridSpec(axes={1: (-5, 5, 81), 2: (-5, 5, 81)}, spins=("up", "up"))
    for sector in (BOSONIC, FERMIONIC):
        d = joint_density(map_to_physical(out, sector).amplitudes, (25, 25), grid)
        np.testing.assert_allclose(d, d.T, rtol=1e-10, atol=1e-14 * d.max())
    d_f = joint_density(map_to_physical(out, FERMIONIC).amplitudes, (25, 25), grid)
    assert np.max(np.diag(d_f)) <= 1e-10 * d_f.max()


def test_marginal_normalization():
    out = rabi_pair(0.6)
    psi = map_to_physical(out, BOSONIC).amplitudes
    grid = GridSpec(axes={1: (-9, 9, 241), 2: (-9, 9, 241)}, spins=("up", "up"))
    d = joint_density(psi, (25, 25), grid)
    h = 18 / 240
    weight = np.linalg.norm(psi.reshape(2, 25, 2, 25)[0, :, 0, :]) ** 2
    assert abs(d.sum() * h * h - weight) < 1e-3
    total = joint_density(psi, (25, 25), GridSpec(axes=grid.axes)).sum() * h * h
    assert abs(total - 1) < 1e-3


def test_axis_order_and_fixed_particles():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(4 * 3) ** 3) + 1j * rng.normal(size=(4 * 3) ** 3)
    psi /= np.linalg.norm(psi)
    dims = (6, 6, 6)
    a = joint_density(psi, dims, GridSpec(axes={1: (-2, 2, 5), 3: (-1, 1, 4)}, fixed={2: 0.3}))
    b = joint_density(psi, dims, GridSpec(axes={3: (-1, 1, 4), 1: (-2, 2, 5)}, fixed={2: 0.3}))
    assert a.shape == (5, 4)
    np.testing.assert_allclose(a, b.T)
    # brute force one point
    x1, x3 = -2.0, 1.0
    p1, p2, p3 = (eigenfunction_table(5, [v])[:, 0] for v in (x1, 0.3, x3))
    amp = np.einsum("aibjck,i,j,k->abc", psi.reshape(2, 6, 2, 6, 2, 6), p1, p2, p3)
    assert abs(a[0, -1] - np.sum(np.abs(amp) ** 2)) < 1e-12


def test_grid_validation():
    psi = np.zeros(16)
    psi[0] = 1
    with pytest.raises(LayoutError):
        joint_density(psi, (None, None), GridSpec(axes={1: (-1, 1, 3), 2: (-1, 1, 3)}))
    with pytest.raises(LayoutError):
        GridSpec(axes={1: (-1, 1, 3)}).validate(2)
    with pytest.raises(LayoutError):
        GridSpec(axes={1: (-1, 1, 1), 2: (-1, 1, 3)}).validate(2)
    with pytest.raises(LayoutError):
        GridSpec(axes={1: (-1, 1, 3), 2: (-1, 1, 3)}, fixed={2: 0.0}).validate(2)
