"""Embedding quantum simulator with a switchable boson/fermion statistics register.

Particles are simulated in first quantization.  A symmetrization spinor holds
every label permutation of a product state, and ancilla registers select the
symmetric or antisymmetric combination.  A local operation on those ancillas
switches the statistics during a simulation.
"""
from .dynamics import EvolutionRequest, Propagator, cross_validate, evolve, evolve_with_switches
from .embedding import (BOSONIC, CROSS, FERMIONIC, RegisterLayout, SymmetrizationSpinor, apply_plan,
                        brute_force_spinor, build_plan, build_two_particle_spinor, map_to_physical,
                        particle_state, resources, switch_statistics)
from .errors import (CapabilityError, ContractViolation, DegenerateInputError, LayoutError,
                     NumericalError, PreconditionError, ScenarioError, SizeError, StatSwitchError)
from .kernels import BACKEND as KERNEL_BACKEND
from .linalg import evolve_exact, spectral_decompose
from .measurement import (ProductOperator, expect_cross_n, expect_n, expect_two, second_moment_ratio,
                          test_permutation_invariance)
from .models import (ModelSpec, build_hamiltonian, embed, embed_asymmetric, embed_model,
                     hubbard_two_particle)
from .wavefield import GridSpec, eigenfunction, joint_density

__version__ = "0.1.0"
