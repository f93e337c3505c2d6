"""Symmetrization spinors: construction, statistics switch and mapping.

Register order (big-endian, first listed varies slowest)::

    [q_c] [ancilla register of step N] ... [ancilla register of step 2] [particle 1] ... [particle N]

``q_c`` = up (index 0) carries the symmetric sector, down (index 1) the
antisymmetric one.  Each particle is spin (x) truncated mode, spin slowest,
with up = index 0.  Placing the last step's register most significant makes
the dense ancilla rows appear in the same order as the printed three-particle
spinor, with the two unused rows last.

The two-particle direct encoding is the same layout without ``q_c``: one
ancilla qubit, up = identity branch, down = swapped branch.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import DegenerateInputError, LayoutError, PreconditionError, SizeError
from .linalg import MAX_BASIS_SIZE

BOSONIC = "bosonic"
FERMIONIC = "fermionic"
CROSS = "cross"
SECTORS = (BOSONIC, FERMIONIC)

NORM_TOL = 1e-12
ORTHO_TOL = 1e-10
MAX_BRUTE_FORCE_N = 8


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length()


# --------------------------------------------------------------------------
# single-particle states


def particle_state(spin, fock=None, n_max=None) -> np.ndarray:
    """Basis vector ``|spin> (x) |fock>`` of one particle.

    ``spin`` is ``"up"``/``"down"`` (or 0/1).  Without ``n_max`` the particle
    is spin only.
    """
    s = {"up": 0, "down": 1, 0: 0, 1: 1}[spin]
    if n_max is None:
        if fock not in (None, 0):
            raise LayoutError("Fock index given for a spin-only particle")
        v = np.zeros(2, dtype=complex)
        v[s] = 1.0
        return v
    if fock is None:
        fock = 0
    if not 0 <= fock <= n_max:
        raise LayoutError(f"Fock index {fock} outside truncation n_max={n_max}")
    v = np.zeros(2 * (n_max + 1), dtype=complex)
    v[s * (n_max + 1) + fock] = 1.0
    return v


def mode_dim_of(vec) -> int | None:
    """Mode dimension implied by a single-particle vector (None = spin only)."""
    n = len(vec)
    if n == 2:
        return None
    if n % 2 or n < 2:
        raise LayoutError(f"single-particle dimension {n} is not 2 x mode_dim")
    return n // 2


# --------------------------------------------------------------------------
# layout


@dataclass(frozen=True)
class RegisterLayout:
    """Subsystem list of an embedding register.

    Attributes:
        has_stat_control: whether the statistics-control qubit ``q_c`` is present.
        ancilla_widths: qubit widths of the symmetrization registers, most
            significant first (step N first, step 2 last).
        mode_dims: per-particle mode dimension, ``None`` for spin-only particles.
    """

    has_stat_control: bool
    ancilla_widths: tuple
    mode_dims: tuple

    @property
    def n_particles(self) -> int:
        return len(self.mode_dims)

    @property
    def ancilla_qubits(self) -> int:
        return sum(self.ancilla_widths)

    @property
    def ancilla_dim(self) -> int:
        return 2**self.ancilla_qubits

    @property
    def control_dim(self) -> int:
        """Dimension of ``q_c`` (x) all ancilla registers."""
        return (2 if self.has_stat_control else 1) * self.ancilla_dim

    def particle_dim(self, i: int) -> int:
        m = self.mode_dims[i]
        return 2 * (1 if m is None else m)

    @property
    def local_dim(self) -> int:
        """Common single-particle dimension; raises if particles differ."""
        dims = {self.particle_dim(i) for i in range(self.n_particles)}
        if len(dims) != 1:
            raise LayoutError("particles have different local dimensions")
        return dims.pop()

    @property
    def physical_dim(self) -> int:
        return math.prod(self.particle_dim(i) for i in range(self.n_particles))

    @property
    def total_dim(self) -> int:
        return self.control_dim * self.physical_dim

    def register_values(self, ancilla_index: int) -> dict:
        """Decode an ancilla basis index into ``{step n: register value}``."""
        values = {}
        shift = self.ancilla_qubits
        for offset, width in enumerate(self.ancilla_widths):
            shift -= width
            n = self.n_particles - offset
            values[n] = (ancilla_index >> shift) & ((1 << width) - 1)
        return values

    def ancilla_index(self, values: dict) -> int:
        idx = 0
        for offset, width in enumerate(self.ancilla_widths):
            n = self.n_particles - offset
            idx = (idx << width) | values.get(n, 0)
        return idx

    def ancilla_parity(self) -> np.ndarray:
        """(-1)^(number of non-identity register values) for every ancilla index."""
        out = np.empty(self.ancilla_dim)
        for a in range(self.ancilla_dim):
            nswaps = sum(1 for v in self.register_values(a).values() if v)
            out[a] = -1.0 if nswaps % 2 else 1.0
        return out

    def used_ancilla_mask(self) -> np.ndarray:
        """True where every step register holds one of its initialized states."""
        mask = np.ones(self.ancilla_dim, dtype=bool)
        for a in range(self.ancilla_dim):
            mask[a] = all(v < n for n, v in self.register_values(a).items())
        return mask


def symmetrization_layout(mode_dims, with_stat_control: bool) -> RegisterLayout:
    n = len(mode_dims)
    if n < 2:
        raise LayoutError("need at least two particles")
    widths = tuple(ceil_log2(k) for k in range(n, 1, -1))
    return RegisterLayout(bool(with_stat_control), widths, tuple(mode_dims))


def swap_permutation(n_particles: int, d: int, i: int, j: int) -> np.ndarray:
    """Index map ``perm`` with ``(S_ij v)[perm[p]] = v[p]`` (0-based particles)."""
    idx = np.arange(d**n_particles).reshape((d,) * n_particles)
    return np.swapaxes(idx, i, j).reshape(-1)


def swap_matrix(n_particles: int, d: int, i: int, j: int) -> sp.csr_matrix:
    """Sparse permutation operator exchanging particles ``i`` and ``j``."""
    dim = d**n_particles
    perm = swap_permutation(n_particles, d, i, j)
    return sp.csr_matrix((np.ones(dim, dtype=complex), (np.arange(dim), perm)), shape=(dim, dim))


def swap_particles_vector(vec, n_particles: int, d: int, i: int, j: int) -> np.ndarray:
    t = np.asarray(vec).reshape((d,) * n_particles)
    return np.swapaxes(t, i, j).reshape(-1).copy()


# --------------------------------------------------------------------------
# spinor


@dataclass(frozen=True)
class PermutationBranch:
    """One product term of a spinor.

    ``perm[p]`` is the (0-based) input orbital carried by particle ``p``;
    ``factors[p]`` is particle ``p``'s current single-particle state.
    """

    perm: tuple
    sign: float
    factors: tuple
    ancilla_index: int
    control: int | None = None

    def product(self) -> np.ndarray:
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.kron(out, f)
        return out


@dataclass(frozen=True)
class SymmetrizationSpinor:
    """Embedding state held densely or as a signed sum of product branches.

    In branch form the dense vector is
    ``prefactor * sum_b sign_b |control_b, ancilla_b> (x) prod_p factors_b[p]``.
    """

    layout: RegisterLayout
    dense: np.ndarray | None = None
    branches: tuple | None = None
    prefactor: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def representation(self) -> str:
        return "branch" if self.branches is not None else "dense"

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        lay = self.layout
        if lay.total_dim > MAX_BASIS_SIZE:
            raise SizeError(f"dense spinor of dimension {lay.total_dim} exceeds {MAX_BASIS_SIZE}")
        out = np.zeros((lay.control_dim, lay.physical_dim), dtype=complex)
        for br in self.branches:
            row = br.ancilla_index + (br.control or 0) * lay.ancilla_dim
            out[row] += self.prefactor * br.sign * br.product()
        return out.reshape(-1)

    def as_dense(self) -> "SymmetrizationSpinor":
        return SymmetrizationSpinor(self.layout, dense=self.to_dense(), meta=dict(self.meta))

    def control_blocks(self) -> np.ndarray:
        """Dense amplitudes reshaped to (q_c, ancilla, physical)."""
        lay = self.layout
        nq = 2 if lay.has_stat_control else 1
        return self.to_dense().reshape(nq, lay.ancilla_dim, lay.physical_dim)

    def norm(self) -> float:
        if self.dense is not None:
            return float(np.linalg.norm(self.dense))
        return float(np.linalg.norm(self.to_dense()))


def _check_normalized(vecs):
    for k, v in enumerate(vecs):
        nrm = np.linalg.norm(v)
        if abs(nrm**2 - 1.0) > NORM_TOL:
            raise PreconditionError(f"input state {k + 1} is not normalized (|psi|^2 = {nrm**2:.15g})")


def _check_orthonormal(vecs, tol=ORTHO_TOL):
    _check_normalized(vecs)
    for a, b in itertools.combinations(range(len(vecs)), 2):
        ov = np.vdot(vecs[a], vecs[b])
        if abs(ov) > tol:
            raise PreconditionError(
                f"inputs {a + 1} and {b + 1} are not orthogonal (overlap {ov:.3e})"
            )


def _input_layout(inputs, with_stat_control):
    dims = {len(v) for v in inputs}
    if len(dims) != 1:
        raise LayoutError("all particles need the same single-particle dimension")
    mode = mode_dim_of(inputs[0])
    return symmetrization_layout((mode,) * len(inputs), with_stat_control)


def build_two_particle_spinor(psi1, psi2, intent: str = BOSONIC) -> SymmetrizationSpinor:
    """``(|up> psi1 psi2 + |down> psi2 psi1) / sqrt(2)`` with one ancilla qubit.

    Raises:
        DegenerateInputError: for fermionic intent with ``|<psi1|psi2>| ~ 1``.
    """
    psi1 = np.asarray(psi1, dtype=complex)
    psi2 = np.asarray(psi2, dtype=complex)
    _check_normalized([psi1, psi2])
    if intent == FERMIONIC and abs(np.vdot(psi1, psi2)) > 1 - NORM_TOL:
        raise DegenerateInputError("identical orbitals: the antisymmetric combination vanishes")
    layout = _input_layout([psi1, psi2], with_stat_control=False)
    branches = (
        PermutationBranch((0, 1), 1.0, (psi1, psi2), ancilla_index=0),
        PermutationBranch((1, 0), 1.0, (psi2, psi1), ancilla_index=1),
    )
    return SymmetrizationSpinor(layout, branches=branches, prefactor=1 / math.sqrt(2))


# --------------------------------------------------------------------------
# symmetrization plan


@dataclass(frozen=True)
class ControlledSwap:
    """Swap of particles ``pair`` (1-based) when step ``step``'s register is ``control_state``."""

    step: int
    control_state: int
    pair: tuple
    controls: int
    fermionic_sign: bool = True


@dataclass(frozen=True)
class PlanStep:
    n: int
    ancilla_width: int
    init_states: tuple
    cswaps: tuple


@dataclass(frozen=True)
class Resources:
    """Gate and qubit counts of a symmetrization plan.

    ``closed_form_gates`` is the quoted total (N-1)(N-2)/2, kept beside the
    counted ``cswap_count`` = N(N-1)/2 so the mismatch stays visible.
    """

    n_particles: int
    cswap_count: int
    kappa: int
    toffoli_count: int
    working_qubits: int
    sign_gate_count: int
    closed_form_gates: int

    @property
    def formula_discrepancy(self) -> bool:
        return self.closed_form_gates != self.cswap_count


@dataclass(frozen=True)
class SymmetrizationPlan:
    n_particles: int
    steps: tuple
    resources: Resources

    def layout(self, mode_dims=None, with_stat_control: bool = True) -> RegisterLayout:
        if mode_dims is None:
            mode_dims = (None,) * self.n_particles
        return symmetrization_layout(tuple(mode_dims), with_stat_control)


def toffoli_overhead(controls: int) -> tuple:
    """(Toffoli gates, working qubits) to widen a singly-controlled gate to ``controls`` controls."""
    c = max(controls, 1)
    return 2 * (c - 1), c - 1


def build_plan(n_particles: int) -> SymmetrizationPlan:
    """Gate program that symmetrizes ``n_particles`` particles.

    Step ``n`` adds ``ceil(log2 n)`` ancilla qubits prepared in an even
    superposition of their first ``n`` basis states; state 0 keeps the
    previously built spinor and state ``k`` (1 <= k < n) swaps particles
    ``k`` and ``n``.
    """
    if int(n_particles) != n_particles or n_particles < 2:
        raise ValueError("build_plan needs an integer N >= 2")
    steps = []
    toffoli = 0
    working = 0
    for n in range(2, n_particles + 1):
        width = ceil_log2(n)
        cswaps = tuple(
            ControlledSwap(step=n, control_state=k, pair=(k, n), controls=width)
            for k in range(1, n)
        )
        for cs in cswaps:
            t, w = toffoli_overhead(cs.controls)
            toffoli += t
            working = max(working, w)
        steps.append(PlanStep(n, width, tuple(range(n)), cswaps))
    cswap_count = sum(len(s.cswaps) for s in steps)
    res = Resources(
        n_particles=n_particles,
        cswap_count=cswap_count,
        kappa=sum(s.ancilla_width for s in steps),
        toffoli_count=toffoli,
        working_qubits=working,
        sign_gate_count=cswap_count,
        closed_form_gates=(n_particles - 1) * (n_particles - 2) // 2,
    )
    return SymmetrizationPlan(n_particles, tuple(steps), res)


def resources(plan: SymmetrizationPlan) -> Resources:
    return plan.resources


def _plan_configs(plan: SymmetrizationPlan):
    """Every combination of initialized register values, as {step: value} dicts."""
    choices = [s.init_states for s in plan.steps]
    for combo in itertools.product(*choices):
        yield {step.n: v for step, v in zip(plan.steps, combo)}


def apply_plan(plan: SymmetrizationPlan, inputs, with_stat_control: bool = True,
               representation: str = "dense", allow_nonorthogonal: bool = False,
               kernel_impl=None) -> SymmetrizationSpinor:
    """Run the symmetrization program on product input ``inputs[0] ... inputs[N-1]``.

    The dense route applies register initializations and controlled swaps
    gate by gate to the state vector.  The branch route replays the same
    program on orbital labels and yields the product branches directly.
    """
    inputs = [np.asarray(v, dtype=complex) for v in inputs]
    if len(inputs) != plan.n_particles:
        raise LayoutError(f"plan is for {plan.n_particles} particles, got {len(inputs)} inputs")
    if allow_nonorthogonal:
        _check_normalized(inputs)
    else:
        _check_orthonormal(inputs)
    layout = _input_layout(inputs, with_stat_control)
    n = plan.n_particles
    nq = 2 if with_stat_control else 1
    prefactor = 1.0 / math.sqrt(nq * math.factorial(n))

    if representation == "branch":
        branches = []
        for values in _plan_configs(plan):
            labels = list(range(n))
            nswaps = 0
            for step in plan.steps:
                k = values[step.n]
                if k:
                    labels[k - 1], labels[step.n - 1] = labels[step.n - 1], labels[k - 1]
                    nswaps += 1
            idx = layout.ancilla_index(values)
            factors = tuple(inputs[lab] for lab in labels)
            for c in range(nq):
                sign = -1.0 if (c == 1 and nswaps % 2) else 1.0
                branches.append(PermutationBranch(tuple(labels), sign, factors, idx,
                                                  c if with_stat_control else None))
        return SymmetrizationSpinor(layout, branches=tuple(branches), prefactor=prefactor)
    if representation != "dense":
        raise ValueError(f"unknown representation {representation!r}")

    if layout.total_dim > MAX_BASIS_SIZE:
        raise SizeError(f"dense spinor of dimension {layout.total_dim} exceeds {MAX_BASIS_SIZE}")
    d = layout.local_dim
    product = inputs[0]
    for v in inputs[1:]:
        product = np.kron(product, v)
    state = np.zeros((layout.control_dim, layout.physical_dim), dtype=complex)
    # q_c prepared in (|up> + |down>)/sqrt(2), every ancilla register in |0>
    for c in range(nq):
        state[c * layout.ancilla_dim] = product / math.sqrt(nq)
    reg_shape = (nq,) + tuple(2**w for w in layout.ancilla_widths)
    anc_values = [layout.register_values(a) for a in range(layout.ancilla_dim)]
    for step in plan.steps:
        axis = 1 + (n - step.n)
        view = state.reshape(reg_shape + (layout.physical_dim,))
        src = np.take(view, 0, axis=axis).copy()
        for k in step.init_states:
            idx = [slice(None)] * view.ndim
            idx[axis] = k
            view[tuple(idx)] = src / math.sqrt(len(step.init_states))
        for cs in step.cswaps:
            rows = [c * layout.ancilla_dim + a
                    for c in range(nq)
                    for a in range(layout.ancilla_dim)
                    if anc_values[a][step.n] == cs.control_state]
            signs = [(-1.0 if (r // layout.ancilla_dim == 1 and cs.fermionic_sign) else 1.0)
                     for r in rows]
            kernels.swap_particles(state, rows, signs, n, d, cs.pair[0] - 1, cs.pair[1] - 1,
                                   impl=kernel_impl)
    return SymmetrizationSpinor(layout, dense=state.reshape(-1))


def _inversions(seq) -> int:
    return sum(1 for a, b in itertools.combinations(range(len(seq)), 2) if seq[a] > seq[b])


def brute_force_spinor(inputs, with_stat_control: bool = True) -> SymmetrizationSpinor:
    """Reference spinor by explicit enumeration of all N! permutations.

    Each permutation is placed at the ancilla state obtained by peeling off
    the particles from N down to 2; its fermionic sign is the parity
    computed from the inversion count.
    """
    inputs = [np.asarray(v, dtype=complex) for v in inputs]
    n = len(inputs)
    if n > MAX_BRUTE_FORCE_N:
        raise SizeError(f"brute-force enumeration is capped at N={MAX_BRUTE_FORCE_N}")
    _check_orthonormal(inputs)
    layout = _input_layout(inputs, with_stat_control)
    nq = 2 if with_stat_control else 1
    amp = 1.0 / math.sqrt(nq * math.factorial(n))
    out = np.zeros((nq, layout.ancilla_dim, layout.physical_dim), dtype=complex)
    for labels in itertools.permutations(range(n)):
        work = list(labels)
        values = {}
        for m in range(n - 1, 0, -1):
            p = work.index(m)
            values[m + 1] = 0 if p == m else p + 1
            work[p], work[m] = work[m], work[p]
        a = layout.ancilla_index(values)
        vec = inputs[labels[0]]
        for lab in labels[1:]:
            vec = np.kron(vec, inputs[lab])
        parity = -1.0 if _inversions(labels) % 2 else 1.0
        out[0, a] += amp * vec
        if with_stat_control:
            out[1, a] += amp * parity * vec
    return SymmetrizationSpinor(layout, dense=out.reshape(-1))


# --------------------------------------------------------------------------
# statistics switch and mapping


def switch_statistics(state: SymmetrizationSpinor) -> SymmetrizationSpinor:
    """Exchange the roles of the bosonic and fermionic sectors.

    With ``q_c`` present this is a bit flip on ``q_c``.  Without it, each
    ancilla state is multiplied by the parity of its swaps, which for two
    particles is ``sigma_z`` on the ancilla.
    """
    lay = state.layout
    if state.branches is not None:
        if lay.has_stat_control:
            new = tuple(PermutationBranch(b.perm, b.sign, b.factors, b.ancilla_index, 1 - b.control)
                        for b in state.branches)
        else:
            par = lay.ancilla_parity()
            new = tuple(PermutationBranch(b.perm, b.sign * par[b.ancilla_index], b.factors,
                                          b.ancilla_index, b.control)
                        for b in state.branches)
        return SymmetrizationSpinor(lay, branches=new, prefactor=state.prefactor, meta=dict(state.meta))
    blocks = state.control_blocks()
    if lay.has_stat_control:
        out = blocks[::-1].copy()
    else:
        out = blocks * lay.ancilla_parity()[None, :, None]
    return SymmetrizationSpinor(lay, dense=out.reshape(-1), meta=dict(state.meta))


def sector_vector(state: SymmetrizationSpinor, sector: str) -> np.ndarray:
    """Unnormalized physical-space vector of one statistics sector.

    With ``q_c``: postselect ``q_c`` and sum over all ancilla states.
    Without: contract the ancillas with (1, ..., 1) (bosonic) or with the
    parity-signed vector (fermionic).
    """
    if sector not in SECTORS:
        raise ValueError(f"sector must be one of {SECTORS}, got {sector!r}")
    lay = state.layout
    if lay.has_stat_control:
        c = 0 if sector == BOSONIC else 1
        if state.branches is not None:
            out = np.zeros(lay.physical_dim, dtype=complex)
            for b in state.branches:
                if b.control == c:
                    out += b.sign * b.product()
            return state.prefactor * out
        return state.control_blocks()[c].sum(axis=0)
    weights = np.ones(lay.ancilla_dim) if sector == BOSONIC else lay.ancilla_parity()
    if state.branches is not None:
        out = np.zeros(lay.physical_dim, dtype=complex)
        for b in state.branches:
            out += weights[b.ancilla_index] * b.sign * b.product()
        return state.prefactor * out
    return np.tensordot(weights, state.control_blocks()[0], axes=(0, 0))


@dataclass(frozen=True)
class PhysicalState:
    """Mapped wavefunction; ``amplitudes`` is normalized unless ``degenerate``."""

    amplitudes: np.ndarray
    norm: float
    sector: str
    degenerate: bool = False


def map_to_physical(state: SymmetrizationSpinor, sector: str, zero_tol: float = 1e-12) -> PhysicalState:
    """Boson or fermion wavefunction encoded in ``state``.

    A vanishing contraction (e.g. the fermionic sector of identical orbitals)
    is returned with ``degenerate=True`` and the raw zero vector.
    """
    vec = sector_vector(state, sector)
    nrm = float(np.linalg.norm(vec))
    if nrm <= zero_tol:
        return PhysicalState(vec, nrm, sector, degenerate=True)
    return PhysicalState(vec / nrm, nrm, sector)


def rotate_pair_ancilla(state: SymmetrizationSpinor) -> np.ndarray:
    """Apply ``(sigma_x + sigma_z)/sqrt(2)`` to the ancilla of a two-particle spinor.

    Returns the (2, physical) block: row 0 is ``psi_b/sqrt(2)``, row 1 ``psi_f/sqrt(2)``.
    """
    lay = state.layout
    if lay.has_stat_control or lay.ancilla_qubits != 1:
        raise LayoutError("ancilla rotation needs the two-particle direct encoding")
    rot = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    return rot @ state.control_blocks()[0]
