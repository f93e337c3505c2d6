"""Simulated-space Hamiltonians and their lift into the embedding space."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .embedding import RegisterLayout, mode_dim_of, swap_matrix, symmetrization_layout
from .errors import ContractViolation, LayoutError
from .linalg import as_operator, identity, is_hermitian, kron, kron_all

KINDS = ("exchange", "heisenberg", "jaynes_cummings", "rabi", "hubbard", "asymmetric")

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SPLUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |up><down|, up = index 0
SMINUS = SPLUS.T.copy()
PAULI = {"x": SX, "y": SY, "z": SZ}


def annihilation(mode_dim: int) -> np.ndarray:
    """Truncated ``a``; ``a^dagger`` sends the top level to zero."""
    return np.diag(np.sqrt(np.arange(1, mode_dim, dtype=float)), 1).astype(complex)


def position_power(mode_dim: int, power: int, delta: float = 1.0) -> np.ndarray:
    """Matrix of ``(delta (a + a^dagger))**power`` restricted to the truncated space.

    The power is taken in a space ``power`` levels larger before cropping, so
    every element is that of the untruncated operator.
    """
    big = mode_dim + power
    a = annihilation(big)
    x = delta * (a + a.conj().T)
    return np.linalg.matrix_power(x, power)[:mode_dim, :mode_dim]


def on_spin(op, mode_dim):
    return np.kron(op, np.eye(mode_dim or 1))


def on_mode(op):
    return np.kron(np.eye(2), op)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a simulated Hamiltonian.

    ``kind`` is one of ``KINDS``.  ``n_max`` is the Fock truncation for the
    mode-carrying models; ``t_hop`` and ``U`` parametrize the two-mode
    Hubbard projection; ``h12``/``h21`` hold the two branch Hamiltonians of
    the ``asymmetric`` kind.
    """

    kind: str
    n_particles: int = 2
    g: float = 1.0
    n_max: int | None = None
    t_hop: float = 0.0
    U: float = 0.0
    h12: object = None
    h21: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("jaynes_cummings", "rabi"):
            if self.n_max is None or self.n_max < 1:
                raise ValueError(f"{self.kind} needs n_max >= 1")
        if self.kind in ("hubbard", "asymmetric") and self.n_particles != 2:
            raise ValueError(f"{self.kind} is a two-particle model")
        if self.n_particles < 2:
            raise ValueError("need at least two particles")
        for name in ("g", "t_hop", "U"):
            if not np.isreal(getattr(self, name)):
                raise ValueError(f"{name} must be real")

    @property
    def mode_dim(self):
        return None if self.kind in ("exchange", "heisenberg") else self.n_max + 1

    @property
    def local_dim(self) -> int:
        return 2 * (self.mode_dim or 1)


def single_particle_term(spec: ModelSpec) -> np.ndarray | None:
    """Per-particle Hamiltonian when ``H`` is a sum of identical one-body terms."""
    if spec.kind == "jaynes_cummings":
        nm = spec.mode_dim
        a = annihilation(nm)
        return spec.g * (np.kron(SPLUS, a) + np.kron(SMINUS, a.conj().T))
    if spec.kind == "rabi":
        nm = spec.mode_dim
        a = annihilation(nm)
        return spec.g * np.kron(SX, a + a.conj().T)
    return None


def embed_local(op, site: int, n_particles: int, d: int) -> sp.csr_matrix:
    """Operator ``op`` acting on particle ``site`` (0-based), identity elsewhere."""
    ops = [identity(d)] * n_particles
    ops[site] = as_operator(op)
    return kron_all(ops)


def sum_of_local(term, n_particles: int) -> sp.csr_matrix:
    d = term.shape[0]
    return sum(embed_local(term, i, n_particles, d) for i in range(n_particles)).tocsr()


def build_hamiltonian(spec: ModelSpec) -> sp.csr_matrix:
    """Hamiltonian on the simulated (physical) space.

    Spin-only models couple every pair of particles; the mode models are
    sums of identical single-particle terms.
    """
    n = spec.n_particles
    if spec.kind in ("exchange", "heisenberg"):
        if spec.kind == "exchange":
            terms = ((SPLUS, SMINUS), (SMINUS, SPLUS))
        else:
            terms = ((SX, SX), (SY, SY), (SZ, SZ))
        h = sp.csr_matrix((2**n, 2**n), dtype=complex)
        for i, j in itertools.combinations(range(n), 2):
            for a, b in terms:
                ops = [identity(2)] * n
                ops[i], ops[j] = as_operator(spec.g * a), as_operator(b)
                h = h + kron_all(ops)
        return h.tocsr()
    if spec.kind in ("jaynes_cummings", "rabi"):
        return sum_of_local(single_particle_term(spec), n)
    if spec.kind == "hubbard":
        hub = hubbard_two_particle(spec.t_hop, spec.U)
        return as_operator(hub.h_b + hub.h_f)
    raise ValueError("asymmetric models have no single Hamiltonian; use embed_asymmetric")


def swap_defect(h, n_particles: int, d: int) -> float:
    """max over particle pairs of ``max|S_ij H S_ij - H|``."""
    h = as_operator(h)
    worst = 0.0
    for i, j in itertools.combinations(range(n_particles), 2):
        s = swap_matrix(n_particles, d, i, j)
        diff = s @ h @ s.T - h
        if diff.nnz:
            worst = max(worst, float(abs(diff).max()))
    return worst


@dataclass(frozen=True)
class EmbeddedHamiltonian:
    """Hamiltonian on the full embedding register.

    ``physical`` is the simulated ``H`` for the invariant lift ``1 (x) H``;
    asymmetric lifts carry ``blocks = (H12, H21)`` instead.
    """

    layout: RegisterLayout
    physical: object = None
    single_particle_terms: tuple | None = None
    blocks: tuple | None = None

    @cached_property
    def operator(self) -> sp.csr_matrix:
        if self.blocks is not None:
            up = sp.csr_matrix(np.diag([1.0, 0.0]).astype(complex))
            down = sp.csr_matrix(np.diag([0.0, 1.0]).astype(complex))
            return (kron(up, self.blocks[0]) + kron(down, self.blocks[1])).tocsr()
        return kron(identity(self.layout.control_dim), self.physical_operator)

    @cached_property
    def physical_operator(self) -> sp.csr_matrix:
        """Simulated ``H``, assembled from the one-body terms if not given."""
        if self.physical is not None:
            return self.physical
        if self.single_particle_terms is None:
            raise LayoutError("asymmetric lift has no single simulated Hamiltonian")
        d = self.single_particle_terms[0].shape[0]
        n = len(self.single_particle_terms)
        return sum(embed_local(t, i, n, d) for i, t in enumerate(self.single_particle_terms)).tocsr()

    @property
    def invariant_lift(self) -> bool:
        return self.blocks is None


def embed(h, layout: RegisterLayout, single_particle_terms=None) -> EmbeddedHamiltonian:
    """Lift ``h`` to ``1 (x) h`` with identity on ``q_c`` and all ancillas."""
    h = as_operator(h)
    if h.shape[0] != layout.physical_dim:
        raise LayoutError(f"H has dim {h.shape[0]}, layout particle block has {layout.physical_dim}")
    if single_particle_terms is not None:
        single_particle_terms = tuple(np.asarray(t, dtype=complex) for t in single_particle_terms)
        if len(single_particle_terms) != layout.n_particles:
            raise LayoutError("need one single-particle term per particle")
    return EmbeddedHamiltonian(layout, physical=h, single_particle_terms=single_particle_terms)


def embed_asymmetric(h12, h21) -> EmbeddedHamiltonian:
    """``|up><up| (x) H12 + |down><down| (x) H21`` on the two-particle direct encoding."""
    h12 = as_operator(h12)
    h21 = as_operator(h21)
    if h12.shape != h21.shape:
        raise LayoutError(f"H12 {h12.shape} and H21 {h21.shape} differ in shape")
    d = math.isqrt(h12.shape[0])
    if d * d != h12.shape[0]:
        raise LayoutError("asymmetric blocks must act on two equal particles")
    layout = symmetrization_layout((mode_dim_of(np.zeros(d)),) * 2, with_stat_control=False)
    return EmbeddedHamiltonian(layout, blocks=(h12, h21))


def embed_model(spec: ModelSpec, layout: RegisterLayout) -> EmbeddedHamiltonian:
    if spec.kind == "asymmetric":
        return embed_asymmetric(spec.h12, spec.h21)
    term = single_particle_term(spec)
    if term is not None:
        if layout.n_particles != spec.n_particles or layout.local_dim != term.shape[0]:
            raise LayoutError("layout does not match the model's particles")
        if not is_hermitian(term):
            raise ContractViolation(f"{spec.kind} one-body term is not Hermitian")
        # the N-body operator is assembled lazily: the branch backend never needs it
        return EmbeddedHamiltonian(layout, single_particle_terms=(term,) * spec.n_particles)
    h = build_hamiltonian(spec)
    if not is_hermitian(h):
        raise ContractViolation(f"{spec.kind} Hamiltonian is not Hermitian")
    return embed(h, layout)


# --------------------------------------------------------------------------
# two-mode Hubbard projection


HUBBARD_BASIS = ("|2,0>", "|0,2>", "|1_1,2_2>", "|1_2,2_1>")


@dataclass(frozen=True)
class HubbardTwoMode:
    """Two-particle sector of the two-mode Hubbard model.

    Basis ``s1..s4`` = |2,0>, |0,2>, |1_1,2_2>, |1_2,2_1>.  The bosonic
    subspace (c3 = c4) and the fermionic one (c1 = c2 = 0, c3 = -c4) are
    selected by ``p_b`` and ``p_f``.  ``switch`` flips the sign of c4,
    exchanging |1,1>_b and |1,1>_f.
    """

    h_b: np.ndarray
    h_f: np.ndarray
    p_b: np.ndarray
    p_f: np.ndarray
    pair_b: np.ndarray
    pair_f: np.ndarray
    basis: tuple = HUBBARD_BASIS

    @property
    def switch(self) -> np.ndarray:
        return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

    @property
    def embedded(self) -> np.ndarray:
        """Hamiltonian on the 4-dim spinor evolving both sectors at once."""
        return self.h_b + self.h_f


def hubbard_two_particle(t_hop: float, U: float) -> HubbardTwoMode:
    s = np.eye(4, dtype=complex)
    pair_b = (s[2] + s[3]) / math.sqrt(2)
    pair_f = (s[2] - s[3]) / math.sqrt(2)
    doublons = s[0] + s[1]
    hop = -math.sqrt(2) * t_hop * np.outer(doublons, pair_b.conj())
    h_b = hop + hop.conj().T + U * np.outer(pair_b, pair_b.conj())
    h_f = U * np.outer(pair_f, pair_f.conj())
    p_f = np.outer(pair_f, pair_f.conj())
    p_b = np.eye(4) - p_f
    return HubbardTwoMode(h_b, h_f, p_b, p_f, pair_b, pair_f)
