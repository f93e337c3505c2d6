"""Time evolution of embedding states.

Two interchangeable backends:

* ``dense`` exponentiates the embedded operator on the full register (one
  eigendecomposition reused over all times, or Krylov stepping above
  ``DENSE_THRESHOLD``).  For an invariant lift ``1 (x) H`` only ``H`` is
  decomposed and applied to every control block;
* ``branch`` evolves each single-particle factor of every permutation branch
  independently, valid when ``H = sum_i h_i``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embedding import PermutationBranch, SymmetrizationSpinor, switch_statistics
from .errors import CapabilityError, NumericalError
from .linalg import DENSE_THRESHOLD, KRYLOV_TOL, Spectrum, evolve_exact, spectral_decompose
from .models import EmbeddedHamiltonian

BACKENDS = ("dense", "branch")
NORM_TOL = 1e-10
EVENT_TIME_TOL = 1e-12  # relative; absorbs rounding between event and grid times


@dataclass(frozen=True)
class EvolutionRequest:
    state: SymmetrizationSpinor
    hamiltonian: EmbeddedHamiltonian
    times: tuple
    backend: str = "dense"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or len(times) == 0:
            raise ValueError("times must be a non-empty sequence")
        if np.any(times < 0) or np.any(np.diff(times) <= 0):
            raise ValueError("times must be non-negative and strictly increasing")
        if self.backend == "branch":
            check_branch_capable(self.state, self.hamiltonian)


def check_branch_capable(state, hamiltonian):
    if hamiltonian.single_particle_terms is None:
        raise CapabilityError("branch backend needs H = sum_i h_i (no interacting terms)")
    if state.branches is None:
        raise CapabilityError("branch backend needs a spinor in branch representation")


class Propagator:
    """Reusable ``exp(-i H t)`` for one embedded Hamiltonian and backend."""

    def __init__(self, hamiltonian: EmbeddedHamiltonian, backend: str = "dense",
                 tol: float = KRYLOV_TOL):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        self.hamiltonian = hamiltonian
        self.backend = backend
        self.tol = tol
        self._spectrum = None
        self._local = None

    def _generator(self):
        """Operator actually exponentiated: ``H`` itself for an invariant lift ``1 (x) H``."""
        ham = self.hamiltonian
        return ham.physical_operator if ham.invariant_lift else ham.operator

    def _dense_spectrum(self) -> Spectrum | None:
        if self._spectrum is None:
            op = self._generator()
            if op.shape[0] <= DENSE_THRESHOLD:
                self._spectrum = spectral_decompose(op)
        return self._spectrum

    def _local_spectra(self):
        if self._local is None:
            self._local = [spectral_decompose(t) for t in self.hamiltonian.single_particle_terms]
        return self._local

    def local_unitaries(self, t: float):
        out = []
        for spec in self._local_spectra():
            v = spec.eigenvectors
            out.append((v * np.exp(-1j * spec.eigenvalues * t)) @ v.conj().T)
        return out

    def apply(self, state: SymmetrizationSpinor, t: float) -> SymmetrizationSpinor:
        if t == 0:
            return state
        if self.backend == "branch":
            check_branch_capable(state, self.hamiltonian)
            us = self.local_unitaries(t)
            branches = tuple(
                PermutationBranch(b.perm, b.sign, tuple(u @ f for u, f in zip(us, b.factors)),
                                  b.ancilla_index, b.control)
                for b in state.branches
            )
            out = SymmetrizationSpinor(state.layout, branches=branches,
                                       prefactor=state.prefactor, meta=dict(state.meta))
            drift = max(abs(np.linalg.norm(f) - np.linalg.norm(g))
                        for a, b in zip(state.branches, branches)
                        for f, g in zip(a.factors, b.factors))
            if drift > NORM_TOL:
                raise NumericalError(f"branch evolution changed a factor norm by {drift:.3e}",
                                     residual=drift)
            return out
        v = state.to_dense()
        spectrum = self._dense_spectrum()
        gen = self._generator()
        # 1 (x) exp(-iHt): every (q_c, ancilla) block evolves under the same H
        blocks = v.reshape(-1, gen.shape[0])
        if spectrum is not None:
            w = spectrum.propagate(t, blocks.T).T
        else:
            w = np.zeros_like(blocks)
            for r in np.flatnonzero(np.any(blocks != 0, axis=1)):
                w[r] = evolve_exact(gen, t, blocks[r], method="krylov", tol=self.tol)
        w = w.reshape(-1)
        a, b = np.linalg.norm(v), np.linalg.norm(w)
        if abs(a - b) > NORM_TOL * max(1.0, a):
            raise NumericalError(f"evolution changed the norm from {a:.15g} to {b:.15g}",
                                 residual=abs(a - b))
        return SymmetrizationSpinor(state.layout, dense=w, meta=dict(state.meta))


def evolve(req: EvolutionRequest, threads: int = 1) -> list:
    """States at every requested time, in the request's representation."""
    prop = Propagator(req.hamiltonian, req.backend)
    if req.backend == "dense":
        prop._dense_spectrum()
    else:
        prop._local_spectra()
    times = [float(t) for t in req.times]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: prop.apply(req.state, t), times))
    return [prop.apply(req.state, t) for t in times]


def reached(t: float, event: float) -> bool:
    return t >= event - EVENT_TIME_TOL * max(1.0, abs(event))


def evolve_with_switches(state, hamiltonian, times, switch_events=(), backend="dense",
                         propagator=None) -> list:
    """Evolve through ``times`` applying ``switch_statistics`` at each event time.

    A switch at time ``tau`` acts on the state at ``tau``; every output at
    ``t >= tau`` reflects it.  Times within ``EVENT_TIME_TOL`` (relative) of
    an event count as reaching it.
    """
    prop = propagator or Propagator(hamiltonian, backend)
    events = sorted(float(e) for e in switch_events)
    current, t_cur = state, 0.0
    out = []
    k = 0
    for t in times:
        t = float(t)
        while k < len(events) and reached(t, events[k]):
            tau = min(events[k], t)
            current = switch_statistics(prop.apply(current, tau - t_cur))
            t_cur = tau
            k += 1
        out.append(prop.apply(current, t - t_cur))
    return out


def cross_validate(req: EvolutionRequest, t: float) -> float:
    """max |dense - branch| at time ``t`` after converting both to dense vectors."""
    check_branch_capable(req.state, req.hamiltonian)
    dense = Propagator(req.hamiltonian, "dense").apply(req.state.as_dense(), t).to_dense()
    branch = Propagator(req.hamiltonian, "branch").apply(req.state, t).to_dense()
    return float(np.max(np.abs(dense - branch)))
