"""Operator algebra on composite Hilbert spaces and exact time evolution.

States are 1-D complex ``numpy`` arrays.  Operators are ``scipy.sparse``
matrices (CSR); dense ``ndarray`` operators are accepted wherever an operator
is read.  Composite bases are big-endian: in ``kron(a, b)`` the index of
``a`` varies slowest.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation, LayoutError, NumericalError, SizeError

log = logging.getLogger(__name__)

#: Largest composite basis any builder will materialize.
MAX_BASIS_SIZE = 2**25
#: Above this dimension ``evolve_exact`` switches from eigendecomposition to Krylov.
DENSE_THRESHOLD = 8192
HERMITIAN_TOL = 1e-14
KRYLOV_TOL = 1e-10


def as_operator(a) -> sp.csr_matrix:
    """Coerce ``a`` to a complex CSR matrix."""
    if sp.issparse(a):
        return sp.csr_matrix(a, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LayoutError(f"operator must be square, got shape {a.shape}")
    return sp.csr_matrix(a)


def identity(dim: int) -> sp.csr_matrix:
    return sp.identity(dim, dtype=complex, format="csr")


def kron(a, b, max_dim: int = MAX_BASIS_SIZE) -> sp.csr_matrix:
    """Tensor product with ``a`` as the most significant factor.

    Raises:
        SizeError: if the product dimension exceeds ``max_dim``.
    """
    da, db = a.shape[0], b.shape[0]
    if da < 1 or db < 1:
        raise LayoutError("operator dimensions must be positive")
    if da * db > max_dim:
        raise SizeError(f"kron dimension {da * db} exceeds maximum basis size {max_dim}")
    return sp.kron(as_operator(a), as_operator(b), format="csr")


def kron_all(ops, max_dim: int = MAX_BASIS_SIZE) -> sp.csr_matrix:
    out = as_operator(ops[0])
    for op in ops[1:]:
        out = kron(out, op, max_dim=max_dim)
    return out


def hermiticity_defect(a) -> float:
    a = as_operator(a)
    diff = a - a.conj().T
    return float(abs(diff).max()) if diff.nnz else 0.0


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_operator(a)
    scale = max(1.0, float(abs(a).max()) if a.nnz else 0.0)
    return hermiticity_defect(a) <= tol * scale


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs of a Hermitian operator; eigenvectors are the columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def propagate(self, t: float, v: np.ndarray) -> np.ndarray:
        """Return ``exp(-i h t) v`` using the stored eigenpairs; ``v`` may hold vectors as columns."""
        vecs = self.eigenvectors
        coeffs = vecs.conj().T @ v
        phases = np.exp(-1j * self.eigenvalues * t)
        return vecs @ (phases[:, None] * coeffs if coeffs.ndim == 2 else phases * coeffs)


def spectral_decompose(h) -> Spectrum:
    """Full eigendecomposition of a Hermitian operator.

    Raises:
        ContractViolation: if ``h`` is not Hermitian.
    """
    if not is_hermitian(h):
        raise ContractViolation(
            f"spectral_decompose needs a Hermitian operator (defect {hermiticity_defect(h):.3e})"
        )
    dense = h.toarray() if sp.issparse(h) else np.asarray(h, dtype=complex)
    dense = 0.5 * (dense + dense.conj().T)
    w, v = np.linalg.eigh(dense)
    return Spectrum(w, v)


def _lanczos(h, v, m):
    """Lanczos with full reorthogonalization.

    Returns the basis (n x k), tridiagonal matrix (k x k), the residual norm
    beta_k and whether an invariant subspace was found.
    """
    n = v.shape[0]
    basis = np.zeros((n, m), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    basis[:, 0] = v
    k = m
    happy = False
    for j in range(m):
        w = h @ basis[:, j]
        alpha[j] = np.vdot(basis[:, j], w).real
        w = w - basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        w = w - basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        b = np.linalg.norm(w)
        beta[j] = b
        if b < 1e-13:
            k = j + 1
            happy = True
            break
        if j + 1 < m:
            basis[:, j + 1] = w / b
    t = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    return basis[:, :k], t, beta[k - 1], happy


def krylov_evolve(h, t: float, v: np.ndarray, tol: float = KRYLOV_TOL,
                  krylov_dim: int = 30, max_steps: int = 10_000) -> np.ndarray:
    """``exp(-i h t) v`` by restarted Lanczos time stepping.

    Each accepted substep satisfies the a-posteriori error estimate
    ``beta_m |e_m^T exp(-i T dt) e_1| <= tol`` (relative to the vector norm).

    Raises:
        NumericalError: if the step budget is exhausted; carries the last
            error estimate as ``residual``.
    """
    h = as_operator(h)
    w = np.array(v, dtype=complex)
    total = abs(t)
    direction = np.sign(t) if t != 0 else 1.0
    done = 0.0
    tau = total
    m = min(krylov_dim, h.shape[0])
    err = np.inf
    for _ in range(max_steps):
        if done >= total * (1 - 1e-15):
            return w
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return w
        basis, tri, beta_m, happy = _lanczos(h, w / nrm, m)
        evals, evecs = np.linalg.eigh(tri)
        e1 = evecs[0].conj()
        dt = min(tau, total - done)
        while True:
            y = evecs @ (np.exp(-1j * direction * evals * dt) * e1)
            err = 0.0 if happy else beta_m * abs(y[-1])
            if err <= tol or dt < total * 1e-12:
                break
            dt *= 0.5
        if err > tol:
            break
        w = nrm * (basis @ y)
        done += dt
        tau = dt * 2.0 if err < tol * 1e-3 else dt
    raise NumericalError(f"Krylov exponential did not converge (estimate {err:.3e})", residual=err)


def evolve_exact(h, t: float, v: np.ndarray, spectrum: Spectrum | None = None,
                 method: str = "auto", tol: float = KRYLOV_TOL) -> np.ndarray:
    """Return ``exp(-i h t) v``.

    ``method`` is ``"dense"`` (eigendecomposition, reusable via ``spectrum``),
    ``"krylov"``, or ``"auto"`` which picks dense up to ``DENSE_THRESHOLD``.
    """
    v = np.asarray(v, dtype=complex)
    if h.shape[0] != v.shape[0]:
        raise LayoutError(f"operator dim {h.shape[0]} != state dim {v.shape[0]}")
    if method == "auto":
        method = "dense" if (spectrum is not None or v.shape[0] <= DENSE_THRESHOLD) else "krylov"
    if method == "dense":
        if spectrum is None:
            spectrum = spectral_decompose(h)
        return spectrum.propagate(t, v)
    if method == "krylov":
        if not is_hermitian(h):
            raise ContractViolation("Krylov evolution needs a Hermitian operator")
        return krylov_evolve(h, t, v, tol=tol)
    raise ValueError(f"unknown evolution method {method!r}")

