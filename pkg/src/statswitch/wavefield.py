"""Position-space densities of spin (x) oscillator wavefunctions.

Oscillator eigenfunctions follow ``x = delta (a + a^dagger)``::

    phi_n(x) = (2^n n! sqrt(2 pi) delta)^(-1/2) H_n(x / (sqrt(2) delta)) exp(-x^2 / (4 delta^2))

and are evaluated with the normalized three-term recurrence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import LayoutError

MAX_FOCK = 500
DEFAULT_AXIS = (-6.0, 6.0, 241)


def eigenfunction_table(n_max: int, x, delta: float = 1.0, impl=None) -> np.ndarray:
    """``phi_n(x)`` for n = 0..n_max, shape (n_max + 1, len(x))."""
    if n_max > MAX_FOCK:
        raise ValueError(f"Fock index {n_max} beyond the supported recurrence range ({MAX_FOCK})")
    if delta <= 0:
        raise ValueError("delta must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = x / (math.sqrt(2.0) * delta)
    return kernels.hermite_functions(n_max, xi, impl=impl) / math.sqrt(math.sqrt(2.0) * delta)


def eigenfunction(n: int, x, delta: float = 1.0):
    if n < 0:
        raise ValueError("Fock index must be non-negative")
    vals = eigenfunction_table(n, x, delta)[n]
    return vals if np.ndim(x) else float(vals[0])


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid for a joint density.

    Attributes:
        axes: ``{particle (1-based): (x_min, x_max, points)}`` in units of
            that particle's delta; output axes follow this order.
        fixed: ``{particle: x}`` for particles held at one coordinate.
        spins: one of ``"up"``/``"down"`` per particle, or ``"sum"`` to add
            the densities of all spin configurations.
        deltas: per-particle position scale, default 1.
    """

    axes: dict
    fixed: dict = field(default_factory=dict)
    spins: object = "sum"
    deltas: tuple | None = None

    def coordinates(self, particle: int) -> np.ndarray:
        lo, hi, pts = self.axes[particle]
        return np.linspace(lo, hi, int(pts))

    def validate(self, n_particles: int):
        free, fixed = set(self.axes), set(self.fixed)
        if free & fixed:
            raise LayoutError(f"particles {sorted(free & fixed)} are both gridded and fixed")
        if free | fixed != set(range(1, n_particles + 1)):
            raise LayoutError("every particle must be either gridded or fixed")
        for p, (_lo, _hi, pts) in self.axes.items():
            if int(pts) < 2:
                raise LayoutError(f"axis of particle {p} needs at least 2 points")
        if self.spins != "sum" and len(self.spins) != n_particles:
            raise LayoutError("need one spin label per particle")


def joint_density(psi, mode_dims, grid: GridSpec) -> np.ndarray:
    """``|psi(x_free...; x_fixed...)|^2`` on the grid.

    ``psi`` is a physical-space vector over particles ordered as
    spin (x) mode each; ``mode_dims`` lists each particle's mode dimension.
    """
    n = len(mode_dims)
    grid.validate(n)
    for p in list(grid.axes) + list(grid.fixed):
        if mode_dims[p - 1] is None:
            raise LayoutError(f"particle {p} has no mode degree of freedom")
    shape = []
    for m in mode_dims:
        shape += [2, m]
    t = np.asarray(psi, dtype=complex).reshape(shape)
    deltas = grid.deltas or (1.0,) * n
    if grid.spins != "sum":
        idx = []
        for s in grid.spins:
            idx += [{"up": 0, "down": 1}[s], slice(None)]
        t = t[tuple(idx)]
        mode_axes = list(range(n))
    else:
        mode_axes = [2 * i + 1 for i in range(n)]
    # contract each mode axis with its eigenfunction table; fixed particles drop out
    order = list(grid.axes)
    for p in range(1, n + 1):
        axis = mode_axes[p - 1]
        if p in grid.fixed:
            x = np.array([grid.fixed[p] * deltas[p - 1]])
        else:
            x = grid.coordinates(p) * deltas[p - 1]
        table = eigenfunction_table(mode_dims[p - 1] - 1, x, deltas[p - 1])
        t = np.moveaxis(np.tensordot(table.T, t, axes=([1], [axis])), 0, axis)
    dens = np.abs(t) ** 2
    if grid.spins == "sum":
        dens = dens.sum(axis=tuple(2 * i for i in range(n)))
    # remaining axes are the particles in index order; squeeze fixed ones
    keep = [p for p in range(1, n + 1) if p not in grid.fixed]
    dens = np.squeeze(dens, axis=tuple(i for i, p in enumerate(range(1, n + 1)) if p in grid.fixed))
    perm = [keep.index(p) for p in order]
    return np.transpose(dens, perm)
