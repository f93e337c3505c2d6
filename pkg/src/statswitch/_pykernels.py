"""Pure numpy fallbacks for the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def swap_particles(state, rows, signs, n_particles, d, i, j):
    """Swap particle registers ``i`` and ``j`` in the selected rows, in place."""
    if len(rows) == 0:
        return
    block = state[rows].reshape((len(rows),) + (d,) * n_particles)
    if i != j:
        block = np.swapaxes(block, i + 1, j + 1)
    block = block.reshape(len(rows), -1) * np.asarray(signs)[:, None]
    state[rows] = block


def hermite_functions(nmax, xi):
    """Orthonormal Hermite functions h_0..h_nmax at points ``xi``."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((nmax + 1, xi.shape[0]))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * xi**2)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, nmax):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out
