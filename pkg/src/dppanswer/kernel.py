"""L-ensemble kernels built from importance and similarity scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics

DEFAULT_PSD_FLOOR = 1e-6


@dataclass(frozen=True)
class Kernel:
    """Product kernel ``L_ij = imp_i * imp_j * sim_ij``.

    ``imp`` and ``sim`` are the scores the kernel was built from; ``L`` may
    differ from their product once :func:`project_psd` has clamped
    eigenvalues, in which case ``repaired`` is set.
    """

    L: np.ndarray
    imp: np.ndarray
    sim: np.ndarray
    repaired: bool = False
    # eigendecomposition of the unrepaired product, kept for the backward pass
    eig: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return self.L.shape[0]


def build_kernel(imp, sim):
    imp = np.asarray(imp, dtype=float).ravel()
    sim = np.asarray(sim, dtype=float)
    n = imp.shape[0]
    if n < 1:
        raise ValueError("kernel needs at least one item")
    if sim.shape != (n, n):
        raise ValueError(f"dimension mismatch: {n} importances but similarity of shape {sim.shape}")
    if not np.all(np.isfinite(imp)) or np.any(imp <= 0.0):
        raise ValueError("importances must be finite and strictly positive")
    if not np.all(np.isfinite(sim)) or np.any(sim < 0.0) or np.any(sim > 1.0):
        raise ValueError("similarities must lie in [0, 1]")
    if not np.all(np.diag(sim) == 1.0):
        raise ValueError("self-similarity must be exactly 1")
    numerics.check_symmetric(sim)

    L = imp[:, None] * imp[None, :] * sim
    L = 0.5 * (L + L.T)
    return Kernel(L=L, imp=imp, sim=sim)


def project_psd(k, psd_floor=DEFAULT_PSD_FLOOR):
    """Raise every eigenvalue of ``k.L`` below ``psd_floor`` to ``psd_floor``.

    Kernels whose smallest eigenvalue already clears the floor are returned
    unchanged with ``repaired=False``.
    """
    if not psd_floor > 0.0:
        raise ValueError("psd_floor must be positive")
    n = k.n
    try:
        numerics.cholesky(k.L - psd_floor * np.eye(n))
    except numerics.NotPositiveDefiniteError:
        pass
    else:
        return Kernel(L=k.L, imp=k.imp, sim=k.sim, repaired=False)

    w, v = numerics.sym_eigendecompose(k.L)
    if w[-1] >= psd_floor:
        return Kernel(L=k.L, imp=k.imp, sim=k.sim, repaired=False)
    L = (v * np.maximum(w, psd_floor)) @ v.T
    L = 0.5 * (L + L.T)
    return Kernel(L=L, imp=k.imp, sim=k.sim, repaired=True, eig=(w, v))


def project_psd_backward(k, grad, psd_floor=DEFAULT_PSD_FLOOR):
    """Pull a gradient w.r.t. the repaired ``L`` back to the unrepaired product.

    Uses the divided-difference formula for a spectral function
    ``V f(w) V^T`` with ``f = max(., psd_floor)``: directions whose
    eigenvalues were clamped receive no gradient.  Unrepaired kernels pass
    the gradient through unchanged.
    """
    if not k.repaired:
        return grad
    w, v = k.eig
    f = np.maximum(w, psd_floor)
    slope = (w > psd_floor).astype(float)
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) <= 1e-12 * max(1.0, float(np.max(np.abs(w))))
    gamma = np.where(close, 0.5 * (slope[:, None] + slope[None, :]), (f[:, None] - f[None, :]) / np.where(close, 1.0, dw))
    g = v @ (gamma * (v.T @ grad @ v)) @ v.T
    return 0.5 * (g + g.T)


def repaired_kernel(imp, sim, psd_floor=DEFAULT_PSD_FLOOR):
    return project_psd(build_kernel(imp, sim), psd_floor)
