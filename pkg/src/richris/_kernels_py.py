"""Pure numpy implementations of the hot kernels.

These are the reference fallbacks used when the compiled ``_kernels`` extension
is not available. Both must agree to rounding error.
"""
import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_CUTOFF = 12.0
_SERIES_TERMS = 60
_ASYMPTOTIC_TERMS = 30


def _bessel_series(x):
    """Ascending power series for J0 and Y0, valid for small to moderate x."""
    q = 0.25 * x * x
    term = np.ones_like(x)
    j0 = np.ones_like(x)
    harmonic = 0.0
    ysum = np.zeros_like(x)
    for k in range(1, _SERIES_TERMS):
        term = -term * q / (k * k)
        harmonic += 1.0 / k
        j0 = j0 + term
        ysum = ysum - harmonic * term
    y0 = (2.0 / np.pi) * ((np.log(0.5 * x) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _bessel_asymptotic(x):
    """Hankel's large-argument expansion truncated at the smallest term."""
    z = 8.0 * x
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 2 * _ASYMPTOTIC_TERMS):
        term = term * (-(2 * k - 1) ** 2) / (k * z)
        size = np.abs(term)
        active &= size < last
        last = np.where(active, size, last)
        if k % 2:
            sign = 1.0 if (k // 2) % 2 == 0 else -1.0
            q = q + np.where(active, sign * term, 0.0)
        else:
            sign = 1.0 if (k // 2) % 2 == 0 else -1.0
            p = p + np.where(active, sign * term, 0.0)
        active &= size >= 1e-17
        if not active.any():
            break
    chi = x - 0.25 * np.pi
    amp = np.sqrt(2.0 / (np.pi * x))
    c, s = np.cos(chi), np.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def bessel_j0_y0(x):
    shape = np.shape(x)
    x = np.ravel(np.asarray(x, dtype=float))
    j0 = np.empty_like(x)
    y0 = np.empty_like(x)
    small = x < SERIES_CUTOFF
    if small.any():
        j0[small], y0[small] = _bessel_series(x[small])
    if (~small).any():
        j0[~small], y0[~small] = _bessel_asymptotic(x[~small])
    return j0.reshape(shape), y0.reshape(shape)


def hankel0_2(x):
    j0, y0 = bessel_j0_y0(x)
    return j0 - 1j * y0


def flip_scan(m, groups, deltas, rx, tx):
    """Channel after each candidate rank-k diagonal update of ``m``'s matrix.

    ``m`` is the current inverse, ``groups[g]`` the dipole indices touched by
    candidate ``g`` and ``deltas[g]`` the diagonal increments. Returns an array
    of shape (n_groups, len(rx)).
    """
    idx = np.asarray(groups)
    d = np.asarray(deltas, dtype=complex)
    core = m[idx[:, :, None], idx[:, None, :]]
    k = idx.shape[1]
    core = core + np.einsum("gi,ij->gij", 1.0 / d, np.eye(k))
    right = m[idx, tx]
    left = m[np.asarray(rx)[None, :, None], idx[:, None, :]]
    sol = np.linalg.solve(core, right[..., None])[..., 0]
    return m[rx, tx][None, :] - np.einsum("grk,gk->gr", left, sol)
