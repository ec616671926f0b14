"""Time-marching kernels for the linear recurrence y[k+1] = P @ y[k] + w[k].

Two interchangeable backends:

* ``numba``: a compiled scalar loop (default when numba imports).
* ``numpy``: diagonalise P and evaluate each mode's first-order recurrence
  as an FFT convolution with its geometric impulse response.

Set ``PERIPUMP_BACKEND=numpy`` to force the pure-numpy path.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_requested = os.environ.get("PERIPUMP_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"PERIPUMP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and numba is not None) else "numpy"

# modal path is abandoned for eigenvector bases worse than this
_MAX_EIGVEC_COND = 1e8


def _march_loop(P, w, y0):
    n = w.shape[0] + 1
    m = y0.shape[0]
    out = np.empty((n, m))
    for i in range(m):
        out[0, i] = y0[i]
    for k in range(n - 1):
        for i in range(m):
            acc = w[k, i]
            for j in range(m):
                acc += P[i, j] * out[k, j]
            out[k + 1, i] = acc
    return out


if numba is not None:
    _march_numba = numba.njit(cache=True, nogil=True)(_march_loop)
else:  # pragma: no cover
    _march_numba = None


def march_numba(P, w, y0):
    if _march_numba is None:  # pragma: no cover
        raise RuntimeError("numba is not installed")
    return _march_numba(np.ascontiguousarray(P, dtype=np.float64),
                        np.ascontiguousarray(w, dtype=np.float64),
                        np.ascontiguousarray(y0, dtype=np.float64))


def _fft_convolve(a, b, length):
    size = 1 << int(np.ceil(np.log2(len(a) + len(b) - 1)))
    return np.fft.ifft(np.fft.fft(a, size, axis=0) * np.fft.fft(b, size, axis=0),
                       axis=0)[:length]


def march_numpy(P, w, y0):
    w = np.asarray(w, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    n = w.shape[0] + 1
    if n == 1:
        return y0[None, :].copy()
    lam, vecs = np.linalg.eig(P)
    if np.linalg.cond(vecs) > _MAX_EIGVEC_COND or np.any(np.abs(lam) >= 1.0):
        return _march_loop(P, w, y0)
    inv = np.linalg.inv(vecs)
    v = w @ inv.T                          # (n-1, m) modal forcing
    z0 = inv @ y0
    # impulse response lam**j is negligible once |lam|**j < 1e-18
    slowest = np.max(np.abs(lam))
    span = n - 1 if slowest == 0 else int(np.ceil(np.log(1e-18) / np.log(slowest))) + 1
    span = max(1, min(n - 1, span))
    powers = lam[None, :] ** np.arange(span)[:, None]
    z = np.empty((n, len(lam)), dtype=complex)
    z[0] = z0
    free = lam[None, :] ** np.arange(1, n)[:, None] * z0
    z[1:] = free + _fft_convolve(powers, v, n - 1)
    return (z @ vecs.T).real


def march(P, w, y0, backend=None):
    backend = backend or BACKEND
    if backend == "numba":
        return march_numba(P, w, y0)
    if backend == "numpy":
        return march_numpy(P, w, y0)
    raise ValueError(f"unknown backend {backend!r}")
