"""Hot inner-loop kernels with numba acceleration and a pure numpy/scipy fallback.

Set the environment variable ``FBAEC_NO_NUMBA=1`` to force the fallback path
(useful for debugging and for the benchmark in ``bench/``). Selection happens
once at import time.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("FBAEC_NO_NUMBA", "0") not in ("", "0")

NUMBA_ENABLED = False
if not _DISABLED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass


def _iir1_fallback(x, b0, b1, a1, x1, y1):
    from scipy.signal import lfilter

    # direct form II transposed: carry state z1 = b1*x[n-1] - a1*y[n-1]
    zi = np.array([b1 * x1 - a1 * y1])
    y, _ = lfilter([b0, b1], [1.0, a1], x, zi=zi)
    if len(x):
        return y, x[-1], y[-1]
    return y, x1, y1


def _ola_fallback(segments, hop, out):
    n, seg_len = segments.shape
    for i in range(n):
        start = i * hop
        out[start:start + seg_len] += segments[i]
    return out


if NUMBA_ENABLED:

    @njit(cache=True)
    def _iir1_numba(x, b0, b1, a1, x1, y1):
        y = np.empty_like(x)
        for n in range(len(x)):
            y[n] = b0 * x[n] + b1 * x1 - a1 * y1
            x1 = x[n]
            y1 = y[n]
        return y, x1, y1

    @njit(cache=True)
    def _ola_numba(segments, hop, out):
        n, seg_len = segments.shape
        for i in range(n):
            start = i * hop
            for j in range(seg_len):
                out[start + j] += segments[i, j]
        return out


def iir_first_order(x, b0, b1, a1, x1=0.0, y1=0.0):
    """Run a one-pole/one-zero filter over ``x``.

    Returns ``(y, x_last, y_last)``; the trailing samples are the state to
    pass into the next call of a streaming run.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if NUMBA_ENABLED:
        return _iir1_numba(x, float(b0), float(b1), float(a1), float(x1), float(y1))
    return _iir1_fallback(x, float(b0), float(b1), float(a1), float(x1), float(y1))


def overlap_add(segments, hop, out_len=None):
    """Overlap-add ``segments`` (shape ``(n, seg_len)``) at shift ``hop``."""
    segments = np.ascontiguousarray(segments, dtype=np.float64)
    n, seg_len = segments.shape
    if out_len is None:
        out_len = (n - 1) * hop + seg_len if n else 0
    out = np.zeros(out_len, dtype=np.float64)
    if n == 0:
        return out
    if NUMBA_ENABLED:
        return _ola_numba(segments, hop, out)
    return _ola_fallback(segments, hop, out)
