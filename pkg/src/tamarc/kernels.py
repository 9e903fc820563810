"""Hot inner loops of the shift-search ML decoders.

A decode stage is a minimum-residual search over message tuples x shift
hypotheses.  Streams (the K encoders, plus the relay at the destination) are
described by "padded" candidate matrices of width 2n: column j of the model
window for stream s is ``padded[row, off_s + j]`` where ``off_s`` encodes the
shift hypothesis and row the candidate word.  This lets one kernel cover both
the relay windows (known previous block | candidate block) and the destination
windows (candidate block | known next block).

Message tuples are enumerated by a flat index t; stream s picks row
``(t // strides[s]) % n_msgs[s]``.  A stream indexed by the full tuple (the
relay codeword) uses stride 1 and n_msgs = total.

Two implementations: numba @njit (parallel over shift hypotheses) and pure
numpy (vectorised over message tuples, chunked).  `search_residuals` dispatches
on the TAMARC_BACKEND env flag; both are importable for benchmarking.
"""

import numpy as np

from ._backend import USE_NUMBA

# chunk bound for the numpy path: tuples x window samples per slab
_NUMPY_CHUNK_ELEMS = 1 << 22


def residuals_numpy(y, stacked, row_start, n_msgs, strides, gains, offs, total):
    """Pure-numpy residual table, shape (n_shifts, total)."""
    n = y.shape[0]
    n_shifts, n_streams = offs.shape
    t = np.arange(total)
    rows = [row_start[s] + (t // strides[s]) % n_msgs[s] for s in range(n_streams)]
    out = np.empty((n_shifts, total))
    chunk = max(1, _NUMPY_CHUNK_ELEMS // max(n, 1))
    for si in range(n_shifts):
        for lo in range(0, total, chunk):
            hi = min(lo + chunk, total)
            acc = np.tile(y, (hi - lo, 1))
            for s in range(n_streams):
                o = offs[si, s]
                acc -= gains[s] * stacked[rows[s][lo:hi], o : o + n]
            out[si, lo:hi] = np.einsum("ij,ij->i", acc, acc.conj()).real
    return out


if USE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True, fastmath=True)
    def _residuals_njit(y, stacked, row_start, n_msgs, strides, gains, offs, total):
        n = y.shape[0]
        n_shifts, n_streams = offs.shape
        out = np.empty((n_shifts, total))
        for si in prange(n_shifts):
            rows = np.empty(n_streams, np.int64)
            for t in range(total):
                for s in range(n_streams):
                    rows[s] = row_start[s] + (t // strides[s]) % n_msgs[s]
                acc = 0.0
                for j in range(n):
                    v = y[j]
                    for s in range(n_streams):
                        v = v - gains[s] * stacked[rows[s], offs[si, s] + j]
                    acc += v.real * v.real + v.imag * v.imag
                out[si, t] = acc
        return out

    def residuals_numba(y, stacked, row_start, n_msgs, strides, gains, offs, total):
        return _residuals_njit(y, stacked, row_start, n_msgs, strides, gains, offs, total)

else:
    residuals_numba = None


def search_residuals(y, stacked, row_start, n_msgs, strides, gains, offs, total):
    """Residual table for every (shift hypothesis, message tuple) pair."""
    y = np.ascontiguousarray(y, dtype=np.complex128)
    stacked = np.ascontiguousarray(stacked, dtype=np.complex128)
    row_start = np.ascontiguousarray(row_start, dtype=np.int64)
    n_msgs = np.ascontiguousarray(n_msgs, dtype=np.int64)
    strides = np.ascontiguousarray(strides, dtype=np.int64)
    gains = np.ascontiguousarray(gains, dtype=np.complex128)
    offs = np.ascontiguousarray(offs, dtype=np.int64)
    if USE_NUMBA:
        return residuals_numba(y, stacked, row_start, n_msgs, strides, gains, offs, int(total))
    return residuals_numpy(y, stacked, row_start, n_msgs, strides, gains, offs, int(total))


def best_candidate(res):
    """(shift index, message tuple index, residual) of the table minimum."""
    flat = int(np.argmin(res))
    si, t = divmod(flat, res.shape[1])
    return si, t, float(res[si, t])
