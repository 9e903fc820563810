import numpy as np
import pytest

from tamarc import kernels
from tamarc._backend import USE_NUMBA


def _random_instance(rng, n=24, d_max=3, Ms=(5, 4), with_relay=True):
    n_streams = len(Ms) + (1 if with_relay else 0)
    total = int(np.prod(Ms))
    strides = [1] * len(Ms)
    for l in range(len(Ms) - 2, -1, -1):
        strides[l] = strides[l + 1] * Ms[l + 1]
    n_msgs = list(Ms)
    if with_relay:
        strides = strides + [1]
        n_msgs = n_msgs + [total]
    rows = sum(n_msgs)
    stacked = rng.standard_normal((rows, 2 * n)) + 1j * rng.standard_normal((rows, 2 * n))
    row_start = np.cumsum([0] + n_msgs[:-1])
    gains = rng.standard_normal(n_streams) + 1j * rng.standard_normal(n_streams)
    shifts = rng.integers(0, d_max + 1, size=(7, n_streams))
    offs = d_max - shifts
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return (
        y, stacked, np.asarray(row_start), np.asarray(n_msgs), np.asarray(strides),
        gains, np.asarray(offs), total,
    )


def _reference(y, stacked, row_start, n_msgs, strides, gains, offs, total):
    """Straight-line recomputation, no vectorisation tricks."""
    n = y.shape[0]
    out = np.empty((offs.shape[0], total))
    for si in range(offs.shape[0]):
        for t in range(total):
            acc = y.copy()
            for s in range(offs.shape[1]):
                row = row_start[s] + (t // strides[s]) % n_msgs[s]
                acc = acc - gains[s] * stacked[row, offs[si, s] : offs[si, s] + n]
            out[si, t] = float((np.abs(acc) ** 2).sum())
    return out


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("with_relay", [True, False])
def test_residuals_match_reference(seed, with_relay):
    rng = np.random.default_rng(seed)
    args = _random_instance(rng, with_relay=with_relay)
    got = kernels.search_residuals(*args)
    ref = _reference(*args)
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9)


def test_numpy_path_matches_active_backend():
    rng = np.random.default_rng(42)
    args = _random_instance(rng)
    via_numpy = kernels.residuals_numpy(*args)
    via_active = kernels.search_residuals(*args)
    np.testing.assert_allclose(via_numpy, via_active, rtol=1e-9, atol=1e-9)
    # the winning candidate must agree between backends
    assert kernels.best_candidate(via_numpy)[:2] == kernels.best_candidate(via_active)[:2]


@pytest.mark.skipif(not USE_NUMBA, reason="numba backend disabled")
def test_numba_path_matches_numpy():
    rng = np.random.default_rng(7)
    args = _random_instance(rng, n=17, d_max=2, Ms=(3, 3, 2))
    np.testing.assert_allclose(
        kernels.residuals_numba(*_as_kernel_args(args)),
        kernels.residuals_numpy(*_as_kernel_args(args)),
        rtol=1e-9,
        atol=1e-9,
    )


def _as_kernel_args(args):
    y, stacked, row_start, n_msgs, strides, gains, offs, total = args
    return (
        np.ascontiguousarray(y, dtype=np.complex128),
        np.ascontiguousarray(stacked, dtype=np.complex128),
        np.ascontiguousarray(row_start, dtype=np.int64),
        np.ascontiguousarray(n_msgs, dtype=np.int64),
        np.ascontiguousarray(strides, dtype=np.int64),
        np.ascontiguousarray(gains, dtype=np.complex128),
        np.ascontiguousarray(offs, dtype=np.int64),
        int(total),
    )


def test_best_candidate_position():
    res = np.array([[3.0, 2.0, 5.0], [1.5, 9.0, 0.25]])
    si, t, val = kernels.best_candidate(res)
    assert (si, t) == (1, 2) and val == 0.25
