"""Low-level CSR kernels.

Every kernel exists twice: a numba ``@njit`` version (default) and a pure
numpy version. Setting the environment variable ``SCHWARZLS_NO_NUMBA`` to a
truthy value before import selects the numpy path; so does a failed numba
import. ``benchmarks/bench_kernels.py`` times the two side by side.

All kernels treat their inputs as read-only and allocate their outputs, so
they are safe to call concurrently.
"""

import os

import numpy as np

_DISABLED = os.environ.get("SCHWARZLS_NO_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

USE_NUMBA = HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def csr_matvec_numpy(indptr, indices, data, x):
    """y = A x for CSR (indptr, indices, data)."""
    nrows = indptr.shape[0] - 1
    counts = np.diff(indptr)
    contrib = data * x[indices]
    rows = np.repeat(np.arange(nrows), counts)
    return np.bincount(rows, weights=contrib, minlength=nrows)


def csr_rmatvec_numpy(indptr, indices, data, y, ncols):
    """out = A^T y without materializing A^T."""
    counts = np.diff(indptr)
    contrib = data * np.repeat(y, counts)
    return np.bincount(indices, weights=contrib, minlength=ncols)


def gram_triplets_numpy(indptr, indices, data):
    """All products a_rj * a_rk within each row r, as (j, k, v) triplets.

    Summing the triplets yields A^T A.
    """
    nrows = indptr.shape[0] - 1
    ii, jj, vv = [], [], []
    for r in range(nrows):
        lo, hi = indptr[r], indptr[r + 1]
        if hi == lo:
            continue
        c = indices[lo:hi]
        v = data[lo:hi]
        k = hi - lo
        ii.append(np.repeat(c, k))
        jj.append(np.tile(c, k))
        vv.append(np.outer(v, v).ravel())
    if not ii:
        z = np.zeros(0)
        return z.astype(np.int64), z.astype(np.int64), z
    return (
        np.concatenate(ii).astype(np.int64),
        np.concatenate(jj).astype(np.int64),
        np.concatenate(vv),
    )


def csr_extract_numpy(indptr, indices, data, rows, colmap):
    """Sub-CSR of the given rows, columns renumbered through colmap.

    colmap[j] is the new index of global column j, or -1 if j is dropped.
    Entries within each output row are sorted by the new column index, so
    arbitrary column permutations are supported.
    """
    sub_indptr = np.zeros(rows.shape[0] + 1, dtype=np.int64)
    chunks_c, chunks_v = [], []
    for out_r, r in enumerate(rows):
        lo, hi = indptr[r], indptr[r + 1]
        newc = colmap[indices[lo:hi]]
        keep = newc >= 0
        newc = newc[keep]
        vals = data[lo:hi][keep]
        order = np.argsort(newc, kind="stable")
        chunks_c.append(newc[order])
        chunks_v.append(vals[order])
        sub_indptr[out_r + 1] = sub_indptr[out_r] + newc.shape[0]
    if chunks_c:
        sub_indices = np.concatenate(chunks_c).astype(np.int64)
        sub_values = np.concatenate(chunks_v)
    else:
        sub_indices = np.zeros(0, dtype=np.int64)
        sub_values = np.zeros(0)
    return sub_indptr, sub_indices, sub_values


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _csr_matvec_nb(indptr, indices, data, x, out):
    for r in range(indptr.shape[0] - 1):
        acc = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            acc += data[p] * x[indices[p]]
        out[r] = acc


@njit(cache=True, nogil=True)
def _csr_rmatvec_nb(indptr, indices, data, y, out):
    for r in range(indptr.shape[0] - 1):
        yr = y[r]
        if yr != 0.0:
            for p in range(indptr[r], indptr[r + 1]):
                out[indices[p]] += data[p] * yr


@njit(cache=True, nogil=True)
def _gram_triplets_nb(indptr, indices, data, ii, jj, vv):
    pos = 0
    for r in range(indptr.shape[0] - 1):
        lo, hi = indptr[r], indptr[r + 1]
        for p in range(lo, hi):
            cp = indices[p]
            vp = data[p]
            for q in range(lo, hi):
                ii[pos] = cp
                jj[pos] = indices[q]
                vv[pos] = vp * data[q]
                pos += 1


@njit(cache=True, nogil=True)
def _csr_extract_count_nb(indptr, indices, rows, colmap, sub_indptr):
    for out_r in range(rows.shape[0]):
        r = rows[out_r]
        cnt = 0
        for p in range(indptr[r], indptr[r + 1]):
            if colmap[indices[p]] >= 0:
                cnt += 1
        sub_indptr[out_r + 1] = sub_indptr[out_r] + cnt


@njit(cache=True, nogil=True)
def _csr_extract_fill_nb(indptr, indices, data, rows, colmap,
                         sub_indptr, sub_indices, sub_values):
    for out_r in range(rows.shape[0]):
        r = rows[out_r]
        base = sub_indptr[out_r]
        k = sub_indptr[out_r + 1] - base
        cols = np.empty(k, dtype=np.int64)
        vals = np.empty(k)
        pos = 0
        for p in range(indptr[r], indptr[r + 1]):
            nc = colmap[indices[p]]
            if nc >= 0:
                cols[pos] = nc
                vals[pos] = data[p]
                pos += 1
        order = np.argsort(cols)
        for t in range(k):
            sub_indices[base + t] = cols[order[t]]
            sub_values[base + t] = vals[order[t]]


def csr_matvec_numba(indptr, indices, data, x):
    out = np.empty(indptr.shape[0] - 1)
    _csr_matvec_nb(indptr, indices, data, x, out)
    return out


def csr_rmatvec_numba(indptr, indices, data, y, ncols):
    out = np.zeros(ncols)
    _csr_rmatvec_nb(indptr, indices, data, y, out)
    return out


def gram_triplets_numba(indptr, indices, data):
    counts = np.diff(indptr)
    total = int(np.sum(counts * counts))
    ii = np.empty(total, dtype=np.int64)
    jj = np.empty(total, dtype=np.int64)
    vv = np.empty(total)
    _gram_triplets_nb(indptr, indices, data, ii, jj, vv)
    return ii, jj, vv


def csr_extract_numba(indptr, indices, data, rows, colmap):
    sub_indptr = np.zeros(rows.shape[0] + 1, dtype=np.int64)
    _csr_extract_count_nb(indptr, indices, rows, colmap, sub_indptr)
    nnz = int(sub_indptr[-1])
    sub_indices = np.empty(nnz, dtype=np.int64)
    sub_values = np.empty(nnz)
    _csr_extract_fill_nb(indptr, indices, data, rows, colmap,
                         sub_indptr, sub_indices, sub_values)
    return sub_indptr, sub_indices, sub_values


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    csr_matvec = csr_matvec_numba
    csr_rmatvec = csr_rmatvec_numba
    gram_triplets = gram_triplets_numba
    csr_extract = csr_extract_numba
else:
    csr_matvec = csr_matvec_numpy
    csr_rmatvec = csr_rmatvec_numpy
    gram_triplets = gram_triplets_numpy
    csr_extract = csr_extract_numpy


def backend():
    """Name of the active kernel backend: 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"
