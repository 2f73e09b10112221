"""Longest-common-subsequence kernels behind the ROUGE-L family.

The O(n*m) dynamic programs here are the hot inner loops when scoring a
corpus, so they come in two interchangeable flavours:

* numba ``@njit`` loop kernels (default when numba imports cleanly), and
* vectorised pure-numpy fallbacks.

Set ``PROCKG_NUMBA=0`` before import to force the numpy path; the selected
backend is reported by :func:`backend_name`. Both paths are exact and
return identical values (see tests and ``benchmarks/bench_lcs.py``).

All kernels take int64 token-id arrays; mapping tokens to ids is the
caller's job (see :mod:`prockg.rouge.scores`).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["lcs_length", "lcs_pick", "backend_name", "available_backends"]


# ---------------------------------------------------------------------------
# Loop kernels (numba targets). Plain nested loops, nopython-compilable.


def _lcs_length_loop(a: np.ndarray, b: np.ndarray) -> int:
    n = a.shape[0]
    m = b.shape[0]
    prev = np.zeros(m + 1, np.int64)
    cur = np.zeros(m + 1, np.int64)
    for i in range(n):
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            elif prev[j + 1] >= cur[j]:
                cur[j + 1] = prev[j + 1]
            else:
                cur[j + 1] = cur[j]
        prev, cur = cur, prev
    return int(prev[m])


def _lcs_suffix_table_loop(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # suf[i, j] = LCS length of a[i:] vs b[j:]
    n = a.shape[0]
    m = b.shape[0]
    suf = np.zeros((n + 1, m + 1), np.int64)
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                suf[i, j] = suf[i + 1, j + 1] + 1
            elif suf[i + 1, j] >= suf[i, j + 1]:
                suf[i, j] = suf[i + 1, j]
            else:
                suf[i, j] = suf[i, j + 1]
    return suf


def _lcs_pick_loop(a: np.ndarray, b: np.ndarray, suf: np.ndarray) -> np.ndarray:
    # Greedy front-to-back walk over the suffix table: emits the
    # lexicographically smallest index tuple (into `a`) among all
    # maximum-length common subsequences. Deterministic by construction.
    m = b.shape[0]
    total = int(suf[0, 0])
    out = np.empty(total, np.int64)
    k = 0
    i = 0
    j = 0
    while k < total:
        took = False
        for jj in range(j, m):
            if b[jj] == a[i] and suf[i + 1, jj + 1] == total - k - 1:
                out[k] = i
                k += 1
                i += 1
                j = jj + 1
                took = True
                break
        if not took:
            i += 1
    return out


# ---------------------------------------------------------------------------
# Pure-numpy fallbacks. Row updates use the cummax identity: each DP row is
# nondecreasing, so row_i = cummax(max(prev_row, diag_match + 1)).


def _lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    m = b.shape[0]
    prev = np.zeros(m + 1, np.int64)
    cur = np.zeros(m + 1, np.int64)
    for ai in a:
        cand = np.where(b == ai, prev[:-1] + 1, 0)
        np.maximum.accumulate(np.maximum(prev[1:], cand), out=cur[1:])
        prev, cur = cur, prev
    return int(prev[m])


def _lcs_suffix_table_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ar = a[::-1]
    br = b[::-1]
    n = ar.shape[0]
    m = br.shape[0]
    table = np.zeros((n + 1, m + 1), np.int64)
    for i in range(n):
        cand = np.where(br == ar[i], table[i, :-1] + 1, 0)
        np.maximum.accumulate(np.maximum(table[i, 1:], cand), out=table[i + 1, 1:])
    return table[::-1, ::-1].copy()


def _lcs_pick_numpy(a: np.ndarray, b: np.ndarray, suf: np.ndarray) -> np.ndarray:
    total = int(suf[0, 0])
    out = np.empty(total, np.int64)
    k = 0
    i = 0
    j = 0
    while k < total:
        hits = np.nonzero((b[j:] == a[i]) & (suf[i + 1, j + 1 :] == total - k - 1))[0]
        if hits.size:
            out[k] = i
            k += 1
            j = j + int(hits[0]) + 1
            i += 1
        else:
            i += 1
    return out


# ---------------------------------------------------------------------------
# Backend selection.

_ENV_FLAG = os.environ.get("PROCKG_NUMBA", "1")

_BACKEND = "numpy"
_lcs_length_impl = _lcs_length_numpy
_lcs_suffix_table_impl = _lcs_suffix_table_numpy
_lcs_pick_impl = _lcs_pick_numpy

if _ENV_FLAG != "0":
    try:
        from numba import njit

        _lcs_length_impl = njit(cache=True)(_lcs_length_loop)
        _lcs_suffix_table_impl = njit(cache=True)(_lcs_suffix_table_loop)
        _lcs_pick_impl = njit(cache=True)(_lcs_pick_loop)
        _BACKEND = "numba"
    except ImportError:
        pass


def backend_name() -> str:
    """Which kernel backend is active: "numba" or "numpy"."""
    return _BACKEND


def available_backends() -> dict[str, dict[str, object]]:
    """Both implementations keyed by name, for benchmarks and cross-checks."""
    backends: dict[str, dict[str, object]] = {
        "numpy": {
            "lcs_length": _lcs_length_numpy,
            "lcs_suffix_table": _lcs_suffix_table_numpy,
            "lcs_pick": _lcs_pick_numpy,
        }
    }
    if _BACKEND == "numba":
        backends["numba"] = {
            "lcs_length": _lcs_length_impl,
            "lcs_suffix_table": _lcs_suffix_table_impl,
            "lcs_pick": _lcs_pick_impl,
        }
    return backends


def _as_ids(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("token id sequence must be one-dimensional")
    return arr


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two token-id sequences."""
    a = _as_ids(a)
    b = _as_ids(b)
    if a.size == 0 or b.size == 0:
        return 0
    return int(_lcs_length_impl(a, b))


def lcs_pick(a, b) -> np.ndarray:
    """Indices into `a` of its canonical maximum common subsequence with `b`.

    Canonical means the lexicographically smallest index tuple among all
    maximum-length common subsequences, so the result is independent of
    backend and platform.
    """
    a = _as_ids(a)
    b = _as_ids(b)
    if a.size == 0 or b.size == 0:
        return np.empty(0, np.int64)
    suf = _lcs_suffix_table_impl(a, b)
    return _lcs_pick_impl(a, b, suf)
