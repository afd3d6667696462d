"""Numeric kernel backends.

The hot inner loops (exhaustive ground-state enumeration, simulated
annealing sweeps, cell-synthesis grid search) run under numba's @njit by
default.  Setting ``ANNEALOG_KERNELS=numpy`` selects a pure-numpy fallback
with identical semantics; both consume the same scaled-integer arrays so
all energy comparisons stay exact.
"""

from __future__ import annotations

import os
from math import lcm

import numpy as np

_BACKEND = None


def active_backend():
    """Return the kernel module selected by ANNEALOG_KERNELS (numba|numpy)."""
    global _BACKEND
    if _BACKEND is None:
        choice = os.environ.get("ANNEALOG_KERNELS", "numba").strip().lower()
        if choice == "numpy":
            from . import numpy_backend as mod
        elif choice == "numba":
            try:
                from . import numba_backend as mod
            except ImportError:
                from . import numpy_backend as mod
        else:
            raise ValueError(f"ANNEALOG_KERNELS must be 'numba' or 'numpy', got {choice!r}")
        _BACKEND = mod
    return _BACKEND


def backend_name() -> str:
    return active_backend().NAME


def hamiltonian_arrays(h, spins):
    """Flatten a Hamiltonian to scaled-int64 arrays over the given spin order.

    Returns (hvec, pair_i, pair_j, jvec, denom) with every coefficient
    multiplied by `denom` (the lcm of denominators) so integer arithmetic is
    exact; the offset is NOT included.
    """
    denom = h.coefficient_denominator_lcm()
    index = {s: k for k, s in enumerate(spins)}
    n = len(spins)
    hvec = np.zeros(n, dtype=np.int64)
    for s, v in h.linear.items():
        hvec[index[s]] = int(v * denom)
    pairs = sorted(((index[i], index[j]) for (i, j) in h.quadratic),
                   key=lambda t: (min(t), max(t)))
    pi = np.empty(len(pairs), dtype=np.int64)
    pj = np.empty(len(pairs), dtype=np.int64)
    jv = np.empty(len(pairs), dtype=np.int64)
    quad = h.quadratic
    inv = {v: k for k, v in index.items()}
    for k, (a, b) in enumerate(pairs):
        pi[k] = min(a, b)
        pj[k] = max(a, b)
        si, sj = inv[a], inv[b]
        key = (si, sj) if (si, sj) in quad else (sj, si)
        jv[k] = int(quad[key] * denom)
    return hvec, pi, pj, jv, denom


def adjacency_csr(n, pi, pj, jv):
    """Neighbor lists in CSR form for sweep kernels: (indptr, nbr, weight)."""
    deg = np.zeros(n, dtype=np.int64)
    for k in range(len(pi)):
        deg[pi[k]] += 1
        deg[pj[k]] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    nbr = np.zeros(indptr[-1], dtype=np.int64)
    wgt = np.zeros(indptr[-1], dtype=np.int64)
    fill = indptr[:-1].copy()
    for k in range(len(pi)):
        a, b, w = pi[k], pj[k], jv[k]
        nbr[fill[a]] = b
        wgt[fill[a]] = w
        fill[a] += 1
        nbr[fill[b]] = a
        wgt[fill[b]] = w
        fill[b] += 1
    return indptr, nbr, wgt


# splitmix64 constants shared by both backends (counter-based stream: the
# value for (seed, counter) is a pure function, so reads can replay in any
# execution order).
SM_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
SM_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
SM_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, counter) -> np.ndarray:
    """Vectorized reference splitmix64; used for seed derivation everywhere."""
    z = np.uint64(seed) + np.asarray(counter, dtype=np.uint64) * SM_GOLDEN
    z = (z ^ (z >> np.uint64(30))) * SM_MIX1
    z = (z ^ (z >> np.uint64(27))) * SM_MIX2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *indices: int) -> int:
    """Derive an independent child seed from a master seed and an index path."""
    z = np.uint64(seed % (1 << 64))
    for ix in indices:
        z = splitmix64(int(z), ix)
    return int(z)
