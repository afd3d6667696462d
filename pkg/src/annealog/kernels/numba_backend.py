"""numba @njit kernels (default backend)."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NAME = "numba"

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_INV53 = 1.0 / float(1 << 53)
_BIG = np.int64(2**62)


@njit(cache=True, inline="always")
def _sm64(seed, ctr):
    z = _U64(seed) + _U64(ctr) * _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


@njit(cache=True)
def _enum_pass(n, hvec, indptr, nbr, wgt, emin, collect, out):
    """Gray-code walk over all 2^n states; incremental energy updates.

    collect=False: return (min energy, count at min).  collect=True: fill
    `out` with every state whose energy equals `emin`.
    """
    s = np.full(n, -1, dtype=np.int8)
    e = np.int64(0)
    for i in range(n):
        e -= hvec[i]
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            j = nbr[k]
            if j > i:
                e += wgt[k]  # both spins -1
    best = e
    count = np.int64(1)
    if collect and e == emin:
        for i in range(n):
            out[0, i] = s[i]
    write = np.int64(1) if (collect and e == emin) else np.int64(0)
    total = np.int64(1) << n
    for step in range(1, total):
        i = 0
        while not (step >> i) & 1:
            i += 1
        s[i] = -s[i]
        f = hvec[i]
        for k in range(indptr[i], indptr[i + 1]):
            f += wgt[k] * s[nbr[k]]
        e += 2 * s[i] * f
        if collect:
            if e == emin:
                for q in range(n):
                    out[write, q] = s[q]
                write += 1
        else:
            if e < best:
                best = e
                count = 1
            elif e == best:
                count += 1
    return best, count


def enum_ground(n, hvec, pi, pj, jv):
    """All minimizers of the scaled-int Hamiltonian: (emin, states int8[k,n])."""
    from . import adjacency_csr

    indptr, nbr, wgt = adjacency_csr(n, pi, pj, jv)
    dummy = np.empty((1, n), dtype=np.int8)
    emin, count = _enum_pass(n, hvec, indptr, nbr, wgt, np.int64(0), False, dummy)
    out = np.empty((count, n), dtype=np.int8)
    _enum_pass(n, hvec, indptr, nbr, wgt, emin, True, out)
    return int(emin), out


@njit(cache=True)
def _sa_kernel(n, hvec, indptr, nbr, wgt, betas, reads, seed):
    sweeps = len(betas)
    out = np.empty((reads, n), dtype=np.int8)
    s = np.empty(n, dtype=np.int8)
    stride = _U64(n * (sweeps + 1))
    for r in range(reads):
        base = _U64(r) * stride
        for i in range(n):
            s[i] = 1 if (_sm64(seed, base + _U64(i)) >> _U64(63)) else -1
        for t in range(sweeps):
            beta = betas[t]
            row = base + _U64(n * (t + 1))
            for i in range(n):
                f = hvec[i]
                for k in range(indptr[i], indptr[i + 1]):
                    f += wgt[k] * s[nbr[k]]
                de = -2 * s[i] * f
                if de <= 0:
                    s[i] = -s[i]
                else:
                    u = float(_sm64(seed, row + _U64(i)) >> _U64(11)) * _INV53
                    if u < math.exp(-beta * de):
                        s[i] = -s[i]
            # row advances with t via the counter layout
        for i in range(n):
            out[r, i] = s[i]
    return out


def sa_sample(n, hvec, pi, pj, jv, betas, reads, seed):
    """Metropolis single-spin-flip anneal; final state of each read."""
    from . import adjacency_csr

    indptr, nbr, wgt = adjacency_csr(n, pi, pj, jv)
    return _sa_kernel(n, hvec, indptr, nbr, wgt,
                      np.ascontiguousarray(betas, dtype=np.float64),
                      reads, _U64(seed % (1 << 64)))


@njit(cache=True)
def _synth_dfs(phit, grid, valid_mask, n_vis, n_hid, min_gap):
    """Depth-first feasibility search over the coefficient grid.

    Interval pruning: with every feature in {-1,+1}, the undecided
    coefficients can move any row energy by at most R = (#remaining)*gmax,
    which bounds both the valid-row equalities and the ground/non-ground
    separation of the inequality system.
    """
    d, n_rows = phit.shape
    gmax = np.int64(0)
    for g in grid:
        if abs(g) > gmax:
            gmax = abs(g)
    part = np.zeros((d + 1, n_rows), dtype=np.int64)
    choice = np.full(d, -1, dtype=np.int64)
    sums = np.zeros(d + 1, dtype=np.int64)
    best = np.zeros(d, dtype=np.int64)
    best_gap = np.int64(-1)
    best_sum = np.int64(0)
    found = False
    nodes = np.int64(0)

    t = 0
    while t >= 0:
        choice[t] += 1
        if choice[t] >= len(grid):
            choice[t] = -1
            t -= 1
            continue
        g = grid[choice[t]]
        for r in range(n_rows):
            part[t + 1, r] = part[t, r] + g * phit[t, r]
        sums[t + 1] = sums[t] + abs(g)
        nodes += 1
        R = (d - t - 1) * gmax
        pmax_valid = -_BIG
        pmin_valid = _BIG
        pmin_invalid = _BIG
        for v in range(n_vis):
            m = _BIG
            base = v * n_hid
            for a in range(n_hid):
                e = part[t + 1, base + a]
                if e < m:
                    m = e
            if valid_mask[v]:
                if m > pmax_valid:
                    pmax_valid = m
                if m < pmin_valid:
                    pmin_valid = m
            else:
                if m < pmin_invalid:
                    pmin_invalid = m
        if pmax_valid - pmin_valid > 2 * R:
            continue
        if pmin_invalid != _BIG and pmin_invalid + R < pmax_valid - R + min_gap:
            continue
        gap_ub = (pmin_invalid - pmax_valid + 2 * R) if pmin_invalid != _BIG else _BIG
        if found:
            if gap_ub < best_gap:
                continue
            if gap_ub == best_gap and sums[t + 1] >= best_sum:
                continue
        if t + 1 == d:
            if pmax_valid == pmin_valid:
                gap = (pmin_invalid - pmax_valid) if pmin_invalid != _BIG else _BIG
                if gap >= min_gap:
                    if (not found) or gap > best_gap or (gap == best_gap and sums[d] < best_sum):
                        found = True
                        best_gap = gap
                        best_sum = sums[d]
                        for k in range(d):
                            best[k] = grid[choice[k]]
            continue
        t += 1
    return found, best_gap, best_sum, best, nodes


def synth_search(phit, grid, valid_mask, n_vis, n_hid, min_gap):
    """Best feasible coefficient vector: max gap, then min sum|c|, then lex."""
    found, gap, total, coeffs, nodes = _synth_dfs(
        np.ascontiguousarray(phit, dtype=np.int64),
        np.ascontiguousarray(grid, dtype=np.int64),
        np.ascontiguousarray(valid_mask, dtype=np.bool_),
        np.int64(n_vis), np.int64(n_hid), np.int64(min_gap))
    return bool(found), int(gap), int(total), coeffs, int(nodes)


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    hvec = np.array([-1], dtype=np.int64)
    empty = np.empty(0, dtype=np.int64)
    enum_ground(1, hvec, empty, empty, empty)
    sa_sample(1, hvec, empty, empty, empty, np.array([1.0]), 1, 7)
    phit = np.array([[1, -1]], dtype=np.int64)
    synth_search(phit, np.array([-1, 0, 1], dtype=np.int64),
                 np.array([True, False]), 2, 1, 1)
