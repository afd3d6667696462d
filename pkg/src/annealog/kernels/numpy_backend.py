"""Pure-numpy fallback kernels (ANNEALOG_KERNELS=numpy).

Same contracts and the same counter-based random stream as the numba
backend; vectorized over assignment chunks / reads instead of jitted loops.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_U64 = np.uint64
_INV53 = 1.0 / float(1 << 53)
_CHUNK_BITS = 18


def _sm64(seed, ctr):
    from . import splitmix64

    return splitmix64(seed, ctr)


def _chunk_states(n, start, count):
    idx = np.arange(start, start + count, dtype=np.uint64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.uint64)) & _U64(1)
    return (2 * bits.astype(np.int64) - 1).astype(np.int8)


def _chunk_energies(states, hvec, pi, pj, jv):
    s = states.astype(np.int64)
    e = s @ hvec
    if len(pi):
        e += (s[:, pi] * s[:, pj]) @ jv
    return e


def enum_ground(n, hvec, pi, pj, jv):
    """All minimizers of the scaled-int Hamiltonian: (emin, states int8[k,n])."""
    total = 1 << n
    chunk = min(total, 1 << _CHUNK_BITS)
    emin = None
    kept = []
    for start in range(0, total, chunk):
        cnt = min(chunk, total - start)
        states = _chunk_states(n, start, cnt)
        e = _chunk_energies(states, hvec, pi, pj, jv)
        cmin = int(e.min())
        if emin is None or cmin < emin:
            emin = cmin
            kept = [states[e == cmin]]
        elif cmin == emin:
            kept.append(states[e == cmin])
    out = np.concatenate(kept, axis=0) if kept else np.empty((0, n), dtype=np.int8)
    return int(emin), out


def sa_sample(n, hvec, pi, pj, jv, betas, reads, seed):
    """Metropolis anneal, vectorized across reads with one column per update."""
    seed = _U64(seed % (1 << 64))
    sweeps = len(betas)
    jmat = np.zeros((n, n), dtype=np.int64)
    if len(pi):
        jmat[pi, pj] = jv
        jmat[pj, pi] = jv
    base = np.arange(reads, dtype=np.uint64) * _U64(n * (sweeps + 1))
    init = _sm64(seed, base[:, None] + np.arange(n, dtype=np.uint64))
    s = np.where((init >> _U64(63)).astype(bool), 1, -1).astype(np.int64)
    for t in range(sweeps):
        beta = float(betas[t])
        row = base + _U64(n * (t + 1))
        for i in range(n):
            f = s @ jmat[:, i] + hvec[i]
            de = -2 * s[:, i] * f
            u = (_sm64(seed, row + _U64(i)) >> _U64(11)).astype(np.float64) * _INV53
            with np.errstate(over="ignore"):
                accept = u < np.exp(-beta * np.maximum(de, 0).astype(np.float64))
            s[accept, i] *= -1
    return s.astype(np.int8)


def _min_over_ancilla(energies, n_vis, n_hid):
    if n_hid == 1:
        return energies
    return energies.reshape(energies.shape[0], n_vis, n_hid).min(axis=2)


def synth_search(phit, grid, valid_mask, n_vis, n_hid, min_gap):
    """Grid search matching the numba DFS: python DFS over a head prefix of
    the coefficients with the same interval pruning, vectorized full scan of
    the tail block at every surviving head node."""
    phit = np.asarray(phit, dtype=np.int64)
    grid = np.asarray(grid, dtype=np.int64)
    valid_mask = np.asarray(valid_mask, dtype=bool)
    d, n_rows = phit.shape
    gmax = int(np.abs(grid).max()) if len(grid) else 0
    ngrid = len(grid)

    tail = min(d, 8 if ngrid <= 5 else 6)
    head = d - tail
    # enumerate the tail block once: candidates in lex order
    tidx = np.arange(ngrid**tail, dtype=np.int64)
    tail_cand = np.empty((len(tidx), tail), dtype=np.int64)
    rem = tidx.copy()
    for k in range(tail - 1, -1, -1):
        tail_cand[:, k] = grid[rem % ngrid]
        rem //= ngrid
    tail_energy = tail_cand @ phit[head:, :]          # (T, n_rows)
    tail_sum = np.abs(tail_cand).sum(axis=1)

    invalid_mask = ~valid_mask
    has_invalid = bool(invalid_mask.any())
    best = {"found": False, "gap": -1, "sum": 0, "coeffs": None}
    nodes = 0

    def leaf_scan(partial, head_coeffs, head_sum):
        nonlocal nodes
        nodes += len(tidx)
        e = _min_over_ancilla(partial[None, :] + tail_energy, n_vis, n_hid)
        ev = e[:, valid_mask]
        e0 = ev.min(axis=1)
        ok = (ev == e0[:, None]).all(axis=1)
        if has_invalid:
            gaps = e[:, invalid_mask].min(axis=1) - e0
        else:
            gaps = np.full(len(e0), 2**40, dtype=np.int64)
        ok &= gaps >= min_gap
        if not ok.any():
            return
        cand_ix = np.nonzero(ok)[0]
        g = gaps[cand_ix]
        sm = head_sum + tail_sum[cand_ix]
        order = np.lexsort((cand_ix, sm, -g))
        k = order[0]
        key = (-int(g[k]), int(sm[k]))
        if (not best["found"]) or key < (-best["gap"], best["sum"]):
            best["found"] = True
            best["gap"] = int(g[k])
            best["sum"] = int(sm[k])
            best["coeffs"] = np.concatenate(
                [head_coeffs, tail_cand[cand_ix[k]]]).astype(np.int64)

    def prune(partial, depth, cur_sum):
        """True if the subtree below this head node cannot contain a winner."""
        R = (d - depth) * gmax
        e = _min_over_ancilla(partial[None, :], n_vis, n_hid)[0]
        pv = e[valid_mask]
        pmax_v = int(pv.max())
        pmin_v = int(pv.min())
        if pmax_v - pmin_v > 2 * R:
            return True
        if has_invalid:
            pmin_i = int(e[invalid_mask].min())
            if pmin_i + R < pmax_v - R + min_gap:
                return True
            gap_ub = pmin_i - pmax_v + 2 * R
        else:
            gap_ub = 2**40
        if best["found"]:
            if gap_ub < best["gap"]:
                return True
            if gap_ub == best["gap"] and cur_sum >= best["sum"]:
                return True
        return False

    def dfs(depth, partial, coeffs, cur_sum):
        nonlocal nodes
        if depth == head:
            leaf_scan(partial, np.array(coeffs, dtype=np.int64), cur_sum)
            return
        for g in grid:
            nodes += 1
            nxt = partial + int(g) * phit[depth]
            s = cur_sum + abs(int(g))
            coeffs.append(int(g))
            if not prune(nxt, depth + 1, s):
                dfs(depth + 1, nxt, coeffs, s)
            coeffs.pop()

    dfs(0, np.zeros(n_rows, dtype=np.int64), [], 0)
    coeffs = best["coeffs"] if best["coeffs"] is not None else np.zeros(d, dtype=np.int64)
    return best["found"], best["gap"], best["sum"], coeffs, nodes


def warmup():
    """Nothing to compile; present for backend API symmetry."""
