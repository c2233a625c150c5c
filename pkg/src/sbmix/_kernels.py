"""Hot numeric loops, jitted with numba when available.

Every function here is plain scalar/loop code over preallocated int64/float64
arrays, so the pure-Python fallback executes the identical floating-point
operations in the identical order and produces bit-equal results (only
slower). All log-gamma values come in as lookup tables indexed by integer
counts; see _tables.py.

Count conventions for one cluster of networks sharing block structure:
  s[k]    vertices in block k (aggregated over networks)
  a[k,l]  edges from block k to block l (aggregated)
  r[k,l]  ordered dyads between blocks: per network s_k*s_l (k != l) or
          s_k*(s_k-1) (k == l), summed over networks
  b = r - a (non-edges), kept implicit.
"""

from __future__ import annotations

try:
    from numba import njit as _numba_njit

    def _jit(func):
        return _numba_njit(cache=True, nogil=True)(func)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    def _jit(func):
        return func

    HAVE_NUMBA = False


@_jit
def icl_sums(s, a, r, K, t_eta, t_zeta, t_ez, t_alpha):
    """Table-driven part of the single-SBM ICL: the pairwise Beta terms plus
    the block-size Gamma terms. The caller adds the K-dependent constants."""
    tot = 0.0
    for k in range(K):
        tot += t_alpha[s[k]]
        for l in range(K):
            a0 = a[k, l]
            r0 = r[k, l]
            tot += t_eta[a0] + t_zeta[r0 - a0] - t_ez[r0]
    return tot


@_jit
def merge_stats(s1, a1, r1, K1, p1, s2, a2, r2, K2, p2, K, s_o, a_o, r_o):
    """Permute both clusters' stats by their matched block orders, zero-pad
    to K blocks, and sum into the output buffers."""
    for k in range(K):
        v = 0
        if k < K1:
            v += s1[p1[k]]
        if k < K2:
            v += s2[p2[k]]
        s_o[k] = v
        for l in range(K):
            av = 0
            rv = 0
            if k < K1 and l < K1:
                av += a1[p1[k], p1[l]]
                rv += r1[p1[k], p1[l]]
            if k < K2 and l < K2:
                av += a2[p2[k], p2[l]]
                rv += r2[p2[k], p2[l]]
            a_o[k, l] = av
            r_o[k, l] = rv


@_jit
def _cell(a, r, k, l, da, dr, t_eta, t_zeta, t_ez, apply):
    """One affected (k,l) cell of a node swap: either its ICL contribution
    (apply=False) or the in-place count update (apply=True)."""
    if apply:
        a[k, l] += da
        r[k, l] += dr
        return 0.0
    a0 = a[k, l]
    r0 = r[k, l]
    b0 = r0 - a0
    db = dr - da
    return (t_eta[a0 + da] - t_eta[a0] + t_zeta[b0 + db] - t_zeta[b0]
            - t_ez[r0 + dr] + t_ez[r0])


@_jit
def _cell_walk(g, h, K, a, r, m, s_net, din, dout, t_eta, t_zeta, t_ez, apply):
    """Walk exactly the cells whose counts change when one vertex of network
    m moves from block g to block h: rows g and h, plus columns g and h
    outside those rows. din/dout hold the vertex's in/out neighbor counts
    per block; per-network block sizes enter through s_net[m]."""
    tot = 0.0
    for l in range(K):
        if l == g:
            da = -dout[g] - din[g]
            dr = -2 * s_net[m, g] + 2
        elif l == h:
            da = -dout[h] + din[g]
            dr = s_net[m, g] - s_net[m, h] - 1
        else:
            da = -dout[l]
            dr = -s_net[m, l]
        tot += _cell(a, r, g, l, da, dr, t_eta, t_zeta, t_ez, apply)
        if l == g:
            da = dout[g] - din[h]
            dr = s_net[m, g] - s_net[m, h] - 1
        elif l == h:
            da = dout[h] + din[h]
            dr = 2 * s_net[m, h]
        else:
            da = dout[l]
            dr = s_net[m, l]
        tot += _cell(a, r, h, l, da, dr, t_eta, t_zeta, t_ez, apply)
    for k in range(K):
        if k == g or k == h:
            continue
        tot += _cell(a, r, k, g, -din[k], -s_net[m, k], t_eta, t_zeta, t_ez, apply)
        tot += _cell(a, r, k, h, din[k], s_net[m, k], t_eta, t_zeta, t_ez, apply)
    return tot


@_jit
def vertex_deltas(v, K, labels, net_of, out_ptr, out_idx, in_ptr, in_idx,
                  s_net, s, a, r, t_eta, t_zeta, t_ez, t_alpha, pen,
                  din, dout, deltas):
    """ICL change for moving vertex v to every candidate block h, written
    into deltas[0:K]. deltas[g] is exactly 0. If v is the globally last
    member of its block, every move prices the block-count reduction."""
    g = labels[v]
    m = net_of[v]
    for k in range(K):
        din[k] = 0
        dout[k] = 0
    for p in range(in_ptr[v], in_ptr[v + 1]):
        din[labels[in_idx[p]]] += 1
    for p in range(out_ptr[v], out_ptr[v + 1]):
        dout[labels[out_idx[p]]] += 1
    last = s[g] == 1
    for h in range(K):
        if h == g:
            deltas[h] = 0.0
            continue
        d = _cell_walk(g, h, K, a, r, m, s_net, din, dout,
                       t_eta, t_zeta, t_ez, False)
        d += (t_alpha[s[g] - 1] - t_alpha[s[g]]
              + t_alpha[s[h] + 1] - t_alpha[s[h]])
        if last:
            d -= pen[K]
        deltas[h] = d
    return g


@_jit
def _excise(g, K, labels, s, s_net, a, r):
    """Remove the now-empty block g: compact labels and all stat arrays into
    the top-left (K-1) region of their buffers."""
    for v in range(labels.size):
        if labels[v] > g:
            labels[v] -= 1
    for k in range(g, K - 1):
        s[k] = s[k + 1]
    s[K - 1] = 0
    for mm in range(s_net.shape[0]):
        for k in range(g, K - 1):
            s_net[mm, k] = s_net[mm, k + 1]
        s_net[mm, K - 1] = 0
    for k in range(K - 1):
        ks = k + 1 if k >= g else k
        for l in range(K - 1):
            ls = l + 1 if l >= g else l
            a[k, l] = a[ks, ls]
            r[k, l] = r[ks, ls]
    for k in range(K):
        a[k, K - 1] = 0
        a[K - 1, k] = 0
        r[k, K - 1] = 0
        r[K - 1, k] = 0


@_jit
def sweep(order, K, labels, net_of, out_ptr, out_idx, in_ptr, in_idx,
          s_net, s, a, r, t_eta, t_zeta, t_ez, t_alpha, pen,
          din, dout, deltas):
    """One full pass in the given vertex order, applying each strictly
    positive best move immediately (ties: smallest h). Returns the number
    of accepted moves, the total ICL gain, and the possibly reduced K."""
    n_moves = 0
    dsum = 0.0
    for t in range(order.size):
        if K == 1:
            break
        v = order[t]
        g = vertex_deltas(v, K, labels, net_of, out_ptr, out_idx, in_ptr,
                          in_idx, s_net, s, a, r, t_eta, t_zeta, t_ez,
                          t_alpha, pen, din, dout, deltas)
        best = g
        bestd = 0.0
        for h in range(K):
            if deltas[h] > bestd:
                bestd = deltas[h]
                best = h
        if best != g and bestd > 0.0:
            m = net_of[v]
            _cell_walk(g, best, K, a, r, m, s_net, din, dout,
                       t_eta, t_zeta, t_ez, True)
            s[g] -= 1
            s[best] += 1
            s_net[m, g] -= 1
            s_net[m, best] += 1
            labels[v] = best
            dsum += bestd
            n_moves += 1
            if s[g] == 0:
                _excise(g, K, labels, s, s_net, a, r)
                K -= 1
    return n_moves, dsum, K


@_jit
def match_cross(lo1, hi1, lo2, hi2, g1, g2, out):
    """Cross terms of the squared graphon distance for every pair of block
    orderings. lo/hi give each ORIGINAL block's interval under each
    candidate ordering; out[x, y] = sum over block pairs of
    g1[a,b]*g2[c,d]*|I_a ∩ J_c|*|I_b ∩ J_d|."""
    P1, K1 = lo1.shape
    P2, K2 = lo2.shape
    for x in range(P1):
        for y in range(P2):
            cr = 0.0
            for aa in range(K1):
                for cc in range(K2):
                    o1 = min(hi1[x, aa], hi2[y, cc]) - max(lo1[x, aa], lo2[y, cc])
                    if o1 <= 0.0:
                        continue
                    for bb in range(K1):
                        for dd in range(K2):
                            o2 = min(hi1[x, bb], hi2[y, dd]) - max(lo1[x, bb], lo2[y, dd])
                            if o2 <= 0.0:
                                continue
                            cr += g1[aa, bb] * g2[cc, dd] * o1 * o2
            out[x, y] = cr
