"""Numba kernels for graph construction and beam search.

Everything here operates on flat numpy arrays so the hot loops compile to
machine code and release the GIL during query processing. Adjacency comes
in two layouts: a fixed-capacity layout used while building (one block per
node per layer) and the frozen CSR layout used at query time.

Distance metrics are encoded as integers: 0 = squared Euclidean,
1 = negative inner product. A non-zero `lam` adds `lam * hamming` between
fixed-length label vectors, which is the fused ranking used by the
hybrid label/vector graph.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = np.inf

# ---------------------------------------------------------------------------
# distances


@njit(inline="always")
def _vdist(vecs, i, q, metric):
    acc = 0.0
    if metric == 0:
        for j in range(q.shape[0]):
            d = np.float64(vecs[i, j]) - np.float64(q[j])
            acc += d * d
    else:
        for j in range(q.shape[0]):
            acc -= np.float64(vecs[i, j]) * np.float64(q[j])
    return acc


@njit(inline="always")
def _pair_dist(vecs, i, j, metric):
    acc = 0.0
    if metric == 0:
        for c in range(vecs.shape[1]):
            d = np.float64(vecs[i, c]) - np.float64(vecs[j, c])
            acc += d * d
    else:
        for c in range(vecs.shape[1]):
            acc -= np.float64(vecs[i, c]) * np.float64(vecs[j, c])
    return acc


@njit(inline="always")
def _query_dist(vecs, i, q, metric, labmat, qlab, lam):
    d = _vdist(vecs, i, q, metric)
    if lam > 0.0:
        mism = 0
        for p in range(qlab.shape[0]):
            if labmat[i, p] != qlab[p]:
                mism += 1
        d += lam * mism
    return d


# ---------------------------------------------------------------------------
# array-backed binary min-heap (max-heap callers negate distances)


@njit(inline="always")
def _hpush(hd, hi, size, d, i):
    hd[size] = d
    hi[size] = i
    c = size
    while c > 0:
        p = (c - 1) >> 1
        if hd[p] <= hd[c]:
            break
        hd[p], hd[c] = hd[c], hd[p]
        hi[p], hi[c] = hi[c], hi[p]
        c = p
    return size + 1


@njit(inline="always")
def _hpop(hd, hi, size):
    last = size - 1
    hd[0] = hd[last]
    hi[0] = hi[last]
    c = 0
    while True:
        l = 2 * c + 1
        if l >= last:
            break
        r = l + 1
        m = l
        if r < last and hd[r] < hd[l]:
            m = r
        if hd[c] <= hd[m]:
            break
        hd[c], hd[m] = hd[m], hd[c]
        hi[c], hi[m] = hi[m], hi[c]
        c = m
    return last


@njit(inline="always")
def _accepted(accept_words, v):
    w = accept_words[v >> 6]
    return (w >> np.uint64(v & 63)) & np.uint64(1) != np.uint64(0)


# ---------------------------------------------------------------------------
# query-time beam search over CSR adjacency


@njit(cache=True, nogil=True)
def search_layer(
    indptr,
    indices,
    vecs,
    query,
    entries,
    ef,
    accept_words,
    two_hop,
    metric,
    labmat,
    qlab,
    lam,
    scan_cap,
):
    """Best-first beam search with an acceptance gate on the result list.

    Traversal is unrestricted (blocked nodes still route the walk); only
    accepted nodes enter the bounded result heap. Terminates when the best
    unexpanded candidate is farther than the worst of `ef` accepted nodes.
    Returns accepted (ids, dists) ascending by distance.
    """
    n = vecs.shape[0]
    visited = np.zeros(n, dtype=np.uint8)

    cap = 1024
    cd = np.empty(cap, dtype=np.float64)
    ci = np.empty(cap, dtype=np.int64)
    csize = 0

    rd = np.empty(ef, dtype=np.float64)  # negated distances: max-heap
    ri = np.empty(ef, dtype=np.int64)
    rsize = 0

    for t in range(entries.shape[0]):
        e = entries[t]
        if e < 0 or visited[e] == 1:
            continue
        visited[e] = 1
        d = _query_dist(vecs, e, query, metric, labmat, qlab, lam)
        csize = _hpush(cd, ci, csize, d, e)
        if _accepted(accept_words, e):
            if rsize < ef:
                rsize = _hpush(rd, ri, rsize, -d, e)
            elif d < -rd[0]:
                rsize = _hpop(rd, ri, rsize)
                rsize = _hpush(rd, ri, rsize, -d, e)

    while csize > 0:
        d = cd[0]
        u = ci[0]
        csize = _hpop(cd, ci, csize)
        if rsize == ef and d > -rd[0]:
            break
        end_u = min(indptr[u + 1], indptr[u] + scan_cap)
        for idx in range(indptr[u], end_u):
            v = indices[idx]
            if visited[v] == 0:
                visited[v] = 1
                dv = _query_dist(vecs, v, query, metric, labmat, qlab, lam)
                if rsize < ef or dv < -rd[0]:
                    if csize >= cd.shape[0]:
                        nd = np.empty(cd.shape[0] * 2, dtype=np.float64)
                        ni = np.empty(cd.shape[0] * 2, dtype=np.int64)
                        nd[:csize] = cd[:csize]
                        ni[:csize] = ci[:csize]
                        cd = nd
                        ci = ni
                    csize = _hpush(cd, ci, csize, dv, v)
                    if _accepted(accept_words, v):
                        if rsize < ef:
                            rsize = _hpush(rd, ri, rsize, -dv, v)
                        else:
                            rsize = _hpop(rd, ri, rsize)
                            rsize = _hpush(rd, ri, rsize, -dv, v)
            if two_hop:
                end_v = min(indptr[v + 1], indptr[v] + scan_cap)
                for jdx in range(indptr[v], end_v):
                    w = indices[jdx]
                    if visited[w] == 1:
                        continue
                    visited[w] = 1
                    dw = _query_dist(vecs, w, query, metric, labmat, qlab, lam)
                    if rsize < ef or dw < -rd[0]:
                        if csize >= cd.shape[0]:
                            nd = np.empty(cd.shape[0] * 2, dtype=np.float64)
                            ni = np.empty(cd.shape[0] * 2, dtype=np.int64)
                            nd[:csize] = cd[:csize]
                            ni[:csize] = ci[:csize]
                            cd = nd
                            ci = ni
                        csize = _hpush(cd, ci, csize, dw, w)
                        if _accepted(accept_words, w):
                            if rsize < ef:
                                rsize = _hpush(rd, ri, rsize, -dw, w)
                            else:
                                rsize = _hpop(rd, ri, rsize)
                                rsize = _hpush(rd, ri, rsize, -dw, w)

    out_d = np.empty(rsize, dtype=np.float64)
    out_i = np.empty(rsize, dtype=np.int64)
    for t in range(rsize - 1, -1, -1):
        out_d[t] = -rd[0]
        out_i[t] = ri[0]
        rsize = _hpop(rd, ri, rsize)
    return out_i, out_d


# ---------------------------------------------------------------------------
# label CSR helpers (sorted int32 label lists per record)


@njit(inline="always")
def _labels_overlap(lab_indptr, lab_ids, a, b):
    i = lab_indptr[a]
    j = lab_indptr[b]
    ei = lab_indptr[a + 1]
    ej = lab_indptr[b + 1]
    while i < ei and j < ej:
        la = lab_ids[i]
        lb = lab_ids[j]
        if la == lb:
            return True
        if la < lb:
            i += 1
        else:
            j += 1
    return False


@njit(inline="always")
def _labels_overlap_query(lab_indptr, lab_ids, a, qlabels):
    i = lab_indptr[a]
    j = 0
    ei = lab_indptr[a + 1]
    ej = qlabels.shape[0]
    while i < ei and j < ej:
        la = lab_ids[i]
        lb = qlabels[j]
        if la == lb:
            return True
        if la < lb:
            i += 1
        else:
            j += 1
    return False


@njit(inline="always")
def _labels_match_constraint(lab_indptr, lab_ids, a, qlabels, kind):
    """kind: 0 containment (q subset of a), 1 overlap, 2 equality."""
    s = lab_indptr[a]
    e = lab_indptr[a + 1]
    m = e - s
    nq = qlabels.shape[0]
    if kind == 1:
        return _labels_overlap_query(lab_indptr, lab_ids, a, qlabels)
    if kind == 2:
        if m != nq:
            return False
        for t in range(nq):
            if lab_ids[s + t] != qlabels[t]:
                return False
        return True
    # containment: every query label present in the record's sorted list
    i = s
    j = 0
    while i < e and j < nq:
        if lab_ids[i] == qlabels[j]:
            i += 1
            j += 1
        elif lab_ids[i] < qlabels[j]:
            i += 1
        else:
            return False
    return j == nq


# ---------------------------------------------------------------------------
# hybrid search: overlap-gated traversal with full constraint verification


@njit(cache=True, nogil=True)
def search_label_gated(
    indptr,
    indices,
    vecs,
    query,
    entries,
    ef,
    qlabels,
    constraint_kind,
    lab_indptr,
    lab_ids,
    metric,
):
    """Beam search admitting only label-overlapping nodes into the queue.

    A popped node enters the result heap only after the full constraint
    check (containment / overlap / equality against `qlabels`). Entry
    points are pushed unconditionally.
    """
    n = vecs.shape[0]
    visited = np.zeros(n, dtype=np.uint8)

    cap = 1024
    cd = np.empty(cap, dtype=np.float64)
    ci = np.empty(cap, dtype=np.int64)
    csize = 0
    rd = np.empty(ef, dtype=np.float64)
    ri = np.empty(ef, dtype=np.int64)
    rsize = 0

    for t in range(entries.shape[0]):
        e = entries[t]
        if e < 0 or visited[e] == 1:
            continue
        visited[e] = 1
        d = _vdist(vecs, e, query, metric)
        csize = _hpush(cd, ci, csize, d, e)
        if _labels_match_constraint(lab_indptr, lab_ids, e, qlabels, constraint_kind):
            if rsize < ef:
                rsize = _hpush(rd, ri, rsize, -d, e)
            elif d < -rd[0]:
                rsize = _hpop(rd, ri, rsize)
                rsize = _hpush(rd, ri, rsize, -d, e)

    while csize > 0:
        d = cd[0]
        u = ci[0]
        csize = _hpop(cd, ci, csize)
        if rsize == ef and d > -rd[0]:
            break
        for idx in range(indptr[u], indptr[u + 1]):
            v = indices[idx]
            if visited[v] == 1:
                continue
            visited[v] = 1
            if not _labels_overlap_query(lab_indptr, lab_ids, v, qlabels):
                continue
            dv = _vdist(vecs, v, query, metric)
            if rsize < ef or dv < -rd[0]:
                if csize >= cd.shape[0]:
                    nd = np.empty(cd.shape[0] * 2, dtype=np.float64)
                    ni = np.empty(cd.shape[0] * 2, dtype=np.int64)
                    nd[:csize] = cd[:csize]
                    ni[:csize] = ci[:csize]
                    cd = nd
                    ci = ni
                csize = _hpush(cd, ci, csize, dv, v)
                if _labels_match_constraint(lab_indptr, lab_ids, v, qlabels, constraint_kind):
                    if rsize < ef:
                        rsize = _hpush(rd, ri, rsize, -dv, v)
                    else:
                        rsize = _hpop(rd, ri, rsize)
                        rsize = _hpush(rd, ri, rsize, -dv, v)

    out_d = np.empty(rsize, dtype=np.float64)
    out_i = np.empty(rsize, dtype=np.int64)
    for t in range(rsize - 1, -1, -1):
        out_d[t] = -rd[0]
        out_i[t] = ri[0]
        rsize = _hpop(rd, ri, rsize)
    return out_i, out_d


# ---------------------------------------------------------------------------
# pruning


@njit(inline="always")
def _sort_by_dist_then_id(ids, dists):
    # Two stable sorts give (distance, id) lexicographic order.
    o1 = np.argsort(ids, kind="mergesort")
    ids2 = ids[o1]
    dists2 = dists[o1]
    o2 = np.argsort(dists2, kind="mergesort")
    return ids2[o2], dists2[o2]


@njit(cache=True)
def robust_prune(
    vecs,
    p,
    cand_ids,
    cand_dists,
    alpha,
    r_target,
    metric,
    lab_indptr,
    lab_ids,
    use_labels,
):
    """Alpha-pruning: keep the closest candidate, drop those it dominates.

    A kept candidate c dominates c2 when alpha * d(c, c2) <= d(p, c2); with
    `use_labels` the domination additionally requires c and c2 to share a
    label. Returns at most `r_target` ids.
    """
    ids, dists = _sort_by_dist_then_id(cand_ids, cand_dists)
    m = ids.shape[0]
    active = np.ones(m, dtype=np.uint8)
    for t in range(m):
        if ids[t] == p:
            active[t] = 0
        elif t > 0 and ids[t] == ids[t - 1] and dists[t] == dists[t - 1]:
            active[t] = 0
    out = np.empty(r_target, dtype=np.int64)
    count = 0
    for t in range(m):
        if active[t] == 0:
            continue
        c = ids[t]
        out[count] = c
        count += 1
        if count >= r_target:
            break
        for s in range(t + 1, m):
            if active[s] == 0:
                continue
            c2 = ids[s]
            if use_labels and not _labels_overlap(lab_indptr, lab_ids, c, c2):
                continue
            if alpha * _pair_dist(vecs, c, c2, metric) <= dists[s]:
                active[s] = 0
    return out[:count]


@njit(inline="always")
def _select_neighbors(vecs, metric, ids, dists, keep_m, target, diversify, out):
    """Neighbor selection over candidates already sorted ascending.

    keep_m nearest are kept unconditionally; with `diversify` the rest are
    admitted only when closer to the parent than to every kept neighbor
    (alpha = 1 rule). Without it, the nearest `target` are kept verbatim.
    Returns the number written into `out`.
    """
    m = ids.shape[0]
    count = 0
    for t in range(m):
        if count >= target:
            break
        c = ids[t]
        if count < keep_m or not diversify:
            out[count] = c
            count += 1
            continue
        ok = True
        for s in range(count):
            if _pair_dist(vecs, c, out[s], metric) <= dists[t]:
                ok = False
                break
        if ok:
            out[count] = c
            count += 1
    return count


# ---------------------------------------------------------------------------
# layered small-world build (flat per-node-per-layer adjacency blocks)


@njit(inline="always")
def _block_start(offsets, cap0, cap_u, node, layer):
    if layer == 0:
        return offsets[node]
    return offsets[node] + cap0 + (layer - 1) * cap_u


@njit(cache=True)
def _search_build_layer(
    vecs, metric, adj, offsets, deg, cap0, cap_u, layer, entries, ef, q, tags, epoch
):
    """Accept-all beam over the under-construction flat adjacency.

    `tags`/`epoch` implement an epoch-stamped visited set so no O(n)
    clearing happens per insertion.
    """
    cd = np.empty(1024, dtype=np.float64)
    ci = np.empty(1024, dtype=np.int64)
    csize = 0
    rd = np.empty(ef, dtype=np.float64)
    ri = np.empty(ef, dtype=np.int64)
    rsize = 0
    for t in range(entries.shape[0]):
        e = entries[t]
        if e < 0 or tags[e] == epoch:
            continue
        tags[e] = epoch
        d = _vdist(vecs, e, q, metric)
        csize = _hpush(cd, ci, csize, d, e)
        if rsize < ef:
            rsize = _hpush(rd, ri, rsize, -d, e)
        elif d < -rd[0]:
            rsize = _hpop(rd, ri, rsize)
            rsize = _hpush(rd, ri, rsize, -d, e)
    while csize > 0:
        d = cd[0]
        u = ci[0]
        csize = _hpop(cd, ci, csize)
        if rsize == ef and d > -rd[0]:
            break
        base = _block_start(offsets, cap0, cap_u, u, layer)
        for idx in range(deg[u, layer]):
            v = adj[base + idx]
            if tags[v] == epoch:
                continue
            tags[v] = epoch
            dv = _vdist(vecs, v, q, metric)
            if rsize < ef or dv < -rd[0]:
                if csize >= cd.shape[0]:
                    nd = np.empty(cd.shape[0] * 2, dtype=np.float64)
                    ni = np.empty(cd.shape[0] * 2, dtype=np.int64)
                    nd[:csize] = cd[:csize]
                    ni[:csize] = ci[:csize]
                    cd = nd
                    ci = ni
                csize = _hpush(cd, ci, csize, dv, v)
                if rsize < ef:
                    rsize = _hpush(rd, ri, rsize, -dv, v)
                else:
                    rsize = _hpop(rd, ri, rsize)
                    rsize = _hpush(rd, ri, rsize, -dv, v)
    out_d = np.empty(rsize, dtype=np.float64)
    out_i = np.empty(rsize, dtype=np.int64)
    for t in range(rsize - 1, -1, -1):
        out_d[t] = -rd[0]
        out_i[t] = ri[0]
        rsize = _hpop(rd, ri, rsize)
    return out_i, out_d


@njit(cache=True)
def layered_build(
    vecs,
    levels,
    offsets,
    adj,
    deg,
    cap0,
    cap_u,
    keep_m,
    select_m0,
    select_mu,
    diversify,
    ef_construction,
    metric,
):
    """Sequential insertion build of the hierarchical small-world graph.

    `select_m0` / `select_mu` bound how many neighbors a fresh node links
    to at layer 0 / upper layers; `cap0` / `cap_u` bound stored degree once
    back-edges arrive. Returns the entry point id.
    """
    n = vecs.shape[0]
    entry = 0
    top = levels[0]
    sel_buf = np.empty(cap0 + 1, dtype=np.int64)
    ent1 = np.empty(1, dtype=np.int64)
    tags = np.zeros(n, dtype=np.int64)
    epoch = 0
    for i in range(1, n):
        lvl = levels[i]
        q = vecs[i]
        ent1[0] = entry
        cur_entries = ent1
        layer = top
        while layer > lvl:
            epoch += 1
            ids, _ = _search_build_layer(
                vecs, metric, adj, offsets, deg, cap0, cap_u, layer, cur_entries, 1, q,
                tags, epoch,
            )
            if ids.shape[0] > 0:
                ent1[0] = ids[0]
            cur_entries = ent1
            layer -= 1
        layer = min(lvl, top)
        while layer >= 0:
            epoch += 1
            cand_ids, cand_d = _search_build_layer(
                vecs, metric, adj, offsets, deg, cap0, cap_u, layer,
                cur_entries, ef_construction, q, tags, epoch,
            )
            cap = cap0 if layer == 0 else cap_u
            target = select_m0 if layer == 0 else select_mu
            cnt = _select_neighbors(vecs, metric, cand_ids, cand_d, keep_m, target, diversify, sel_buf)
            base_i = _block_start(offsets, cap0, cap_u, i, layer)
            for t in range(cnt):
                adj[base_i + t] = sel_buf[t]
            deg[i, layer] = cnt
            # back edges with bounded degree
            for t in range(cnt):
                s = sel_buf[t]
                base_s = _block_start(offsets, cap0, cap_u, s, layer)
                ds = deg[s, layer]
                if ds < cap:
                    adj[base_s + ds] = i
                    deg[s, layer] = ds + 1
                else:
                    _reselect_overflow(
                        vecs, metric, adj, deg, base_s, s, i, layer, cap,
                        keep_m, diversify,
                    )
            cur_entries = cand_ids
            layer -= 1
        if lvl > top:
            top = lvl
            entry = i
    return entry


@njit(cache=True)
def _reselect_overflow(vecs, metric, adj, deg, base_s, s, newcomer, layer, cap, keep_m, diversify):
    """Re-pick `cap` neighbors of s from its current list plus the newcomer."""
    m = cap + 1
    ids = np.empty(m, dtype=np.int64)
    dists = np.empty(m, dtype=np.float64)
    for t in range(cap):
        ids[t] = adj[base_s + t]
        dists[t] = _pair_dist(vecs, s, adj[base_s + t], metric)
    ids[cap] = newcomer
    dists[cap] = _pair_dist(vecs, s, newcomer, metric)
    ids, dists = _sort_by_dist_then_id(ids, dists)
    out = np.empty(cap, dtype=np.int64)
    cnt = _select_neighbors(vecs, metric, ids, dists, keep_m, cap, diversify, out)
    for t in range(cnt):
        adj[base_s + t] = out[t]
    deg[s, layer] = cnt


# ---------------------------------------------------------------------------
# Vamana build (single flat layer, bounded degree R)


@njit(cache=True)
def _collect_candidates(
    vecs, metric, adj, deg, q, entries, beam, gate, qlabels, lab_indptr, lab_ids,
    tags, epoch,
):
    """Greedy beam returning every expanded node (the insertion path).

    With `gate`, only nodes overlapping `qlabels` are pushed (entries are
    exempt), mirroring label-aware candidate collection.
    """
    cd = np.empty(1024, dtype=np.float64)
    ci = np.empty(1024, dtype=np.int64)
    csize = 0
    rd = np.empty(beam, dtype=np.float64)
    ri = np.empty(beam, dtype=np.int64)
    rsize = 0
    vis_cap = 2048
    vis_ids = np.empty(vis_cap, dtype=np.int64)
    vis_d = np.empty(vis_cap, dtype=np.float64)
    vis_n = 0
    for t in range(entries.shape[0]):
        e = entries[t]
        if e < 0 or tags[e] == epoch:
            continue
        tags[e] = epoch
        d = _vdist(vecs, e, q, metric)
        csize = _hpush(cd, ci, csize, d, e)
        if rsize < beam:
            rsize = _hpush(rd, ri, rsize, -d, e)
        elif d < -rd[0]:
            rsize = _hpop(rd, ri, rsize)
            rsize = _hpush(rd, ri, rsize, -d, e)
    while csize > 0:
        d = cd[0]
        u = ci[0]
        csize = _hpop(cd, ci, csize)
        if rsize == beam and d > -rd[0]:
            break
        if vis_n >= vis_ids.shape[0]:
            ni = np.empty(vis_ids.shape[0] * 2, dtype=np.int64)
            ndist = np.empty(vis_ids.shape[0] * 2, dtype=np.float64)
            ni[:vis_n] = vis_ids[:vis_n]
            ndist[:vis_n] = vis_d[:vis_n]
            vis_ids = ni
            vis_d = ndist
        vis_ids[vis_n] = u
        vis_d[vis_n] = d
        vis_n += 1
        for idx in range(deg[u]):
            v = adj[u, idx]
            if tags[v] == epoch:
                continue
            tags[v] = epoch
            if gate and not _labels_overlap_query(lab_indptr, lab_ids, v, qlabels):
                continue
            dv = _vdist(vecs, v, q, metric)
            if rsize < beam or dv < -rd[0]:
                if csize >= cd.shape[0]:
                    nd = np.empty(cd.shape[0] * 2, dtype=np.float64)
                    nci = np.empty(cd.shape[0] * 2, dtype=np.int64)
                    nd[:csize] = cd[:csize]
                    nci[:csize] = ci[:csize]
                    cd = nd
                    ci = nci
                csize = _hpush(cd, ci, csize, dv, v)
                if rsize < beam:
                    rsize = _hpush(rd, ri, rsize, -dv, v)
                else:
                    rsize = _hpop(rd, ri, rsize)
                    rsize = _hpush(rd, ri, rsize, -dv, v)
    return vis_ids[:vis_n], vis_d[:vis_n]


@njit(cache=True)
def vamana_build(
    vecs,
    node_ids,
    ent_indptr,
    ent_ids,
    adj,
    deg,
    r_target,
    l_build,
    alpha,
    metric,
    gate,
    use_label_prune,
    lab_indptr,
    lab_ids,
):
    """Insert `node_ids` one by one: search, alpha-prune, add back edges.

    `ent_indptr`/`ent_ids` give per-node entry points (medoid, or one
    medoid per label for the label-aware variant). Adjacency rows are
    bounded by `r_target`; overflowing back edges trigger a re-prune.
    """
    tmp_ids = np.empty(r_target + 1, dtype=np.int64)
    tmp_d = np.empty(r_target + 1, dtype=np.float64)
    tags = np.zeros(vecs.shape[0], dtype=np.int64)
    for t in range(node_ids.shape[0]):
        i = node_ids[t]
        entries = ent_ids[ent_indptr[t] : ent_indptr[t + 1]]
        qlabels = lab_ids[lab_indptr[i] : lab_indptr[i + 1]] if gate else lab_ids[:0]
        cand_ids, cand_d = _collect_candidates(
            vecs, metric, adj, deg, vecs[i], entries, l_build, gate, qlabels,
            lab_indptr, lab_ids, tags, t + 1,
        )
        kept = robust_prune(
            vecs, i, cand_ids, cand_d, alpha, r_target, metric,
            lab_indptr, lab_ids, use_label_prune,
        )
        for s in range(kept.shape[0]):
            adj[i, s] = kept[s]
        deg[i] = kept.shape[0]
        for s in range(kept.shape[0]):
            nb = kept[s]
            already = False
            for x in range(deg[nb]):
                if adj[nb, x] == i:
                    already = True
                    break
            if already:
                continue
            if deg[nb] < r_target:
                adj[nb, deg[nb]] = i
                deg[nb] += 1
            else:
                for x in range(r_target):
                    tmp_ids[x] = adj[nb, x]
                    tmp_d[x] = _pair_dist(vecs, nb, adj[nb, x], metric)
                tmp_ids[r_target] = i
                tmp_d[r_target] = _pair_dist(vecs, nb, i, metric)
                kept2 = robust_prune(
                    vecs, nb, tmp_ids, tmp_d, alpha, r_target, metric,
                    lab_indptr, lab_ids, use_label_prune,
                )
                for x in range(kept2.shape[0]):
                    adj[nb, x] = kept2[x]
                deg[nb] = kept2.shape[0]


# ---------------------------------------------------------------------------
# NN-descent approximate K-NN graph


@njit(cache=True)
def nn_descent(vecs, metric, labmat, lam, init_ids, iters):
    """Full local-join NN-descent from a random initial K-NN guess.

    Neighbor lists are max-heaps keyed by distance so improvements are
    monotone; `flags` mark fresh entries for the incremental join.
    """
    n, K = init_ids.shape
    nbr_i = np.empty((n, K), dtype=np.int64)
    nbr_d = np.empty((n, K), dtype=np.float64)
    is_new = np.ones((n, K), dtype=np.uint8)
    qlab_dummy = labmat[0] if labmat.shape[0] > 0 else np.empty(0, dtype=labmat.dtype)
    for i in range(n):
        for t in range(K):
            j = init_ids[i, t]
            d = _query_dist(vecs, j, vecs[i], metric, labmat, labmat[i] if lam > 0 else qlab_dummy, lam)
            nbr_i[i, t] = j
            nbr_d[i, t] = d
        _heapify_row(nbr_d[i], nbr_i[i], is_new[i], K)

    rev_cap = K
    for it in range(iters):
        rev_ids = np.full((n, rev_cap), -1, dtype=np.int64)
        rev_cnt = np.zeros(n, dtype=np.int64)
        for i in range(n):
            for t in range(K):
                j = nbr_i[i, t]
                if rev_cnt[j] < rev_cap:
                    rev_ids[j, rev_cnt[j]] = i
                    rev_cnt[j] += 1
        updates = 0
        for i in range(n):
            pool = np.empty(K + rev_cap, dtype=np.int64)
            fresh = np.empty(K + rev_cap, dtype=np.uint8)
            pn = 0
            for t in range(K):
                pool[pn] = nbr_i[i, t]
                fresh[pn] = is_new[i, t]
                is_new[i, t] = 0
                pn += 1
            for t in range(rev_cnt[i]):
                pool[pn] = rev_ids[i, t]
                fresh[pn] = 1
                pn += 1
            for a in range(pn):
                for b in range(a + 1, pn):
                    if fresh[a] == 0 and fresh[b] == 0:
                        continue
                    u = pool[a]
                    v = pool[b]
                    if u == v:
                        continue
                    d = _query_dist(
                        vecs, v, vecs[u], metric, labmat,
                        labmat[u] if lam > 0 else qlab_dummy, lam,
                    )
                    updates += _heap_update(nbr_d[u], nbr_i[u], is_new[u], K, d, v)
                    updates += _heap_update(nbr_d[v], nbr_i[v], is_new[v], K, d, u)
        if updates == 0:
            break
    return nbr_i, nbr_d


@njit(inline="always")
def _heapify_row(dists, ids, flags, K):
    # max-heap on dists
    for s in range(1, K):
        c = s
        while c > 0:
            p = (c - 1) >> 1
            if dists[p] >= dists[c]:
                break
            dists[p], dists[c] = dists[c], dists[p]
            ids[p], ids[c] = ids[c], ids[p]
            flags[p], flags[c] = flags[c], flags[p]
            c = p


@njit(inline="always")
def _heap_update(dists, ids, flags, K, d, j):
    if d >= dists[0]:
        return 0
    for t in range(K):
        if ids[t] == j:
            return 0
    dists[0] = d
    ids[0] = j
    flags[0] = 1
    c = 0
    while True:
        l = 2 * c + 1
        if l >= K:
            break
        r = l + 1
        m = l
        if r < K and dists[r] > dists[l]:
            m = r
        if dists[c] >= dists[m]:
            break
        dists[c], dists[m] = dists[m], dists[c]
        ids[c], ids[m] = ids[m], ids[c]
        flags[c], flags[m] = flags[m], flags[c]
        c = m
    return 1
