# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Semantics must stay bit-identical to ``_pure``: same seed orders, same
tie-breaks, same floating-point expressions (the build disables FP
contraction so the arithmetic matches numpy's).
"""

import numpy as np


# ---------------------------------------------------------------------------
# 4-connected components under edgel barriers


def barrier_labels(block_h, block_v):
    bh = np.ascontiguousarray(block_h, dtype=np.uint8)
    bv = np.ascontiguousarray(block_v, dtype=np.uint8)
    cdef Py_ssize_t H = bh.shape[0]
    cdef Py_ssize_t W = bv.shape[1]
    out = np.full((H, W), -1, dtype=np.int32)
    cdef unsigned char[:, ::1] mh = bh
    cdef unsigned char[:, ::1] mv = bv
    cdef int[:, ::1] lab = out
    stack_arr = np.empty(H * W, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t r, c, p, top
    cdef int next_label = 0
    for p in range(H * W):
        if lab[p // W, p % W] >= 0:
            continue
        lab[p // W, p % W] = next_label
        stack[0] = p
        top = 1
        while top > 0:
            top -= 1
            r = stack[top] // W
            c = stack[top] % W
            if r > 0 and lab[r - 1, c] < 0 and not mv[r - 1, c]:
                lab[r - 1, c] = next_label
                stack[top] = (r - 1) * W + c
                top += 1
            if c > 0 and lab[r, c - 1] < 0 and not mh[r, c - 1]:
                lab[r, c - 1] = next_label
                stack[top] = r * W + c - 1
                top += 1
            if c + 1 < W and lab[r, c + 1] < 0 and not mh[r, c]:
                lab[r, c + 1] = next_label
                stack[top] = r * W + c + 1
                top += 1
            if r + 1 < H and lab[r + 1, c] < 0 and not mv[r, c]:
                lab[r + 1, c] = next_label
                stack[top] = (r + 1) * W + c
                top += 1
        next_label += 1
    return out


# ---------------------------------------------------------------------------
# Watershed flooding

cdef inline bint _less(double va, long long ca, double vb, long long cb) noexcept:
    if va != vb:
        return va < vb
    return ca < cb


cdef void _heap_push(double[::1] hv, long long[::1] hc, long long[::1] hp,
                     Py_ssize_t* size, double v, long long cnt, long long pix) noexcept:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    hv[i] = v
    hc[i] = cnt
    hp[i] = pix
    size[0] += 1
    while i > 0:
        parent = (i - 1) // 2
        if _less(hv[i], hc[i], hv[parent], hc[parent]):
            hv[i], hv[parent] = hv[parent], hv[i]
            hc[i], hc[parent] = hc[parent], hc[i]
            hp[i], hp[parent] = hp[parent], hp[i]
            i = parent
        else:
            break


cdef long long _heap_pop(double[::1] hv, long long[::1] hc, long long[::1] hp,
                         Py_ssize_t* size) noexcept:
    cdef long long pix = hp[0]
    cdef Py_ssize_t n = size[0] - 1
    cdef Py_ssize_t i = 0, child
    size[0] = n
    hv[0] = hv[n]
    hc[0] = hc[n]
    hp[0] = hp[n]
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _less(hv[child + 1], hc[child + 1], hv[child], hc[child]):
            child += 1
        if _less(hv[child], hc[child], hv[i], hc[i]):
            hv[i], hv[child] = hv[child], hv[i]
            hc[i], hc[child] = hc[child], hc[i]
            hp[i], hp[child] = hp[child], hp[i]
            i = child
        else:
            break
    return pix


def watershed_labels(values):
    v_arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t H = v_arr.shape[0]
    cdef Py_ssize_t W = v_arr.shape[1]
    cdef Py_ssize_t N = H * W
    cdef double[:, ::1] v = v_arr

    # plateaus: components of equal-valued 4-neighbors
    plat_arr = np.full((H, W), -1, dtype=np.int32)
    cdef int[:, ::1] plat = plat_arr
    stack_arr = np.empty(N, dtype=np.int64)
    cdef long long[::1] stack = stack_arr
    cdef Py_ssize_t p, r, c, top
    cdef int n_plat = 0
    for p in range(N):
        if plat[p // W, p % W] >= 0:
            continue
        plat[p // W, p % W] = n_plat
        stack[0] = p
        top = 1
        while top > 0:
            top -= 1
            r = stack[top] // W
            c = stack[top] % W
            if r > 0 and plat[r - 1, c] < 0 and v[r - 1, c] == v[r, c]:
                plat[r - 1, c] = n_plat
                stack[top] = (r - 1) * W + c
                top += 1
            if c > 0 and plat[r, c - 1] < 0 and v[r, c - 1] == v[r, c]:
                plat[r, c - 1] = n_plat
                stack[top] = r * W + c - 1
                top += 1
            if c + 1 < W and plat[r, c + 1] < 0 and v[r, c + 1] == v[r, c]:
                plat[r, c + 1] = n_plat
                stack[top] = r * W + c + 1
                top += 1
            if r + 1 < H and plat[r + 1, c] < 0 and v[r + 1, c] == v[r, c]:
                plat[r + 1, c] = n_plat
                stack[top] = (r + 1) * W + c
                top += 1
        n_plat += 1

    not_min_arr = np.zeros(n_plat, dtype=np.uint8)
    cdef unsigned char[::1] not_min = not_min_arr
    for r in range(H):
        for c in range(W):
            if r > 0 and v[r - 1, c] < v[r, c]:
                not_min[plat[r, c]] = 1
            elif c > 0 and v[r, c - 1] < v[r, c]:
                not_min[plat[r, c]] = 1
            elif c + 1 < W and v[r, c + 1] < v[r, c]:
                not_min[plat[r, c]] = 1
            elif r + 1 < H and v[r + 1, c] < v[r, c]:
                not_min[plat[r, c]] = 1

    seed_arr = np.full(n_plat, -1, dtype=np.int32)
    cdef int[::1] seed_id = seed_arr
    cdef int k
    cdef int n_seeds = 0
    for k in range(n_plat):
        if not not_min[k]:
            seed_id[k] = n_seeds
            n_seeds += 1

    labels_arr = np.full((H, W), -1, dtype=np.int32)
    cdef int[:, ::1] labels = labels_arr
    hv_arr = np.empty(N, dtype=np.float64)
    hc_arr = np.empty(N, dtype=np.int64)
    hp_arr = np.empty(N, dtype=np.int64)
    cdef double[::1] hv = hv_arr
    cdef long long[::1] hc = hc_arr
    cdef long long[::1] hp = hp_arr
    cdef Py_ssize_t heap_size = 0
    cdef long long counter = 0
    for p in range(N):
        r = p // W
        c = p % W
        if seed_id[plat[r, c]] >= 0:
            labels[r, c] = seed_id[plat[r, c]]
            _heap_push(hv, hc, hp, &heap_size, v[r, c], counter, p)
            counter += 1

    cdef int lab
    while heap_size > 0:
        p = _heap_pop(hv, hc, hp, &heap_size)
        r = p // W
        c = p % W
        lab = labels[r, c]
        if r > 0 and labels[r - 1, c] < 0:
            labels[r - 1, c] = lab
            _heap_push(hv, hc, hp, &heap_size, v[r - 1, c], counter, p - W)
            counter += 1
        if c > 0 and labels[r, c - 1] < 0:
            labels[r, c - 1] = lab
            _heap_push(hv, hc, hp, &heap_size, v[r, c - 1], counter, p - 1)
            counter += 1
        if c + 1 < W and labels[r, c + 1] < 0:
            labels[r, c + 1] = lab
            _heap_push(hv, hc, hp, &heap_size, v[r, c + 1], counter, p + 1)
            counter += 1
        if r + 1 < H and labels[r + 1, c] < 0:
            labels[r + 1, c] = lab
            _heap_push(hv, hc, hp, &heap_size, v[r + 1, c], counter, p + W)
            counter += 1
    return labels_arr


# ---------------------------------------------------------------------------
# Dense-representation merge loop


def dense_merge_loop(labels, eh, ev):
    L_arr = np.ascontiguousarray(labels, dtype=np.int64)
    eh_arr = np.ascontiguousarray(eh, dtype=np.float64).copy()
    ev_arr = np.ascontiguousarray(ev, dtype=np.float64).copy()
    cdef Py_ssize_t H = L_arr.shape[0]
    cdef Py_ssize_t W = L_arr.shape[1]
    cdef long long R0 = <long long>L_arr.max() + 1
    if R0 > 4096:
        raise ValueError("dense merge loop supports at most 4096 initial regions")
    L_arr = L_arr.copy()
    cdef long long[:, ::1] L = L_arr
    cdef double[:, ::1] mh = eh_arr
    cdef double[:, ::1] mv = ev_arr

    pair_val_arr = np.zeros(R0 * R0, dtype=np.float64)
    pair_cnt_arr = np.zeros(R0 * R0, dtype=np.int64)
    keys_arr = np.empty(4 * R0 + 8, dtype=np.int64)
    cdef double[::1] pair_val = pair_val_arr
    cdef long long[::1] pair_cnt = pair_cnt_arr
    cdef long long[::1] tkeys = keys_arr
    side_val_arr = np.zeros((2, R0), dtype=np.float64)
    side_cnt_arr = np.zeros((2, R0), dtype=np.int64)
    side_mark_arr = np.full((2, R0), -1, dtype=np.int64)
    comb_val_arr = np.zeros(R0, dtype=np.float64)
    comb_mark_arr = np.full(R0, -1, dtype=np.int64)
    cdef double[:, ::1] side_val = side_val_arr
    cdef long long[:, ::1] side_cnt = side_cnt_arr
    cdef long long[:, ::1] side_mark = side_mark_arr
    cdef double[::1] comb_val = comb_val_arr
    cdef long long[::1] comb_mark = comb_mark_arr

    ts_arr = np.empty(R0 - 1, dtype=np.float64)
    aa_arr = np.empty(R0 - 1, dtype=np.int32)
    bb_arr = np.empty(R0 - 1, dtype=np.int32)
    cdef double[::1] ts = ts_arr
    cdef int[::1] aa = aa_arr
    cdef int[::1] bb = bb_arr

    cdef long long sweep_find = H * (W - 1) + (H - 1) * W
    cdef long long sweep_edit = sweep_find + H * W
    cdef long long touched = 0
    cdef long long regions = R0
    cdef long long stamp = 0
    cdef double prev_t = 0.0
    cdef Py_ssize_t r, c, i, n_merges = 0
    cdef Py_ssize_t nkeys
    cdef long long a, b, key, best_key, A, B, C, other, n_a, n_b
    cdef double val, best_val, t, s_a, s_b

    while regions > 1:
        # find-min sweep over every edgel cell
        touched += sweep_find
        nkeys = 0
        for r in range(H):
            for c in range(W - 1):
                val = mh[r, c]
                if val > 0:
                    a = L[r, c]
                    b = L[r, c + 1]
                    key = a * R0 + b if a < b else b * R0 + a
                    if pair_cnt[key] == 0:
                        tkeys[nkeys] = key
                        nkeys += 1
                        pair_val[key] = val
                    pair_cnt[key] += 1
        for r in range(H - 1):
            for c in range(W):
                val = mv[r, c]
                if val > 0:
                    a = L[r, c]
                    b = L[r + 1, c]
                    key = a * R0 + b if a < b else b * R0 + a
                    if pair_cnt[key] == 0:
                        tkeys[nkeys] = key
                        nkeys += 1
                        pair_val[key] = val
                    pair_cnt[key] += 1

        best_key = -1
        best_val = 0.0
        for i in range(nkeys):
            key = tkeys[i]
            val = pair_val[key]
            if best_key < 0 or val < best_val or (val == best_val and key < best_key):
                best_key = key
                best_val = val
        A = best_key // R0
        B = best_key % R0
        t = best_val if best_val > prev_t else prev_t

        # neighbors of A and B, then recombined strengths
        for i in range(nkeys):
            key = tkeys[i]
            if key == best_key:
                continue
            a = key // R0
            b = key % R0
            if a == A or b == A:
                other = b if a == A else a
                side_val[0, other] = pair_val[key]
                side_cnt[0, other] = pair_cnt[key]
                side_mark[0, other] = stamp
            if a == B or b == B:
                other = b if a == B else a
                side_val[1, other] = pair_val[key]
                side_cnt[1, other] = pair_cnt[key]
                side_mark[1, other] = stamp
        for i in range(nkeys):
            key = tkeys[i]
            a = key // R0
            b = key % R0
            if a == B or b == B:
                other = b if a == B else a
                if other != A and side_mark[0, other] == stamp:
                    s_a = side_val[0, other]
                    n_a = side_cnt[0, other]
                    s_b = side_val[1, other]
                    n_b = side_cnt[1, other]
                    comb_val[other] = (n_a * s_a + n_b * s_b) / (n_a + n_b)
                    comb_mark[other] = stamp

        # edit sweep: relabel pixels, erase the merged pair, re-render combined
        touched += sweep_edit
        for r in range(H):
            for c in range(W):
                if L[r, c] == B:
                    L[r, c] = A
        for r in range(H):
            for c in range(W - 1):
                if mh[r, c] > 0:
                    a = L[r, c]
                    b = L[r, c + 1]
                    if a == b:
                        mh[r, c] = 0.0
                    elif a == A or b == A:
                        other = b if a == A else a
                        if comb_mark[other] == stamp:
                            mh[r, c] = comb_val[other]
        for r in range(H - 1):
            for c in range(W):
                if mv[r, c] > 0:
                    a = L[r, c]
                    b = L[r + 1, c]
                    if a == b:
                        mv[r, c] = 0.0
                    elif a == A or b == A:
                        other = b if a == A else a
                        if comb_mark[other] == stamp:
                            mv[r, c] = comb_val[other]

        for i in range(nkeys):
            pair_cnt[tkeys[i]] = 0
        ts[n_merges] = t
        aa[n_merges] = <int>A
        bb[n_merges] = <int>B
        n_merges += 1
        prev_t = t
        stamp += 1
        regions -= 1

    return ts_arr, aa_arr, bb_arr, touched
