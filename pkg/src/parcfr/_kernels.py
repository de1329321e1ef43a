"""Compiled stage kernels over flat tree tables.

Every kernel partitions its output so that each slot (node buffer row,
infoset table block) is written by exactly one parallel work item; no
cross-worker accumulation exists anywhere.  Parallel runs are therefore
bitwise deterministic and independent of the worker count.

Node kind codes: 0 decision, 1 chance, 2 fold terminal, 3 showdown
terminal, 4 depth-limited leaf.  Regret-variant codes: 0 vanilla, 1 CFR+,
2 DCFR, 3 PCFR+.  ``c2[h] < 0`` marks one-card hands.
"""

import numpy as np
from numba import njit, prange

KIND_DECISION = 0
KIND_CHANCE = 1
KIND_FOLD = 2
KIND_SHOWDOWN = 3
KIND_LEAF = 4

VARIANT_ID = {"vanilla": 0, "cfr_plus": 1, "dcfr": 2, "pcfr_plus": 3}

_JIT = dict(cache=True, nogil=True)


@njit(parallel=True, **_JIT)
def s1_forward(ch_off, ch_nodes, ch_player, traverser, scale, R, masks,
               mask_id, plink_node, plink_aidx, kind, actor, strategy,
               cum_strategy, tab_off, n_act, class_map_id, class_of,
               n_class_of_map):
    H = R.shape[2]
    for ci in prange(ch_player.shape[0]):
        p = ch_player[ci]
        accum = p != traverser
        for idx in range(ch_off[ci], ch_off[ci + 1]):
            n = ch_nodes[idx]
            pl = plink_node[p, n]
            if pl >= 0:
                a = plink_aidx[p, n]
                base = tab_off[pl]
                A = n_act[pl]
                cm = class_map_id[pl]
                mrow = mask_id[n]
                for h in range(H):
                    sig = strategy[base + class_of[cm, h] * A + a]
                    R[p, n, h] = R[p, pl, h] * sig * masks[mrow, h]
            if accum and kind[n] == KIND_DECISION and actor[n] == p:
                base = tab_off[n]
                A = n_act[n]
                cm = class_map_id[n]
                nc = n_class_of_map[cm]
                for row in range(nc * A):
                    cum_strategy[base + row] *= scale
                for h in range(H):
                    w = R[p, n, h]
                    c = class_of[cm, h]
                    for a2 in range(A):
                        cum_strategy[base + c * A + a2] += \
                            w * strategy[base + c * A + a2]


@njit(parallel=True, **_JIT)
def s2_aggregates(agg_nodes, R, opp, c1, c2, agg_sum, agg_card):
    H = R.shape[2]
    deck = agg_card.shape[1]
    for i in prange(agg_nodes.shape[0]):
        n = agg_nodes[i]
        for c in range(deck):
            agg_card[n, c] = 0.0
        s = 0.0
        for h in range(H):
            v = R[opp, n, h]
            s += v
            agg_card[n, c1[h]] += v
            if c2[h] >= 0:
                agg_card[n, c2[h]] += v
        agg_sum[n] = s


@njit(parallel=True, **_JIT)
def s2_leaf_inputs(leaf_nodes, lb_off, lb_cards, R, pot, pot_scale,
                   deck_size, X):
    H = R.shape[2]
    for i in prange(leaf_nodes.shape[0]):
        n = leaf_nodes[i]
        for j in range(X.shape[1]):
            X[i, j] = 0.0
        for bi in range(lb_off[i], lb_off[i + 1]):
            X[i, lb_cards[bi]] = 1.0
        X[i, deck_size] = pot[n] / pot_scale
        for p in range(2):
            s = 0.0
            for h in range(H):
                s += R[p, n, h]
            off = deck_size + 1 + p * H
            if s > 0.0:
                for h in range(H):
                    X[i, off + h] = R[p, n, h] / s


@njit(parallel=True, **_JIT)
def s3_folds(fold_nodes, R, opp, c1, c2, agg_sum, agg_card, fold_amount,
             folder, chance_scale, masks, mask_id, V):
    H = R.shape[2]
    for i in prange(fold_nodes.shape[0]):
        n = fold_nodes[i]
        sgn = 1.0 if folder[n] == opp else -1.0
        amt = sgn * fold_amount[n] * chance_scale[n]
        mrow = mask_id[n]
        for h in range(H):
            cf = agg_sum[n] - agg_card[n, c1[h]]
            if c2[h] >= 0:
                cf += -agg_card[n, c2[h]] + R[opp, n, h]
            V[n, h] = amt * cf * masks[mrow, h]


@njit(parallel=True, **_JIT)
def s3_leaf_reach(leaf_nodes, R, opp, c1, c2, agg_sum, agg_card, masks,
                  mask_id, leaf_cf):
    H = R.shape[2]
    for i in prange(leaf_nodes.shape[0]):
        n = leaf_nodes[i]
        mrow = mask_id[n]
        for h in range(H):
            cf = agg_sum[n] - agg_card[n, c1[h]]
            if c2[h] >= 0:
                cf += -agg_card[n, c2[h]] + R[opp, n, h]
            leaf_cf[i, h] = cf * masks[mrow, h]


@njit(parallel=True, **_JIT)
def s4_showdown(sd_nodes, sd_rank, rk_sorted, rk_sort_off, rk_bounds,
                rk_bounds_off, R, opp, c1, c2, agg_sum, agg_card, pot,
                chance_scale, masks, mask_id, V, deck_size):
    H = R.shape[2]
    for i in prange(sd_nodes.shape[0]):
        n = sd_nodes[i]
        rid = sd_rank[i]
        for h in range(H):
            V[n, h] = 0.0
        half = 0.5 * pot[n] * chance_scale[n]
        mrow = mask_id[n]
        so = rk_sort_off[rid]
        bo = rk_bounds_off[rid]
        be = rk_bounds_off[rid + 1]
        below = 0.0
        cb = np.zeros(deck_size, np.float64)
        gc = np.zeros(deck_size, np.float64)
        for g in range(bo, be - 1):
            gs = so + rk_bounds[g]
            ge = so + rk_bounds[g + 1]
            gsum = 0.0
            for idx in range(gs, ge):
                h = rk_sorted[idx]
                v = R[opp, n, h]
                gsum += v
                gc[c1[h]] += v
                if c2[h] >= 0:
                    gc[c2[h]] += v
            for idx in range(gs, ge):
                h = rk_sorted[idx]
                v = R[opp, n, h]
                w = below - cb[c1[h]]
                t = gsum - gc[c1[h]]
                tot = agg_sum[n] - agg_card[n, c1[h]]
                if c2[h] >= 0:
                    w -= cb[c2[h]]
                    t += -gc[c2[h]] + v
                    tot += -agg_card[n, c2[h]] + v
                V[n, h] = half * (w - (tot - w - t)) * masks[mrow, h]
            for idx in range(gs, ge):
                h = rk_sorted[idx]
                v = R[opp, n, h]
                below += v
                cb[c1[h]] += v
                gc[c1[h]] = 0.0
                if c2[h] >= 0:
                    cb[c2[h]] += v
                    gc[c2[h]] = 0.0


@njit(parallel=True, **_JIT)
def s6_leaf_values(leaf_nodes, leaf_cf, Vhat, chance_scale, traverser, V):
    H = V.shape[1]
    off = traverser * H
    for i in prange(leaf_nodes.shape[0]):
        n = leaf_nodes[i]
        cs = chance_scale[n]
        for h in range(H):
            V[n, h] = Vhat[i, off + h] * leaf_cf[i, h] * cs


@njit(parallel=True, **_JIT)
def s6_level(nodes, kind, actor, traverser, child_off, child, V, strategy,
             tab_off, n_act, class_map_id, class_of):
    H = V.shape[1]
    for i in prange(nodes.shape[0]):
        n = nodes[i]
        if kind[n] == KIND_DECISION and actor[n] == traverser:
            base = tab_off[n]
            A = n_act[n]
            cm = class_map_id[n]
            co = child_off[n]
            for h in range(H):
                acc = 0.0
                c = class_of[cm, h]
                for a in range(A):
                    acc += strategy[base + c * A + a] * V[child[co + a], h]
                V[n, h] = acc
        elif kind[n] == KIND_DECISION or kind[n] == KIND_CHANCE:
            for h in range(H):
                acc = 0.0
                for ci in range(child_off[n], child_off[n + 1]):
                    acc += V[child[ci], h]
                V[n, h] = acc


@njit(parallel=True, **_JIT)
def s7_update(dec_nodes, V, child_off, child, tab_off, n_act, class_map_id,
              class_of, n_class_of_map, cum_regret, pred, strategy,
              variant_id, fpos, fneg):
    H = V.shape[1]
    for i in prange(dec_nodes.shape[0]):
        n = dec_nodes[i]
        base = tab_off[n]
        A = n_act[n]
        cm = class_map_id[n]
        nc = n_class_of_map[cm]
        if variant_id == 2:
            for row in range(nc * A):
                x = cum_regret[base + row]
                cum_regret[base + row] = x * fpos if x > 0.0 else x * fneg
        for row in range(nc * A):
            pred[base + row] = 0.0
        co = child_off[n]
        for h in range(H):
            v0 = V[n, h]
            c = class_of[cm, h]
            for a in range(A):
                pred[base + c * A + a] += V[child[co + a], h] - v0
        for rc in range(nc):
            rb = base + rc * A
            if variant_id == 0 or variant_id == 2:
                for a in range(A):
                    cum_regret[rb + a] += pred[rb + a]
            else:
                for a in range(A):
                    x = cum_regret[rb + a] + pred[rb + a]
                    cum_regret[rb + a] = x if x > 0.0 else 0.0
            ssum = 0.0
            tsum = 0.0
            for a in range(A):
                x = cum_regret[rb + a]
                if variant_id == 3:
                    x += pred[rb + a]
                if x > 0.0:
                    ssum += x
                tsum += abs(x)
            # thresholds mirror cfr_variants.RM_UNIFORM_EPS: rows whose
            # positive mass is rounding residue fall back to uniform
            if ssum > 1e-12 * tsum and tsum > 1e-12:
                for a in range(A):
                    x = cum_regret[rb + a]
                    if variant_id == 3:
                        x += pred[rb + a]
                    strategy[rb + a] = x / ssum if x > 0.0 else 0.0
            else:
                u = 1.0 / A
                for a in range(A):
                    strategy[rb + a] = u


@njit(parallel=True, **_JIT)
def ie_rows(q, c1, c2, deck_size):
    m, H = q.shape
    out = np.zeros((m, H))
    for i in prange(m):
        card = np.zeros(deck_size, np.float64)
        s = 0.0
        for h in range(H):
            v = q[i, h]
            s += v
            card[c1[h]] += v
            if c2[h] >= 0:
                card[c2[h]] += v
        for h in range(H):
            cf = s - card[c1[h]]
            if c2[h] >= 0:
                cf += -card[c2[h]] + q[i, h]
            out[i, h] = cf
    return out


@njit(parallel=True, **_JIT)
def equity_accumulate(q_opp, half_pots, fb_mask, rk_sorted, rk_sort_off,
                      rk_bounds, rk_bounds_off, c1, c2, deck_size):
    """Sum of masked showdown scans over all future-board completions.

    Row i of the result is Sum_fb mask_fb(h) * scan(q_opp[i] * mask_fb)
    evaluated with completion fb's hand ranking, scaled by half_pots[i].
    """
    m, H = q_opp.shape
    n_fb = fb_mask.shape[0]
    w = np.zeros((m, H))
    for i in prange(m):
        s = np.empty(H, np.float64)
        cb = np.zeros(deck_size, np.float64)
        gc = np.zeros(deck_size, np.float64)
        tot_card = np.zeros(deck_size, np.float64)
        for f in range(n_fb):
            tot = 0.0
            below = 0.0
            for c in range(deck_size):
                tot_card[c] = 0.0
                cb[c] = 0.0
            for h in range(H):
                v = q_opp[i, h] * fb_mask[f, h]
                s[h] = v
                tot += v
                tot_card[c1[h]] += v
                if c2[h] >= 0:
                    tot_card[c2[h]] += v
            so = rk_sort_off[f]
            bo = rk_bounds_off[f]
            be = rk_bounds_off[f + 1]
            for g in range(bo, be - 1):
                gs = so + rk_bounds[g]
                ge = so + rk_bounds[g + 1]
                gsum = 0.0
                for idx in range(gs, ge):
                    h = rk_sorted[idx]
                    v = s[h]
                    gsum += v
                    gc[c1[h]] += v
                    if c2[h] >= 0:
                        gc[c2[h]] += v
                for idx in range(gs, ge):
                    h = rk_sorted[idx]
                    if fb_mask[f, h] == 0.0:
                        continue
                    v = s[h]
                    wb = below - cb[c1[h]]
                    t = gsum - gc[c1[h]]
                    tt = tot - tot_card[c1[h]]
                    if c2[h] >= 0:
                        wb -= cb[c2[h]]
                        t += -gc[c2[h]] + v
                        tt += -tot_card[c2[h]] + v
                    w[i, h] += half_pots[i] * (wb - (tt - wb - t))
                for idx in range(gs, ge):
                    h = rk_sorted[idx]
                    v = s[h]
                    below += v
                    cb[c1[h]] += v
                    gc[c1[h]] = 0.0
                    if c2[h] >= 0:
                        cb[c2[h]] += v
                        gc[c2[h]] = 0.0
    return w
