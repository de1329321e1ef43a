"""Serial ground-truth solvers: reference CFR, best response, LP oracle.

The reference CFR is deliberately structured unlike the pipeline so the
two act as independent implementations of the same math.  ``history``
mode recurses over explicit deals; ``dense`` mode uses per-node hand
vectors with precomputed compatibility matrices (needed for river-sized
trees where per-deal Python recursion is hopeless); ``matched`` mode
drives the pipeline's own stage functions single-threaded and exists only
for bitwise comparisons.

Value units are chips.  Expectations over deals divide by the ordered
compatible deal count; chance cards inside the tree contribute the
conditional factor 1/(outcomes - 2*hand_size) per dealt card.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import range_engine
from .cfr_variants import (VariantConfig, discount_factors, regret_match,
                           strategy_scale)
from .game_core import (CHANCE, DECISION, FOLD_TERMINAL, LEAF,
                        SHOWDOWN_TERMINAL, GameTree, InfosetBlock, hand_mask,
                        node_boards, parent_links, topological_order)

_TINY_REACH = 1e-12


@dataclass
class BestResponseResult:
    br_values: tuple[float, float]
    expl_chips: float
    expl_pot: float
    expl_mbb: float


@dataclass
class LPResult:
    value: float
    strategies: tuple[dict[int, np.ndarray], dict[int, np.ndarray]]


class _TreeInfo:
    """Shared precomputation for the serial passes."""

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.n = len(tree.nodes)
        self.H = tree.hands_per_player
        self.hs = tree.hand_size
        self.deck_size = len(tree.deck)
        self.boards = node_boards(tree)
        self.masks = [hand_mask(tree.hands, self.boards[i])
                      for i in range(self.n)]
        self.topo = topological_order(tree)
        self.cards = [frozenset(h.cards) for h in tree.hands]
        self.chance_w = {}
        for nid, node in enumerate(tree.nodes):
            if node.kind == CHANCE:
                m_e = len(node.children)
                self.chance_w[nid] = 1.0 / (m_e - 2 * self.hs)
        self.chance_scale = np.ones(self.n)
        for nid in self.topo:
            node = tree.nodes[nid]
            step = self.chance_w.get(nid, 1.0) if node.kind == CHANCE else 1.0
            for c in node.children:
                self.chance_scale[c] = self.chance_scale[nid] * step
        root_board = set(tree.board)
        self.deals = [
            (i, j)
            for i, hi in enumerate(self.cards)
            for j, hj in enumerate(self.cards)
            if i != j and not (hi & hj) and not (hi | hj) & root_board]
        if any(node.kind == LEAF for node in tree.nodes):
            raise ValueError(
                "serial reference and best response require a full tree "
                "(no depth-limited leaves)")


def make_blocks(tree: GameTree) -> dict[int, InfosetBlock]:
    """Uniform-strategy infoset blocks for every decision node."""
    H = tree.hands_per_player
    return {
        node.node_id: InfosetBlock.uniform(node.node_id, node.actor, H,
                                           len(node.actions))
        for node in tree.nodes if node.kind == DECISION}


def _accumulate_average(info: _TreeInfo, blocks, player: int,
                        scale: float) -> None:
    tree = info.tree

    def walk(nid: int, reach: np.ndarray) -> None:
        node = tree.nodes[nid]
        if node.kind == DECISION and node.actor == player:
            blk = blocks[nid]
            blk.cum_strategy *= scale
            blk.cum_strategy += reach[:, None] * blk.strategy
            for a, child in enumerate(node.children):
                walk(child, reach * blk.strategy[:, a])
        elif node.kind == DECISION:
            for child in node.children:
                walk(child, reach)
        elif node.kind == CHANCE:
            for child in node.children:
                walk(child, reach * info.masks[child])

    walk(0, info.masks[0].copy())


def _regret_walk_history(info: _TreeInfo, blocks, traverser: int,
                         acc: dict[int, np.ndarray]) -> None:
    tree = info.tree
    outcomes = tree.chance_outcomes

    for deal in info.deals:
        h_t = deal[traverser]
        h_o = deal[1 - traverser]
        held = info.cards[deal[0]] | info.cards[deal[1]]

        def walk(nid: int, pi_o: float) -> float:
            node = tree.nodes[nid]
            kind = node.kind
            if kind == DECISION:
                if node.actor == traverser:
                    sig = blocks[nid].strategy[h_t]
                    child_v = [walk(c, pi_o) for c in node.children]
                    v = 0.0
                    for a, cv in enumerate(child_v):
                        v += sig[a] * cv
                    row = acc[nid][h_t]
                    for a, cv in enumerate(child_v):
                        row[a] += cv - v
                    return v
                sig = blocks[nid].strategy[h_o]
                v = 0.0
                for a, c in enumerate(node.children):
                    v += walk(c, pi_o * sig[a])
                return v
            if kind == CHANCE:
                w = info.chance_w[nid]
                v = 0.0
                outs = outcomes[nid]
                for a, c in enumerate(node.children):
                    if outs[a] in held:
                        continue
                    v += walk(c, pi_o * w)
                return v
            if kind == FOLD_TERMINAL:
                amt = node.fold_amount * pi_o
                return -amt if node.folder == traverser else amt
            rank = tree.rankings[nid]
            rt, ro = rank[h_t], rank[h_o]
            if rt == ro:
                return 0.0
            half = 0.5 * node.pot * pi_o
            return half if rt > ro else -half

        walk(0, 1.0)


class _DenseTables:
    """Compatibility and sign-difference matrices for the dense pass."""

    def __init__(self, info: _TreeInfo):
        tree = info.tree
        H = info.H
        compat = np.ones((H, H))
        for i, ci in enumerate(info.cards):
            for j, cj in enumerate(info.cards):
                if i == j or (ci & cj):
                    compat[i, j] = 0.0
        self.compat = compat
        self.sign: dict[bytes, np.ndarray] = {}
        self.sign_of_node: dict[int, bytes] = {}
        for nid, node in enumerate(tree.nodes):
            if node.kind != SHOWDOWN_TERMINAL:
                continue
            rank = np.asarray(tree.rankings[nid], np.int64)
            key = rank.tobytes()
            if key not in self.sign:
                s = np.sign(rank[:, None] - rank[None, :]).astype(np.float64)
                s *= compat
                s[rank < 0, :] = 0.0
                s[:, rank < 0] = 0.0
                self.sign[key] = s
            self.sign_of_node[nid] = key


def _forward_reach(info: _TreeInfo, strategies, player: int):
    """Own reach per node for one player: sigma products, board-masked."""
    tree = info.tree
    reach: list[np.ndarray | None] = [None] * info.n
    reach[0] = info.masks[0].copy()
    for nid in info.topo:
        node = tree.nodes[nid]
        r = reach[nid]
        for a, child in enumerate(node.children):
            if node.kind == DECISION and node.actor == player:
                reach[child] = r * strategies[nid][:, a]
            elif node.kind == CHANCE:
                reach[child] = r * info.masks[child]
            else:
                reach[child] = r
    return reach


def _terminal_values_dense(info: _TreeInfo, dense: _DenseTables,
                           opp_reach, traverser: int):
    """Counterfactual terminal values via explicit matrix products."""
    tree = info.tree
    values: dict[int, np.ndarray] = {}
    fold_ids = [nid for nid, nd in enumerate(tree.nodes)
                if nd.kind == FOLD_TERMINAL]
    if fold_ids:
        stack = np.stack([opp_reach[nid] for nid in fold_ids], axis=1)
        cf = dense.compat @ stack
        for k, nid in enumerate(fold_ids):
            node = tree.nodes[nid]
            sgn = -1.0 if node.folder == traverser else 1.0
            values[nid] = (sgn * node.fold_amount * info.chance_scale[nid]) \
                * cf[:, k] * info.masks[nid]
    by_key: dict[bytes, list[int]] = {}
    for nid, nd in enumerate(tree.nodes):
        if nd.kind == SHOWDOWN_TERMINAL:
            by_key.setdefault(dense.sign_of_node[nid], []).append(nid)
    for key, ids in by_key.items():
        stack = np.stack([opp_reach[nid] for nid in ids], axis=1)
        wl = dense.sign[key] @ stack
        for k, nid in enumerate(ids):
            node = tree.nodes[nid]
            values[nid] = (0.5 * node.pot * info.chance_scale[nid]) \
                * wl[:, k] * info.masks[nid]
    return values


def _regret_pass_dense(info: _TreeInfo, dense: _DenseTables, blocks,
                       traverser: int, acc) -> None:
    tree = info.tree
    opp = 1 - traverser
    strategies = {nid: blk.strategy for nid, blk in blocks.items()}
    opp_reach = _forward_reach(info, strategies, opp)
    values = _terminal_values_dense(info, dense, opp_reach, traverser)
    for nid in reversed(info.topo):
        node = tree.nodes[nid]
        if node.kind in (FOLD_TERMINAL, SHOWDOWN_TERMINAL):
            continue
        if node.kind == DECISION and node.actor == traverser:
            sig = blocks[nid].strategy
            child_vals = np.stack([values[c] for c in node.children], axis=1)
            v = (sig * child_vals).sum(axis=1)
            acc[nid] += child_vals - v[:, None]
            values[nid] = v
        else:
            v = values[node.children[0]].copy()
            for c in node.children[1:]:
                v += values[c]
            values[nid] = v


def _apply_stage7(blocks, traverser: int, variant: VariantConfig, t: int,
                  acc) -> None:
    fpos, fneg = discount_factors(variant, t)
    for nid, r in acc.items():
        blk = blocks[nid]
        cum = blk.cum_regret
        if variant.kind == "dcfr":
            np.multiply(cum, fpos, out=cum, where=cum > 0.0)
            np.multiply(cum, fneg, out=cum, where=cum < 0.0)
        if variant.kind in ("cfr_plus", "pcfr_plus"):
            np.maximum(cum + r, 0.0, out=cum)
        else:
            cum += r
        source = cum + r if variant.kind == "pcfr_plus" else cum
        blk.strategy = regret_match(source)


def serial_cfr_pass(tree: GameTree, blocks: dict[int, InfosetBlock],
                    traverser: int, variant: VariantConfig, t: int,
                    mode: str = "history", _cache: dict | None = None) -> None:
    """One traverser pass updating ``blocks`` in place.

    Semantics match the pipeline: the non-traverser accumulates its
    average-strategy weights first (scaled per the variant's averaging
    scheme for iteration t), then the traverser's regrets and next
    strategy are computed.
    """
    if mode not in ("history", "dense"):
        raise ValueError(f"unknown serial mode {mode!r}")
    cache = _cache if _cache is not None else {}
    if "info" not in cache:
        cache["info"] = _TreeInfo(tree)
    info = cache["info"]
    _accumulate_average(info, blocks, 1 - traverser,
                        strategy_scale(variant, t))
    acc = {nid: np.zeros_like(blk.cum_regret) for nid, blk in blocks.items()
           if blk.player == traverser}
    if mode == "history":
        _regret_walk_history(info, blocks, traverser, acc)
    else:
        if "dense" not in cache:
            cache["dense"] = _DenseTables(info)
        _regret_pass_dense(info, cache["dense"], blocks, traverser, acc)
    _apply_stage7(blocks, traverser, variant, t, acc)


class ReferenceSolver:
    """Serial CFR with the pipeline's alternating-traverser schedule."""

    def __init__(self, tree: GameTree, variant: VariantConfig,
                 mode: str = "history"):
        self.tree = tree
        self.variant = variant
        self.mode = mode
        self.blocks = make_blocks(tree)
        self.iteration = 1
        self.traverser = 0
        self._cache: dict = {}

    def run_pass(self) -> None:
        serial_cfr_pass(self.tree, self.blocks, self.traverser, self.variant,
                        self.iteration, self.mode, self._cache)
        if self.traverser == 1:
            self.iteration += 1
        self.traverser = 1 - self.traverser

    def run(self, iterations: int) -> "ReferenceSolver":
        for _ in range(2 * iterations):
            self.run_pass()
        return self

    def average_strategy(self) -> dict[int, np.ndarray]:
        out = {}
        for nid, blk in self.blocks.items():
            sums = blk.cum_strategy.sum(axis=1, keepdims=True)
            A = blk.cum_strategy.shape[1]
            out[nid] = np.where(sums > 0.0,
                                blk.cum_strategy / np.where(sums > 0.0, sums,
                                                            1.0), 1.0 / A)
        return out


# --- best response and exploitability ---------------------------------------

def _backward_values(info: _TreeInfo, strategies, responder: int,
                     combine: str, collect_children: bool = False):
    """Counterfactual responder values per node under fixed opponent play.

    ``combine`` selects the responder-decision rule: "max" for best
    response, "sigma" for on-policy expectation.
    """
    tree = info.tree
    hands = tree.hands
    opp_reach = _forward_reach(info, strategies, 1 - responder)
    values: dict[int, np.ndarray] = {}
    per_action: dict[int, np.ndarray] = {}
    for nid in reversed(info.topo):
        node = tree.nodes[nid]
        kind = node.kind
        if kind == FOLD_TERMINAL:
            agg = range_engine.aggregate(opp_reach[nid], hands,
                                         info.deck_size)
            cf = range_engine.counterfactual_reach_all(agg, hands)
            sgn = -1.0 if node.folder == responder else 1.0
            values[nid] = (sgn * node.fold_amount * info.chance_scale[nid]) \
                * cf * info.masks[nid]
        elif kind == SHOWDOWN_TERMINAL:
            sv = range_engine.showdown_values(
                opp_reach[nid], tree.rankings[nid], node.pot, hands,
                info.deck_size)
            values[nid] = info.chance_scale[nid] * sv * info.masks[nid]
        elif kind == DECISION and node.actor == responder:
            child_vals = np.stack([values[c] for c in node.children], axis=1)
            if collect_children:
                per_action[nid] = child_vals
            if combine == "max":
                values[nid] = child_vals.max(axis=1)
            else:
                values[nid] = (strategies[nid] * child_vals).sum(axis=1)
        else:
            v = values[node.children[0]].copy()
            for c in node.children[1:]:
                v += values[c]
            values[nid] = v
    return values, per_action, opp_reach


def best_response_value(tree: GameTree, strategy: dict[int, np.ndarray],
                        responder: int) -> float:
    """Expected chips for ``responder`` best-responding to ``strategy``."""
    info = _TreeInfo(tree)
    values, _, _ = _backward_values(info, strategy, responder, "max")
    return float(values[0].sum()) / len(info.deals)


def expected_game_value(tree: GameTree, strategy: dict[int, np.ndarray],
                        player: int = 0) -> float:
    """Expected chips for ``player`` when both sides follow ``strategy``."""
    info = _TreeInfo(tree)
    values, _, _ = _backward_values(info, strategy, player, "sigma")
    return float(values[0].sum()) / len(info.deals)


def exploitability(tree: GameTree, strategy: dict[int, np.ndarray]) -> float:
    """(br0 + br1)/2 in chips; 0 exactly at a Nash equilibrium."""
    br0 = best_response_value(tree, strategy, 0)
    br1 = best_response_value(tree, strategy, 1)
    return (br0 + br1) / 2.0


def exploitability_report(tree: GameTree,
                          strategy: dict[int, np.ndarray]
                          ) -> BestResponseResult:
    """Exploitability in chips, pot fractions, and milli-big-blinds.

    The big blind is taken as half the root pot (two blinds seed the pot).
    """
    br0 = best_response_value(tree, strategy, 0)
    br1 = best_response_value(tree, strategy, 1)
    chips = (br0 + br1) / 2.0
    pot0 = tree.nodes[0].pot
    return BestResponseResult(
        br_values=(br0, br1), expl_chips=chips, expl_pot=chips / pot0,
        expl_mbb=chips / (pot0 / 2.0) * 1000.0)


def best_response_slow(tree: GameTree, strategy: dict[int, np.ndarray],
                       responder: int) -> float:
    """Quadratic twin of best_response_value with explicit blocking loops."""
    info = _TreeInfo(tree)
    strategies = strategy
    opp = 1 - responder
    opp_reach = _forward_reach(info, strategies, opp)
    hands = tree.hands
    H = info.H
    values: dict[int, np.ndarray] = {}
    for nid in reversed(info.topo):
        node = tree.nodes[nid]
        kind = node.kind
        if kind in (FOLD_TERMINAL, SHOWDOWN_TERMINAL):
            out = np.zeros(H)
            rank = tree.rankings.get(nid)
            for h in range(H):
                if info.masks[nid][h] == 0.0:
                    continue
                total = 0.0
                for ho in range(H):
                    if ho == h or (info.cards[h] & info.cards[ho]):
                        continue
                    w = opp_reach[nid][ho]
                    if kind == FOLD_TERMINAL:
                        u = node.fold_amount
                        if node.folder == responder:
                            u = -u
                    else:
                        rh, ro = rank[h], rank[ho]
                        u = 0.0 if rh == ro else \
                            (0.5 * node.pot if rh > ro else -0.5 * node.pot)
                    total += w * u
                out[h] = total * info.chance_scale[nid]
            values[nid] = out
        elif kind == DECISION and node.actor == responder:
            child_vals = np.stack([values[c] for c in node.children], axis=1)
            values[nid] = child_vals.max(axis=1)
        else:
            v = values[node.children[0]].copy()
            for c in node.children[1:]:
                v += values[c]
            values[nid] = v
    return float(values[0].sum()) / len(info.deals)


def dominance_bounds(tree: GameTree, strategy: dict[int, np.ndarray],
                     tiny: float = _TINY_REACH):
    """Per (decision node, action) intervals of per-hand action values.

    Values are counterfactual child values normalized by the hand's
    opponent counterfactual reach, so they are comparable across actions;
    hands whose reach is below ``tiny`` are excluded.  Nodes with no
    includable hand are omitted.
    """
    info = _TreeInfo(tree)
    hands = tree.hands
    bounds: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for player in range(2):
        _, per_action, opp_reach = _backward_values(
            info, strategy, player, "sigma", collect_children=True)
        for nid, child_vals in per_action.items():
            agg = range_engine.aggregate(opp_reach[nid], hands,
                                         info.deck_size)
            cf = range_engine.counterfactual_reach_all(agg, hands) \
                * info.chance_scale[nid] * info.masks[nid]
            include = cf > tiny
            if not include.any():
                continue
            ratios = child_vals[include] / cf[include, None]
            bounds[nid] = (ratios.min(axis=0), ratios.max(axis=0))
    return bounds


# --- sequence-form LP oracle -------------------------------------------------

def lp_equilibrium_small(tree: GameTree,
                         max_histories: int = 100_000) -> LPResult:
    """Sequence-form zero-sum solve; refuses trees beyond ``max_histories``.

    Solves both players' LPs with sparse constraint matrices and returns
    the player-0 game value plus behavioral strategies.
    """
    info = _TreeInfo(tree)
    work = len(info.deals) * info.n
    if work > max_histories:
        raise ValueError(
            f"tree too large for the LP oracle ({work} deal-node pairs > "
            f"{max_histories})")
    tree_nodes = tree.nodes
    links = [parent_links(tree, p) for p in range(2)]

    seq_id: list[dict[tuple[int, int, int], int]] = [{}, {}]
    info_parent: list[list[int]] = [[], []]
    info_key: list[dict[tuple[int, int], int]] = [{}, {}]
    n_seq = [1, 1]

    for p in range(2):
        for node in tree_nodes:
            if node.kind != DECISION or node.actor != p:
                continue
            nid = node.node_id
            for h in range(info.H):
                if info.masks[nid][h] == 0.0:
                    continue
                link = links[p][nid]
                if link is None:
                    parent = 0
                else:
                    parent = seq_id[p][(link[0], h, link[1])]
                info_key[p][(nid, h)] = len(info_parent[p])
                info_parent[p].append(parent)
                for a in range(len(node.actions)):
                    seq_id[p][(nid, h, a)] = n_seq[p]
                    n_seq[p] += 1

    def constraint_matrix(p: int):
        rows, cols, data = [0], [0], [1.0]
        for i, parent in enumerate(info_parent[p]):
            rows.append(i + 1)
            cols.append(parent)
            data.append(-1.0)
        for (nid, h, a), s in seq_id[p].items():
            rows.append(info_key[p][(nid, h)] + 1)
            cols.append(s)
            data.append(1.0)
        M = sparse.csr_matrix((data, (rows, cols)),
                              shape=(len(info_parent[p]) + 1, n_seq[p]))
        rhs = np.zeros(len(info_parent[p]) + 1)
        rhs[0] = 1.0
        return M, rhs

    E, e = constraint_matrix(0)
    F, f = constraint_matrix(1)

    pay_rows, pay_cols, pay_data = [], [], []
    deal_p = 1.0 / len(info.deals)

    for h0, h1 in info.deals:
        held = info.cards[h0] | info.cards[h1]
        hand_of = (h0, h1)

        def walk(nid: int, s0: int, s1: int) -> None:
            node = tree_nodes[nid]
            kind = node.kind
            if kind == DECISION:
                p = node.actor
                h = hand_of[p]
                for a, c in enumerate(node.children):
                    s = seq_id[p][(nid, h, a)]
                    if p == 0:
                        walk(c, s, s1)
                    else:
                        walk(c, s0, s)
            elif kind == CHANCE:
                outs = tree.chance_outcomes[nid]
                for a, c in enumerate(node.children):
                    if outs[a] not in held:
                        walk(c, s0, s1)
            else:
                if kind == FOLD_TERMINAL:
                    u0 = -node.fold_amount if node.folder == 0 \
                        else node.fold_amount
                else:
                    rank = tree.rankings[nid]
                    r0, r1 = rank[h0], rank[h1]
                    u0 = 0.0 if r0 == r1 else \
                        (0.5 * node.pot if r0 > r1 else -0.5 * node.pot)
                pay_rows.append(s0)
                pay_cols.append(s1)
                pay_data.append(deal_p * info.chance_scale[nid] * u0)

        walk(0, 0, 0)

    A = sparse.csr_matrix((pay_data, (pay_rows, pay_cols)),
                          shape=(n_seq[0], n_seq[1]))

    def solve_for(maximizer: int):
        if maximizer == 0:
            Own, own_rhs, Opp, opp_rhs, payoff = E, e, F, f, A
        else:
            Own, own_rhs, Opp, opp_rhs, payoff = F, f, E, e, -A.T
        n_x = Own.shape[1]
        n_q = Opp.shape[0]
        c = np.concatenate([np.zeros(n_x), -opp_rhs])
        A_ub = sparse.hstack([-payoff.T, Opp.T], format="csr")
        b_ub = np.zeros(Opp.shape[1])
        A_eq = sparse.hstack(
            [Own, sparse.csr_matrix((Own.shape[0], n_q))], format="csr")
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=own_rhs,
                      bounds=[(0, None)] * n_x + [(None, None)] * n_q,
                      method="highs")
        if not res.success:
            raise RuntimeError(f"LP solve failed: {res.message}")
        return -res.fun, res.x[:n_x]

    v0, x = solve_for(0)
    v1, y = solve_for(1)
    plans = (x, y)

    strategies: tuple[dict[int, np.ndarray], dict[int, np.ndarray]] = ({}, {})
    for p in range(2):
        plan = plans[p]
        for node in tree_nodes:
            if node.kind != DECISION or node.actor != p:
                continue
            nid = node.node_id
            A_n = len(node.actions)
            rows = np.full((info.H, A_n), 1.0 / A_n)
            for h in range(info.H):
                if (nid, h) not in info_key[p]:
                    continue
                probs = np.array(
                    [plan[seq_id[p][(nid, h, a)]] for a in range(A_n)])
                total = probs.sum()
                if total > _TINY_REACH:
                    rows[h] = probs / total
            strategies[p][nid] = rows
    return LPResult(value=v0, strategies=strategies)
