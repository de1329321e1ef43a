"""Seven-stage data-parallel CFR iteration pipeline.

A pass runs stages 1-2, forks the terminal branch (stages 3-4) and the
leaf-evaluation branch (stage 5), joins, then runs stages 6-7 for the
current traverser.  Work items never share an output slot, so results are
bitwise identical for every worker count and fork schedule.

Exactness model: root reach is all-ones over unblocked hands; chance
weights contribute through a per-node cumulative scalar ``chance_scale``
holding the deal-conditional correction prod 1/(m_e - 2*hand_size) over
chance edges, and board masks zero blocked hands during reach
propagation.  The uniform 1/n_deals factor appears only when values are
converted to per-deal expectations (reference_oracle).
"""

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels
from .abstraction_pruning import BucketMap
from .cfr_variants import VariantConfig, discount_factors, strategy_scale
from .game_core import (CHANCE, DECISION, FOLD_TERMINAL, LEAF,
                        SHOWDOWN_TERMINAL, GameTree, MalformedTreeError,
                        build_infoset_forest, node_boards, parent_links,
                        topological_order, validate_tree)
from .leaf_eval import LayoutDescriptor

_KIND_CODE = {DECISION: _kernels.KIND_DECISION,
              CHANCE: _kernels.KIND_CHANCE,
              FOLD_TERMINAL: _kernels.KIND_FOLD,
              SHOWDOWN_TERMINAL: _kernels.KIND_SHOWDOWN,
              LEAF: _kernels.KIND_LEAF}

STAGE_NAMES = ("stage1", "stage2", "stage3", "stage4", "stage5", "stage6",
               "stage7")


class PipelineConfigError(ValueError):
    """Pipeline inputs are inconsistent (missing evaluator, bad workers)."""


def street_label(tree: GameTree) -> str:
    if len(tree.deck) == 52:
        return {0: "preflop", 3: "flop", 4: "turn",
                5: "river"}.get(len(tree.board), "street")
    return tree.name or "game"


@dataclass
class TreeTables:
    """Flat, kernel-ready encoding of one GameTree (immutable after build)."""

    tree: GameTree
    layout: LayoutDescriptor
    street: str
    n_nodes: int
    n_hands: int
    deck_size: int
    table_size: int

    kind: np.ndarray
    actor: np.ndarray
    pot: np.ndarray
    fold_amount: np.ndarray
    folder: np.ndarray
    depth: np.ndarray
    chance_scale: np.ndarray
    child_off: np.ndarray
    child: np.ndarray

    c1: np.ndarray
    c2: np.ndarray
    mask_id: np.ndarray
    masks: np.ndarray

    plink_node: np.ndarray
    plink_aidx: np.ndarray
    ch_off: np.ndarray
    ch_nodes: np.ndarray
    ch_player: np.ndarray

    tab_off: np.ndarray
    n_act: np.ndarray
    class_map_id: np.ndarray
    class_of: np.ndarray
    n_class_of_map: np.ndarray

    dec_nodes: tuple[np.ndarray, np.ndarray]
    agg_nodes: np.ndarray
    fold_nodes: np.ndarray
    sd_nodes: np.ndarray
    sd_rank: np.ndarray
    rk_sorted: np.ndarray
    rk_sort_off: np.ndarray
    rk_bounds: np.ndarray
    rk_bounds_off: np.ndarray
    leaf_nodes: np.ndarray
    lb_off: np.ndarray
    lb_cards: np.ndarray
    lvl_off: np.ndarray
    lvl_nodes: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(self.leaf_nodes.shape[0])


@dataclass
class PipelineState:
    """All mutable buffers for one solve; partitioned per work item."""

    reach: np.ndarray
    node_values: np.ndarray
    agg_sum: np.ndarray
    agg_card: np.ndarray
    leaf_cf: np.ndarray
    leaf_inputs: np.ndarray
    leaf_values: np.ndarray
    strategy: np.ndarray
    cum_regret: np.ndarray
    cum_strategy: np.ndarray
    pred: np.ndarray
    iteration: int = 1
    traverser: int = 0

    def copy(self) -> "PipelineState":
        return PipelineState(
            reach=self.reach.copy(), node_values=self.node_values.copy(),
            agg_sum=self.agg_sum.copy(), agg_card=self.agg_card.copy(),
            leaf_cf=self.leaf_cf.copy(), leaf_inputs=self.leaf_inputs.copy(),
            leaf_values=self.leaf_values.copy(),
            strategy=self.strategy.copy(), cum_regret=self.cum_regret.copy(),
            cum_strategy=self.cum_strategy.copy(), pred=self.pred.copy(),
            iteration=self.iteration, traverser=self.traverser)


@dataclass
class StageTimings:
    """Wall milliseconds per stage for one pass."""

    stage_ms: np.ndarray
    total_ms: float
    street: str
    iteration: int

    def as_row(self) -> list:
        return [float(x) for x in self.stage_ms] + [self.total_ms,
                                                    self.street,
                                                    self.iteration]


@dataclass
class ConvergencePoint:
    iteration: int
    wall_ms: float
    expl_chips: float
    expl_pot: float
    expl_mbb: float


@dataclass
class SolveResult:
    avg_strategy: dict[int, np.ndarray]
    convergence: list[ConvergencePoint]
    timings: list[StageTimings]
    tables: TreeTables
    state: PipelineState
    game_value: float | None = None


def _ranking_csr(rank_arrays: list[np.ndarray]):
    sorted_parts, bounds_parts = [], []
    sort_off = np.zeros(len(rank_arrays) + 1, dtype=np.int64)
    bounds_off = np.zeros(len(rank_arrays) + 1, dtype=np.int64)
    for i, rank in enumerate(rank_arrays):
        valid = np.flatnonzero(rank >= 0)
        order = valid[np.argsort(rank[valid], kind="stable")]
        rsorted = rank[order]
        changes = np.flatnonzero(np.diff(rsorted)) + 1
        bounds = np.concatenate([[0], changes, [order.shape[0]]])
        sorted_parts.append(order.astype(np.int64))
        bounds_parts.append(bounds.astype(np.int64))
        sort_off[i + 1] = sort_off[i] + order.shape[0]
        bounds_off[i + 1] = bounds_off[i] + bounds.shape[0]
    if sorted_parts:
        return (np.concatenate(sorted_parts), sort_off,
                np.concatenate(bounds_parts), bounds_off)
    return (np.zeros(0, np.int64), sort_off, np.zeros(0, np.int64),
            bounds_off)


def compile_tree(tree: GameTree, bucket_map=None,
                 pot_scale: float | None = None) -> TreeTables:
    """Flatten a validated GameTree into kernel tables.

    ``bucket_map`` may be None (hand-identity infosets), a single
    BucketMap applied to every decision node, or a dict keyed by board
    length for per-street granularity.
    """
    err = validate_tree(tree)
    if err:
        raise MalformedTreeError(err)
    n = len(tree.nodes)
    H = tree.hands_per_player
    hs = tree.hand_size
    deck_size = len(tree.deck)

    kind = np.array([_KIND_CODE[nd.kind] for nd in tree.nodes], np.int64)
    actor = np.array([nd.actor for nd in tree.nodes], np.int64)
    pot = np.array([nd.pot for nd in tree.nodes], np.float64)
    fold_amount = np.array([nd.fold_amount for nd in tree.nodes], np.float64)
    folder = np.array([nd.folder for nd in tree.nodes], np.int64)

    child_off = np.zeros(n + 1, np.int64)
    for nd in tree.nodes:
        child_off[nd.node_id + 1] = len(nd.children)
    np.cumsum(child_off, out=child_off)
    child = np.zeros(child_off[-1], np.int64)
    for nd in tree.nodes:
        child[child_off[nd.node_id]:child_off[nd.node_id + 1]] = nd.children

    topo = topological_order(tree)
    depth = np.zeros(n, np.int64)
    chance_scale = np.ones(n, np.float64)
    for nid in topo:
        nd = tree.nodes[nid]
        step = 1.0
        if nd.kind == CHANCE:
            m_e = len(nd.children)
            if m_e <= 2 * hs:
                raise MalformedTreeError(
                    f"chance node {nid} has {m_e} outcomes but deals must "
                    f"leave room for {2 * hs} private cards")
            step = 1.0 / (m_e - 2 * hs)
        for c in tree.nodes[nid].children:
            depth[c] = depth[nid] + 1
            chance_scale[c] = chance_scale[nid] * step

    boards = node_boards(tree)
    from .game_core import hand_mask
    mask_rows: dict[tuple[int, ...], int] = {}
    mask_list: list[np.ndarray] = []
    mask_id = np.zeros(n, np.int64)
    for nid in range(n):
        sig = tuple(sorted(boards[nid]))
        if sig not in mask_rows:
            mask_rows[sig] = len(mask_list)
            mask_list.append(hand_mask(tree.hands, sig))
        mask_id[nid] = mask_rows[sig]
    masks = np.array(mask_list)

    plink_node = np.full((2, n), -1, np.int64)
    plink_aidx = np.full((2, n), -1, np.int64)
    for p in range(2):
        for nid, link in enumerate(parent_links(tree, p)):
            if link is not None:
                plink_node[p, nid], plink_aidx[p, nid] = link

    ch_segments: list[np.ndarray] = []
    ch_player_list: list[int] = []
    for p in range(2):
        for chain in build_infoset_forest(tree, p):
            members = set(chain.node_ids)
            owned = {chain.node_ids[0]}
            owned.update(
                nid for nid in range(n) if plink_node[p, nid] in members)
            ch_segments.append(np.array(sorted(owned), np.int64))
            ch_player_list.append(p)
    ch_off = np.zeros(len(ch_segments) + 1, np.int64)
    for i, seg in enumerate(ch_segments):
        ch_off[i + 1] = ch_off[i] + seg.shape[0]
    ch_nodes = (np.concatenate(ch_segments) if ch_segments
                else np.zeros(0, np.int64))
    ch_player = np.array(ch_player_list, np.int64)

    class_rows: list[np.ndarray] = [np.arange(H, dtype=np.int64)]
    n_class_list: list[int] = [H]
    map_for_len: dict[int, int] = {}

    def map_id_for(board_len: int) -> int:
        if bucket_map is None:
            return 0
        bm = bucket_map
        if isinstance(bm, dict):
            bm = bm.get(board_len)
            if bm is None:
                return 0
        if board_len not in map_for_len:
            bm.validate()
            if bm.bucket_of.shape[0] != H:
                raise PipelineConfigError(
                    f"bucket map covers {bm.bucket_of.shape[0]} hands, "
                    f"game has {H}")
            map_for_len[board_len] = len(class_rows)
            class_rows.append(bm.bucket_of.astype(np.int64))
            n_class_list.append(bm.B)
        return map_for_len[board_len]

    tab_off = np.full(n, -1, np.int64)
    n_act = np.zeros(n, np.int64)
    class_map_id = np.zeros(n, np.int64)
    off = 0
    for nd in tree.nodes:
        if nd.kind != DECISION:
            continue
        nid = nd.node_id
        n_act[nid] = len(nd.actions)
        cm = map_id_for(len(boards[nid]))
        class_map_id[nid] = cm
        tab_off[nid] = off
        off += n_class_list[cm] * len(nd.actions)
    class_of = np.stack(class_rows) if len(class_rows) > 1 \
        else class_rows[0][None, :]
    n_class_of_map = np.array(n_class_list, np.int64)

    dec_nodes = tuple(
        np.array(tree.decision_nodes(p), np.int64) for p in range(2))
    fold_nodes = np.array(
        [nd.node_id for nd in tree.nodes if nd.kind == FOLD_TERMINAL],
        np.int64)
    sd_list = [nd.node_id for nd in tree.nodes
               if nd.kind == SHOWDOWN_TERMINAL]
    leaf_list = [nd.node_id for nd in tree.nodes if nd.kind == LEAF]
    agg_nodes = np.array(
        sorted(list(fold_nodes) + sd_list + leaf_list), np.int64)

    rank_key: dict[bytes, int] = {}
    rank_arrays: list[np.ndarray] = []
    sd_rank = np.zeros(len(sd_list), np.int64)
    for i, nid in enumerate(sd_list):
        rank = np.asarray(tree.rankings[nid], np.int64)
        key = rank.tobytes()
        if key not in rank_key:
            rank_key[key] = len(rank_arrays)
            rank_arrays.append(rank)
        sd_rank[i] = rank_key[key]
    rk_sorted, rk_sort_off, rk_bounds, rk_bounds_off = _ranking_csr(
        rank_arrays)

    lb_off = np.zeros(len(leaf_list) + 1, np.int64)
    lb_cards_parts = []
    for i, nid in enumerate(leaf_list):
        cards = np.array(sorted(boards[nid]), np.int64)
        lb_cards_parts.append(cards)
        lb_off[i + 1] = lb_off[i] + cards.shape[0]
    lb_cards = (np.concatenate(lb_cards_parts) if lb_cards_parts
                else np.zeros(0, np.int64))

    interior = [nid for nid in range(n)
                if kind[nid] in (_kernels.KIND_DECISION, _kernels.KIND_CHANCE)]
    interior.sort(key=lambda nid: (-depth[nid], nid))
    lvl_parts: list[np.ndarray] = []
    i = 0
    while i < len(interior):
        j = i
        while j < len(interior) and depth[interior[j]] == depth[interior[i]]:
            j += 1
        lvl_parts.append(np.array(interior[i:j], np.int64))
        i = j
    lvl_off = np.zeros(len(lvl_parts) + 1, np.int64)
    for i, seg in enumerate(lvl_parts):
        lvl_off[i + 1] = lvl_off[i] + seg.shape[0]
    lvl_nodes = (np.concatenate(lvl_parts) if lvl_parts
                 else np.zeros(0, np.int64))

    c1 = np.array([h.cards[0] for h in tree.hands], np.int64)
    c2 = np.array([h.cards[-1] if hs == 2 else -1 for h in tree.hands],
                  np.int64)

    layout = LayoutDescriptor.from_tree(tree, pot_scale)
    return TreeTables(
        tree=tree, layout=layout, street=street_label(tree), n_nodes=n,
        n_hands=H, deck_size=deck_size, table_size=off, kind=kind,
        actor=actor, pot=pot, fold_amount=fold_amount, folder=folder,
        depth=depth, chance_scale=chance_scale, child_off=child_off,
        child=child, c1=c1, c2=c2, mask_id=mask_id, masks=masks,
        plink_node=plink_node, plink_aidx=plink_aidx, ch_off=ch_off,
        ch_nodes=ch_nodes, ch_player=ch_player, tab_off=tab_off,
        n_act=n_act, class_map_id=class_map_id, class_of=class_of,
        n_class_of_map=n_class_of_map, dec_nodes=dec_nodes,
        agg_nodes=agg_nodes, fold_nodes=fold_nodes, sd_nodes=np.array(
            sd_list, np.int64), sd_rank=sd_rank, rk_sorted=rk_sorted,
        rk_sort_off=rk_sort_off, rk_bounds=rk_bounds,
        rk_bounds_off=rk_bounds_off, leaf_nodes=np.array(leaf_list, np.int64),
        lb_off=lb_off, lb_cards=lb_cards, lvl_off=lvl_off,
        lvl_nodes=lvl_nodes)


def init_state(tables: TreeTables) -> PipelineState:
    n, H = tables.n_nodes, tables.n_hands
    m = tables.n_leaves
    reach = np.zeros((2, n, H))
    for p in range(2):
        const = tables.plink_node[p] < 0
        reach[p, const] = tables.masks[tables.mask_id[const]]
    strategy = np.zeros(tables.table_size)
    for nid in tables.dec_nodes[0].tolist() + tables.dec_nodes[1].tolist():
        base = tables.tab_off[nid]
        A = tables.n_act[nid]
        nc = tables.n_class_of_map[tables.class_map_id[nid]]
        strategy[base:base + nc * A] = 1.0 / A
    return PipelineState(
        reach=reach,
        node_values=np.zeros((n, H)),
        agg_sum=np.zeros(n),
        agg_card=np.zeros((n, tables.deck_size)),
        leaf_cf=np.zeros((m, H)),
        leaf_inputs=np.zeros((m, tables.layout.input_dim)),
        leaf_values=np.zeros((m, 2 * H)),
        strategy=strategy,
        cum_regret=np.zeros(tables.table_size),
        cum_strategy=np.zeros(tables.table_size),
        pred=np.zeros(tables.table_size),
    )


def infoset_rows(tables: TreeTables, flat: np.ndarray,
                 node_id: int) -> np.ndarray:
    """2D (classes x actions) view of one decision node's table block."""
    base = tables.tab_off[node_id]
    if base < 0:
        raise KeyError(f"node {node_id} is not a decision node")
    A = int(tables.n_act[node_id])
    nc = int(tables.n_class_of_map[tables.class_map_id[node_id]])
    return flat[base:base + nc * A].reshape(nc, A)


# --- stage wrappers ---------------------------------------------------------

def stage1_forward_profile(tables: TreeTables, state: PipelineState,
                           traverser: int, avg_scale: float) -> None:
    _kernels.s1_forward(
        tables.ch_off, tables.ch_nodes, tables.ch_player,
        np.int64(traverser), np.float64(avg_scale), state.reach,
        tables.masks, tables.mask_id, tables.plink_node, tables.plink_aidx,
        tables.kind, tables.actor, state.strategy, state.cum_strategy,
        tables.tab_off, tables.n_act, tables.class_map_id, tables.class_of,
        tables.n_class_of_map)


def stage2_aggregate(tables: TreeTables, state: PipelineState,
                     traverser: int) -> None:
    opp = 1 - traverser
    _kernels.s2_aggregates(tables.agg_nodes, state.reach, np.int64(opp),
                           tables.c1, tables.c2, state.agg_sum,
                           state.agg_card)
    if tables.n_leaves:
        _kernels.s2_leaf_inputs(tables.leaf_nodes, tables.lb_off,
                                tables.lb_cards, state.reach, tables.pot,
                                np.float64(tables.layout.pot_scale),
                                np.int64(tables.deck_size),
                                state.leaf_inputs)


def stage3_opponent_reach(tables: TreeTables, state: PipelineState,
                          traverser: int) -> None:
    opp = 1 - traverser
    if tables.fold_nodes.shape[0]:
        _kernels.s3_folds(tables.fold_nodes, state.reach, np.int64(opp),
                          tables.c1, tables.c2, state.agg_sum,
                          state.agg_card, tables.fold_amount, tables.folder,
                          tables.chance_scale, tables.masks, tables.mask_id,
                          state.node_values)
    if tables.n_leaves:
        _kernels.s3_leaf_reach(tables.leaf_nodes, state.reach, np.int64(opp),
                               tables.c1, tables.c2, state.agg_sum,
                               state.agg_card, tables.masks, tables.mask_id,
                               state.leaf_cf)


def stage4_showdown(tables: TreeTables, state: PipelineState,
                    traverser: int) -> None:
    if not tables.sd_nodes.shape[0]:
        return
    _kernels.s4_showdown(tables.sd_nodes, tables.sd_rank, tables.rk_sorted,
                         tables.rk_sort_off, tables.rk_bounds,
                         tables.rk_bounds_off, state.reach,
                         np.int64(1 - traverser), tables.c1, tables.c2,
                         state.agg_sum, state.agg_card, tables.pot,
                         tables.chance_scale, tables.masks, tables.mask_id,
                         state.node_values, np.int64(tables.deck_size))


def stage5_leaf_eval(tables: TreeTables, state: PipelineState,
                     evaluator) -> None:
    if not tables.n_leaves:
        return
    if evaluator is None:
        raise PipelineConfigError(
            "tree has depth-limited leaves but no evaluator was given")
    out = evaluator(state.leaf_inputs)
    if out.shape != state.leaf_values.shape:
        raise PipelineConfigError(
            f"evaluator returned {out.shape}, expected "
            f"{state.leaf_values.shape}")
    np.copyto(state.leaf_values, out)


def stage6_backward_cfv(tables: TreeTables, state: PipelineState,
                        traverser: int) -> None:
    if tables.n_leaves:
        _kernels.s6_leaf_values(tables.leaf_nodes, state.leaf_cf,
                                state.leaf_values, tables.chance_scale,
                                np.int64(traverser), state.node_values)
    for li in range(tables.lvl_off.shape[0] - 1):
        nodes = tables.lvl_nodes[tables.lvl_off[li]:tables.lvl_off[li + 1]]
        _kernels.s6_level(nodes, tables.kind, tables.actor,
                          np.int64(traverser), tables.child_off, tables.child,
                          state.node_values, state.strategy, tables.tab_off,
                          tables.n_act, tables.class_map_id, tables.class_of)


def stage7_update(tables: TreeTables, state: PipelineState, traverser: int,
                  variant: VariantConfig, t: int) -> None:
    fpos, fneg = discount_factors(variant, t)
    _kernels.s7_update(tables.dec_nodes[traverser], state.node_values,
                       tables.child_off, tables.child, tables.tab_off,
                       tables.n_act, tables.class_map_id, tables.class_of,
                       tables.n_class_of_map, state.cum_regret, state.pred,
                       state.strategy,
                       np.int64(_kernels.VARIANT_ID[variant.kind]),
                       np.float64(fpos), np.float64(fneg))


def _clamp_workers(workers: int) -> int:
    limit = numba.config.NUMBA_NUM_THREADS
    return max(1, min(int(workers), limit))


def _fork_concurrently(evaluator) -> bool:
    # The workqueue threading layer does not support parallel regions
    # launched from two host threads at once; results are identical either
    # way, only the overlap is lost.
    try:
        layer = numba.threading_layer()
    except ValueError:
        return True
    from .leaf_eval import EquityOracleEvaluator
    if layer == "workqueue" and isinstance(evaluator, EquityOracleEvaluator):
        return False
    return True


def run_iteration(tables: TreeTables, state: PipelineState,
                  variant: VariantConfig, workers: int = 1, evaluator=None,
                  fork_mode: str = "concurrent") -> StageTimings:
    """One traverser pass; alternates ``state.traverser`` and advances
    ``state.iteration`` after the player-1 pass."""
    if fork_mode not in ("concurrent", "eval_first", "eval_last"):
        raise PipelineConfigError(f"unknown fork_mode {fork_mode!r}")
    numba.set_num_threads(_clamp_workers(workers))
    t = state.iteration
    trav = state.traverser
    ms = np.zeros(7)
    t_total = time.perf_counter()

    tick = time.perf_counter()
    stage1_forward_profile(tables, state, trav, strategy_scale(variant, t))
    ms[0] = (time.perf_counter() - tick) * 1e3

    tick = time.perf_counter()
    stage2_aggregate(tables, state, trav)
    ms[1] = (time.perf_counter() - tick) * 1e3

    def tree_branch():
        tick = time.perf_counter()
        stage3_opponent_reach(tables, state, trav)
        ms[2] = (time.perf_counter() - tick) * 1e3
        tick = time.perf_counter()
        stage4_showdown(tables, state, trav)
        ms[3] = (time.perf_counter() - tick) * 1e3

    def eval_branch():
        tick = time.perf_counter()
        stage5_leaf_eval(tables, state, evaluator)
        ms[4] = (time.perf_counter() - tick) * 1e3

    if fork_mode == "eval_first":
        eval_branch()
        tree_branch()
    elif fork_mode == "eval_last":
        tree_branch()
        eval_branch()
    elif not _fork_concurrently(evaluator):
        eval_branch()
        tree_branch()
    else:
        with ThreadPoolExecutor(max_workers=1) as pool:
            fut = pool.submit(eval_branch)
            tree_branch()
            fut.result()

    tick = time.perf_counter()
    stage6_backward_cfv(tables, state, trav)
    ms[5] = (time.perf_counter() - tick) * 1e3

    tick = time.perf_counter()
    stage7_update(tables, state, trav, variant, t)
    ms[6] = (time.perf_counter() - tick) * 1e3

    state.traverser = 1 - trav
    if trav == 1:
        state.iteration += 1
    return StageTimings(stage_ms=ms,
                        total_ms=(time.perf_counter() - t_total) * 1e3,
                        street=tables.street, iteration=t)


def average_strategy(tables: TreeTables,
                     state: PipelineState) -> dict[int, np.ndarray]:
    """Normalized average strategy per decision node, lifted to hand rows."""
    out: dict[int, np.ndarray] = {}
    for p in range(2):
        for nid in tables.dec_nodes[p]:
            nid = int(nid)
            rows = infoset_rows(tables, state.cum_strategy, nid)
            sums = rows.sum(axis=1, keepdims=True)
            A = rows.shape[1]
            norm = np.where(sums > 0.0, rows / np.where(sums > 0.0, sums, 1.0),
                            1.0 / A)
            cm = tables.class_map_id[nid]
            out[nid] = norm[tables.class_of[cm]]
    return out


def current_strategy(tables: TreeTables,
                     state: PipelineState) -> dict[int, np.ndarray]:
    """The live (regret-matched) strategy, lifted to hand rows."""
    out: dict[int, np.ndarray] = {}
    for p in range(2):
        for nid in tables.dec_nodes[p]:
            nid = int(nid)
            rows = infoset_rows(tables, state.strategy, nid)
            cm = tables.class_map_id[nid]
            out[nid] = rows[tables.class_of[cm]]
    return out


def run_solve(tree: GameTree, variant: VariantConfig, iterations: int,
              workers: int = 1, evaluator=None, prune_mask=None,
              bucket_map=None, convergence_every: int = 0,
              fork_mode: str = "concurrent", collect_timings: bool = False,
              tables: TreeTables | None = None) -> SolveResult:
    """2*iterations alternating passes; optional convergence checkpoints.

    Exploitability checkpoints are measured on the running average
    strategy in chips, pot fractions, and milli-big-blinds with
    bb = starting_pot / 2.
    """
    if iterations < 1:
        raise PipelineConfigError("iterations must be >= 1")
    if prune_mask is not None:
        from .abstraction_pruning import apply_prune
        tree, _, _ = apply_prune(tree, prune_mask)
        tables = None
    if tables is None:
        tables = compile_tree(tree, bucket_map=bucket_map)
    state = init_state(tables)
    timings: list[StageTimings] = []
    convergence: list[ConvergencePoint] = []
    starting_pot = tables.tree.nodes[0].pot
    wall0 = time.perf_counter()
    for it in range(1, iterations + 1):
        for _ in range(2):
            tm = run_iteration(tables, state, variant, workers, evaluator,
                               fork_mode)
            if collect_timings:
                timings.append(tm)
        if convergence_every and (it % convergence_every == 0
                                  or it == iterations):
            from .reference_oracle import exploitability
            avg = average_strategy(tables, state)
            expl = exploitability(tables.tree, avg)
            convergence.append(ConvergencePoint(
                iteration=it,
                wall_ms=(time.perf_counter() - wall0) * 1e3,
                expl_chips=expl,
                expl_pot=expl / starting_pot,
                expl_mbb=expl / (starting_pot / 2.0) * 1000.0))
    return SolveResult(avg_strategy=average_strategy(tables, state),
                       convergence=convergence, timings=timings,
                       tables=tables, state=state)
