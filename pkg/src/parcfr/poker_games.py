"""Builders for Kuhn, Leduc, and HUNL street subgames, plus hand ranking.

All builders emit public trees over the unabstracted hand space.  Fold
terminals record the folder's total contribution to the pot (their share of
the starting pot plus everything they put in afterwards), which is exactly
the amount the folder loses; showdown payoffs are then ``±pot/2`` under the
same accounting, so the two terminal kinds are mutually consistent and
zero-sum.

Chance nodes deal one public card per node with uniform normalized weights
over the remaining public deck.  The per-deal conditional correction for
privately held cards is applied by the solvers, not stored here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit

from .game_core import (
    CHANCE,
    DECISION,
    FOLD_TERMINAL,
    LEAF,
    SHOWDOWN_TERMINAL,
    GameTree,
    HandIndex,
    PublicNode,
)

STREET_BOARD_LEN = {"preflop": 0, "flop": 3, "turn": 4, "river": 5}

DEFAULT_RAISE_SIZES = {0: (), 1: (1.0,), 2: (0.5, 1.0), 3: (0.5, 1.0, 2.0)}


@dataclass
class SubgameConfig:
    """One-street HUNL subgame description.

    ``spr`` is each player's remaining stack divided by ``starting_pot``.
    ``raise_sizes`` are pot fractions offered at every decision; a size that
    meets or exceeds the remaining stack is clamped to all-in.  With
    ``depth_limited`` the tree stops at the end of the street (leaf nodes);
    otherwise later streets are expanded through chance nodes to showdown.
    """

    street: str = "river"
    board: tuple[int, ...] = ()
    spr: float = 4.0
    n_raise: int = 2
    raise_sizes: tuple[float, ...] | None = None
    starting_pot: float = 1.0
    depth_limited: bool = True

    def resolved_sizes(self) -> tuple[float, ...]:
        if self.raise_sizes is not None:
            return tuple(self.raise_sizes)
        if self.n_raise in DEFAULT_RAISE_SIZES:
            return DEFAULT_RAISE_SIZES[self.n_raise]
        raise ValueError(
            f"no default raise sizes for n_raise={self.n_raise}; set raise_sizes")

    def validate(self) -> None:
        if self.street not in STREET_BOARD_LEN:
            raise ValueError(f"unknown street {self.street!r}")
        want = STREET_BOARD_LEN[self.street]
        if len(self.board) != want:
            raise ValueError(
                f"{self.street} board needs {want} cards, got {len(self.board)}")
        if len(set(self.board)) != len(self.board):
            raise ValueError("board cards must be distinct")
        if self.spr <= 0:
            raise ValueError("spr must be positive")
        if self.n_raise < 0:
            raise ValueError("n_raise must be nonnegative")
        if len(self.resolved_sizes()) != self.n_raise:
            raise ValueError("raise_sizes length must equal n_raise")
        if self.starting_pot <= 0:
            raise ValueError("starting_pot must be positive")


@dataclass
class HandRanking:
    """Showdown strength per hand; larger = stronger, equal rank = tie.

    Hands sharing a board card are excluded and carry rank -1.
    """

    rank: np.ndarray

    def beats(self, a: int, b: int) -> bool:
        return self.rank[a] > self.rank[b]


def enumerate_hands(deck, board, hand_size: int) -> list[HandIndex]:
    """All unordered hand_size-subsets of deck minus board, lexicographic."""
    bset = set(board)
    avail = [c for c in deck if c not in bset]
    combos = itertools.combinations(avail, hand_size)
    return [HandIndex(id=i, cards=tuple(cards)) for i, cards in enumerate(combos)]


# --- seven-card poker evaluation -------------------------------------------

_CAT_BASE = 13 ** 5


@njit(cache=True)
def _straight_top(bits):
    for top in range(12, 3, -1):
        window = 0
        for r in range(top - 4, top + 1):
            window |= 1 << r
        if bits & window == window:
            return top
    if bits & 0x100F == 0x100F:  # A,2,3,4,5 wheel
        return 3
    return -1


@njit(cache=True)
def _encode(cat, d0, d1, d2, d3, d4):
    return ((((cat * 13 + d0) * 13 + d1) * 13 + d2) * 13 + d3) * 13 + d4


@njit(cache=True)
def _score7(cards):
    rank_cnt = np.zeros(13, np.int64)
    suit_cnt = np.zeros(4, np.int64)
    suit_bits = np.zeros(4, np.int64)
    bits = 0
    for i in range(7):
        c = cards[i]
        r = c // 4
        s = c % 4
        rank_cnt[r] += 1
        suit_cnt[s] += 1
        suit_bits[s] |= 1 << r
        bits |= 1 << r
    flush_suit = -1
    for s in range(4):
        if suit_cnt[s] >= 5:
            flush_suit = s
    if flush_suit >= 0:
        st = _straight_top(suit_bits[flush_suit])
        if st >= 0:
            return _encode(8, st, 0, 0, 0, 0)
    quad = -1
    trips_hi = -1
    trips_lo = -1
    pair_hi = -1
    pair_lo = -1
    for r in range(12, -1, -1):
        n = rank_cnt[r]
        if n == 4:
            quad = r
        elif n == 3:
            if trips_hi < 0:
                trips_hi = r
            elif trips_lo < 0:
                trips_lo = r
        elif n == 2:
            if pair_hi < 0:
                pair_hi = r
            elif pair_lo < 0:
                pair_lo = r
    if quad >= 0:
        kick = -1
        for r in range(12, -1, -1):
            if r != quad and rank_cnt[r] > 0:
                kick = r
                break
        return _encode(7, quad, kick, 0, 0, 0)
    if trips_hi >= 0 and (trips_lo >= 0 or pair_hi >= 0):
        pair_part = trips_lo if trips_lo > pair_hi else pair_hi
        return _encode(6, trips_hi, pair_part, 0, 0, 0)
    if flush_suit >= 0:
        d = np.zeros(5, np.int64)
        k = 0
        for r in range(12, -1, -1):
            if suit_bits[flush_suit] & (1 << r) and k < 5:
                d[k] = r
                k += 1
        return _encode(5, d[0], d[1], d[2], d[3], d[4])
    st = _straight_top(bits)
    if st >= 0:
        return _encode(4, st, 0, 0, 0, 0)
    if trips_hi >= 0:
        d = np.zeros(2, np.int64)
        k = 0
        for r in range(12, -1, -1):
            if r != trips_hi and rank_cnt[r] > 0 and k < 2:
                d[k] = r
                k += 1
        return _encode(3, trips_hi, d[0], d[1], 0, 0)
    if pair_hi >= 0 and pair_lo >= 0:
        kick = -1
        for r in range(12, -1, -1):
            if r != pair_hi and r != pair_lo and rank_cnt[r] > 0:
                kick = r
                break
        return _encode(2, pair_hi, pair_lo, kick, 0, 0)
    if pair_hi >= 0:
        d = np.zeros(3, np.int64)
        k = 0
        for r in range(12, -1, -1):
            if r != pair_hi and rank_cnt[r] > 0 and k < 3:
                d[k] = r
                k += 1
        return _encode(1, pair_hi, d[0], d[1], d[2], 0)
    d = np.zeros(5, np.int64)
    k = 0
    for r in range(12, -1, -1):
        if rank_cnt[r] > 0 and k < 5:
            d[k] = r
            k += 1
    return _encode(0, d[0], d[1], d[2], d[3], d[4])


@njit(cache=True)
def _scores_vs_board(board, c1, c2):
    n = c1.shape[0]
    out = np.empty(n, np.int64)
    cards = np.empty(7, np.int64)
    for i in range(n):
        blocked = False
        for j in range(5):
            if board[j] == c1[i] or board[j] == c2[i]:
                blocked = True
        if blocked:
            out[i] = -1
            continue
        for j in range(5):
            cards[j] = board[j]
        cards[5] = c1[i]
        cards[6] = c2[i]
        out[i] = _score7(cards)
    return out


def score_seven(cards: tuple[int, ...]) -> int:
    """Score a full 7-card combination (board plus hand)."""
    return int(_score7(np.asarray(cards, dtype=np.int64)))


def rank_hands(board, hands: list[HandIndex]) -> HandRanking:
    """Standard best-5-of-7 evaluation against a 5-card board.

    Returns dense ranks (0 = weakest present class); hands blocked by the
    board get rank -1.
    """
    if len(board) != 5:
        raise ValueError("rank_hands needs a 5-card board")
    board_arr = np.asarray(board, dtype=np.int64)
    c1 = np.array([h.cards[0] for h in hands], dtype=np.int64)
    c2 = np.array([h.cards[1] for h in hands], dtype=np.int64)
    scores = _scores_vs_board(board_arr, c1, c2)
    ranks = np.full(len(hands), -1, dtype=np.int64)
    valid = scores >= 0
    if np.any(valid):
        _, inverse = np.unique(scores[valid], return_inverse=True)
        ranks[valid] = inverse
    return HandRanking(rank=ranks)


# --- tree builders ----------------------------------------------------------


class _TreeAccumulator:
    """Appends nodes in preorder so ids come out parent-before-child."""

    def __init__(self):
        self.nodes: list[PublicNode] = []
        self.chance_weights: dict[int, np.ndarray] = {}
        self.chance_outcomes: dict[int, list[int]] = {}
        self.rankings: dict[int, np.ndarray] = {}

    def add(self, kind: str, **kw) -> PublicNode:
        node = PublicNode(node_id=len(self.nodes), kind=kind, **kw)
        self.nodes.append(node)
        return node


def build_kuhn() -> GameTree:
    """Standard 3-card Kuhn poker: 1-chip antes, bet size 1."""
    acc = _TreeAccumulator()
    rank = np.array([0, 1, 2], dtype=np.int64)

    root = acc.add(DECISION, actor=0, pot=2.0, actions=["check", "bet:1"])
    n_check = acc.add(DECISION, actor=1, pot=2.0, actions=["check", "bet:1"])
    n_bet = acc.add(DECISION, actor=1, pot=3.0, actions=["fold", "call"])
    root.children = [n_check.node_id, n_bet.node_id]

    sd_cc = acc.add(SHOWDOWN_TERMINAL, pot=2.0)
    n_cb = acc.add(DECISION, actor=0, pot=3.0, actions=["fold", "call"])
    n_check.children = [sd_cc.node_id, n_cb.node_id]

    f_cb = acc.add(FOLD_TERMINAL, pot=3.0, fold_amount=1.0, folder=0)
    sd_cbc = acc.add(SHOWDOWN_TERMINAL, pot=4.0)
    n_cb.children = [f_cb.node_id, sd_cbc.node_id]

    f_b = acc.add(FOLD_TERMINAL, pot=3.0, fold_amount=1.0, folder=1)
    sd_bc = acc.add(SHOWDOWN_TERMINAL, pot=4.0)
    n_bet.children = [f_b.node_id, sd_bc.node_id]

    for node in acc.nodes:
        if node.kind == SHOWDOWN_TERMINAL:
            acc.rankings[node.node_id] = rank.copy()

    return GameTree(
        nodes=acc.nodes,
        deck=[0, 1, 2],
        board=[],
        hands=[HandIndex(i, (i,)) for i in range(3)],
        chance_weights=acc.chance_weights,
        chance_outcomes=acc.chance_outcomes,
        rankings=acc.rankings,
        name="kuhn",
    )


def _leduc_rank(board_card: int) -> np.ndarray:
    """Leduc showdown strength: pairing the board dominates, then card rank."""
    ranks = np.empty(6, dtype=np.int64)
    for h in range(6):
        if h == board_card:
            ranks[h] = -1
        elif h // 2 == board_card // 2:
            ranks[h] = 100 + h // 2
        else:
            ranks[h] = h // 2
    return ranks


def build_leduc() -> GameTree:
    """6-card Leduc hold'em: 3 ranks x 2 suits, antes 1, bets 2 then 4."""
    acc = _TreeAccumulator()
    bet_size = {1: 2.0, 2: 4.0}

    def betting(rnd: int, contrib: list[float], to_act: int, n_bets: int,
                to_call: float, board_card: int) -> int:
        pot = contrib[0] + contrib[1]
        node = acc.add(DECISION, actor=to_act, pot=pot)
        actions: list[str] = []
        children: list[int] = []
        bet = bet_size[rnd]
        if to_call == 0:
            actions.append("check")
            if n_bets == 0 and to_act == 0:
                children.append(betting(rnd, contrib, 1, 0, 0.0, board_card))
            else:
                children.append(close(rnd, contrib, board_card))
            actions.append(f"bet:{bet:g}")
            c2 = contrib.copy()
            c2[to_act] += bet
            children.append(betting(rnd, c2, 1 - to_act, 1, bet, board_card))
        else:
            actions.append("fold")
            fold = acc.add(FOLD_TERMINAL, pot=pot,
                           fold_amount=contrib[to_act], folder=to_act)
            children.append(fold.node_id)
            actions.append("call")
            c2 = contrib.copy()
            c2[to_act] += to_call
            children.append(close(rnd, c2, board_card))
            if n_bets < 2:
                actions.append(f"raise:{to_call + bet:g}")
                c3 = contrib.copy()
                c3[to_act] += to_call + bet
                children.append(
                    betting(rnd, c3, 1 - to_act, n_bets + 1, bet, board_card))
        node.actions = actions
        node.children = children
        return node.node_id

    def close(rnd: int, contrib: list[float], board_card: int) -> int:
        pot = contrib[0] + contrib[1]
        if rnd == 1:
            node = acc.add(CHANCE, pot=pot)
            node.actions = [f"deal:{c}" for c in range(6)]
            node.children = [betting(2, contrib, 0, 0, 0.0, c) for c in range(6)]
            acc.chance_weights[node.node_id] = np.full(6, 1.0 / 6.0)
            acc.chance_outcomes[node.node_id] = list(range(6))
            return node.node_id
        node = acc.add(SHOWDOWN_TERMINAL, pot=pot)
        acc.rankings[node.node_id] = _leduc_rank(board_card)
        return node.node_id

    betting(1, [1.0, 1.0], 0, 0, 0.0, -1)

    return GameTree(
        nodes=acc.nodes,
        deck=list(range(6)),
        board=[],
        hands=[HandIndex(i, (i,)) for i in range(6)],
        chance_weights=acc.chance_weights,
        chance_outcomes=acc.chance_outcomes,
        rankings=acc.rankings,
        name="leduc",
    )


_NEXT_STREET = {"preflop": "flop", "flop": "turn", "turn": "river"}


def build_hunl_subgame(cfg: SubgameConfig) -> GameTree:
    """Betting tree for one street with config-driven raise sizing.

    Raises put in the call amount plus a pot fraction of the pot after the
    call; amounts exceeding the remaining stack are clamped to all-in, and
    sizes that collapse to the same amount are deduplicated.
    """
    cfg.validate()
    sizes = cfg.resolved_sizes()
    hands = enumerate_hands(range(52), cfg.board, 2)
    acc = _TreeAccumulator()
    stack = cfg.spr * cfg.starting_pot
    ranking_cache: dict[tuple[int, ...], np.ndarray] = {}

    def ranking_for(board: tuple[int, ...]) -> np.ndarray:
        if board not in ranking_cache:
            ranking_cache[board] = rank_hands(board, hands).rank
        return ranking_cache[board]

    def street_len(street: str) -> int:
        return STREET_BOARD_LEN[street]

    def betting(street: str, board: tuple[int, ...], contrib: list[float],
                to_act: int, checks: int, to_call: float) -> int:
        pot = contrib[0] + contrib[1]
        remaining = stack + cfg.starting_pot / 2.0 - contrib[to_act]
        node = acc.add(DECISION, actor=to_act, pot=pot)
        actions: list[str] = []
        children: list[int] = []

        def add_wagers(base_amount_fn):
            seen: set[float] = set()
            for frac in sizes:
                amount = base_amount_fn(frac)
                amount = min(amount, remaining)
                if amount <= to_call or amount in seen:
                    continue
                seen.add(amount)
                kind = "raise" if to_call > 0 else "bet"
                label = "allin" if amount >= remaining else f"{kind}:{amount:g}"
                if label in actions:
                    continue
                actions.append(label)
                c2 = contrib.copy()
                c2[to_act] += amount
                children.append(
                    betting(street, board, c2, 1 - to_act, 0,
                            amount - to_call))

        if to_call == 0:
            actions.append("check")
            if checks == 0:
                children.append(
                    betting(street, board, contrib, 1 - to_act, 1, 0.0))
            else:
                children.append(close(street, board, contrib))
            if remaining > 0:
                add_wagers(lambda frac: frac * pot)
        else:
            actions.append("fold")
            fold = acc.add(FOLD_TERMINAL, pot=pot,
                           fold_amount=contrib[to_act], folder=to_act)
            children.append(fold.node_id)
            actions.append("call")
            c2 = contrib.copy()
            c2[to_act] += to_call
            children.append(close(street, board, c2))
            if remaining > to_call:
                add_wagers(lambda frac: to_call + frac * (pot + to_call))
        node.actions = actions
        node.children = children
        return node.node_id

    def close(street: str, board: tuple[int, ...], contrib: list[float]) -> int:
        pot = contrib[0] + contrib[1]
        if street == "river":
            node = acc.add(SHOWDOWN_TERMINAL, pot=pot)
            acc.rankings[node.node_id] = ranking_for(board)
            return node.node_id
        if cfg.depth_limited:
            node = acc.add(LEAF, pot=pot)
            return node.node_id
        return deal(street, board, contrib, street_len(_NEXT_STREET[street]))

    def deal(street: str, board: tuple[int, ...], contrib: list[float],
             target_len: int) -> int:
        pot = contrib[0] + contrib[1]
        node = acc.add(CHANCE, pot=pot)
        outcomes = [c for c in range(52) if c not in board]
        node.actions = [f"deal:{c}" for c in outcomes]
        acc.chance_weights[node.node_id] = np.full(len(outcomes),
                                                   1.0 / len(outcomes))
        acc.chance_outcomes[node.node_id] = outcomes
        children = []
        for c in outcomes:
            b2 = board + (c,)
            if len(b2) < target_len:
                children.append(deal(street, b2, contrib, target_len))
            else:
                nxt = _NEXT_STREET[street]
                all_in = contrib[0] >= stack + cfg.starting_pot / 2.0
                if all_in:
                    children.append(close_all_in(nxt, b2, contrib))
                else:
                    children.append(betting(nxt, b2, contrib, 0, 0, 0.0))
        node.children = children
        return node.node_id

    def close_all_in(street: str, board: tuple[int, ...],
                     contrib: list[float]) -> int:
        pot = contrib[0] + contrib[1]
        if street == "river":
            node = acc.add(SHOWDOWN_TERMINAL, pot=pot)
            acc.rankings[node.node_id] = ranking_for(board)
            return node.node_id
        return deal(street, board, contrib, street_len(_NEXT_STREET[street]))

    half = cfg.starting_pot / 2.0
    betting(cfg.street, tuple(cfg.board), [half, half], 0, 0, 0.0)

    tree = GameTree(
        nodes=acc.nodes,
        deck=list(range(52)),
        board=list(cfg.board),
        hands=hands,
        chance_weights=acc.chance_weights,
        chance_outcomes=acc.chance_outcomes,
        rankings=acc.rankings,
        name=f"hunl_{cfg.street}_spr{cfg.spr:g}_r{cfg.n_raise}",
        pot_scale=stack,
    )
    return tree


def count_infosets(tree: GameTree, player: int | None = None) -> int:
    """Information sets = (decision node, unblocked private hand) pairs."""
    from .game_core import hand_mask, node_boards

    boards = node_boards(tree)
    total = 0
    for node in tree.nodes:
        if node.kind != DECISION:
            continue
        if player is not None and node.actor != player:
            continue
        total += int(hand_mask(tree.hands, boards[node.node_id]).sum())
    return total
