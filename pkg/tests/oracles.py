"""Slow, independent implementations used as ground truth by the tests.

Everything here favors obviousness over speed: explicit loops, dict
recursion, and tuple-score hand comparison.  None of it shares code with
the package beyond the public tree containers, so agreement between the
two is meaningful evidence of correctness.
"""

import itertools
from fractions import Fraction

import numpy as np

from parcfr.game_core import CHANCE, DECISION, FOLD_TERMINAL, SHOWDOWN_TERMINAL

# --- independent 5-of-7 hand scoring -----------------------------------------

def card_rank(card: int) -> int:
    return card // 4


def card_suit(card: int) -> int:
    return card % 4


def score_five(cards) -> tuple:
    """Category-and-kickers score tuple for exactly five cards.

    Higher tuples beat lower ones.  Categories: 8 straight flush,
    7 quads, 6 full house, 5 flush, 4 straight, 3 trips, 2 two pair,
    1 pair, 0 high card.
    """
    assert len(cards) == 5
    ranks = sorted((card_rank(c) for c in cards), reverse=True)
    flush = len({card_suit(c) for c in cards}) == 1
    distinct = sorted(set(ranks), reverse=True)
    straight_high = None
    if len(distinct) == 5:
        if distinct[0] - distinct[4] == 4:
            straight_high = distinct[0]
        elif distinct == [12, 3, 2, 1, 0]:
            straight_high = 3
    counts = sorted(((ranks.count(r), r) for r in distinct), reverse=True)
    shape = [c for c, _ in counts]
    by_count = [r for _, r in counts]
    if flush and straight_high is not None:
        return (8, straight_high)
    if shape[0] == 4:
        return (7, by_count[0], by_count[1])
    if shape[0] == 3 and shape[1] == 2:
        return (6, by_count[0], by_count[1])
    if flush:
        return (5, *ranks)
    if straight_high is not None:
        return (4, straight_high)
    if shape[0] == 3:
        return (3, by_count[0], *by_count[1:])
    if shape[0] == 2 and shape[1] == 2:
        return (2, by_count[0], by_count[1], by_count[2])
    if shape[0] == 2:
        return (1, by_count[0], *by_count[1:])
    return (0, *ranks)


def score_best(board, hole) -> tuple:
    """Best five-card score from the board plus hole cards."""
    pool = tuple(board) + tuple(hole)
    return max(score_five(c) for c in itertools.combinations(pool, 5))


# --- quadratic range operations ----------------------------------------------

def hand_cards(hands):
    return [frozenset(h.cards) for h in hands]


def brute_counterfactual_reach(values, hands, hand_index: int) -> float:
    """Sum of opponent weights over hands disjoint from ours."""
    cards = hand_cards(hands)
    mine = cards[hand_index]
    total = 0.0
    for j, other in enumerate(cards):
        if j != hand_index and not (mine & other):
            total += float(values[j])
    return total


def brute_showdown_values(opp_range, ranking, pot, hands) -> np.ndarray:
    """Half-pot-scaled win-minus-loss sums by explicit pair comparison."""
    cards = hand_cards(hands)
    H = len(hands)
    out = np.zeros(H)
    for h in range(H):
        if ranking[h] < 0:
            continue
        acc = 0.0
        for j in range(H):
            if j == h or (cards[h] & cards[j]) or ranking[j] < 0:
                continue
            if ranking[h] > ranking[j]:
                acc += float(opp_range[j])
            elif ranking[h] < ranking[j]:
                acc -= float(opp_range[j])
        out[h] = 0.5 * pot * acc
    return out


# --- explicit tree walking ---------------------------------------------------

def compatible_deals(tree):
    """Ordered (hand for player 0, hand for player 1) disjoint pairs."""
    cards = hand_cards(tree.hands)
    board = set(tree.board)
    return [
        (i, j)
        for i, ci in enumerate(cards)
        for j, cj in enumerate(cards)
        if i != j and not (ci & cj) and not (ci | cj) & board]


def expected_value_per_deal(tree, strategies, h0: int, h1: int,
                            player: int) -> float:
    """Expected chips for ``player`` on one fixed deal.

    ``strategies`` maps decision node id to an (H, A) row-stochastic
    array.  Chance cards blocked by either hand are skipped with the
    constant per-node weight 1/(outcomes - held cards), mirroring
    uniform dealing without replacement.
    """
    cards = hand_cards(tree.hands)
    held = cards[h0] | cards[h1]
    hand_of = (h0, h1)

    def walk(nid: int) -> float:
        node = tree.nodes[nid]
        if node.kind == DECISION:
            sig = strategies[nid][hand_of[node.actor]]
            return sum(float(sig[a]) * walk(c)
                       for a, c in enumerate(node.children))
        if node.kind == CHANCE:
            outs = tree.chance_outcomes[nid]
            w = 1.0 / (len(node.children) - len(held))
            return sum(w * walk(c) for a, c in enumerate(node.children)
                       if outs[a] not in held)
        if node.kind == FOLD_TERMINAL:
            lost = node.folder == player
            return -node.fold_amount if lost else node.fold_amount
        if node.kind == SHOWDOWN_TERMINAL:
            rank = tree.rankings[nid]
            mine, theirs = rank[hand_of[player]], rank[hand_of[1 - player]]
            if mine == theirs:
                return 0.0
            return 0.5 * node.pot if mine > theirs else -0.5 * node.pot
        raise AssertionError(f"unexpected node kind {node.kind}")

    return walk(0)


def expected_value(tree, strategies, player: int = 0) -> float:
    """Average expected chips for ``player`` over all compatible deals."""
    deals = compatible_deals(tree)
    total = sum(expected_value_per_deal(tree, strategies, h0, h1, player)
                for h0, h1 in deals)
    return total / len(deals)


def enumerate_pure_strategies(tree, player: int):
    """All pure strategies for ``player`` as strategy-dict generators.

    A pure strategy picks one action per (decision node, hand); the count
    is the product of action counts and must stay enumerable (guarded at
    4096, enough for Kuhn's 64 per player).
    """
    slots = []
    for node in tree.nodes:
        if node.kind == DECISION and node.actor == player:
            for h in range(len(tree.hands)):
                slots.append((node.node_id, h, len(node.actions)))
    combo_count = 1
    for _, _, n_act in slots:
        combo_count *= n_act
    assert combo_count <= 4096, "pure strategy space too large to enumerate"
    H = len(tree.hands)
    for choice in itertools.product(*[range(n) for _, _, n in slots]):
        strat = {}
        for (nid, h, n_act), a in zip(slots, choice):
            if nid not in strat:
                strat[nid] = np.zeros((H, n_act))
            strat[nid][h, a] = 1.0
        yield strat


def best_response_by_enumeration(tree, opp_strategy, responder: int) -> float:
    """Max expected value over every pure responder strategy."""
    best = -np.inf
    for pure in enumerate_pure_strategies(tree, responder):
        profile = dict(opp_strategy)
        profile.update(pure)
        best = max(best, expected_value(tree, profile, responder))
    return best


# --- betting-line replay -----------------------------------------------------

def replay_contributions(tree, node_id: int, starting_pot: float,
                         stack: float | None = None):
    """Chips each player has put in along the path to ``node_id``.

    Reconstructs wagers from the action labels alone (check, call, fold,
    bet:X, raise:X, allin), splitting the starting pot evenly as blinds.
    The X in bet/raise labels is the chips the actor adds (for raises,
    call portion included); allin amounts are derived from the stack.
    Street-level bet matching resets at every chance node.  Returns
    (contrib_p0, contrib_p1) including the blind shares.

    Label amounts are printed with 6 significant digits, so replayed
    totals match the tree to about 1e-5 relative, not exactly.
    """
    if stack is None:
        stack = tree.pot_scale
    path = []
    target = node_id

    def dfs(nid, acc):
        if nid == target:
            path.extend(acc)
            return True
        node = tree.nodes[nid]
        for a, c in enumerate(node.children):
            if dfs(c, acc + [(nid, a)]):
                return True
        return False

    assert dfs(0, []), f"node {node_id} unreachable from the root"
    contrib = [starting_pot / 2.0, starting_pot / 2.0]
    bet_level = 0.0
    street_put = [0.0, 0.0]
    for nid, a in path:
        node = tree.nodes[nid]
        if node.kind == CHANCE:
            bet_level = 0.0
            street_put = [0.0, 0.0]
            continue
        if node.kind != DECISION:
            raise AssertionError(f"path through terminal node {nid}")
        label = node.actions[a]
        actor = node.actor
        if label in ("check", "fold"):
            continue
        if label == "call":
            amount = bet_level - street_put[actor]
        elif label == "allin":
            amount = stack + starting_pot / 2.0 - contrib[actor]
        elif label.startswith(("bet:", "raise:")):
            amount = float(label.split(":", 1)[1])
        else:
            raise AssertionError(f"unknown action label {label!r}")
        contrib[actor] += amount
        street_put[actor] += amount
        bet_level = max(bet_level, street_put[actor])
    return contrib[0], contrib[1]


# --- future-board equity -----------------------------------------------------

def _score_scalar(tup) -> int:
    """Order-preserving integer encoding of a score tuple.

    Tuples within a category share a length, so padding with trailing
    zeros and reading the six digits in base 13 keeps the ordering.
    """
    digits = tuple(tup) + (0,) * (6 - len(tup))
    out = 0
    for d in digits:
        out = out * 13 + d
    return out


def checkdown_equity(tree, node_id: int, r0, r1, boards_subset=None):
    """Check-down counterfactual values at a leaf by full enumeration.

    Board completions are enumerated from every card not on the board,
    in deck order; completions blocked by either hand contribute zero.
    The divisor is constant: the number of completions from cards held
    by neither player (exact because each hand pair sees the same count
    of unblocked completions), or the subset size when ``boards_subset``
    gives indices into the full enumeration (sampled-evaluation mode,
    which does not renormalize).
    """
    from parcfr.game_core import node_boards

    boards = node_boards(tree)
    board = tuple(boards[node_id])
    node = tree.nodes[node_id]
    need = 5 - len(board)
    cards = hand_cards(tree.hands)
    hand_size = len(tree.hands[0].cards)
    rem = [c for c in range(len(tree.deck)) if c not in board]
    completions = [tuple(c) for c in itertools.combinations(rem, need)]
    free = len(tree.deck) - len(board) - 2 * hand_size
    if need == 0:
        divisor = 1
    elif need == 1:
        divisor = free
    else:
        divisor = free * (free - 1) // 2
    if boards_subset is not None:
        completions = [completions[i] for i in boards_subset]
        divisor = len(completions)
    H = len(tree.hands)
    incidence = np.zeros((H, len(tree.deck)), dtype=bool)
    for h, cs in enumerate(cards):
        for c in cs:
            incidence[h, c] = True
    shares_card = (incidence @ incidence.T) > 0  # diagonal True
    w0 = np.asarray(r0, float)
    w1 = np.asarray(r1, float)
    values = [np.zeros(H), np.zeros(H)]
    for comp in completions:
        full_board = board + comp
        board_set = set(full_board)
        ok = np.array([not (cs & board_set) for cs in cards])
        scores = np.zeros(H, dtype=np.int64)
        for h in np.flatnonzero(ok):
            scores[h] = _score_scalar(score_best(full_board, cards[h]))
        pair_ok = np.outer(ok, ok) & ~shares_card
        sign = np.sign(scores[:, None] - scores[None, :]).astype(float)
        sign *= pair_ok
        values[0] += sign @ (w1 * ok)
        values[1] += sign @ (w0 * ok)
    half_pot = 0.5 * node.pot
    return (values[0] * half_pot / divisor, values[1] * half_pot / divisor)


# --- exact-rational CFR step (tiny games) ------------------------------------

def exact_kuhn_first_pass_regrets(tree):
    """Player-0 regrets after one uniform-profile pass, in Fractions.

    Works only for trees without chance nodes (Kuhn): enumerates deals,
    walks histories with exact arithmetic, and returns per-node regret
    tables as float arrays converted at the end.
    """
    H = len(tree.hands)
    deals = compatible_deals(tree)
    acc = {}
    for node in tree.nodes:
        if node.kind == DECISION and node.actor == 0:
            acc[node.node_id] = [[Fraction(0)] * len(node.actions)
                                 for _ in range(H)]

    for h0, h1 in deals:
        hand_of = (h0, h1)

        def walk(nid, pi_o):
            node = tree.nodes[nid]
            if node.kind == DECISION:
                n_act = len(node.actions)
                uniform = Fraction(1, n_act)
                if node.actor == 0:
                    child_vals = [walk(c, pi_o) for c in node.children]
                    v = sum(uniform * cv for cv in child_vals)
                    rows = acc[nid][h0]
                    for a, cv in enumerate(child_vals):
                        rows[a] += cv - v
                    return v
                return sum(walk(c, pi_o * uniform) for c in node.children)
            if node.kind == FOLD_TERMINAL:
                amt = Fraction(node.fold_amount) * pi_o
                return -amt if node.folder == 0 else amt
            rank = tree.rankings[nid]
            if rank[h0] == rank[h1]:
                return Fraction(0)
            half = Fraction(node.pot) * pi_o / 2
            return half if rank[h0] > rank[h1] else -half

        walk(0, Fraction(1))

    return {nid: np.array([[float(x) for x in row] for row in rows])
            for nid, rows in acc.items()}
