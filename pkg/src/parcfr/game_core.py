"""Public game-tree representation shared by all solvers.

Cards are plain integers in ``[0, deck_size)``.  For the 52-card deck the
encoding is ``rank * 4 + suit`` with ranks ``2..A`` mapped to ``0..12`` and
suits ordered ``c, d, h, s``.  Toy games use smaller decks with the same
integer convention.

A tree is stored flat in topological (parent-before-child) order with integer
child links.  All solver state is indexed by ``(node_id, hand, action)``.
Trees are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RANK_CHARS = "23456789TJQKA"
SUIT_CHARS = "cdhs"

DECISION = "decision"
CHANCE = "chance"
FOLD_TERMINAL = "fold_terminal"
SHOWDOWN_TERMINAL = "showdown_terminal"
LEAF = "leaf"

NODE_KINDS = (DECISION, CHANCE, FOLD_TERMINAL, SHOWDOWN_TERMINAL, LEAF)


class MalformedTreeError(Exception):
    """Raised when a traversal meets a structurally broken tree."""


def card_index(name: str) -> int:
    """Parse a card name like ``"As"`` or ``"Td"`` into a 52-deck index."""
    if len(name) != 2 or name[0] not in RANK_CHARS or name[1] not in SUIT_CHARS:
        raise ValueError(f"bad card name: {name!r}")
    return RANK_CHARS.index(name[0]) * 4 + SUIT_CHARS.index(name[1])


def card_name(index: int) -> str:
    """Format a 52-deck card index as a two-character name."""
    if not 0 <= index < 52:
        raise ValueError(f"card index out of range: {index}")
    return RANK_CHARS[index // 4] + SUIT_CHARS[index % 4]


@dataclass(frozen=True)
class HandIndex:
    """A private hand: a dense id plus its 1 or 2 card indices."""

    id: int
    cards: tuple[int, ...]

    def blocks(self, other: "HandIndex") -> bool:
        return bool(set(self.cards) & set(other.cards))


@dataclass
class PublicNode:
    node_id: int
    kind: str
    actor: int = -1
    pot: float = 0.0
    fold_amount: float = 0.0
    folder: int = -1
    actions: list[str] = field(default_factory=list)
    children: list[int] = field(default_factory=list)
    depth: int = 0


@dataclass
class GameTree:
    """Flat public tree plus the private-hand universe it is played over.

    ``chance_outcomes[n][i]`` is the board card dealt by outcome ``i`` of
    chance node ``n``; ``chance_weights[n][i]`` is its probability.  Weights
    are stored normalized (they sum to 1 over the public outcomes).
    ``rankings[z]`` gives the showdown strength per hand at showdown node
    ``z`` (larger = stronger, equal = tie).
    """

    nodes: list[PublicNode]
    deck: list[int]
    board: list[int]
    hands: list[HandIndex]
    players: int = 2
    chance_weights: dict[int, np.ndarray] = field(default_factory=dict)
    chance_outcomes: dict[int, list[int]] = field(default_factory=dict)
    rankings: dict[int, np.ndarray] = field(default_factory=dict)
    name: str = ""
    pot_scale: float | None = None

    @property
    def hands_per_player(self) -> int:
        return len(self.hands)

    @property
    def hand_size(self) -> int:
        return len(self.hands[0].cards)

    @property
    def n_deals(self) -> int:
        """Number of ordered compatible (hand, hand) deal pairs."""
        compat = 0
        for h in self.hands:
            for o in self.hands:
                if not h.blocks(o):
                    compat += 1
        return compat

    def decision_nodes(self, player: int) -> list[int]:
        return [n.node_id for n in self.nodes
                if n.kind == DECISION and n.actor == player]


@dataclass
class InfosetBlock:
    """Per (public decision node, acting player) tables over hands x actions."""

    node_id: int
    player: int
    strategy: np.ndarray
    cum_regret: np.ndarray
    cum_strategy: np.ndarray

    @classmethod
    def uniform(cls, node_id: int, player: int, n_hands: int,
                n_actions: int) -> "InfosetBlock":
        return cls(
            node_id=node_id,
            player=player,
            strategy=np.full((n_hands, n_actions), 1.0 / n_actions),
            cum_regret=np.zeros((n_hands, n_actions)),
            cum_strategy=np.zeros((n_hands, n_actions)),
        )


@dataclass
class Chain:
    """One disjoint same-player subtree of a player's decision-node forest.

    ``node_ids`` lists the player's decision nodes parent-before-child;
    ``parent_link[i]`` is ``(predecessor decision node, action index taken
    there)`` or ``None`` at the chain root.
    """

    player: int
    node_ids: list[int]
    parent_link: list[tuple[int, int] | None]


def parent_links(tree: GameTree, player: int) -> list[tuple[int, int] | None]:
    """Nearest strict same-player decision ancestor (node, action) per node."""
    links: list[tuple[int, int] | None] = [None] * len(tree.nodes)
    for node in tree.nodes:
        for aidx, child in enumerate(node.children):
            if node.kind == DECISION and node.actor == player:
                links[child] = (node.node_id, aidx)
            else:
                links[child] = links[node.node_id]
    return links


def build_infoset_forest(tree: GameTree, player: int) -> list[Chain]:
    """Partition a player's decision nodes into maximal same-player subtrees."""
    links = parent_links(tree, player)
    chain_of: dict[int, int] = {}
    chains: list[Chain] = []
    for node in tree.nodes:
        if node.kind != DECISION or node.actor != player:
            continue
        link = links[node.node_id]
        if link is None:
            chain_of[node.node_id] = len(chains)
            chains.append(Chain(player=player, node_ids=[node.node_id],
                                parent_link=[None]))
        else:
            cid = chain_of[link[0]]
            chain_of[node.node_id] = cid
            chains[cid].node_ids.append(node.node_id)
            chains[cid].parent_link.append(link)
    return chains


def topological_order(tree: GameTree) -> list[int]:
    """Parent-before-child node order; reversal gives the backward pass."""
    n = len(tree.nodes)
    indegree = [0] * n
    for node in tree.nodes:
        for child in node.children:
            if not 0 <= child < n:
                raise MalformedTreeError(
                    f"node {node.node_id} links to missing child {child}")
            indegree[child] += 1
    order = [i for i in range(n) if indegree[i] == 0]
    head = 0
    while head < len(order):
        nid = order[head]
        head += 1
        for child in tree.nodes[nid].children:
            indegree[child] -= 1
            if indegree[child] == 0:
                order.append(child)
    if len(order) != n:
        raise MalformedTreeError("cycle detected in child links")
    return order


def node_boards(tree: GameTree) -> list[tuple[int, ...]]:
    """Board cards visible at each node (root board plus chance outcomes)."""
    boards: list[tuple[int, ...]] = [()] * len(tree.nodes)
    boards[0] = tuple(tree.board)
    for node in tree.nodes:
        here = boards[node.node_id]
        outcomes = tree.chance_outcomes.get(node.node_id)
        for aidx, child in enumerate(node.children):
            if node.kind == CHANCE and outcomes is not None:
                boards[child] = here + (outcomes[aidx],)
            else:
                boards[child] = here
    return boards


def hand_mask(hands: list[HandIndex], board: tuple[int, ...] | list[int]) -> np.ndarray:
    """1.0 for hands disjoint from the board, 0.0 for blocked hands."""
    bset = set(board)
    return np.array([0.0 if set(h.cards) & bset else 1.0 for h in hands])


def validate_tree(tree: GameTree) -> str | None:
    """Check GameTree/PublicNode invariants; return the first violation.

    Returns ``None`` when the tree is valid, otherwise a diagnostic string
    naming the offending node.  Never raises for content problems.
    """
    n = len(tree.nodes)
    if n == 0:
        return "empty tree"
    seen = [0] * n
    for i, node in enumerate(tree.nodes):
        if node.node_id != i:
            return f"node {i}: stored node_id {node.node_id} disagrees with position"
        if node.kind not in NODE_KINDS:
            return f"node {i}: unknown kind {node.kind!r}"
        if node.pot <= 0:
            return f"node {i}: pot {node.pot} not positive"
        for child in node.children:
            if not 0 <= child < n:
                return f"node {i}: child {child} out of range"
            if child <= i:
                return f"node {i}: child {child} breaks parent-before-child order"
            seen[child] += 1
        if node.kind in (FOLD_TERMINAL, SHOWDOWN_TERMINAL, LEAF):
            if node.children:
                return f"node {i}: terminal/leaf has children"
        if node.kind == DECISION:
            if not node.children:
                return f"node {i}: decision node has no children"
            if len(node.children) != len(node.actions):
                return (f"node {i}: {len(node.children)} children but "
                        f"{len(node.actions)} actions")
            if not 0 <= node.actor < tree.players:
                return f"node {i}: bad actor {node.actor}"
        if node.kind == CHANCE:
            weights = tree.chance_weights.get(i)
            if weights is None:
                return f"node {i}: chance node without weights"
            if len(weights) != len(node.children):
                return f"node {i}: {len(weights)} weights for {len(node.children)} children"
            if abs(float(np.sum(weights)) - 1.0) > 1e-9:
                return f"node {i}: chance weights sum to {float(np.sum(weights)):g}"
        if node.kind == FOLD_TERMINAL:
            if node.fold_amount <= 0:
                return f"node {i}: fold_amount {node.fold_amount} not positive"
            if node.folder not in (0, 1):
                return f"node {i}: bad folder {node.folder}"
        if node.kind == SHOWDOWN_TERMINAL and i not in tree.rankings:
            return f"node {i}: showdown node without a hand ranking"
    if seen[0] != 0:
        return "node 0: root has a parent"
    for i in range(1, n):
        if seen[i] != 1:
            return f"node {i}: referenced by {seen[i]} parents"
    try:
        topological_order(tree)
    except MalformedTreeError as exc:
        return str(exc)
    return None


def dump_tree(tree: GameTree) -> str:
    """Line-oriented text dump for debugging; not a stability contract."""
    lines = []
    for node in tree.nodes:
        parts = [f"{node.node_id}", node.kind]
        if node.kind == DECISION:
            parts.append(f"actor={node.actor}")
        parts.append(f"pot={node.pot:g}")
        if node.kind == FOLD_TERMINAL:
            parts.append(f"fold_amount={node.fold_amount:g} folder={node.folder}")
        if node.actions:
            parts.append("actions=" + ",".join(node.actions))
        if node.children:
            parts.append("children=" + ",".join(str(c) for c in node.children))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
