"""Hand bucketing, hand/bucket projection, and prune-mask preprocessing.

Bucketing groups strategically identical hands so strategy tables shrink;
projection moves ranges and values between hand space and bucket space;
pruning deletes dominated actions (and their subtrees) once, before
solving.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .game_core import DECISION, GameTree, HandIndex, PublicNode
from .poker_games import enumerate_hands

PREFLOP_BUCKETS = 169


@dataclass(frozen=True)
class BucketMap:
    """Partition of the hand universe into dense bucket ids [0, B)."""

    bucket_of: np.ndarray
    B: int
    lossless: bool = False

    def validate(self) -> None:
        b = self.bucket_of
        if b.ndim != 1 or b.size == 0:
            raise ValueError("bucket_of must be a nonempty vector")
        if b.min() < 0 or b.max() >= self.B:
            raise ValueError("bucket ids out of range")
        if np.unique(b).size != self.B:
            raise ValueError("bucket ids must be dense in [0, B)")

    def sizes(self) -> np.ndarray:
        return np.bincount(self.bucket_of, minlength=self.B)


@dataclass(frozen=True)
class ProjectionMatrix:
    """Sparse 0/1 membership (hands x buckets) with one 1 per hand row."""

    membership: sparse.csr_matrix
    counts: np.ndarray

    @classmethod
    def from_bucket_map(cls, bm: BucketMap) -> "ProjectionMatrix":
        bm.validate()
        H = bm.bucket_of.shape[0]
        m = sparse.csr_matrix(
            (np.ones(H), (np.arange(H), bm.bucket_of)), shape=(H, bm.B))
        return cls(membership=m, counts=bm.sizes())


def project_range(M: ProjectionMatrix, hand_range: np.ndarray,
                  normalize: bool = False) -> np.ndarray:
    """Bucket mass = sum of member-hand mass (bucket mean if normalized)."""
    hand_range = np.asarray(hand_range, dtype=np.float64)
    if hand_range.shape[-1] != M.membership.shape[0]:
        raise ValueError(
            f"range length {hand_range.shape[-1]} != hand count "
            f"{M.membership.shape[0]}")
    out = M.membership.T @ hand_range
    if normalize:
        out = out / np.maximum(M.counts, 1)
    return out


def lift_values(M: ProjectionMatrix, bucket_values: np.ndarray) -> np.ndarray:
    """Each hand receives its bucket's value."""
    bucket_values = np.asarray(bucket_values, dtype=np.float64)
    if bucket_values.shape[-1] != M.membership.shape[1]:
        raise ValueError(
            f"value length {bucket_values.shape[-1]} != bucket count "
            f"{M.membership.shape[1]}")
    return M.membership @ bucket_values


def lossless_preflop_buckets(
        hands: list[HandIndex] | None = None) -> BucketMap:
    """169 classes: 13 pairs, 78 suited, 78 offsuit rank combinations.

    Bucket ids: pair of rank r -> r; suited (hi, lo) -> 13 + pair index;
    offsuit -> 91 + pair index, with pair index = hi*(hi-1)/2 + lo.
    """
    if hands is None:
        hands = enumerate_hands(range(52), (), 2)
    bucket_of = np.empty(len(hands), dtype=np.int64)
    for h in hands:
        a, b = h.cards
        ra, sa = a // 4, a % 4
        rb, sb = b // 4, b % 4
        hi, lo = (ra, rb) if ra > rb else (rb, ra)
        if ra == rb:
            bucket_of[h.id] = ra
        elif sa == sb:
            bucket_of[h.id] = 13 + hi * (hi - 1) // 2 + lo
        else:
            bucket_of[h.id] = 91 + hi * (hi - 1) // 2 + lo
    bm = BucketMap(bucket_of=bucket_of, B=PREFLOP_BUCKETS, lossless=True)
    bm.validate()
    return bm


def save_bucket_map(path, bm: BucketMap) -> None:
    with open(path, "w") as fh:
        for hand_id, bucket_id in enumerate(bm.bucket_of):
            fh.write(f"{hand_id} {bucket_id}\n")


def load_bucket_map(path, n_hands: int | None = None,
                    lossless: bool = False) -> BucketMap:
    """Read "hand_id bucket_id" lines; ids must cover the hand universe."""
    entries: dict[int, int] = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{ln}: expected 'hand_id bucket_id'")
            try:
                hand_id, bucket_id = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: non-integer field") from exc
            if hand_id in entries:
                raise ValueError(f"{path}:{ln}: duplicate hand {hand_id}")
            entries[hand_id] = bucket_id
    if not entries:
        raise ValueError(f"{path}: empty bucket map")
    count = n_hands if n_hands is not None else max(entries) + 1
    bucket_of = np.full(count, -1, dtype=np.int64)
    for hand_id, bucket_id in entries.items():
        if not 0 <= hand_id < count:
            raise ValueError(f"{path}: hand id {hand_id} out of range")
        bucket_of[hand_id] = bucket_id
    if np.any(bucket_of < 0):
        missing = int(np.flatnonzero(bucket_of < 0)[0])
        raise ValueError(f"{path}: hand {missing} has no bucket")
    bm = BucketMap(bucket_of=bucket_of, B=int(bucket_of.max()) + 1,
                   lossless=lossless)
    bm.validate()
    return bm


@dataclass
class PruneMask:
    """Removed flags per (decision node, action index)."""

    removed: dict[int, np.ndarray]

    @classmethod
    def empty(cls, tree: GameTree) -> "PruneMask":
        return cls(removed={
            n.node_id: np.zeros(len(n.actions), dtype=bool)
            for n in tree.nodes if n.kind == DECISION})

    def is_removed(self, node_id: int, action: int) -> bool:
        row = self.removed.get(node_id)
        return bool(row is not None and row[action])

    def validate(self, tree: GameTree) -> None:
        for node_id, row in self.removed.items():
            if not 0 <= node_id < len(tree.nodes):
                raise ValueError(f"prune mask names unknown node {node_id}")
            node = tree.nodes[node_id]
            if node.kind != DECISION:
                raise ValueError(
                    f"prune mask entry at non-decision node {node_id}")
            if row.shape[0] != len(node.actions):
                raise ValueError(
                    f"prune mask row at node {node_id} has wrong length")
            if row.all():
                raise ValueError(
                    f"prune mask removes every action at node {node_id}")


def save_prune_mask(path, mask: PruneMask) -> None:
    with open(path, "w") as fh:
        for node_id in sorted(mask.removed):
            for action in np.flatnonzero(mask.removed[node_id]):
                fh.write(f"{node_id} {action}\n")


def load_prune_mask(path, tree: GameTree) -> PruneMask:
    """Read "node_id action_index" lines naming removed actions."""
    mask = PruneMask.empty(tree)
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{ln}: expected 'node_id action_index'")
            try:
                node_id, action = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: non-integer field") from exc
            if node_id not in mask.removed:
                raise ValueError(
                    f"{path}:{ln}: node {node_id} is not a decision node")
            if not 0 <= action < mask.removed[node_id].shape[0]:
                raise ValueError(
                    f"{path}:{ln}: action {action} out of range at node "
                    f"{node_id}")
            mask.removed[node_id][action] = True
    mask.validate(tree)
    return mask


def apply_prune(tree: GameTree, mask: PruneMask):
    """Delete removed actions and their subtrees.

    Returns (pruned tree, remap, rho): remap[old_id] is the surviving
    node's new id or -1, and rho is the surviving node fraction.
    """
    mask.validate(tree)
    keep = np.zeros(len(tree.nodes), dtype=bool)
    stack = [0]
    while stack:
        nid = stack.pop()
        keep[nid] = True
        node = tree.nodes[nid]
        for a, child in enumerate(node.children):
            if node.kind == DECISION and mask.is_removed(nid, a):
                continue
            stack.append(child)
    remap = np.full(len(tree.nodes), -1, dtype=np.int64)
    remap[keep] = np.arange(int(keep.sum()))
    new_nodes: list[PublicNode] = []
    for node in tree.nodes:
        if not keep[node.node_id]:
            continue
        if node.kind == DECISION:
            kept_a = [a for a in range(len(node.actions))
                      if not mask.is_removed(node.node_id, a)]
            actions = [node.actions[a] for a in kept_a]
            children = [int(remap[node.children[a]]) for a in kept_a]
        else:
            actions = list(node.actions)
            children = [int(remap[c]) for c in node.children]
        new_nodes.append(PublicNode(
            node_id=int(remap[node.node_id]), kind=node.kind,
            actor=node.actor, pot=node.pot, fold_amount=node.fold_amount,
            folder=node.folder, actions=actions, children=children,
            depth=node.depth))
    new_tree = GameTree(
        nodes=new_nodes, deck=list(tree.deck), board=list(tree.board),
        hands=tree.hands, players=tree.players,
        chance_weights={int(remap[n]): w.copy()
                        for n, w in tree.chance_weights.items() if keep[n]},
        chance_outcomes={int(remap[n]): list(o)
                         for n, o in tree.chance_outcomes.items() if keep[n]},
        rankings={int(remap[n]): r.copy()
                  for n, r in tree.rankings.items() if keep[n]},
        name=tree.name + "/pruned" if tree.name else "pruned",
        pot_scale=tree.pot_scale)
    rho = len(new_nodes) / len(tree.nodes)
    return new_tree, remap, rho


def interval_dominance_pruner(bounds: dict[int, tuple[np.ndarray, np.ndarray]],
                              tol: float = 1e-9) -> PruneMask:
    """Remove action a iff some sibling's lower bound exceeds a's upper.

    Dominance must be strict by more than ``tol``: intervals produced by
    floating-point solves carry roundoff, and an equilibrium that mixes
    two actions makes their value intervals touch exactly, so a
    tolerance-free comparison would prune actions the equilibrium
    actually plays.  Touching or overlapping intervals always survive.
    The action with the greatest lower bound can never satisfy the
    removal test, so at least one action always survives.
    """
    removed: dict[int, np.ndarray] = {}
    for node_id, (lower, upper) in bounds.items():
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError(f"bad interval shapes at node {node_id}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError(f"non-finite interval at node {node_id}")
        if np.any(lower > upper):
            raise ValueError(f"lower > upper at node {node_id}")
        best_lower = lower.max()
        row = upper < best_lower - tol
        assert not row.all()
        removed[node_id] = row
    return PruneMask(removed=removed)
