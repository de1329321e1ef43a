"""Batched depth-limited leaf evaluation.

Evaluators share one contract: a callable taking the m x d input matrix X
and returning an m x k value matrix, k = hands x players.  Outputs are
reach-unweighted per-hand values; the pipeline applies opponent
counterfactual reach afterwards.  Invocation counts are instrumented so
tests can assert one backend call per pass.

Input row layout (version 1): board one-hot over the deck, pot divided by
the recorded pot scale (the starting stack when the game defines one),
then each player's range normalized to sum 1 (all zeros when the range is
empty).
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .game_core import LEAF, GameTree, hand_mask, node_boards

LAYOUT_VERSION = 1

EVALUATOR_KINDS = ("equity_oracle", "synthetic_net", "external")

_MAGIC = b"PARCFRNN"


class EvaluatorConfigError(ValueError):
    """Evaluator and batch dimensions disagree, or a bad construction."""


@dataclass(frozen=True)
class LayoutDescriptor:
    """Versioned description of the leaf input row layout."""

    deck_size: int
    hands: int
    pot_scale: float
    version: int = LAYOUT_VERSION

    @property
    def input_dim(self) -> int:
        return self.deck_size + 1 + 2 * self.hands

    @property
    def output_dim(self) -> int:
        return 2 * self.hands

    @property
    def pot_index(self) -> int:
        return self.deck_size

    def range_slice(self, player: int) -> slice:
        start = self.deck_size + 1 + player * self.hands
        return slice(start, start + self.hands)

    @classmethod
    def from_tree(cls, tree: GameTree, pot_scale: float | None = None):
        if pot_scale is None:
            pot_scale = tree.pot_scale
        if pot_scale is None:
            pot_scale = max(node.pot for node in tree.nodes)
        return cls(deck_size=len(tree.deck), hands=tree.hands_per_player,
                   pot_scale=float(pot_scale))


@dataclass
class LeafBatch:
    inputs: np.ndarray
    leaf_node_ids: np.ndarray
    layout: LayoutDescriptor


@dataclass
class LeafValues:
    values: np.ndarray


@dataclass(frozen=True)
class EvaluatorSpec:
    kind: str
    input_dim: int
    output_dim: int
    seed: int | None = None


def encode_leaf_input(layout: LayoutDescriptor, board, pot: float,
                      r0: np.ndarray, r1: np.ndarray) -> np.ndarray:
    """One input row; positive scaling of either range leaves it unchanged."""
    row = np.zeros(layout.input_dim)
    for c in board:
        row[c] = 1.0
    row[layout.pot_index] = pot / layout.pot_scale
    for p, r in ((0, r0), (1, r1)):
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise ValueError("ranges must be nonnegative")
        s = r.sum()
        if s > 0.0:
            row[layout.range_slice(p)] = r / s
    return row


def antisymmetrize(raw: np.ndarray, X: np.ndarray,
                   layout: LayoutDescriptor) -> np.ndarray:
    """Project raw outputs onto exactly antisymmetric, zero-sum values.

    The two player blocks are first antisymmetrized (v0 = -v1), then the
    component along q0 - q1 is removed so that the range-weighted player
    values sum to zero: <q0, v0> + <q1, v1> = <q0 - q1, v0> = 0.
    """
    H = layout.hands
    a = 0.5 * (raw[:, :H] - raw[:, H:])
    g = X[:, layout.range_slice(0)] - X[:, layout.range_slice(1)]
    gg = np.einsum("ij,ij->i", g, g)
    ga = np.einsum("ij,ij->i", g, a)
    coef = np.divide(ga, gg, out=np.zeros_like(gg), where=gg > 0.0)
    v0 = a - coef[:, None] * g
    return np.hstack([v0, -v0])


class _CountingEvaluator:
    """Base class tracking backend invocations and rows evaluated."""

    spec: EvaluatorSpec

    def __init__(self):
        self.calls = 0
        self.rows = 0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.spec.input_dim:
            raise EvaluatorConfigError(
                f"expected input dim {self.spec.input_dim}, "
                f"got shape {X.shape}")
        self.calls += 1
        self.rows += X.shape[0]
        return self._evaluate(X)

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class _FbTables:
    """Future-board completions and per-completion rankings for one board."""

    fb_mask: np.ndarray
    rk_sorted: np.ndarray
    rk_sort_off: np.ndarray
    rk_bounds: np.ndarray
    rk_bounds_off: np.ndarray
    inv_nf: float


def _future_boards(deck_size: int, board, hand_size: int,
                   sample_boards: int | None, seed: int):
    rem = [c for c in range(deck_size) if c not in board]
    k = 5 - len(board)
    if k == 0:
        fbs = [()]
    elif k == 1:
        fbs = [(c,) for c in rem]
    elif k == 2:
        fbs = [(a, b) for i, a in enumerate(rem) for b in rem[i + 1:]]
    else:
        raise EvaluatorConfigError(
            f"board of length {len(board)} has no 5-card completion path")
    free = deck_size - len(board) - 2 * hand_size
    if k == 0:
        n_f = 1
    elif k == 1:
        n_f = free
    else:
        n_f = free * (free - 1) // 2
    if sample_boards is not None and sample_boards < len(fbs):
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(fbs), size=sample_boards, replace=False))
        fbs = [fbs[i] for i in idx]
        n_f = sample_boards
    return fbs, n_f


def _build_fb_tables(tree: GameTree, board, sample_boards: int | None,
                     seed: int) -> _FbTables:
    from .poker_games import rank_hands

    hands = tree.hands
    H = len(hands)
    c1 = np.array([h.cards[0] for h in hands], dtype=np.int64)
    c2 = np.array([h.cards[-1] for h in hands], dtype=np.int64)
    fbs, n_f = _future_boards(len(tree.deck), board, tree.hand_size,
                              sample_boards, seed)
    fb_mask = np.ones((len(fbs), H))
    sorted_parts, bounds_parts = [], []
    sort_off = np.zeros(len(fbs) + 1, dtype=np.int64)
    bounds_off = np.zeros(len(fbs) + 1, dtype=np.int64)
    for i, fb in enumerate(fbs):
        for c in fb:
            fb_mask[i] *= (c1 != c) & (c2 != c)
        full = tuple(board) + fb
        rank = rank_hands(full, hands).rank
        valid = np.flatnonzero(rank >= 0)
        order = valid[np.argsort(rank[valid], kind="stable")]
        rsorted = rank[order]
        changes = np.flatnonzero(np.diff(rsorted)) + 1
        bounds = np.concatenate([[0], changes, [order.shape[0]]])
        sorted_parts.append(order.astype(np.int64))
        bounds_parts.append(bounds.astype(np.int64))
        sort_off[i + 1] = sort_off[i] + order.shape[0]
        bounds_off[i + 1] = bounds_off[i] + bounds.shape[0]
    return _FbTables(
        fb_mask=fb_mask,
        rk_sorted=np.concatenate(sorted_parts),
        rk_sort_off=sort_off,
        rk_bounds=np.concatenate(bounds_parts),
        rk_bounds_off=bounds_off,
        inv_nf=1.0 / n_f,
    )


class EquityOracleEvaluator(_CountingEvaluator):
    """Exact check-down evaluator: uniform remaining board, no betting.

    ``sample_boards`` restricts each leaf's completion set to a seeded
    uniform subsample; completions blocked for a deal contribute zero and
    the divisor stays the sample size, so sampled values are the exact
    average over the sampled completion list.
    """

    def __init__(self, tree: GameTree, layout: LayoutDescriptor | None = None,
                 sample_boards: int | None = None, seed: int = 0):
        super().__init__()
        if tree.hand_size != 2:
            raise EvaluatorConfigError(
                "equity oracle requires two-card hands and a 5-card runout")
        self.layout = layout or LayoutDescriptor.from_tree(tree)
        self.spec = EvaluatorSpec(kind="equity_oracle",
                                  input_dim=self.layout.input_dim,
                                  output_dim=self.layout.output_dim,
                                  seed=seed)
        hands = tree.hands
        self._c1 = np.array([h.cards[0] for h in hands], dtype=np.int64)
        self._c2 = np.array([h.cards[-1] for h in hands], dtype=np.int64)
        self._tables: dict[tuple[int, ...], _FbTables] = {}
        boards = node_boards(tree)
        for node in tree.nodes:
            if node.kind != LEAF:
                continue
            sig = tuple(sorted(boards[node.node_id]))
            if sig not in self._tables:
                self._tables[sig] = _build_fb_tables(tree, sig, sample_boards,
                                                     seed)

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        lay = self.layout
        H = lay.hands
        out = np.zeros((X.shape[0], 2 * H))
        half_pots = 0.5 * X[:, lay.pot_index] * lay.pot_scale
        sigs = [tuple(np.flatnonzero(X[i, :lay.deck_size] > 0.5))
                for i in range(X.shape[0])]
        groups: dict[tuple[int, ...], list[int]] = {}
        for i, sig in enumerate(sigs):
            groups.setdefault(sig, []).append(i)
        for sig, rows_list in groups.items():
            if sig not in self._tables:
                self._tables[sig] = _build_fb_tables(
                    _TreeView(self), sig, None, 0)
            tab = self._tables[sig]
            rows = np.asarray(rows_list, dtype=np.int64)
            hp = np.ascontiguousarray(half_pots[rows])
            for hero in range(2):
                q_opp = np.ascontiguousarray(X[rows][:, lay.range_slice(
                    1 - hero)])
                w = _kernels.equity_accumulate(
                    q_opp, hp, tab.fb_mask, tab.rk_sorted, tab.rk_sort_off,
                    tab.rk_bounds, tab.rk_bounds_off, self._c1, self._c2,
                    np.int64(lay.deck_size)) * tab.inv_nf
                ie = _kernels.ie_rows(q_opp, self._c1, self._c2,
                                      np.int64(lay.deck_size))
                vhat = np.divide(w, ie, out=np.zeros_like(w), where=ie > 0.0)
                out[rows, hero * H:(hero + 1) * H] = vhat
        return out


class _TreeView:
    """Minimal tree facade so cache misses can rebuild completion tables."""

    def __init__(self, ev: EquityOracleEvaluator):
        self.deck = list(range(ev.layout.deck_size))
        self.hand_size = 2
        self.hands = [_Hand(a, b) for a, b in zip(ev._c1, ev._c2)]


class _Hand:
    __slots__ = ("cards",)

    def __init__(self, a, b):
        self.cards = (int(a), int(b))


class SyntheticNetEvaluator(_CountingEvaluator):
    """Two dense tanh layers with seed-determined weights.

    A performance-shape stand-in, not a trained model.  Outputs are
    antisymmetrized so the two player blocks negate each other and the
    range-weighted player values sum to zero.
    """

    def __init__(self, layout: LayoutDescriptor, seed: int = 0,
                 hidden: int = 64):
        super().__init__()
        self.layout = layout
        self.spec = EvaluatorSpec(kind="synthetic_net",
                                  input_dim=layout.input_dim,
                                  output_dim=layout.output_dim, seed=seed)
        rng = np.random.default_rng(seed)
        d, k = layout.input_dim, layout.output_dim
        self.weights = [
            (rng.standard_normal((d, hidden)) / np.sqrt(d),
             0.1 * rng.standard_normal(hidden)),
            (rng.standard_normal((hidden, k)) / np.sqrt(hidden),
             0.1 * rng.standard_normal(k)),
        ]

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        raw = _forward(self.weights, X)
        return antisymmetrize(raw, X, self.layout)


class ExternalMLPEvaluator(_CountingEvaluator):
    """MLP loaded from a weight bundle file (kind=external)."""

    def __init__(self, layout: LayoutDescriptor, weights, antisym: bool):
        super().__init__()
        if weights[0][0].shape[0] != layout.input_dim or \
                weights[-1][0].shape[1] != layout.output_dim:
            raise EvaluatorConfigError(
                "weight bundle dimensions do not match the leaf layout")
        self.layout = layout
        self.weights = weights
        self.antisym = antisym
        self.spec = EvaluatorSpec(kind="external",
                                  input_dim=layout.input_dim,
                                  output_dim=layout.output_dim)

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        raw = _forward(self.weights, X)
        if self.antisym:
            raw = antisymmetrize(raw, X, self.layout)
        return raw


def _forward(weights, X: np.ndarray) -> np.ndarray:
    z = X
    for i, (W, b) in enumerate(weights):
        z = z @ W + b
        if i < len(weights) - 1:
            z = np.tanh(z)
    return z


def save_mlp(path, weights, antisym: bool = True) -> None:
    """Write a weight bundle: header plus row-major float64 LE blocks."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", 1, 1 if antisym else 0, len(weights)))
        for W, b in weights:
            fh.write(struct.pack("<II", W.shape[0], W.shape[1]))
        for W, b in weights:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_mlp(path):
    """Read a weight bundle; returns (weights, antisym)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise EvaluatorConfigError(f"{path}: not a weight bundle")
    version, antisym, n_layers = struct.unpack_from("<III", data, 8)
    if version != 1:
        raise EvaluatorConfigError(f"{path}: unsupported version {version}")
    off = 20
    dims = []
    for _ in range(n_layers):
        rows, cols = struct.unpack_from("<II", data, off)
        dims.append((rows, cols))
        off += 8
    weights = []
    for rows, cols in dims:
        W = np.frombuffer(data, dtype="<f8", count=rows * cols,
                          offset=off).reshape(rows, cols).copy()
        off += 8 * rows * cols
        b = np.frombuffer(data, dtype="<f8", count=cols, offset=off).copy()
        off += 8 * cols
        weights.append((W, b))
    if off != len(data):
        raise EvaluatorConfigError(f"{path}: trailing bytes in weight bundle")
    return weights, bool(antisym)


def make_evaluator(kind: str, tree: GameTree | None = None,
                   layout: LayoutDescriptor | None = None, seed: int = 0,
                   hidden: int = 64, path=None,
                   sample_boards: int | None = None) -> _CountingEvaluator:
    if layout is None:
        if tree is None:
            raise EvaluatorConfigError("need a tree or an explicit layout")
        layout = LayoutDescriptor.from_tree(tree)
    if kind == "equity_oracle":
        if tree is None:
            raise EvaluatorConfigError("equity oracle needs the game tree")
        return EquityOracleEvaluator(tree, layout, sample_boards, seed)
    if kind == "synthetic_net":
        return SyntheticNetEvaluator(layout, seed, hidden)
    if kind == "external":
        if path is None:
            raise EvaluatorConfigError("external evaluator needs a path")
        weights, antisym = load_mlp(path)
        return ExternalMLPEvaluator(layout, weights, antisym)
    raise EvaluatorConfigError(
        f"unknown evaluator kind {kind!r}; expected one of "
        f"{', '.join(EVALUATOR_KINDS)}")


def evaluate_batch(evaluator: _CountingEvaluator,
                   batch: LeafBatch) -> LeafValues:
    """One backend invocation for the whole batch (none when it is empty)."""
    m = batch.inputs.shape[0]
    if m == 0:
        return LeafValues(values=np.zeros((0, evaluator.spec.output_dim)))
    if batch.inputs.shape[1] != evaluator.spec.input_dim:
        raise EvaluatorConfigError(
            f"batch dim {batch.inputs.shape[1]} != evaluator dim "
            f"{evaluator.spec.input_dim}")
    values = evaluator(batch.inputs)
    if values.shape != (m, evaluator.spec.output_dim):
        raise EvaluatorConfigError(
            f"evaluator returned shape {values.shape}, expected "
            f"{(m, evaluator.spec.output_dim)}")
    if not np.all(np.isfinite(values)):
        raise EvaluatorConfigError("evaluator produced non-finite values")
    return LeafValues(values=values)


def equity_oracle(tree: GameTree, node_id: int, r0: np.ndarray,
                  r1: np.ndarray, sample_boards: int | None = None,
                  seed: int = 0):
    """Counterfactual check-down values for both players at one node.

    Enumerates the remaining board uniformly and averages showdown values
    at the node's pot; outputs are opponent-reach-weighted.
    """
    node = tree.nodes[node_id]
    board = tuple(sorted(node_boards(tree)[node_id]))
    tab = _build_fb_tables(tree, board, sample_boards, seed)
    mask = hand_mask(tree.hands, board)
    c1 = np.array([h.cards[0] for h in tree.hands], dtype=np.int64)
    c2 = np.array([h.cards[-1] for h in tree.hands], dtype=np.int64)
    half = np.array([0.5 * node.pot])
    outs = []
    for r_opp in (np.asarray(r1, float) * mask, np.asarray(r0, float) * mask):
        w = _kernels.equity_accumulate(
            np.ascontiguousarray(r_opp[None, :]), half, tab.fb_mask,
            tab.rk_sorted, tab.rk_sort_off, tab.rk_bounds, tab.rk_bounds_off,
            c1, c2, np.int64(len(tree.deck)))
        outs.append(w[0] * tab.inv_nf)
    return outs[0], outs[1]
