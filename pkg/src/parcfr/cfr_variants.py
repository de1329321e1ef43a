"""Pluggable regret-update and averaging rules: CFR, CFR+, DCFR, PCFR+.

These are the plain-numpy reference implementations of the update math; the
pipeline kernels inline the same arithmetic and are validated against these
row by row.  All updates operate on a single infoset row; callers guarantee
exclusive access per row.

Average-strategy weighting is applied incrementally: at the start of a
player's accumulation in iteration t the existing cumulative strategy is
scaled by ((t-1)/t)**g, which makes iteration s's contribution proportional
to s**g after normalization (g = 0 for vanilla, 1 for CFR+, gamma for DCFR,
2 for PCFR+) without growing unbounded weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VARIANT_KINDS = ("vanilla", "cfr_plus", "dcfr", "pcfr_plus")

# config-file keys, per the external interface
VARIANT_KEYS = {"cfr": "vanilla", "cfr+": "cfr_plus", "dcfr": "dcfr",
                "pcfr+": "pcfr_plus"}


@dataclass
class VariantConfig:
    kind: str = "cfr_plus"
    dcfr_alpha: float = 1.5
    dcfr_beta: float = 0.0
    dcfr_gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if not (math.isfinite(self.dcfr_alpha) and math.isfinite(self.dcfr_beta)
                and math.isfinite(self.dcfr_gamma)):
            raise ValueError("dcfr parameters must be finite")
        if self.dcfr_gamma < 0:
            raise ValueError("dcfr_gamma must be >= 0")

    @property
    def uses_prediction(self) -> bool:
        return self.kind == "pcfr_plus"

    @property
    def averaging_exponent(self) -> float:
        """Exponent g making iteration t's strategy weight proportional to t**g."""
        return {"vanilla": 0.0, "cfr_plus": 1.0, "dcfr": self.dcfr_gamma,
                "pcfr_plus": 2.0}[self.kind]


def variant_from_key(key: str, alpha: float = 1.5, beta: float = 0.0,
                     gamma: float = 2.0) -> VariantConfig:
    """Build a VariantConfig from a config-file key (cfr, cfr+, dcfr, pcfr+)."""
    if key not in VARIANT_KEYS:
        raise ValueError(f"unknown variant {key!r}; expected one of "
                         f"{sorted(VARIANT_KEYS)}")
    return VariantConfig(kind=VARIANT_KEYS[key], dcfr_alpha=alpha,
                         dcfr_beta=beta, dcfr_gamma=gamma)


RM_UNIFORM_EPS = 1e-12


def regret_match(cum: np.ndarray) -> np.ndarray:
    """Strategy proportional to positive cumulative regrets; uniform on a
    zero denominator.  Works row-wise on the last axis.

    "Zero" is judged two ways: rows whose positive mass is below
    RM_UNIFORM_EPS of the row's total absolute regret, and rows whose
    total itself is below RM_UNIFORM_EPS (pure rounding residue), both
    fall back to uniform.  A hard >0 test would let one-ulp summation
    noise flip a row between uniform and pure, which breaks cross-checks
    between independently ordered implementations.
    """
    cum = np.asarray(cum, dtype=np.float64)
    pos = np.maximum(cum, 0.0)
    denom = pos.sum(axis=-1, keepdims=True)
    total = np.abs(cum).sum(axis=-1, keepdims=True)
    ok = (denom > RM_UNIFORM_EPS * total) & (total > RM_UNIFORM_EPS)
    uniform = np.full_like(pos, 1.0 / cum.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(ok, pos / np.where(ok, denom, 1.0), uniform)
    return out


def strategy_scale(cfg: VariantConfig, t: int) -> float:
    """Factor applied to the cumulative strategy before iteration t's
    accumulation."""
    if t < 1:
        raise ValueError("iterations are 1-based")
    g = cfg.averaging_exponent
    if t == 1:
        return 1.0 if g == 0.0 else 0.0
    return ((t - 1) / t) ** g


def discount_factors(cfg: VariantConfig, t: int) -> tuple[float, float]:
    """DCFR's (positive, negative) cumulative-regret discounts at iteration t.

    Other variants discount by 1.  Large exponents are evaluated in log
    space so that alpha -> infinity cleanly gives factor 1.
    """
    if t < 1:
        raise ValueError("iterations are 1-based")
    if cfg.kind != "dcfr":
        return 1.0, 1.0

    def factor(exponent: float) -> float:
        x = exponent * math.log(t)
        if x > 700.0:
            return 1.0
        e = math.exp(x)
        return e / (e + 1.0)

    return factor(cfg.dcfr_alpha), factor(cfg.dcfr_beta)


def update_vanilla(row: np.ndarray, r_inst: np.ndarray, t: int) -> np.ndarray:
    """Plain cumulative regret sum."""
    return row + r_inst


def update_cfr_plus(row: np.ndarray, r_inst: np.ndarray, t: int) -> np.ndarray:
    """Floor the cumulative regret at zero after each addition."""
    return np.maximum(row + r_inst, 0.0)


def update_dcfr(row: np.ndarray, r_inst: np.ndarray, t: int,
                alpha: float = 1.5, beta: float = 0.0,
                gamma: float = 2.0) -> np.ndarray:
    """Asymmetric discounting: scale positive/negative entries before adding."""
    cfg = VariantConfig(kind="dcfr", dcfr_alpha=alpha, dcfr_beta=beta,
                        dcfr_gamma=gamma)
    fpos, fneg = discount_factors(cfg, t)
    scaled = np.where(row > 0.0, row * fpos, row * fneg)
    return scaled + r_inst


def update_pcfr_plus(row: np.ndarray, r_inst: np.ndarray,
                     t: int) -> tuple[np.ndarray, np.ndarray]:
    """CFR+ style floored accumulation plus a one-step regret prediction.

    Returns (cumulative regret, prediction); the next strategy is
    regret_match(cum + pred).
    """
    cum = np.maximum(row + r_inst, 0.0)
    return cum, np.asarray(r_inst, dtype=np.float64).copy()


def next_strategy(cfg: VariantConfig, cum: np.ndarray,
                  pred: np.ndarray | None = None) -> np.ndarray:
    """The strategy used on the next pass, per variant."""
    if cfg.uses_prediction:
        if pred is None:
            raise ValueError("pcfr_plus needs a prediction row")
        return regret_match(cum + pred)
    return regret_match(cum)


def extract_average_strategy(blocks) -> dict[int, np.ndarray]:
    """Normalize cumulative strategy rows; uniform where a row is all zero.

    Accepts any iterable of InfosetBlock and returns arrays keyed by
    node_id.
    """
    out: dict[int, np.ndarray] = {}
    for block in blocks:
        cum = np.asarray(block.cum_strategy, dtype=np.float64)
        sums = cum.sum(axis=-1, keepdims=True)
        uniform = np.full_like(cum, 1.0 / cum.shape[-1])
        out[block.node_id] = np.where(sums > 0.0,
                                      cum / np.where(sums > 0.0, sums, 1.0),
                                      uniform)
    return out
