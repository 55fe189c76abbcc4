"""Evaluation measures for patch prediction.

Ranking measures (MPR, top-k accuracy) read the 16 class scores of one
parameter, rank the true class, and normalize.  Score ties are broken by a
seeded random priority per instance, so a constant model lands at the
random baseline (~50 MPR) instead of scoring optimistically.

Spectral measures compare log-spectrograms (Frobenius distance, Pearson
correlation) and full-spectrum magnitudes (Pearson correlation) between an
input sound and its re-rendered reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .params import NUM_CLASSES, PARAM_IDS

PARAM_GROUPS: dict[str, tuple[str, ...]] = {
    "Filter": ("f_cut", "q"),
    "Notes": ("f_saw", "f_sin", "f_sqr", "f_tri"),
    "AmplitudeLFO": ("B_saw", "B_sin", "B_sqr", "B_tri"),
    "FrequencyLFO": ("v_saw", "v_sin", "v_sqr", "v_tri"),
    "OscillatorsAmplitude": ("A_saw", "A_sin", "A_sqr", "A_tri"),
    "AmplitudeADSR": ("a", "d", "s", "r"),
    "All": tuple(PARAM_IDS),
}

TOP_K_MAX = 5


def tie_priorities(n: int, seed) -> np.ndarray:
    """Per-instance random tie-break priorities, shape (n, 16).  Shared by
    the rank implementation and any reference re-implementation so both
    resolve equal scores identically."""
    return np.random.default_rng(seed).random((n, NUM_CLASSES))


def rank_true_class(scores, true_class, tie_seed=0) -> np.ndarray:
    """Zero-based descending rank of the true class per instance.

    An instance's true class is outranked by classes with strictly greater
    scores, and by equal-scored classes that win the seeded priority draw.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(true_class)
    if s.ndim != 2 or s.shape[1] != NUM_CLASSES:
        raise InputError(f"expected (n, {NUM_CLASSES}) scores, got {s.shape}")
    if t.shape != (s.shape[0],):
        raise InputError("true_class length does not match scores")
    if t.min(initial=0) < 0 or t.max(initial=0) >= NUM_CLASSES:
        raise InputError("class indices must lie in 0..15")
    prio = tie_priorities(s.shape[0], tie_seed)
    # stable sort on (score desc, priority desc); rank = position of truth
    order = np.lexsort((-prio, -s), axis=1)
    ranks = np.empty_like(order)
    rows = np.arange(s.shape[0])[:, None]
    ranks[rows, order] = np.arange(NUM_CLASSES)[None, :]
    return ranks[np.arange(s.shape[0]), t]


def mpr(scores, true_class, tie_seed=0) -> float:
    """Mean percentile rank: 100 * (1 - mean(rank / 15)).  100 is perfect;
    random scoring sits near 50."""
    r = rank_true_class(scores, true_class, tie_seed)
    return float(100.0 * (1.0 - np.mean(r / (NUM_CLASSES - 1))))


def topk_accuracy(scores, true_class, k: int, tie_seed=0) -> float:
    if not 1 <= k <= NUM_CLASSES:
        raise InputError(f"k must lie in 1..{NUM_CLASSES}")
    r = rank_true_class(scores, true_class, tie_seed)
    return float(np.mean(r < k))


def mae_classes(pred_class, true_class) -> float:
    p = np.asarray(pred_class)
    t = np.asarray(true_class)
    if p.shape != t.shape:
        raise InputError("prediction and truth lengths differ")
    for arr in (p, t):
        if arr.size and (arr.min() < 0 or arr.max() >= NUM_CLASSES):
            raise InputError("class indices must lie in 0..15")
    return float(np.mean(np.abs(p.astype(np.int64) - t.astype(np.int64))))


def frobenius_delta(a, b) -> float:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise InputError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def pcc(x, y) -> float | None:
    """Sample Pearson correlation of two flattened arrays; None when either
    side has zero variance (degenerate, excluded from aggregates)."""
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InputError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise InputError("need at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    va = np.dot(da, da)
    vb = np.dot(db, db)
    if va == 0.0 or vb == 0.0:
        return None
    return float(np.dot(da, db) / np.sqrt(va * vb))


def lower_median(values) -> float:
    """Median with the lower-middle element for even counts."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise InputError("median of an empty sequence")
    return float(v[(v.size - 1) // 2])


@dataclass
class EvalReport:
    model_name: str
    n_instances: int
    per_param_mpr: dict[str, float]
    per_param_topk: dict[str, list[float]]      # index k-1 holds top-k, k = 1..5
    per_param_mae: dict[str, float]
    group_mpr: dict[str, float]
    group_topk: dict[str, list[float]]
    group_mae: dict[str, float]
    spectral: dict[str, float | None] = field(default_factory=dict)
    degenerate_pcc: dict[str, int] = field(default_factory=dict)

    @property
    def mean_mpr(self) -> float:
        return self.group_mpr["All"]

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "n_instances": self.n_instances,
            "per_param_mpr": self.per_param_mpr,
            "per_param_topk": self.per_param_topk,
            "per_param_mae": self.per_param_mae,
            "group_mpr": self.group_mpr,
            "group_topk": self.group_topk,
            "group_mae": self.group_mae,
            "spectral": self.spectral,
            "degenerate_pcc": self.degenerate_pcc,
        }

    def render_text(self) -> str:
        lines = [
            f"model: {self.model_name}   instances: {self.n_instances}",
            "",
            f"{'parameter':<10} {'MPR':>7} {'MAE':>7} {'top-1':>7} {'top-5':>7}",
        ]
        for pid in PARAM_IDS:
            tk = self.per_param_topk[pid]
            lines.append(
                f"{pid:<10} {self.per_param_mpr[pid]:>7.2f} {self.per_param_mae[pid]:>7.3f}"
                f" {tk[0]:>7.3f} {tk[4]:>7.3f}"
            )
        lines.append(f"{'mean':<10} {self.mean_mpr:>7.2f} {self.group_mae['All']:>7.3f}")
        lines.append("")
        lines.append(f"{'group':<22} {'MPR':>7} {'MAE':>7}")
        for g in PARAM_GROUPS:
            lines.append(f"{g:<22} {self.group_mpr[g]:>7.2f} {self.group_mae[g]:>7.3f}")
        if self.spectral:
            lines.append("")

            def fmt(v, scale=1.0):
                return "degenerate" if v is None else f"{v * scale:.2f}"

            s = self.spectral
            lines.append(f"rho mean (STFT) x100:   {fmt(s['pcc_stft_mean'], 100)}")
            lines.append(f"rho median (STFT) x100: {fmt(s['pcc_stft_median'], 100)}")
            lines.append(f"rho mean (FT) x100:     {fmt(s['pcc_ft_mean'], 100)}")
            lines.append(f"rho median (FT) x100:   {fmt(s['pcc_ft_median'], 100)}")
            lines.append(f"F_delta mean (STFT):    {fmt(s['fdelta_mean'])}")
            lines.append(f"F_delta median (STFT):  {fmt(s['fdelta_median'])}")
            if any(self.degenerate_pcc.values()):
                lines.append(f"degenerate PCC instances excluded: {self.degenerate_pcc}")
        return "\n".join(lines)


def ranking_report(model_name: str, scores: np.ndarray, true_classes: np.ndarray,
                   tie_seed=0) -> EvalReport:
    """Aggregate the ranking measures from per-parameter class scores.

    scores: (N, 23, 16) sigmoid outputs regrouped per parameter;
    true_classes: (N, 23) int class indices.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(true_classes)
    if s.ndim != 3 or s.shape[1:] != (len(PARAM_IDS), NUM_CLASSES):
        raise InputError(f"expected (n, 23, 16) scores, got {s.shape}")
    if t.shape != s.shape[:2]:
        raise InputError("true class array must be (n, 23)")

    per_mpr: dict[str, float] = {}
    per_topk: dict[str, list[float]] = {}
    per_mae: dict[str, float] = {}
    for i, pid in enumerate(PARAM_IDS):
        block = s[:, i, :]
        truth = t[:, i]
        ranks = rank_true_class(block, truth, tie_seed=(tie_seed, i))
        per_mpr[pid] = float(100.0 * (1.0 - np.mean(ranks / (NUM_CLASSES - 1))))
        per_topk[pid] = [float(np.mean(ranks < k)) for k in range(1, TOP_K_MAX + 1)]
        per_mae[pid] = mae_classes(block.argmax(axis=1), truth)

    group_mpr = {}
    group_topk = {}
    group_mae = {}
    for g, members in PARAM_GROUPS.items():
        group_mpr[g] = float(np.mean([per_mpr[m] for m in members]))
        group_mae[g] = float(np.mean([per_mae[m] for m in members]))
        group_topk[g] = [
            float(np.mean([per_topk[m][k] for m in members])) for k in range(TOP_K_MAX)
        ]

    return EvalReport(
        model_name=model_name,
        n_instances=s.shape[0],
        per_param_mpr=per_mpr,
        per_param_topk=per_topk,
        per_param_mae=per_mae,
        group_mpr=group_mpr,
        group_topk=group_topk,
        group_mae=group_mae,
    )


def spectral_summary(fdeltas, pccs_stft, pccs_ft) -> tuple[dict, dict]:
    """Mean/median aggregation with degenerate-PCC exclusion."""
    fd = [float(v) for v in fdeltas]
    summary: dict[str, float | None] = {
        "fdelta_mean": float(np.mean(fd)) if fd else None,
        "fdelta_median": lower_median(fd) if fd else None,
    }
    degenerate = {}
    for name, vals in (("stft", pccs_stft), ("ft", pccs_ft)):
        ok = [float(v) for v in vals if v is not None]
        degenerate[name] = sum(1 for v in vals if v is None)
        summary[f"pcc_{name}_mean"] = float(np.mean(ok)) if ok else None
        summary[f"pcc_{name}_median"] = lower_median(ok) if ok else None
    return summary, degenerate
