"""External bot scores: loading, thresholding, and group comparison."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError

SCORE_CLASSES = ("overall", "user", "friends", "network", "temporal", "content", "sentiment")
BOT_THRESHOLD = 0.5
HISTOGRAM_BINS = 50


@dataclass(frozen=True)
class BotScoreRecord:
    user_id: str
    overall: float
    user: float
    friends: float
    network: float
    temporal: float
    content: float
    sentiment: float

    def score(self, name: str) -> float:
        return getattr(self, name)


class BotScores(dict):
    """``user_id -> BotScoreRecord`` with the loader's skip report attached."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.skipped = 0
        self.problems: list = []


def load_bot_scores(path) -> BotScores:
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read bot scores {path}: {exc}") from exc
    out = BotScores()
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("user_id",) + SCORE_CLASSES if c not in (reader.fieldnames or ())]
        if reader.fieldnames is not None and missing:
            raise DataError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, 2):
            try:
                uid = (row["user_id"] or "").strip()
                if not uid:
                    raise ValueError("empty user_id")
                vals = [float(row[c]) for c in SCORE_CLASSES]
                bad = [c for c, v in zip(SCORE_CLASSES, vals) if not 0.0 <= v <= 1.0]
                if bad:
                    raise ValueError(f"score out of [0,1]: {bad}")
                if uid in out:
                    raise ValueError(f"duplicate user {uid}")
            except (ValueError, TypeError) as exc:
                out.skipped += 1
                out.problems.append({"line": lineno, "reason": str(exc)})
                continue
            out[uid] = BotScoreRecord(uid, *vals)
    return out


def write_bot_scores(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("user_id",) + SCORE_CLASSES)
        for r in records:
            w.writerow([r.user_id] + [repr(float(r.score(c))) for c in SCORE_CLASSES])


def bot_flag(record: BotScoreRecord, threshold: float = BOT_THRESHOLD) -> bool:
    """An account is flagged as a bot when its overall score is strictly above ``threshold``."""
    return record.overall > threshold


# -- Student t tail via the regularized incomplete beta function ------------

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 20000


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float, one_minus_x: float | None = None) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``.

    ``one_minus_x`` may be passed when ``1 - x`` is known more accurately
    than the subtraction would give.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    y = 1.0 - x if one_minus_x is None else one_minus_x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(y))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, y) / b


def student_t_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability ``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if math.isnan(t) or math.isnan(df):
        return float("nan")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    denom = df + t2
    return betainc_regularized(df / 2.0, 0.5, df / denom, t2 / denom)


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_t_test(sample_a, sample_b) -> WelchResult:
    """Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least two observations")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    qa, qb = va / na, vb / nb
    se2 = qa + qb
    diff = float(ma - mb)
    if se2 == 0.0:
        if diff == 0.0:
            return WelchResult(0.0, float(na + nb - 2), 1.0)
        raise ValueError("both samples have zero variance and different means")
    t = diff / math.sqrt(se2)
    df = se2 * se2 / (qa * qa / (na - 1) + qb * qb / (nb - 1))
    return WelchResult(float(t), float(df), student_t_two_sided(float(t), float(df)))


def density_histogram(values, bins: int = HISTOGRAM_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Normalized histogram over [0, 1]; returns ``(edges, density)``."""
    values = np.asarray(values, dtype=np.float64)
    edges = np.linspace(0.0, 1.0, bins + 1)
    if values.size == 0:
        return edges, np.zeros(bins)
    counts, _ = np.histogram(values, bins=edges)
    return edges, counts / (values.size * (edges[1] - edges[0]))


def compare_groups(scores: dict, spreaders, nonspreaders, bins: int = HISTOGRAM_BINS) -> dict:
    """Means, Welch test and density histograms per score class for two user groups.

    Users without a score are ignored.
    """
    sp = [scores[u] for u in spreaders if u in scores]
    ns = [scores[u] for u in nonspreaders if u in scores]
    out = {"n_spreaders": len(sp), "n_nonspreaders": len(ns), "bot_rate": {}, "classes": {}}
    out["bot_rate"]["spreaders"] = sum(bot_flag(r) for r in sp) / len(sp) if sp else None
    out["bot_rate"]["nonspreaders"] = sum(bot_flag(r) for r in ns) / len(ns) if ns else None
    for name in SCORE_CLASSES:
        a = np.array([r.score(name) for r in sp])
        b = np.array([r.score(name) for r in ns])
        entry = {
            "mean_spreaders": float(a.mean()) if a.size else None,
            "mean_nonspreaders": float(b.mean()) if b.size else None,
            "welch": None,
        }
        if a.size >= 2 and b.size >= 2:
            try:
                entry["welch"] = welch_t_test(a, b)._asdict()
            except ValueError:
                pass
        edges, da = density_histogram(a, bins)
        _, db = density_histogram(b, bins)
        entry["histogram"] = {
            "bin_left": edges[:-1].tolist(),
            "bin_right": edges[1:].tolist(),
            "density_spreader": da.tolist(),
            "density_nonspreader": db.tolist(),
        }
        out["classes"][name] = entry
    return out


def write_histogram_csv(path, histogram: dict) -> None:
    cols = ("bin_left", "bin_right", "density_spreader", "density_nonspreader")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in zip(*(histogram[c] for c in cols)):
            w.writerow([repr(float(v)) for v in row])
