"""Slow, obviously-correct reference implementations used as test oracles."""

import math
from collections import Counter
from fractions import Fraction

import mpmath


def brute_h(counts):
    counts = list(counts)
    return max(h for h in range(0, len(counts) + 1) if sum(c >= h for c in counts) >= h)


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


def mp_welch(a, b, dps=40):
    """Welch statistic in mpmath with the two-sided tail by quadrature of the t density."""
    with mpmath.workdps(dps):
        a = [mpmath.mpf(float(v)) for v in a]
        b = [mpmath.mpf(float(v)) for v in b]

        def mv(x):
            m = sum(x) / len(x)
            return m, sum((v - m) ** 2 for v in x) / (len(x) - 1)

        ma, va = mv(a)
        mb, vb = mv(b)
        qa, qb = va / len(a), vb / len(b)
        t = (ma - mb) / mpmath.sqrt(qa + qb)
        df = (qa + qb) ** 2 / (qa ** 2 / (len(a) - 1) + qb ** 2 / (len(b) - 1))
        c = mpmath.gamma((df + 1) / 2) / (mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / 2))
        p = 2 * mpmath.quad(lambda x: c * (1 + x * x / df) ** (-(df + 1) / 2), [abs(t), mpmath.inf])
        return float(t), float(df), float(p)


def exact_mean(values):
    """Column sum computed exactly in rationals, rounded once, divided by the count."""
    return float(sum(Fraction(v) for v in values)) / len(values)


def mode_lowest(values):
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def average_ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def pearson_direct(x, y):
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        return math.nan
    return sxy / math.sqrt(sxx * syy)
