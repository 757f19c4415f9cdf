"""Run metrics and reports: gap, primal integrals, performance profiles,
Wilcoxon signed-rank tests and grouped summary tables."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "EvaluationWarning",
    "gap",
    "npi",
    "npi_alt",
    "performance_profile",
    "profile_ratios",
    "WilcoxonResult",
    "wilcoxon_signed_rank",
    "signed_rank_distribution",
    "RunRecord",
    "MetricRow",
    "MetricTable",
    "summarize",
    "shared_ranks",
]


class EvaluationWarning(UserWarning):
    """Data problems that are reported rather than raised (undefined gaps,
    missing cells, clamped times)."""


def gap(heuristic: float, optimal: float) -> float | None:
    """Relative gap ``(heuristic - optimal) / optimal``.

    A zero optimum gives 0 when the heuristic is also 0 and ``None``
    (undefined) otherwise.
    """
    if optimal == 0:
        return 0.0 if heuristic == 0 else None
    return (heuristic - optimal) / optimal


def _clean_trace(trace: Iterable[tuple[float, float]], t_max: float) -> list[tuple[float, float]]:
    out = []
    for value, t in sorted(trace, key=lambda vt: vt[1]):
        if t > t_max:
            warnings.warn(f"incumbent time {t:g} exceeds {t_max:g}; clamped", EvaluationWarning, stacklevel=3)
            t = t_max
        out.append((float(value), max(0.0, float(t))))
    return out


def npi(trace: Iterable[tuple[float, float]], f_star: float, t_max: float) -> float:
    """Normalised primal integral of an incumbent trace ``[(value, time)]``.

    The incumbent curve starts at ``f0 = 1.1 f*``; only values below ``f0``
    count.  The area under the piecewise-constant curve over ``[0, t_max]`` is
    divided by ``t_max * f*``, so the result lies in ``[1, 1.1]`` whenever
    ``f*`` is the best value of the trace.
    """
    if f_star <= 0:
        raise InvalidArgumentError("f* must be positive")
    if t_max <= 0:
        raise InvalidArgumentError("t_max must be positive")
    # accumulate value / f* weighted by the time fraction so the boundary
    # cases come out as exactly 1.0 and 1.1
    f_prev, t_prev = 1.1, 0.0
    total = 0.0
    for value, t in _clean_trace(trace, t_max):
        if value >= 1.1 * f_star:
            continue
        total += f_prev * ((t - t_prev) / t_max)
        f_prev, t_prev = value / f_star, t
    return total + f_prev * ((t_max - t_prev) / t_max)


def npi_alt(trace: Iterable[tuple[float, float]], f_star: float, t_max: float) -> float:
    """Time average of the primal gap ``|f - f*| / max(|f|, |f*|)``, taken as 1
    before the first incumbent; lies in ``[0, 1]``."""
    if t_max <= 0:
        raise InvalidArgumentError("t_max must be positive")

    def primal_gap(f):
        if f == f_star:
            return 0.0
        return abs(f - f_star) / max(abs(f), abs(f_star))

    g_prev, t_prev = 1.0, 0.0
    area = 0.0
    for value, t in _clean_trace(trace, t_max):
        area += g_prev * (t - t_prev)
        g_prev, t_prev = primal_gap(value), t
    area += g_prev * (t_max - t_prev)
    return area / t_max


def profile_ratios(values: Mapping[str, Mapping[str, float]]) -> dict[str, dict[str, float]]:
    """Per instance, each heuristic's value divided by the best one.

    Both zero gives 1; a zero best against a positive value gives ``inf``.
    Instances missing any heuristic are dropped with a warning.
    """
    heuristics = sorted({h for cells in values.values() for h in cells})
    ratios = {}
    for inst, cells in values.items():
        if any(h not in cells for h in heuristics):
            warnings.warn(f"instance {inst} lacks some heuristics; dropped", EvaluationWarning, stacklevel=2)
            continue
        best = min(cells[h] for h in heuristics)
        row = {}
        for h in heuristics:
            v = cells[h]
            if best > 0:
                row[h] = v / best
            else:
                row[h] = 1.0 if v == best else math.inf
        ratios[inst] = row
    return ratios


def performance_profile(values: Mapping[str, Mapping[str, float]], taus: Sequence[float]) -> dict[str, np.ndarray]:
    """Fraction of instances whose ratio to the best is at most each ``tau``
    (lower values are better)."""
    ratios = profile_ratios(values)
    heuristics = sorted({h for cells in values.values() for h in cells})
    taus = np.asarray(taus, dtype=float)
    out = {}
    for h in heuristics:
        r = np.array([row[h] for row in ratios.values()])
        if len(r) == 0:
            out[h] = np.zeros(len(taus))
        else:
            out[h] = (r[None, :] <= taus[:, None] + 1e-12).mean(axis=1)
    return out


# -- Wilcoxon signed-rank ---------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float | None  # min(W+, W-)
    p_value: float | None
    n: int  # pairs with a non-zero difference
    method: str  # "exact" | "normal" | "no-test"
    w_plus: float | None = None

    @property
    def significant(self) -> bool:
        return self.p_value is not None and self.p_value < 0.05


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def signed_rank_distribution(ranks: Sequence[float]) -> dict[float, float]:
    """Null distribution of ``W+`` (sum of ranks with a positive sign) when
    every sign is an independent fair coin; midranks allowed."""
    doubled = [int(round(2 * r)) for r in ranks]
    dist = np.zeros(sum(doubled) + 1)
    dist[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: len(dist) - r]
        dist = 0.5 * (dist + shifted)
    return {k / 2: p for k, p in enumerate(dist) if p > 0}


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], exact_limit: int = 25) -> WilcoxonResult:
    """Two-sided paired test on ``a - b``; zero differences are dropped.

    Exact null distribution up to ``exact_limit`` pairs, otherwise the normal
    approximation with tie and continuity corrections.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError("paired samples must have equal length")
    diff = a - b
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        return WilcoxonResult(None, None, 0, "no-test")
    ranks = _midranks(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= exact_limit:
        dist = signed_rank_distribution(ranks)
        lower = sum(p for w, p in dist.items() if w <= w_plus + 1e-9)
        upper = sum(p for w, p in dist.items() if w >= w_plus - 1e-9)
        return WilcoxonResult(stat, min(1.0, 2 * min(lower, upper)), n, "exact", w_plus)
    mean = n * (n + 1) / 4
    _, counts = np.unique(np.abs(diff), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - float((counts**3 - counts).sum()) / 48
    shift = w_plus - mean
    z = (shift - 0.5 * np.sign(shift)) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2))
    return WilcoxonResult(stat, min(1.0, p), n, "normal", w_plus)


# -- grouped tables --------------------------------------------------------------


@dataclass
class RunRecord:
    instance: str
    heuristic: str
    seed: int
    crossings: int
    seconds: float
    trace: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class MetricRow:
    group: tuple
    heuristic: str
    runs: int
    gap: float | None
    seconds: float
    npi: float | None
    npi_alt: float | None
    undefined_gaps: int


@dataclass
class MetricTable:
    group_keys: tuple[str, ...]
    rows: list[MetricRow]
    reference: str  # "optimum" | "bks"
    warnings: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        gap_name = "bks_gap" if self.reference == "bks" else "gap"
        w.writerow([*self.group_keys, "heuristic", "runs", gap_name, "seconds", "npi", "npi_alt", "undefined_gaps"])
        for row in self.rows:
            w.writerow([*row.group, row.heuristic, row.runs, _fmt(row.gap), f"{row.seconds:.6f}",
                        _fmt(row.npi), _fmt(row.npi_alt), row.undefined_gaps])
        return buf.getvalue()

    def overall(self) -> dict[str, float | None]:
        """Mean gap per heuristic over all groups, weighted by runs."""
        out = {}
        for h in sorted({r.heuristic for r in self.rows}):
            rows = [r for r in self.rows if r.heuristic == h and r.gap is not None]
            runs = sum(r.runs - r.undefined_gaps for r in rows)
            out[h] = sum(r.gap * (r.runs - r.undefined_gaps) for r in rows) / runs if runs else None
        return out


def _fmt(x):
    return "" if x is None else f"{x:.6f}"


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def summarize(records: Sequence[RunRecord], groups: Mapping[str, tuple] | None = None,
              group_keys: tuple[str, ...] = (), optima: Mapping[str, int] | None = None) -> MetricTable:
    """Mean gap, time and primal integrals per (group, heuristic).

    The gap reference is the optimum when ``optima`` covers every instance,
    else the best value recorded for the instance (best-known solution).
    Primal integrals use the instance's best recorded value and the longest
    recorded run time.
    """
    instances = sorted({r.instance for r in records})
    use_optima = optima is not None and all(i in optima for i in instances)
    notes: list[str] = []
    best = {i: min(r.crossings for r in records if r.instance == i) for i in instances}
    t_max = {i: max(r.seconds for r in records if r.instance == i) for i in instances}

    cells: dict[tuple, list] = {}
    for r in records:
        group = tuple(groups[r.instance]) if groups else ()
        ref = optima[r.instance] if use_optima else best[r.instance]
        g = gap(r.crossings, ref)
        if g is None:
            notes.append(f"undefined gap: {r.instance} {r.heuristic} seed {r.seed}")
        n1 = n2 = None
        if t_max[r.instance] > 0:
            n2 = npi_alt(r.trace, best[r.instance], t_max[r.instance])
            if best[r.instance] > 0:
                n1 = npi(r.trace, best[r.instance], t_max[r.instance])
        cells.setdefault((group, r.heuristic), []).append((g, r.seconds, n1, n2))

    rows = []
    for (group, h) in sorted(cells):
        vals = cells[(group, h)]
        rows.append(MetricRow(group, h, len(vals), _mean(v[0] for v in vals), _mean(v[1] for v in vals),
                              _mean(v[2] for v in vals), _mean(v[3] for v in vals),
                              sum(v[0] is None for v in vals)))
    for note in notes:
        warnings.warn(note, EvaluationWarning, stacklevel=2)
    return MetricTable(tuple(group_keys), rows, "optimum" if use_optima else "bks", notes)


def shared_ranks(scores: Mapping[str, float]) -> dict[str, int]:
    """Rank 1 for the lowest score; exact ties share the better rank (1, 1, 3)."""
    ordered = sorted(scores.values())
    return {k: ordered.index(v) + 1 for k, v in scores.items()}
