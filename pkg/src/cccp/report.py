"""Aggregation, correlation and the cross-platform comparison report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .scores import ScoreTable, format_float

METRICS = ("baseline", "rb", "pb", "centrality")
RAW_COMPANION = {"pb": "pb_raw"}


class EmptyTable(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


class MetricMissing(ValueError):
    pass


def conversation_means(table: ScoreTable) -> dict[tuple[str, str], float]:
    """Mean author score per (platform, conversation); NaN rows are ignored."""
    groups: dict[tuple[str, str], list[float]] = {}
    for r in table.rows:
        if not math.isnan(r.score):
            groups.setdefault((r.platform, r.conversation_id), []).append(r.score)
    return {k: math.fsum(v) / len(v) for k, v in sorted(groups.items())}


def platform_means(table: ScoreTable, agg: str = "two-stage") -> dict[str, tuple[float, int]]:
    """platform -> (mean, number of conversations contributing)."""
    if agg == "pooled":
        groups: dict[str, list[float]] = {}
        convs: dict[str, set[str]] = {}
        for r in table.rows:
            if not math.isnan(r.score):
                groups.setdefault(r.platform, []).append(r.score)
                convs.setdefault(r.platform, set()).add(r.conversation_id)
        return {p: (math.fsum(v) / len(v), len(convs[p])) for p, v in sorted(groups.items())}
    if agg != "two-stage":
        raise ValueError(f"unknown aggregation {agg!r}")
    per_platform: dict[str, list[float]] = {}
    for (platform, _), m in conversation_means(table).items():
        per_platform.setdefault(platform, []).append(m)
    return {p: (math.fsum(v) / len(v), len(v)) for p, v in sorted(per_platform.items())}


def aggregate(tables: Sequence[ScoreTable], agg: str = "two-stage") -> dict[tuple[str, str], float]:
    """(metric, platform) -> mean score: authors averaged within a conversation, then conversations within a platform."""
    if not tables:
        raise EmptyTable("no score tables given")
    out = {}
    for table in tables:
        if not table.rows:
            raise EmptyTable(f"score table {table.metric!r} has no rows")
        for platform, (mean, _) in platform_means(table, agg).items():
            out[(table.metric, platform)] = mean
    return out


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} values")
    n = len(x)
    if n < 2:
        raise LengthMismatch("need at least two paired values")
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("one of the inputs is constant")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_matrix(tables: Mapping[str, ScoreTable]) -> tuple[list[str], list[list[float]], list[list[int]]]:
    """Pairwise Pearson r over conversation means shared by both metrics.

    Off-diagonal entries are NaN when fewer than two shared conversations
    exist or a metric is constant over them. The diagonal is 1 by definition.
    """
    names = list(tables)
    means = {m: conversation_means(t) for m, t in tables.items()}
    k = len(names)
    r = [[1.0] * k for _ in range(k)]
    n = [[0] * k for _ in range(k)]
    for i in range(k):
        n[i][i] = len(means[names[i]])
        for j in range(i + 1, k):
            shared = sorted(means[names[i]].keys() & means[names[j]].keys())
            xs = [means[names[i]][c] for c in shared]
            ys = [means[names[j]][c] for c in shared]
            try:
                value = pearson(xs, ys)
            except (LengthMismatch, ZeroVariance):
                value = math.nan
            r[i][j] = r[j][i] = value
            n[i][j] = n[j][i] = len(shared)
    return names, r, n


@dataclass
class ComparisonReport:
    platforms: list[str]
    means: dict[tuple[str, str], tuple[float, float, int]]  # (metric, platform) -> (mean, raw mean, n conversations)
    metrics: list[str]
    correlation_names: list[str]
    correlations: list[list[float]]
    correlation_n: list[list[int]]
    diagnostics: dict[str, float] = field(default_factory=dict)
    counts: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def single_platform(self) -> bool:
        return len(self.platforms) < 2

    def means_tsv(self) -> str:
        lines = ["metric\tplatform\tmean\traw_mean\tn_conversations"]
        for (metric, platform), (mean, raw, n) in self.means.items():
            lines.append(f"{metric}\t{platform}\t{format_float(mean)}\t{format_float(raw)}\t{n}")
        return "\n".join(lines) + "\n"

    def correlations_tsv(self) -> str:
        names = self.correlation_names
        lines = ["metric\t" + "\t".join(names)]
        for name, row in zip(names, self.correlations):
            lines.append(name + "\t" + "\t".join(format_float(v) for v in row))
        lines.append("")
        lines.append("n\t" + "\t".join(names))
        for name, row in zip(names, self.correlation_n):
            lines.append(name + "\t" + "\t".join(str(v) for v in row))
        return "\n".join(lines) + "\n"

    def diagnostics_tsv(self) -> str:
        lines = ["key\tvalue"]
        for key, value in self.diagnostics.items():
            lines.append(f"{key}\t{format_float(value)}")
        for platform, (convs, posts) in self.counts.items():
            lines.append(f"conversations.{platform}\t{convs}")
            lines.append(f"posts.{platform}\t{posts}")
        return "\n".join(lines) + "\n"

    def render(self) -> str:
        out = ["Participation metrics by platform", ""]
        width = max(12, max(len(m) for m in self.metrics) + 2)
        out.append("metric".ljust(width) + "".join(p.rjust(12) for p in self.platforms))
        for metric in self.metrics:
            cells = [self.means.get((metric, p)) for p in self.platforms]
            out.append(metric.ljust(width) + "".join(
                (format_float(c[0]) if c else "-").rjust(12) for c in cells
            ))
            if metric in RAW_COMPANION:
                out.append(f"  {metric} (raw)".ljust(width) + "".join(
                    (format_float(c[1]) if c else "-").rjust(12) for c in cells
                ))
        if self.single_platform:
            out += ["", "single platform: no cross-platform comparison"]
        else:
            out += ["", "ordering: " + ", ".join(
                f"{m} {self._ordering(m)}" for m in self.metrics
            )]
        out += ["", "Pearson r over conversation means (n shared conversations)"]
        names = self.correlation_names
        out.append("".ljust(width) + "".join(n.rjust(16) for n in names))
        for name, row, nrow in zip(names, self.correlations, self.correlation_n):
            out.append(name.ljust(width) + "".join(f"{format_float(v)} ({c})".rjust(16) for v, c in zip(row, nrow)))
        if self.diagnostics:
            out += ["", "Classifier diagnostics"]
            out += [f"  {k}: {format_float(v)}" for k, v in self.diagnostics.items()]
        out += ["", "Corpus"]
        out += [f"  {p}: {c} conversations, {n} posts" for p, (c, n) in self.counts.items()]
        return "\n".join(out) + "\n"

    def _ordering(self, metric: str) -> str:
        vals = [(self.means[(metric, p)][0], p) for p in self.platforms if (metric, p) in self.means]
        vals.sort(key=lambda v: -v[0])
        return " > ".join(p for _, p in vals)

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "means.tsv").write_text(self.means_tsv(), encoding="utf-8")
        (out_dir / "correlations.tsv").write_text(self.correlations_tsv(), encoding="utf-8")
        (out_dir / "diagnostics.tsv").write_text(self.diagnostics_tsv(), encoding="utf-8")
        (out_dir / "report.txt").write_text(self.render(), encoding="utf-8")


def build_report(
    corpus,
    tables: Mapping[str, ScoreTable],
    diagnostics: Optional[Mapping[str, float]] = None,
    agg: str = "two-stage",
) -> ComparisonReport:
    """Assemble the comparison report.

    ``corpus`` is a :class:`~cccp.ingest.Corpus` or a mapping platform ->
    (conversations, posts) as returned by ``Corpus.counts()``.
    ``tables`` maps metric name -> score table; a ``pb_raw`` table, if given,
    fills the raw column for ``pb`` instead of being reported on its own.
    """
    counts = corpus.counts() if hasattr(corpus, "counts") else corpus
    primary = {m: t for m, t in tables.items() if m not in RAW_COMPANION.values()}
    if not primary:
        raise MetricMissing("no metric tables given")
    for metric, table in primary.items():
        if not table.rows:
            raise MetricMissing(f"metric {metric!r} has an empty score table")
    metrics = [m for m in METRICS if m in primary] + sorted(m for m in primary if m not in METRICS)
    platforms = sorted(counts)
    means = {}
    for metric in metrics:
        pm = platform_means(primary[metric], agg)
        raw_name = RAW_COMPANION.get(metric)
        raw = platform_means(tables[raw_name], agg) if raw_name in tables else pm
        for platform in platforms:
            if platform in pm:
                means[(metric, platform)] = (pm[platform][0], raw.get(platform, (math.nan, 0))[0], pm[platform][1])
    names, r, n = correlation_matrix({m: primary[m] for m in metrics})
    return ComparisonReport(
        platforms=platforms,
        means=means,
        metrics=metrics,
        correlation_names=names,
        correlations=r,
        correlation_n=n,
        diagnostics=dict(diagnostics or {}),
        counts=dict(sorted(counts.items())),
    )
