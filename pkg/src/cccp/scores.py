"""Per (platform, conversation, author) score tables shared by every metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

HEADER = ("platform", "conversation_id", "author", "score")


@dataclass(frozen=True)
class ScoreRow:
    platform: str
    conversation_id: str
    author: str
    score: float


@dataclass
class ScoreTable:
    metric: str
    rows: list[ScoreRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def add(self, platform, conversation_id: str, author: str, score: float) -> None:
        self.rows.append(ScoreRow(str(getattr(platform, "value", platform)), conversation_id, author, float(score)))

    def sorted(self) -> "ScoreTable":
        key = lambda r: (r.platform, r.conversation_id, r.author)
        return ScoreTable(self.metric, sorted(self.rows, key=key))

    def as_dict(self) -> dict[tuple[str, str, str], float]:
        return {(r.platform, r.conversation_id, r.author): r.score for r in self.rows}

    def to_tsv(self) -> str:
        lines = ["\t".join(HEADER)]
        for r in self.sorted().rows:
            lines.append(f"{r.platform}\t{r.conversation_id}\t{r.author}\t{format_float(r.score)}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def read(cls, path, metric: str) -> "ScoreTable":
        table = cls(metric)
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line or (n == 1 and line.startswith("platform\t")):
                continue
            platform, conv, author, score = line.split("\t")
            table.add(platform, conv, author, float(score))
        return table


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return f"{x:.6f}"
