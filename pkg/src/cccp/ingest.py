"""Loading conversation dumps and generating synthetic corpora.

Dump format: UTF-8, one tab-separated record per line with the fields
``id parent_id author timestamp conversation_id platform``. The root has an
empty ``parent_id``. A first line whose first field is ``id`` is a header.
"""

from __future__ import annotations

import hashlib
import logging
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .tree import ConversationTree, Platform, Post, TreeError, validate_tree

log = logging.getLogger(__name__)

FIELDS = ("id", "parent_id", "author", "timestamp", "conversation_id", "platform")
RECENT_WINDOW = 5


class MalformedRecord(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class EmptyCorpus(ValueError):
    pass


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class Skipped:
    conversation_id: str
    error: str
    message: str


@dataclass
class Corpus:
    trees: list[ConversationTree]
    source: str = ""
    skipped: list[Skipped] = field(default_factory=list)

    def __post_init__(self):
        ids = [t.conversation_id for t in self.trees]
        if len(ids) != len(set(ids)):
            raise ValueError("conversation ids must be unique within a corpus")

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)

    @property
    def platforms(self) -> list[str]:
        return sorted({t.platform.value for t in self.trees})

    def counts(self) -> dict[str, tuple[int, int]]:
        """platform -> (conversations, posts)."""
        out: dict[str, tuple[int, int]] = {}
        for t in self.trees:
            c, p = out.get(t.platform.value, (0, 0))
            out[t.platform.value] = (c + 1, p + len(t))
        return dict(sorted(out.items()))

    def to_tsv(self) -> str:
        lines = ["\t".join(FIELDS)]
        for t in sorted(self.trees, key=lambda t: t.conversation_id):
            for p in t.posts:
                lines.append("\t".join([
                    p.id, p.parent_id or "", p.author, str(p.timestamp), p.conversation_id, p.platform.value,
                ]))
        return "\n".join(lines) + "\n"

    def checksum(self) -> str:
        return hashlib.sha256(self.to_tsv().encode("utf-8")).hexdigest()


def parse_records(lines: Iterable[str]) -> list[Post]:
    posts = []
    for n, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if n == 1 and parts[0] == "id":
            continue
        if len(parts) != len(FIELDS):
            raise MalformedRecord(n, f"expected {len(FIELDS)} fields, got {len(parts)}")
        pid, parent, author, ts, conv, platform = parts
        if not pid or not conv:
            raise MalformedRecord(n, "empty id or conversation_id")
        try:
            timestamp = int(ts)
        except ValueError:
            raise MalformedRecord(n, f"timestamp {ts!r} is not an integer") from None
        try:
            posts.append(Post(pid, parent or None, author, timestamp, conv, Platform(platform)))
        except ValueError as e:
            raise MalformedRecord(n, str(e)) from None
    return posts


def build_corpus(posts: Iterable[Post], source: str = "") -> Corpus:
    """Group posts by conversation and keep the ones that validate."""
    groups: dict[str, list[Post]] = defaultdict(list)
    for p in posts:
        groups[p.conversation_id].append(p)
    trees, skipped = [], []
    for conv in sorted(groups):
        try:
            trees.append(validate_tree(groups[conv]))
        except TreeError as e:
            skipped.append(Skipped(conv, type(e).__name__, str(e)))
            log.info("skipping conversation %s: %s", conv, e)
    if not trees:
        raise EmptyCorpus(f"no valid conversations in {source or 'input'} ({len(skipped)} skipped)")
    return Corpus(trees, source, skipped)


def load_corpus(path) -> Corpus:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such corpus file: {path}")
    with path.open(encoding="utf-8") as fh:
        posts = parse_records(fh)
    return build_corpus(posts, source=str(path))


def write_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(corpus.to_tsv(), encoding="utf-8")


def merge(*corpora: Corpus) -> Corpus:
    trees = [t for c in corpora for t in c.trees]
    skipped = [s for c in corpora for s in c.skipped]
    return Corpus(trees, "+".join(c.source for c in corpora), skipped)


def cap_per_platform(corpus: Corpus, n: int, seed: int = 0) -> Corpus:
    """Subsample at most ``n`` conversations per platform, keeping corpus order."""
    rng = random.Random(seed)
    by_platform: dict[str, list[int]] = defaultdict(list)
    for i, t in enumerate(corpus.trees):
        by_platform[t.platform.value].append(i)
    keep = set()
    for platform in sorted(by_platform):
        idx = by_platform[platform]
        keep.update(idx if len(idx) <= n else rng.sample(idx, n))
    trees = [t for i, t in enumerate(corpus.trees) if i in keep]
    return Corpus(trees, corpus.source, list(corpus.skipped))


@dataclass(frozen=True)
class SynthConfig:
    n_conversations: int = 100
    size_range: tuple[int, int] = (5, 30)
    root_attachment_bias: float = 0.3
    revisit_rate: float = 0.3
    seed: int = 0
    platform: Platform = Platform.SYNTHETIC
    prefix: Optional[str] = None

    def validate(self) -> None:
        lo, hi = self.size_range
        if self.n_conversations < 1:
            raise InvalidConfig("n_conversations must be positive")
        if not 2 <= lo <= hi <= 100:
            raise InvalidConfig(f"size_range {self.size_range} must satisfy 2 <= min <= max <= 100")
        for name in ("root_attachment_bias", "revisit_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")


def generate_synthetic(config: SynthConfig) -> Corpus:
    """Grow random reply trees with tunable author repetition and root attachment.

    Each new post comes from an existing participant (chosen uniformly) with
    probability ``revisit_rate``, otherwise from a fresh author. It replies to
    the root with probability ``root_attachment_bias``, otherwise to one of the
    five most recent posts.
    """
    config.validate()
    rng = random.Random(config.seed)
    platform = Platform(config.platform)
    prefix = config.prefix if config.prefix is not None else platform.value
    lo, hi = config.size_range
    trees = []
    for c in range(config.n_conversations):
        conv = f"{prefix}-c{c:04d}"
        n = rng.randint(lo, hi)
        authors = [f"{conv}-a0"]
        ids = [f"{conv}-p00"]
        t = 1_600_000_000 + rng.randrange(86_400)
        posts = [Post(ids[0], None, authors[0], t, conv, platform)]
        for i in range(1, n):
            if rng.random() < config.revisit_rate:
                author = rng.choice(authors)
            else:
                author = f"{conv}-a{len(authors)}"
                authors.append(author)
            if rng.random() < config.root_attachment_bias:
                parent = ids[0]
            else:
                parent = rng.choice(ids[-RECENT_WINDOW:])
            t += rng.randint(1, 3600)
            ids.append(f"{conv}-p{i:02d}")
            posts.append(Post(ids[-1], parent, author, t, conv, platform))
        trees.append(validate_tree(posts))
    return Corpus(trees, f"synthetic(seed={config.seed})")


def reddit_like(n_conversations: int, seed: int) -> SynthConfig:
    """Small, deep threads with many returning authors."""
    return SynthConfig(n_conversations, (5, 20), 0.2, 0.6, seed, Platform.REDDIT)


def twitter_like(n_conversations: int, seed: int) -> SynthConfig:
    """Larger, flatter threads dominated by one-off repliers."""
    return SynthConfig(n_conversations, (20, 60), 0.6, 0.15, seed, Platform.TWITTER)
