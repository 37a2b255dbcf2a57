"""Rule-based seen-probability baseline.

An author's chance of having seen an earlier post combines two decays: one in
the reply-path distance between that post and the author's later posts, one
in the post's distance from the root. The two are joined as a probabilistic
union of independent events.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scores import ScoreTable
from .tree import ConversationTree, PathMode

ZETA_BASE = 0.5
THETA_BASE = 0.25


@dataclass(frozen=True)
class SeenProbability:
    author: str
    node: str
    zeta: float
    theta: float
    combined: float


def noisy_or(a: float, b: float) -> float:
    """a + b - ab, written as a complement product so it never rounds below max(a, b)."""
    return 1.0 - (1.0 - a) * (1.0 - b)


def zeta(
    tree: ConversationTree,
    author: str,
    node_j: str,
    base: float = ZETA_BASE,
    path_mode: PathMode = PathMode.UNDIRECTED,
) -> float:
    """Mean path-distance decay from ``node_j`` to the author's later posts.

    Returns 0 when the author wrote nothing after ``node_j``. In ancestor-only
    mode, later posts unrelated to ``node_j`` contribute 0 to the mean.
    """
    t_j = tree.post(node_j).timestamp
    later = [p.id for p in tree.posts if p.author == author and p.timestamp > t_j and p.id != node_j]
    if not later:
        return 0.0
    total = 0.0
    for i in later:
        d = tree.path_distance(node_j, i, path_mode)
        if d is not None:
            total += base ** (d - 1)
    return total / len(later)


def theta(tree: ConversationTree, node_j: str, base: float = THETA_BASE) -> float:
    return base ** (tree.root_distance(node_j) - 1)


def seen_baseline(
    tree: ConversationTree,
    author: str,
    node_j: str,
    zeta_base: float = ZETA_BASE,
    theta_base: float = THETA_BASE,
    path_mode: PathMode = PathMode.UNDIRECTED,
) -> SeenProbability:
    z = zeta(tree, author, node_j, zeta_base, path_mode)
    th = theta(tree, node_j, theta_base)
    combined = 1.0 if tree.author(node_j) == author else noisy_or(z, th)
    return SeenProbability(author, node_j, z, th, combined)


def author_score(tree: ConversationTree, author: str, **kw) -> float:
    """Mean seen-probability over foreign posts written before the author's last post."""
    last = max((p for p in tree.posts if p.author == author), key=lambda p: (p.timestamp, p.id))
    foreign = []
    for p in tree.posts:
        if p is last:
            break
        if p.author != author:
            foreign.append(p.id)
    if not foreign:
        return 1.0
    return sum(seen_baseline(tree, author, j, **kw).combined for j in foreign) / len(foreign)


def tree_scores(tree: ConversationTree, **kw) -> list[tuple[str, float]]:
    return [(a, author_score(tree, a, **kw)) for a in tree.authors]


def baseline_scores(
    corpus,
    zeta_base: float = ZETA_BASE,
    theta_base: float = THETA_BASE,
    path_mode: PathMode = PathMode.UNDIRECTED,
) -> ScoreTable:
    table = ScoreTable("baseline")
    for tree in corpus:
        for author, score in tree_scores(tree, zeta_base=zeta_base, theta_base=theta_base, path_mode=path_mode):
            table.add(tree.platform, tree.conversation_id, author, score)
    return table
