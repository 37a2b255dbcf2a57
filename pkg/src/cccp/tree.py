"""Reply-tree data model: validation, flows, distances and chronological order."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

MAX_NODES = 100


class Platform(str, Enum):
    REDDIT = "reddit"
    TWITTER = "twitter"
    SYNTHETIC = "synthetic"


class PathMode(str, Enum):
    UNDIRECTED = "undirected"
    ANCESTOR_ONLY = "ancestor-only"


class TreeError(ValueError):
    """Base class for reasons a conversation is rejected."""


class MissingParent(TreeError):
    def __init__(self, post_id: str, parent_id: str):
        super().__init__(f"post {post_id!r} replies to unknown post {parent_id!r}")
        self.post_id = post_id
        self.parent_id = parent_id


class MultipleRoots(TreeError):
    def __init__(self, roots: list[str]):
        super().__init__(f"{len(roots)} parentless posts: {', '.join(roots)}")
        self.roots = roots


class Cycle(TreeError):
    def __init__(self, post_ids: list[str]):
        super().__init__(f"posts not reachable from a root: {', '.join(post_ids)}")
        self.post_ids = post_ids


class TooLarge(TreeError):
    def __init__(self, n: int):
        super().__init__(f"{n} posts exceeds the {MAX_NODES}-post limit")
        self.n = n


class TimestampOrderViolation(TreeError):
    def __init__(self, child: str, parent: str):
        super().__init__(f"post {child!r} is not later than its parent {parent!r}")
        self.child = child
        self.parent = parent


class SingletonTree(TreeError):
    def __init__(self, conversation_id: str = ""):
        super().__init__(f"conversation {conversation_id!r} has a single post")


class DuplicatePost(TreeError):
    def __init__(self, post_id: str):
        super().__init__(f"post id {post_id!r} occurs more than once")
        self.post_id = post_id


class UnknownNode(KeyError):
    pass


@dataclass(frozen=True)
class Post:
    id: str
    parent_id: Optional[str]
    author: str
    timestamp: int
    conversation_id: str
    platform: Platform = Platform.SYNTHETIC

    def __post_init__(self):
        if not self.author:
            raise ValueError(f"post {self.id!r} has an empty author")
        if self.timestamp < 0:
            raise ValueError(f"post {self.id!r} has a negative timestamp")
        if not isinstance(self.platform, Platform):
            object.__setattr__(self, "platform", Platform(self.platform))


def chrono_key(post: Post) -> tuple[int, str]:
    return (post.timestamp, post.id)


@dataclass(frozen=True)
class ConversationTree:
    """A validated reply tree. Build it with :func:`validate_tree`.

    ``posts`` is held in chronological order (timestamp, then id), which is
    also a topological order since children are strictly later than parents.
    """

    conversation_id: str
    platform: Platform
    posts: tuple[Post, ...]
    root: str
    children: dict[str, tuple[str, ...]] = field(repr=False)
    depth: dict[str, int] = field(repr=False)
    _by_id: dict[str, Post] = field(repr=False)
    _ancestors: dict[str, tuple[str, ...]] = field(repr=False)

    def __len__(self) -> int:
        return len(self.posts)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._by_id

    def post(self, post_id: str) -> Post:
        try:
            return self._by_id[post_id]
        except KeyError:
            raise UnknownNode(post_id) from None

    def parent(self, post_id: str) -> Optional[str]:
        return self.post(post_id).parent_id

    def author(self, post_id: str) -> str:
        return self.post(post_id).author

    @property
    def leaves(self) -> list[str]:
        return [p.id for p in self.posts if not self.children[p.id]]

    @property
    def authors(self) -> list[str]:
        """Authors in order of first appearance."""
        seen: dict[str, None] = {}
        for p in self.posts:
            seen.setdefault(p.author, None)
        return list(seen)

    def author_posts(self, author: str) -> list[str]:
        return [p.id for p in self.posts if p.author == author]

    def ancestors(self, post_id: str) -> tuple[str, ...]:
        """Ids from ``post_id`` up to the root, both inclusive."""
        self.post(post_id)
        return self._ancestors[post_id]

    def is_ancestor(self, u: str, v: str) -> bool:
        """True if ``u`` lies on the path from the root to ``v`` (``u == v`` counts)."""
        return u in self.ancestors(v)

    def flows(self) -> list[list[str]]:
        return enumerate_flows(self)

    def path_distance(self, u: str, v: str, mode: PathMode = PathMode.UNDIRECTED) -> Optional[int]:
        return path_distance(self, u, v, mode)

    def root_distance(self, v: str) -> int:
        return root_distance(self, v)

    def chronological_prefix(self, k: int) -> list[Post]:
        return chronological_prefix(self, k)


def validate_tree(posts: Iterable[Post]) -> ConversationTree:
    """Check reply-tree invariants and index the posts.

    Checks run in a fixed order over id-sorted posts, so any permutation of
    the same input gives the same tree or the same error.
    """
    posts = sorted(posts, key=lambda p: p.id)
    if not posts:
        raise ValueError("no posts given")
    conv_ids = {p.conversation_id for p in posts}
    if len(conv_ids) > 1:
        raise ValueError(f"posts span several conversations: {sorted(conv_ids)}")
    conversation_id = posts[0].conversation_id

    by_id: dict[str, Post] = {}
    for p in posts:
        if p.id in by_id:
            raise DuplicatePost(p.id)
        by_id[p.id] = p

    if len(posts) > MAX_NODES:
        raise TooLarge(len(posts))
    if len(posts) < 2:
        raise SingletonTree(conversation_id)

    roots = [p.id for p in posts if p.parent_id is None]
    if len(roots) > 1:
        raise MultipleRoots(roots)
    for p in posts:
        if p.parent_id is not None and p.parent_id not in by_id:
            raise MissingParent(p.id, p.parent_id)
    if not roots:
        raise Cycle([p.id for p in posts])
    root = roots[0]

    children: dict[str, list[str]] = {p.id: [] for p in posts}
    for p in posts:
        if p.parent_id is not None:
            children[p.parent_id].append(p.id)

    depth = {root: 1}
    stack = [root]
    while stack:
        node = stack.pop()
        for c in children[node]:
            depth[c] = depth[node] + 1
            stack.append(c)
    if len(depth) != len(posts):
        raise Cycle([p.id for p in posts if p.id not in depth])

    for p in posts:
        if p.parent_id is not None and p.timestamp <= by_id[p.parent_id].timestamp:
            raise TimestampOrderViolation(p.id, p.parent_id)

    ordered = tuple(sorted(posts, key=chrono_key))
    ancestors: dict[str, tuple[str, ...]] = {}
    for p in ordered:
        ancestors[p.id] = (p.id,) if p.parent_id is None else (p.id,) + ancestors[p.parent_id]
    ordered_children = {
        pid: tuple(sorted(cs, key=lambda c: chrono_key(by_id[c]))) for pid, cs in children.items()
    }
    return ConversationTree(
        conversation_id=conversation_id,
        platform=by_id[root].platform,
        posts=ordered,
        root=root,
        children=ordered_children,
        depth=depth,
        _by_id=by_id,
        _ancestors=ancestors,
    )


def enumerate_flows(tree: ConversationTree) -> list[list[str]]:
    """All root-to-leaf paths, children visited chronologically."""
    flows = []
    stack = [[tree.root]]
    while stack:
        path = stack.pop()
        kids = tree.children[path[-1]]
        if not kids:
            flows.append(path)
        for c in reversed(kids):
            stack.append(path + [c])
    return flows


def path_distance(
    tree: ConversationTree, u: str, v: str, mode: PathMode = PathMode.UNDIRECTED
) -> Optional[int]:
    """Edge count between ``u`` and ``v``.

    In ancestor-only mode a pair where neither post is an ancestor of the
    other has no distance and ``None`` is returned.
    """
    up_u = tree.ancestors(u)
    up_v = tree.ancestors(v)
    if PathMode(mode) is PathMode.ANCESTOR_ONLY:
        if u in up_v or v in up_u:
            return abs(tree.depth[u] - tree.depth[v])
        return None
    on_u = set(up_u)
    for lca in up_v:
        if lca in on_u:
            return tree.depth[u] + tree.depth[v] - 2 * tree.depth[lca]
    raise AssertionError("validated trees share a root")


def root_distance(tree: ConversationTree, v: str) -> int:
    """Edge count from the root plus one, so the root itself is at 1."""
    tree.post(v)
    return tree.depth[v]


def chronological_prefix(tree: ConversationTree, k: int) -> list[Post]:
    if not 0 <= k <= len(tree):
        raise ValueError(f"prefix length {k} outside 0..{len(tree)}")
    return list(tree.posts[:k])
