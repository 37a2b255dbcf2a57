"""Prediction-based metric: who writes next?

For each chronological prefix of a conversation, the author of the next post
is hidden and a softmax classifier predicts it among the participants so far
(one slot each, in order of first appearance) or a NEW author. An author's
raw score is their mean predicted probability across the conversation's
contexts; dividing by the conversation's repetition probability makes
conversations with different amounts of author reuse comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .nn import TrainConfig, UntrainedModel
from .scores import ScoreTable
from .tree import ConversationTree, SingletonTree

SLOT_FEATURES = 5
GLOBAL_FEATURES = 4
TIME_SCALE = math.log1p(30 * 86_400)
DEFAULT_HIDDEN = (64, 64, 32, 32, 16)


class EmptyContexts(ValueError):
    pass


@dataclass(frozen=True)
class PBConfig:
    max_slots: int = 20
    hidden: tuple[int, ...] = DEFAULT_HIDDEN
    train: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=0.01, epochs=100, batch_size=32))

    @property
    def n_features(self) -> int:
        return self.max_slots * SLOT_FEATURES + GLOBAL_FEATURES


@dataclass(frozen=True)
class PredictionContext:
    conversation_id: str
    k: int
    slots: tuple[str, ...]
    features: np.ndarray = field(repr=False)
    target: int  # slot index, or ``new`` (== max_slots)
    new: int

    @property
    def target_is_new(self) -> bool:
        return self.target == self.new

    def mask(self) -> np.ndarray:
        """Classes that can be predicted: occupied slots plus NEW."""
        m = np.zeros(self.new + 1, dtype=bool)
        m[: len(self.slots)] = True
        m[self.new] = True
        return m


@dataclass(frozen=True)
class PBModel:
    params: nn.ModelParams
    max_slots: int
    precision: float = math.nan
    new_fraction: float = math.nan


def build_contexts(tree: ConversationTree, max_slots: int = 20) -> list[PredictionContext]:
    """One context per prefix length k = 1..n-1, predicting the author of post k+1.

    The position of the upcoming post (which post it replies to, and when) is
    known; only its author is hidden.
    """
    if max_slots < 1:
        raise ValueError("max_slots must be >= 1")
    posts = tree.posts
    contexts = []
    slots: list[str] = []
    count: dict[str, int] = {}
    latest: dict[str, str] = {}
    leaves: set[str] = set()
    max_depth = 0
    for k in range(1, len(posts)):
        prev = posts[k - 1]
        if prev.author not in count and len(slots) < max_slots:
            slots.append(prev.author)
        count[prev.author] = count.get(prev.author, 0) + 1
        latest[prev.author] = prev.id
        leaves.discard(prev.parent_id)
        leaves.add(prev.id)
        max_depth = max(max_depth, tree.depth[prev.id])

        nxt = posts[k]
        target_post = nxt.parent_id
        x = np.zeros(max_slots * SLOT_FEATURES + GLOBAL_FEATURES)
        for s, author in enumerate(slots):
            last = tree.post(latest[author])
            d = tree.path_distance(last.id, target_post)
            base = s * SLOT_FEATURES
            x[base] = 1.0
            x[base + 1] = count[author] / k
            x[base + 2] = 1.0 / (1.0 + d)
            x[base + 3] = min(math.log1p(nxt.timestamp - last.timestamp) / TIME_SCALE, 1.0)
            x[base + 4] = float(tree.author(target_post) == author)
        g = max_slots * SLOT_FEATURES
        x[g] = math.log1p(k) / math.log1p(100)
        x[g + 1] = max_depth / 10.0
        x[g + 2] = len(leaves) / k
        x[g + 3] = tree.depth[target_post] / 10.0
        target = slots.index(nxt.author) if nxt.author in slots else max_slots
        contexts.append(PredictionContext(tree.conversation_id, k, tuple(slots), x, target, max_slots))
    return contexts


def repetition_probability(tree: ConversationTree) -> float:
    """Fraction of posts after the first whose author had already written."""
    n = len(tree)
    if n < 2:
        raise SingletonTree(tree.conversation_id)
    seen = {tree.posts[0].author}
    repeats = 0
    for p in tree.posts[1:]:
        repeats += p.author in seen
        seen.add(p.author)
    return repeats / (n - 1)


def _matrices(contexts: list[PredictionContext], n_classes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.stack([c.features for c in contexts])
    Y = np.zeros((len(contexts), n_classes))
    Y[np.arange(len(contexts)), [c.target for c in contexts]] = 1.0
    M = np.stack([c.mask() for c in contexts])
    return X, Y, M


def masked_probs(params: nn.ModelParams, X: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Softmax output restricted to occupied slots and NEW, renormalized per row."""
    z = np.where(M, nn.logits(params, X), -np.inf)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def train_pb(corpus, config: PBConfig = PBConfig()) -> PBModel:
    contexts = [c for tree in corpus for c in build_contexts(tree, config.max_slots)]
    if not contexts:
        raise EmptyContexts("corpus yields no prediction contexts")
    n_classes = config.max_slots + 1
    X, Y, M = _matrices(contexts, n_classes)
    params = nn.mlp(X.shape[1], list(config.hidden), n_classes, "softmax", seed=config.train.seed)
    params = nn.train(params, X, Y, "cce", config.train)
    predicted = masked_probs(params, X, M).argmax(axis=1)
    targets = Y.argmax(axis=1)
    precision = float(np.mean(predicted == targets))
    new_fraction = float(np.mean(predicted == config.max_slots))
    return PBModel(params, config.max_slots, precision, new_fraction)


def _require(model: Optional[PBModel]) -> PBModel:
    if model is None or getattr(model, "params", None) is None:
        raise UntrainedModel("prediction-based scoring needs a trained model")
    return model


def tree_raw_scores(tree: ConversationTree, model: PBModel) -> tuple[dict[str, float], float]:
    """Per-author mean slot probability over the tree's contexts, and the mean NEW probability."""
    model = _require(model)
    contexts = build_contexts(tree, model.max_slots)
    X, _, M = _matrices(contexts, model.max_slots + 1)
    P = masked_probs(model.params, X, M)
    raw = {a: 0.0 for a in tree.authors}
    for ctx, row in zip(contexts, P):
        for s, author in enumerate(ctx.slots):
            raw[author] += float(row[s])
    n = len(contexts)
    return {a: v / n for a, v in raw.items()}, float(P[:, model.max_slots].mean())


def pb_tables(corpus, model: PBModel) -> tuple[ScoreTable, ScoreTable]:
    """(normalized, raw) score tables.

    Normalized scores are raw scores divided by the conversation's repetition
    probability; they are NaN where that probability is 0.
    """
    model = _require(model)
    normalized, raw_table = ScoreTable("pb"), ScoreTable("pb_raw")
    for tree in corpus:
        raw, _ = tree_raw_scores(tree, model)
        rep = repetition_probability(tree)
        for author in tree.authors:
            raw_table.add(tree.platform, tree.conversation_id, author, raw[author])
            normalized.add(tree.platform, tree.conversation_id, author, raw[author] / rep if rep > 0 else math.nan)
    return normalized, raw_table


def pb_scores(corpus, model: PBModel) -> ScoreTable:
    return pb_tables(corpus, model)[0]


CONTEXT_HEADER = ("conversation_id", "k", "slots", "target", "features")


def contexts_to_tsv(contexts) -> str:
    lines = ["\t".join(CONTEXT_HEADER)]
    for c in contexts:
        target = "NEW" if c.target_is_new else c.slots[c.target]
        lines.append("\t".join([
            c.conversation_id, str(c.k), ",".join(c.slots), target, ",".join(f"{v:.6f}" for v in c.features),
        ]))
    return "\n".join(lines) + "\n"


def save_model(model: PBModel, path) -> None:
    path = Path(path)
    nn.save_params(model.params, path)
    path.with_suffix(".meta").write_text(
        f"max_slots\t{model.max_slots}\nprecision\t{model.precision:.17g}\nnew_fraction\t{model.new_fraction:.17g}\n",
        encoding="utf-8",
    )


def load_model(path) -> PBModel:
    path = Path(path)
    params = nn.load_params(path)
    meta = dict(line.split("\t") for line in path.with_suffix(".meta").read_text(encoding="utf-8").splitlines())
    return PBModel(params, int(meta["max_slots"]), float(meta["precision"]), float(meta["new_fraction"]))
