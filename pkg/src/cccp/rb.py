"""Response-based metric: learn "seen" from reply facts.

Every (later post, earlier foreign post) pair in a conversation is a training
example. A pair is positive when the later post replies to the earlier one,
since replying implies reading. A one-hidden-layer classifier learns the seen
probability from reply distance, root distance and time gap, and an author's
score is the mean predicted probability over their pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .nn import TrainConfig, UntrainedModel
from .scores import ScoreTable, format_float
from .tree import ConversationTree, PathMode


class Positives(str, Enum):
    PARENT = "parent"
    ANCESTORS = "ancestors"


class DegenerateLabels(ValueError):
    pass


@dataclass(frozen=True)
class RBConfig:
    positives: Positives = Positives.PARENT
    path_mode: PathMode = PathMode.UNDIRECTED
    max_bucket: int = 10
    hidden: int = 16
    threshold: float = 0.5
    train: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=0.05, epochs=50, batch_size=32))

    @property
    def n_features(self) -> int:
        return 2 * (self.max_bucket + 1) + 1


@dataclass(frozen=True)
class PairExample:
    conversation_id: str
    author: str
    v_i: str
    v_j: str
    reply_distance: Optional[int]
    root_distance: int
    time_delta: int
    label: int


@dataclass(frozen=True)
class RBModel:
    params: nn.ModelParams
    time_scale: float
    config: RBConfig
    precision: float = math.nan
    recall: float = math.nan


def bucket(d: Optional[int], max_bucket: int) -> int:
    """Index 0..max_bucket-1 for distances 1..max_bucket; the overflow slot otherwise."""
    if d is None or d < 1 or d > max_bucket:
        return max_bucket
    return d - 1


def encode(pair: PairExample, time_scale: float, max_bucket: int = 10) -> np.ndarray:
    """One-hot reply distance, one-hot root distance, log time gap scaled into [0, 1]."""
    width = max_bucket + 1
    x = np.zeros(2 * width + 1)
    x[bucket(pair.reply_distance, max_bucket)] = 1.0
    x[width + bucket(pair.root_distance, max_bucket)] = 1.0
    x[-1] = scale_time(pair.time_delta, time_scale)
    return x


def scale_time(seconds: float, time_scale: float) -> float:
    if time_scale <= 0:
        return 0.0
    return min(math.log1p(max(seconds, 0)) / time_scale, 1.0)


def build_pairs(tree: ConversationTree, config: RBConfig = RBConfig()) -> list[PairExample]:
    """Label every (post, earlier post by someone else) pair of the tree."""
    pairs = []
    posts = tree.posts
    for i, vi in enumerate(posts):
        if config.positives is Positives.PARENT:
            positive = {vi.parent_id}
        else:
            positive = set(tree.ancestors(vi.id)[1:])
        for vj in posts[:i]:
            if vj.author == vi.author:
                continue
            pairs.append(PairExample(
                conversation_id=tree.conversation_id,
                author=vi.author,
                v_i=vi.id,
                v_j=vj.id,
                reply_distance=tree.path_distance(vj.id, vi.id, config.path_mode),
                root_distance=tree.root_distance(vj.id),
                time_delta=vi.timestamp - vj.timestamp,
                label=int(vj.id in positive),
            ))
    return pairs


def corpus_pairs(corpus, config: RBConfig = RBConfig()) -> list[PairExample]:
    return [p for tree in corpus for p in build_pairs(tree, config)]


def time_scale_for(pairs) -> float:
    return max((math.log1p(p.time_delta) for p in pairs), default=0.0)


def design_matrix(pairs, time_scale: float, max_bucket: int) -> np.ndarray:
    if not pairs:
        return np.zeros((0, 2 * (max_bucket + 1) + 1))
    return np.stack([encode(p, time_scale, max_bucket) for p in pairs])


def precision_recall(y_true, y_pred) -> tuple[float, float]:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    tp = int(np.sum(y_true & y_pred))
    fp = int(np.sum(~y_true & y_pred))
    fn = int(np.sum(y_true & ~y_pred))
    precision = tp / (tp + fp) if tp + fp else math.nan
    recall = tp / (tp + fn) if tp + fn else math.nan
    return precision, recall


def train_rb(corpus, config: RBConfig = RBConfig()) -> RBModel:
    pairs = corpus_pairs(corpus, config)
    if not pairs:
        raise nn.EmptyDataset("corpus yields no candidate pairs")
    labels = np.array([p.label for p in pairs], dtype=float)
    if labels.min() == labels.max():
        raise DegenerateLabels(f"all {len(pairs)} pairs have label {int(labels[0])}")
    time_scale = time_scale_for(pairs)
    X = design_matrix(pairs, time_scale, config.max_bucket)
    params = nn.mlp(X.shape[1], [config.hidden], 1, "sigmoid", seed=config.train.seed)
    params = nn.train(params, X, labels, "bce", config.train)
    predicted = nn.forward(params, X)[:, 0] >= config.threshold
    precision, recall = precision_recall(labels, predicted)
    return RBModel(params, time_scale, config, precision, recall)


def _require(model: Optional[RBModel]) -> RBModel:
    if model is None or getattr(model, "params", None) is None:
        raise UntrainedModel("response-based scoring needs a trained model")
    return model


def predict_pairs(model: RBModel, pairs) -> np.ndarray:
    model = _require(model)
    if not pairs:
        return np.zeros(0)
    return nn.forward(model.params, design_matrix(pairs, model.time_scale, model.config.max_bucket))[:, 0]


def rb_scores(corpus, model: RBModel) -> ScoreTable:
    """Mean predicted seen-probability over each author's candidate pairs."""
    model = _require(model)
    table = ScoreTable("rb")
    for tree in corpus:
        pairs = build_pairs(tree, model.config)
        probs = predict_pairs(model, pairs)
        sums: dict[str, list[float]] = {}
        for pair, p in zip(pairs, probs):
            sums.setdefault(pair.author, []).append(float(p))
        for author in tree.authors:
            if author in sums:
                table.add(tree.platform, tree.conversation_id, author, sum(sums[author]) / len(sums[author]))
    return table


def extract_distance_embedding(model: RBModel, root_bucket: int = 2, time_value: float = 0.5) -> list[tuple[int, float]]:
    """Predicted probability per reply-distance bucket, other features held at reference values.

    Bucket ``max_bucket + 1`` is the overflow bucket.
    """
    model = _require(model)
    mb = model.config.max_bucket
    width = mb + 1
    probes = np.zeros((width, 2 * width + 1))
    for b in range(width):
        probes[b, b] = 1.0
        probes[b, width + bucket(root_bucket, mb)] = 1.0
        probes[b, -1] = time_value
    out = nn.forward(model.params, probes)[:, 0]
    return [(b + 1, float(out[b])) for b in range(width)]


PAIR_HEADER = ("conversation_id", "author", "v_i", "v_j", "reply_distance", "root_distance", "time_delta", "label")


def pairs_to_tsv(pairs, time_scale: float) -> str:
    lines = ["\t".join(PAIR_HEADER)]
    for p in pairs:
        rd = "" if p.reply_distance is None else str(p.reply_distance)
        lines.append("\t".join([
            p.conversation_id, p.author, p.v_i, p.v_j, rd, str(p.root_distance),
            format_float(scale_time(p.time_delta, time_scale)), str(p.label),
        ]))
    return "\n".join(lines) + "\n"


def save_model(model: RBModel, path) -> None:
    path = Path(path)
    nn.save_params(model.params, path)
    meta = path.with_suffix(".meta")
    c = model.config
    meta.write_text(
        f"time_scale\t{model.time_scale:.17g}\npositives\t{c.positives.value}\npath_mode\t{PathMode(c.path_mode).value}\n"
        f"max_bucket\t{c.max_bucket}\nthreshold\t{c.threshold:.17g}\n"
        f"precision\t{model.precision:.17g}\nrecall\t{model.recall:.17g}\n",
        encoding="utf-8",
    )


def load_model(path) -> RBModel:
    path = Path(path)
    params = nn.load_params(path)
    meta = dict(line.split("\t") for line in path.with_suffix(".meta").read_text(encoding="utf-8").splitlines())
    config = RBConfig(
        positives=Positives(meta["positives"]),
        path_mode=PathMode(meta["path_mode"]),
        max_bucket=int(meta["max_bucket"]),
        hidden=params.layers[0].n_out,
        threshold=float(meta["threshold"]),
    )
    return RBModel(params, float(meta["time_scale"]), config, float(meta["precision"]), float(meta["recall"]))
