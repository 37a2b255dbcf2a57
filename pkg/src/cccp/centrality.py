"""Flow-based betweenness of authors.

A conversation flow is a root-to-leaf path. An author's centrality in a tree
is the share of flows in which they wrote an interior post, i.e. one that is
neither the flow's root nor its leaf.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .scores import ScoreTable
from .tree import ConversationTree, enumerate_flows


class Endpoints(str, Enum):
    EXCLUDE = "exclude"
    INCLUDE = "include"


@dataclass(frozen=True)
class AuthorCentrality:
    conversation_id: str
    author: str
    value: float


def flow_centrality(tree: ConversationTree, endpoints: Endpoints = Endpoints.EXCLUDE) -> list[AuthorCentrality]:
    flows = enumerate_flows(tree)
    hits = {a: 0 for a in tree.authors}
    for flow in flows:
        nodes = flow if Endpoints(endpoints) is Endpoints.INCLUDE else flow[1:-1]
        for author in {tree.author(n) for n in nodes}:
            hits[author] += 1
    return [AuthorCentrality(tree.conversation_id, a, hits[a] / len(flows)) for a in tree.authors]


def centrality_scores(corpus, endpoints: Endpoints = Endpoints.EXCLUDE) -> ScoreTable:
    table = ScoreTable("centrality")
    for tree in corpus:
        for row in flow_centrality(tree, endpoints):
            table.add(tree.platform, tree.conversation_id, row.author, row.value)
    return table
