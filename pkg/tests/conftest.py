import random
import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from cccp.tree import Post, validate_tree  # noqa: E402
from oracles import random_posts  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def make_posts(spec, conversation_id="c", platform="synthetic"):
    """Posts from ``[(id, parent, author), ...]`` with timestamps 0, 10, 20, ..."""
    return [
        Post(pid, parent, author, 10 * i, conversation_id, platform)
        for i, (pid, parent, author) in enumerate(spec)
    ]


def make_tree(spec, **kw):
    return validate_tree(make_posts(spec, **kw))


@st.composite
def trees(draw, min_size=2, max_size=20, max_authors=5):
    n = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    n_authors = draw(st.integers(1, max_authors))
    return validate_tree(random_posts(random.Random(seed), n, n_authors))


@pytest.fixture
def chain_aba():
    return make_tree([("r", None, "A"), ("x", "r", "B"), ("y", "x", "A")])


@pytest.fixture
def fixtures_dir():
    return FIXTURES
