from pathlib import Path

import pytest

from coordkit.pipeline import load_annotations
from coordkit.treebank import read_trees

REPO = Path(__file__).resolve().parents[1]
MINI = REPO / "data" / "mini"


@pytest.fixture(scope="session")
def mini_corpus():
    return read_trees(MINI / "original.mrg")


@pytest.fixture(scope="session")
def mini_rows():
    return load_annotations(MINI / "annotations.jsonl")


@pytest.fixture(scope="session")
def mini_golden_text():
    return (MINI / "golden.mrg").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def mini_golden():
    return read_trees(MINI / "golden.mrg")


def tree_of(text: str, tree_id: str = "test#0"):
    from coordkit.treebank import parse_bracketed

    trees = parse_bracketed(text, source=tree_id.rsplit("#", 1)[0])
    assert len(trees) == 1
    return trees[0]
