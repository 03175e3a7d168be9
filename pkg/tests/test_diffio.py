import json
import random

import pytest

import treegen
from coordkit import diffio
from coordkit.treebank import (
    Tree,
    corpus_checksum,
    corpus_text,
    parse_bracketed,
    serialize,
    tokens,
)


def _canon(ops):
    return [op.semantic_key() for op in ops]


def test_empty_diff_is_identity():
    corpus = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    diff = diffio.DiffFile(ops=(), source_checksum=corpus_checksum(corpus))
    assert diffio.apply(corpus, diff) == corpus


def test_checksum_guard():
    corpus = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    diff = diffio.DiffFile(ops=(), source_checksum="not-the-right-checksum")
    with pytest.raises(diffio.DiffApplyError):
        diffio.apply(corpus, diff)


def test_save_load_roundtrip(tmp_path):
    corpus = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    ops, _ = treegen.random_ops(random.Random(1), corpus[0], 6)
    diff = diffio.DiffFile(ops=tuple(ops), source_checksum=corpus_checksum(corpus))
    path = tmp_path / "edits.ccpdiff.jsonl"
    diff.save(path)
    loaded = diffio.DiffFile.load(path)
    assert loaded == diff
    header = json.loads(path.read_text().splitlines()[0])
    assert header["format_version"] == "1"


def test_apply_invert_roundtrip_random():
    rng = random.Random(17)
    for i in range(300):
        tree = treegen.random_tree(rng, tree_id=f"d#{i}")
        ops, edited = treegen.random_ops(rng, tree, rng.randint(1, 6))
        diff = diffio.DiffFile(ops=tuple(ops))
        applied = diffio.apply([tree], diff, verify_checksum=False)
        assert serialize(applied[0]) == serialize(edited)
        back = diffio.apply(applied, diffio.invert(diff), verify_checksum=False)
        assert serialize(back[0]) == serialize(tree)
        assert back[0].root == tree.root


def test_invert_is_involutive():
    rng = random.Random(23)
    tree = treegen.random_tree(rng, tree_id="inv#0")
    ops, _ = treegen.random_ops(rng, tree, 10)
    diff = diffio.DiffFile(ops=tuple(ops), source_checksum="a", result_checksum="b")
    twice = diffio.invert(diffio.invert(diff))
    assert twice == diff


def test_compute_diff_identity():
    corpus = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    diff = diffio.compute_diff(corpus, corpus)
    assert diff.ops == ()


def test_compute_diff_functions_only():
    original = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    labeled = parse_bracketed(
        "(NP-CCP (NNP-COORD Poland) (CC-CC and) (NNP-COORD Hungary))", source="c")
    diff = diffio.compute_diff(original, labeled)
    assert len(diff.ops) == 4
    assert all(op.kind == "set_function" for op in diff.ops)
    assert sorted(op.function for op in diff.ops) == ["CC", "CCP", "COORD", "COORD"]
    assert diffio.apply(original, diff) == labeled


def test_compute_diff_structural_insert():
    original = parse_bracketed("(NP (NN a) (CC and) (JJ b) (NN c))", source="c")
    target = parse_bracketed("(NP (NN a) (CC and) (NP (JJ b) (NN c)))", source="c")
    diff = diffio.compute_diff(original, target)
    assert [op.kind for op in diff.ops] == ["insert_bracket"]
    assert diffio.apply(original, diff) == target


def test_compute_diff_relabel():
    original = parse_bracketed("(NP (NP (NN a)) (CC and) (NP (NN b)))", source="c")
    target = parse_bracketed("(NP (UCP (NN a)) (CC and) (NP (NN b)))", source="c")
    diff = diffio.compute_diff(original, target)
    assert [op.kind for op in diff.ops] == ["relabel"]
    assert diffio.apply(original, diff) == target


def test_compute_diff_rejects_word_changes():
    a = parse_bracketed("(NP (NN dog))", source="c")
    b = parse_bracketed("(NP (NN cat))", source="c")
    with pytest.raises(diffio.IncomparableCorporaError):
        diffio.compute_diff(a, b)


def test_compute_diff_random_canonical():
    rng = random.Random(41)
    for i in range(200):
        tree = treegen.random_tree(rng, tree_id=f"cd#{i}", max_depth=5, max_branch=4)
        ops, edited = treegen.random_ops(rng, tree, rng.randint(1, 5))
        annotated = [Tree(tree.id, edited.root)]
        computed = diffio.compute_diff([tree], annotated)
        # the computed diff reproduces the annotated corpus ...
        assert diffio.apply([tree], computed) == annotated
        # ... and canonicalization is a fixed point
        again = diffio.compute_diff([tree], diffio.apply([tree], computed))
        assert _canon(again.ops) == _canon(computed.ops)
        # ... and inverts cleanly
        back = diffio.apply(annotated, diffio.invert(computed))
        assert corpus_text(back) == corpus_text([tree])


def test_compute_diff_reproduces_adoption_effect():
    original = parse_bracketed(
        "(S (ADVP (RB slowly)) (VP (VBD ran) (CC and) (VBD hid)))", source="c")
    op = diffio.adopt_sibling("c#0", (), 0, "first")
    moved = diffio.apply(original, diffio.DiffFile(ops=(op,)), verify_checksum=False)
    computed = diffio.compute_diff(original, moved)
    assert diffio.apply(original, computed) == moved


def test_apply_error_carries_op_index():
    corpus = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    bad = diffio.DiffFile(ops=(
        diffio.set_function("c#0", (), "CCP", None),
        diffio.insert_bracket("c#0", (9, 9), 0, 1, "NP"),
    ))
    with pytest.raises(diffio.DiffApplyError) as err:
        diffio.apply(corpus, bad, verify_checksum=False)
    assert err.value.op_index == 1


def test_set_function_prior_mismatch():
    corpus = parse_bracketed("(NP (NNP Poland) (CC and) (NNP Hungary))", source="c")
    bad = diffio.DiffFile(ops=(diffio.set_function("c#0", (), "CCP", "COORD"),))
    with pytest.raises(diffio.DiffApplyError):
        diffio.apply(corpus, bad, verify_checksum=False)


def test_ops_never_touch_terminals():
    rng = random.Random(53)
    for i in range(100):
        tree = treegen.random_tree(rng, tree_id=f"t#{i}")
        ops, edited = treegen.random_ops(rng, tree, 5)
        assert [(t.word, t.pos) for t in tokens(edited.root)] == \
            [(t.word, t.pos) for t in tokens(tree.root)]
