import random
from collections import Counter

import pytest

import treegen
from conftest import tree_of
from coordkit import diffio
from coordkit.evalstats import (
    AnnotationMismatchError,
    ConfusionMatrix,
    CoordAnnotation,
    IncomparableTreesError,
    change_stats,
    conjunct_agreement,
    corpus_parseval,
    corpus_stats,
    function_confusion,
    parseval,
)
from coordkit.treebank import (
    Span,
    Tree,
    is_preterminal,
    iter_internal,
    tokens,
)


# ---------------------------------------------------------------------------
# Independent oracle: collect (label, span) multisets by direct token walks.

def _oracle_brackets(tree, include_functions):
    kept = {}
    for tok in tokens(tree.root):
        if tok.pos in {",", ".", ":", "``", "''", "-LRB-", "-RRB-", "-NONE-"}:
            continue
        kept[tok.index] = len(kept)
    counts = Counter()
    for _, node in iter_internal(tree.root):
        if is_preterminal(node):
            continue
        covered = sorted(kept[t.index] for t in tokens(node) if t.index in kept)
        if not covered:
            continue
        span = (covered[0], covered[-1] + 1)
        key = (node.label.category, node.label.coord_function, span) \
            if include_functions else (node.label.category, span)
        counts[key] += 1
    return counts


def _oracle_parseval(gold, pred, include_functions):
    g = _oracle_brackets(gold, include_functions)
    p = _oracle_brackets(pred, include_functions)
    matched = sum(min(n, p[k]) for k, n in g.items())
    return matched, sum(g.values()), sum(p.values())


def test_self_score_is_100():
    tree = tree_of("(S (NP (NNP Poland) (CC and) (NNP Hungary)) (VP (VBD won)) (. .))")
    report = parseval(tree, tree)
    assert report.precision == report.recall == report.f1 == 100.0
    assert report.complete_match_rate == 100.0


def test_parseval_counts():
    gold = tree_of("(S (NP (DT the) (NN dog)) (VP (VBD ran)))")
    pred = tree_of("(S (NP (DT the)) (NP (NN dog) (VBD ran)))", tree_id="p#0")
    g = parseval(gold, pred)
    assert g.gold_brackets == 3 and g.predicted_brackets == 3
    assert g.matched_brackets == 1  # only the root S matches


def test_parseval_requires_same_words():
    gold = tree_of("(NP (NN dog))")
    pred = tree_of("(NP (NN cat))")
    with pytest.raises(IncomparableTreesError):
        parseval(gold, pred)


def test_parseval_symmetric():
    rng = random.Random(61)
    a = treegen.random_tree(rng, "a#0")
    ops, edited = treegen.random_ops(rng, a, 4)
    b = Tree("a#0", edited.root)
    r1 = parseval(a, b)
    r2 = parseval(b, a)
    assert r1.precision == r2.recall and r1.recall == r2.precision


def test_parseval_matches_oracle_on_random_pairs():
    rng = random.Random(71)
    for i in range(100):
        gold = treegen.random_tree(rng, f"g#{i}", functions=True)
        ops, edited = treegen.random_ops(rng, gold, rng.randint(0, 5))
        pred = Tree(gold.id, edited.root)
        for include_functions in (False, True):
            want = _oracle_parseval(gold, pred, include_functions)
            got = parseval(gold, pred, include_functions)
            assert (got.matched_brackets, got.gold_brackets,
                    got.predicted_brackets) == want


def test_function_mismatch_punished_additionally():
    gold = tree_of(
        "(NP (NP-CCP (DT-MARK both) (NP-COORD (NNS cats)) (CC-CC and) "
        "(NP-COORD (NNS dogs)) (PP-SHARED (IN in) (NP (NN town)))))")
    pred = tree_of(
        "(NP (DT both) (NP-CCP (NP-COORD (NNS cats)) (CC-CC and) "
        "(NP-COORD (NNS dogs))) (PP (IN in) (NP (NN town))))", tree_id="p#0")
    plain = parseval(gold, pred, include_functions=False)
    func = parseval(gold, pred, include_functions=True)
    # the span mistake costs once without functions, more with them
    assert func.f1 < plain.f1
    want_plain = _oracle_parseval(gold, pred, False)
    want_func = _oracle_parseval(gold, pred, True)
    assert (plain.matched_brackets, plain.gold_brackets, plain.predicted_brackets) == want_plain
    assert (func.matched_brackets, func.gold_brackets, func.predicted_brackets) == want_func


def test_stripped_trees_score_like_function_blind():
    from coordkit.treebank import strip_coord_functions

    rng = random.Random(73)
    gold = treegen.random_tree(rng, "s#0", functions=True)
    ops, edited = treegen.random_ops(rng, gold, 3)
    pred = Tree(gold.id, edited.root)
    g2, p2 = strip_coord_functions(gold), strip_coord_functions(pred)
    blind = parseval(gold, pred, include_functions=False)
    stripped = parseval(g2, p2, include_functions=True)
    assert (blind.matched_brackets, blind.gold_brackets, blind.predicted_brackets) == \
        (stripped.matched_brackets, stripped.gold_brackets, stripped.predicted_brackets)


def test_corpus_parseval_aggregates_counts_first():
    t1 = tree_of("(S (NP (NN a)) (VP (VBD b)))")
    t2 = tree_of("(S (NP (NN a)) (VP (VBD b) (NP (NN c))))", tree_id="q#0")
    t2_pred = tree_of("(S (NP (NN a)) (VP (VBD b) (PP (NN c))))", tree_id="q#0")
    report = corpus_parseval([(t1, t1), (t2, t2_pred)])
    assert report.gold_brackets == 3 + 4
    assert report.complete_match_rate == 50.0


# ---------------------------------------------------------------------------
# Confusion

def test_confusion_diagonal_on_identicals(mini_golden):
    total = ConfusionMatrix()
    for tree in mini_golden:
        total.update(function_confusion(tree, tree))
    assert total.is_diagonal()
    assert total[("COORD", "COORD")] > 0


def test_confusion_err_and_none_cells():
    gold = tree_of(
        "(NP-CCP (NP-COORD (JJ old) (NN dog)) (CC-CC and) (NP-COORD (NN cat)))")
    # prediction misses the first conjunct's span entirely
    pred = tree_of(
        "(NP-CCP (JJ old) (NN dog) (CC-CC and) (NP-COORD (NN cat)))", tree_id="p#0")
    matrix = function_confusion(gold, pred)
    assert matrix[("COORD", "Err")] == 1
    assert matrix[("CCP", "CCP")] == 1
    assert matrix[("CC", "CC")] == 1
    assert matrix[("COORD", "COORD")] == 1

    # prediction invents a SHARED label on a span without a gold function
    gold2 = tree_of("(NP (NP (NN a)) (CC and) (NP (NN b)))")
    pred2 = tree_of("(NP (NP-SHARED (NN a)) (CC and) (NP (NN b)))", tree_id="p#0")
    matrix2 = function_confusion(gold2, pred2)
    assert matrix2[("None", "SHARED")] == 1


def test_confusion_none_column():
    gold = tree_of("(NP-CCP (NP-COORD (NN a)) (CC-CC and) (NP-COORD (NN b)))")
    pred = tree_of("(NP (NP (NN a)) (CC and) (NP (NN b)))", tree_id="p#0")
    matrix = function_confusion(gold, pred)
    assert matrix[("CCP", "None")] == 1
    assert matrix[("COORD", "None")] == 2
    assert matrix[("CC", "None")] == 1
    assert matrix.row_sum("CCP") == 1


def test_confusion_row_sums_equal_gold_function_counts(mini_golden):
    for tree in mini_golden:
        matrix = function_confusion(tree, tree)
        gold_fns = Counter(
            node.label.coord_function for _, node in iter_internal(tree.root)
            if node.label.coord_function)
        for fn, count in gold_fns.items():
            assert matrix.row_sum(fn) == count


def test_confusion_structural_zero_cells():
    matrix = ConfusionMatrix()
    with pytest.raises(ValueError):
        matrix.add("None", "None")
    with pytest.raises(ValueError):
        matrix.add("None", "Err")


def test_confusion_tsv_layout():
    matrix = ConfusionMatrix()
    matrix.add("CC", "CC", 849)
    text = matrix.to_tsv()
    lines = text.splitlines()
    assert lines[0].split("\t") == [
        "gold\\pred", "CC", "CCP", "COORD", "MARK", "SHARED", "CONN", "None", "Err"]
    assert lines[1].split("\t")[0] == "CC"
    assert lines[1].split("\t")[1] == "849"
    assert [row.split("\t")[0] for row in lines[1:]] == [
        "CC", "CCP", "COORD", "MARK", "SHARED", "CONN", "None"]


# ---------------------------------------------------------------------------
# Agreement

def _ann(tree_id, spans):
    return CoordAnnotation(tree_id, (), tuple(Span(*s) for s in spans))


def test_agreement_identical_is_100():
    a = [_ann("t#0", [(0, 1), (2, 3)])]
    assert conjunct_agreement(a, list(a)) == 100.0


def test_agreement_fraction():
    a = [_ann(f"t#{i}", [(0, 1), (2, 3)]) for i in range(1000)]
    b = [
        _ann(f"t#{i}", [(0, 1), (2, 3)] if i >= 72 else [(0, 1), (2, 4)])
        for i in range(1000)
    ]
    assert conjunct_agreement(a, b) == pytest.approx(92.8, abs=0.05)


def test_agreement_requires_same_phrases():
    a = [_ann("t#0", [(0, 1)])]
    b = [_ann("t#1", [(0, 1)])]
    with pytest.raises(AnnotationMismatchError):
        conjunct_agreement(a, b)


def test_agreement_disagreement_case():
    # one annotator ends the last conjunct early, the other reads on
    a = [_ann("menu#0", [(0, 2), (3, 5), (6, 7)])]
    b = [_ann("menu#0", [(0, 2), (3, 5), (6, 13)])]
    assert conjunct_agreement(a, b) == 0.0


# ---------------------------------------------------------------------------
# Corpus statistics

def test_corpus_stats_single_tree():
    tree = tree_of("(NP-CCP (NNP-COORD Poland) (CC-CC and) (NNP-COORD Hungary))")
    stats = corpus_stats([tree])
    assert stats.function_counts == {"CCP": 1, "COORD": 2, "CC": 1}
    assert stats.coordination_sentence_ratio == 100.0


def test_corpus_stats_mini_golden(mini_golden):
    stats = corpus_stats(mini_golden)
    assert stats.function_counts == {
        "CC": 25, "CCP": 22, "COORD": 55, "SHARED": 5, "CONN": 4, "MARK": 3}
    assert stats.coordination_sentence_ratio == pytest.approx(100.0 * 21 / 26)


def test_change_stats_empty():
    assert change_stats(diffio.DiffFile(ops=())) == {
        "FlatBracketing": 0, "ComparativeQuantity": 0, "ModifierCoordination": 0,
        "SplitConjunctMerge": 0, "PremodifierAdoption": 0}
