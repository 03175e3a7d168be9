import threading

import pytest

from coordkit.annotation.store import TaskStore
from coordkit.treebank import Span, parse_bracketed


def _corpus(n=3):
    text = "\n".join(
        "(NP (NP (JJ old) (NN dog)) (CC and) (NP (NN cat)) (PP (IN nearby)))"
        for _ in range(n)
    )
    return parse_bracketed(text, source="store.mrg")


def test_lease_and_submit(tmp_path):
    store = TaskStore(_corpus(1), journal_path=tmp_path / "journal.jsonl",
                      clock=lambda: 1000.0)
    task = store.lease_next("ann")
    assert task is not None and task.kind == "conjunct-marking"
    assert store.lease_next("other") is None  # exclusive lease
    result = store.submit(task.id, "ann", [Span(0, 2), Span(3, 4)])
    assert result.accepted
    assert store.progress()["submitted"] == 1
    store.close()


def test_submit_requires_two_conjuncts(tmp_path):
    store = TaskStore(_corpus(1), journal_path=tmp_path / "j.jsonl")
    task = store.lease_next("ann")
    result = store.submit(task.id, "ann", [Span(0, 2)])
    assert not result.accepted and result.errors
    # task stays leased; a correct retry succeeds
    result = store.submit(task.id, "ann", [Span(0, 2), Span(3, 4)])
    assert result.accepted
    store.close()


def test_boundary_extension_flow(tmp_path):
    corpus = parse_bracketed(
        "(S (NP (NP (DT The) (JJ economic) (NN loss)) (, ,) (NP (NNS jobs) (VBN lost)) "
        "(CC and) (NP (NN humiliation))) (VP (VBP are) (ADJP (JJ big))))",
        source="loss.mrg")
    store = TaskStore(corpus, journal_path=tmp_path / "j.jsonl")
    task = store.lease_next("ann")
    first = store.submit(task.id, "ann", [Span(1, 3), Span(4, 6), Span(7, 8)])
    assert not first.accepted and first.needs_confirmation
    assert first.mismatches == [{"proposed": [1, 3], "reconciled": [0, 3]}]
    second = store.submit(task.id, "ann", [Span(1, 3), Span(4, 6), Span(7, 8)],
                          accept_reconciled=True)
    assert second.accepted
    assert second.reconciled_spans[0] == Span(0, 3)
    store.close()


def test_span_outside_phrase_needs_override(tmp_path):
    store = TaskStore(_corpus(1), journal_path=tmp_path / "j.jsonl")
    task = store.lease_next("ann")
    bad = store.submit(task.id, "ann", [Span(0, 2), Span(3, 5)])
    # the phrase covers the whole sentence here, so fabricate one outside
    assert task.phrase_span == Span(0, 5)
    result = store.submit(task.id, "ann", [Span(0, 2), Span(3, 6)])
    assert not result.accepted
    store.close()


def test_lease_expiry(tmp_path):
    now = [0.0]
    store = TaskStore(_corpus(1), journal_path=tmp_path / "j.jsonl",
                      lease_seconds=60, clock=lambda: now[0])
    task = store.lease_next("ann")
    assert store.lease_next("other") is None
    now[0] = 61.0
    regained = store.lease_next("other")
    assert regained is not None and regained.id == task.id
    # the original annotator's lease is gone
    result = store.submit(task.id, "ann", [Span(0, 2), Span(3, 4)])
    assert not result.accepted
    store.close()


def test_journal_replay_restores_state(tmp_path):
    journal = tmp_path / "journal.jsonl"
    corpus = _corpus(3)
    store = TaskStore(corpus, journal_path=journal, clock=lambda: 10.0)
    t1 = store.lease_next("ann")
    store.submit(t1.id, "ann", [Span(0, 2), Span(3, 4)])
    t2 = store.lease_next("ann")
    # no clean shutdown: the journal alone carries the state
    replayed = TaskStore(corpus, journal_path=journal, clock=lambda: 20.0)
    assert replayed.progress() == store.progress()
    assert replayed.submissions(t1.id)["ann"].spans == (Span(0, 2), Span(3, 4))
    state = replayed.get(t2.id)
    assert "ann" in state.leases
    store.close()
    replayed.close()


def test_concurrent_leasing_is_exclusive(tmp_path):
    corpus = _corpus(40)
    store = TaskStore(corpus, journal_path=tmp_path / "j.jsonl")
    seen = []
    lock = threading.Lock()

    def worker(name):
        while True:
            task = store.lease_next(name)
            if task is None:
                return
            with lock:
                seen.append(task.id)

    threads = [threading.Thread(target=worker, args=(f"a{i}",)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(seen) == len(set(seen)) == 40
    store.close()


def test_study_mode_leases_to_all_designated(tmp_path):
    store = TaskStore(_corpus(2), journal_path=tmp_path / "j.jsonl",
                      study_annotators=["a", "b"], study_id="pilot")
    ta1 = store.lease_next("a")
    tb1 = store.lease_next("b")
    assert ta1.id == tb1.id  # same task goes to both designated annotators
    assert store.lease_next("stranger") is None
    store.submit(ta1.id, "a", [Span(0, 2), Span(3, 4)])
    store.submit(tb1.id, "b", [Span(0, 2), Span(3, 4)])
    partial, items = store.disagreements("pilot")
    assert partial  # second task untouched
    assert items == []  # the finished task agrees
    store.close()


def test_study_disagreements_and_adjudication(tmp_path):
    store = TaskStore(_corpus(1), journal_path=tmp_path / "j.jsonl",
                      study_annotators=["a", "b"])
    task = store.lease_next("a")
    store.lease_next("b")
    store.submit(task.id, "a", [Span(0, 2), Span(3, 4)])
    store.submit(task.id, "b", [Span(0, 2), Span(4, 5)])
    partial, items = store.disagreements()
    assert not partial and len(items) == 1
    store.adjudicate(task.id, "a", reviewer="chief")
    assert store.progress()["adjudicated"] == 1
    store.close()


def test_export_import_offline_roundtrip(tmp_path):
    corpus = _corpus(2)
    journal_ui = tmp_path / "ui.jsonl"
    ui_store = TaskStore(corpus, journal_path=journal_ui)
    task = ui_store.lease_next("ann")
    ui_store.submit(task.id, "ann", [Span(0, 2), Span(3, 4)])

    journal_offline = tmp_path / "offline.jsonl"
    offline = TaskStore(corpus, journal_path=journal_offline)
    rows = offline.export_tasks()
    for row in rows:
        row["annotator"] = "ann"
        row["spans"] = [[0, 2], [3, 4]]
    results = offline.import_annotations(rows)
    assert all(r.accepted for r in results)
    assert offline.submissions(task.id)["ann"].spans == \
        ui_store.submissions(task.id)["ann"].spans
    ui_store.close()
    offline.close()


def test_flat_task_validation(tmp_path):
    corpus = parse_bracketed(
        "(NP (NNP General) (NNP Electric) (NNP Co.) (NNS executives) (CC and) "
        "(NNS lawyers))", source="ge.mrg")
    store = TaskStore(corpus, journal_path=tmp_path / "j.jsonl")
    task = store.lease_next("ann")
    assert task.kind == "flat-elements"
    bad = store.submit(task.id, "ann", [Span(0, 3), Span(3, 5), Span(5, 6)])
    assert not bad.accepted  # a group swallows the coordinator
    good = store.submit(task.id, "ann", [Span(0, 3), Span(3, 4), Span(4, 5), Span(5, 6)])
    assert good.accepted
    store.close()


def test_range_task_validation(tmp_path):
    corpus = parse_bracketed(
        "(S (NP (PRP They)) (VP (VBD campaigned) (ADVP (RB up) (CC and) (RB down) "
        "(NP (NNP Florida)))) (. .))", source="fl.mrg")
    store = TaskStore(corpus, journal_path=tmp_path / "j.jsonl")
    task = store.lease_next("ann")
    assert task.kind == "non-NP-modifier-range"
    bad = store.submit(task.id, "ann", [Span(2, 4)])
    assert not bad.accepted  # no element on the right of the coordinator
    good = store.submit(task.id, "ann", [Span(2, 5)])
    assert good.accepted
    store.close()


def test_study_agreement_matches_conjunct_agreement(tmp_path):
    # "potato salad, baked beans and pudding, plus coffee or iced tea":
    # one annotator ends the last conjunct at "pudding", the other reads on.
    menu = parse_bracketed(
        "(NP (NP (NN potato) (NN salad)) (, ,) (NP (VBN baked) (NNS beans)) (CC and) "
        "(NP (NN pudding)) (, ,) (CC plus) (NP (NP (NN coffee)) (CC or) "
        "(NP (VBN iced) (NN tea))))", source="menu.mrg")
    corpus = _corpus(4) + menu
    store = TaskStore(corpus, journal_path=tmp_path / "j.jsonl",
                      study_annotators=["a", "b"])
    answers = {
        "a": {"menu.mrg#0": [Span(0, 2), Span(3, 5), Span(6, 7), Span(9, 13)]},
        "b": {"menu.mrg#0": [Span(0, 2), Span(3, 5), Span(6, 13)]},
    }
    default = [Span(0, 2), Span(3, 4)]
    for annotator in ("a", "b"):
        while True:
            task = store.lease_next(annotator)
            if task is None:
                break
            spans = answers[annotator].get(task.tree_id, default)
            result = store.submit(task.id, annotator, spans)
            assert result.accepted, result.errors
    partial, items = store.disagreements()
    assert not partial
    assert len(items) == 1 and items[0][0].tree_id == "menu.mrg#0"

    from coordkit.annotation.tasks import build_tasks
    from coordkit.evalstats import CoordAnnotation, conjunct_agreement

    sets = {"a": [], "b": []}
    for task in build_tasks(corpus):
        for annotator in ("a", "b"):
            annotation = store.submissions(task.id)[annotator]
            sets[annotator].append(CoordAnnotation(
                task.tree_id, task.path, tuple(annotation.spans)))
    agreement = conjunct_agreement(sets["a"], sets["b"])
    total = len(sets["a"])
    assert agreement == pytest.approx(100.0 * (total - len(items)) / total)
    store.close()


def test_no_journal_store_is_memory_only():
    store = TaskStore(_corpus(1))
    task = store.lease_next("ann")
    assert store.submit(task.id, "ann", [Span(0, 2), Span(3, 4)]).accepted
