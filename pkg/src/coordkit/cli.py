"""Command-line entry point wiring the full pipeline and the service."""
from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import diffio
from .annotation.store import TaskStore
from .annotation.tasks import build_tasks
from .detect import classify_cc, find_coordination_phrases
from .evalstats import (
    change_stats,
    corpus_parseval,
    corpus_stats,
    function_confusion,
    ConfusionMatrix,
)
from .labels import MARKER_LEXICON
from .pipeline import annotate_corpus, load_annotations
from .treebank import (
    Tree,
    corpus_checksum,
    is_preterminal,
    iter_internal,
    read_corpus,
    read_trees,
    resolve,
    strip_coord_functions,
    write_trees,
)


def _load_inputs(paths: tuple[str, ...]) -> list[Tree]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob("*.mrg")))
        else:
            files.append(p)
    return read_corpus(files)


def _load_lexicon(path: str | None) -> frozenset[str]:
    if path is None:
        return MARKER_LEXICON
    entries = [
        line.strip().lower()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return frozenset(entries)


def _write_corpus_per_file(trees: list[Tree], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    by_file: dict[str, list[Tree]] = {}
    for tree in trees:
        name = tree.id.rsplit("#", 1)[0]
        by_file.setdefault(name, []).append(tree)
    for name, group in by_file.items():
        write_trees(out_dir / name, group)


@click.group()
def main():
    """Coordination annotation toolkit for bracketed treebanks."""


@main.command()
@click.argument("files", nargs=-1, required=True)
@click.option("--report", type=click.Path(), default=None,
              help="Write JSONL here instead of stdout.")
@click.option("--all-ccs", is_flag=True, help="Also report every coordinator usage.")
def detect(files, report, all_ccs):
    """Detect coordination phrases; one JSON record per phrase."""
    corpus = _load_inputs(files)
    lines = []
    for tree in corpus:
        phrases = find_coordination_phrases(tree)
        for phrase in phrases:
            node = resolve(tree, phrase.path)
            usages = [
                classify_cc(tree, phrase.path + (i,))
                for i, c in enumerate(node.children)
                if getattr(c, "label", None) is not None and c.label.category == "CC"
            ]
            lines.append(json.dumps({
                "tree_id": tree.id,
                "path": list(phrase.path),
                "trivial": phrase.trivial,
                "flat": phrase.flat,
                "cc_usage": usages,
            }))
        if all_ccs:
            for path, node in iter_internal(tree.root):
                if is_preterminal(node) and node.label.category == "CC":
                    lines.append(json.dumps({
                        "tree_id": tree.id,
                        "path": list(path),
                        "cc_usage": classify_cc(tree, path),
                    }))
    text = "\n".join(lines) + ("\n" if lines else "")
    if report:
        Path(report).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("files", nargs=-1, required=True)
@click.option("--spans", "spans_path", type=click.Path(exists=True), default=None,
              help="JSONL with element spans and boundary ranges.")
@click.option("--annotations", "annotations_path", type=click.Path(exists=True),
              default=None, help="JSONL with conjunct spans (enables merge repairs).")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--diff", "diff_path", type=click.Path(), default=None)
def transform(files, spans_path, annotations_path, out_dir, diff_path):
    """Apply the structural normalizations without labeling."""
    corpus = _load_inputs(files)
    rows = {}
    for path in (spans_path, annotations_path):
        if path:
            rows.update(load_annotations(path))
    result = annotate_corpus(corpus, rows)
    structural = [strip_coord_functions(t) for t in result.labeled]
    _write_corpus_per_file(structural, Path(out_dir))
    if diff_path:
        ops = tuple(op for op in result.diff.ops if op.provenance != "labeling")
        diffio.DiffFile(
            ops=ops,
            source_checksum=result.diff.source_checksum,
            result_checksum=corpus_checksum(structural),
        ).save(diff_path)
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)


@main.command()
@click.argument("files", nargs=-1, required=True)
@click.option("--annotations", "annotations_path", type=click.Path(exists=True),
              default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--marker-lexicon", type=click.Path(exists=True), default=None)
def label(files, annotations_path, out_dir, marker_lexicon):
    """Assign coordination function labels (pending structural fixes included)."""
    corpus = _load_inputs(files)
    rows = load_annotations(annotations_path) if annotations_path else {}
    result = annotate_corpus(corpus, rows, _load_lexicon(marker_lexicon))
    _write_corpus_per_file(result.labeled, Path(out_dir))
    for item in result.pending:
        click.echo(f"pending: {json.dumps(item)}", err=True)


@main.group()
def tasks():
    """Produce and exchange annotation work items."""


@tasks.command("build")
@click.argument("files", nargs=-1, required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def tasks_build(files, out_path):
    """List annotation tasks for a corpus as JSONL."""
    corpus = _load_inputs(files)
    rows = [json.dumps({
        "task": t.id, "tree": t.tree_id, "path": list(t.path), "kind": t.kind,
        "rendered": t.rendered, "phrase_span": list(t.phrase_span),
        "suggested_spans": [list(s) for s in t.suggested_spans], "spans": None,
    }) for t in build_tasks(corpus)]
    text = "\n".join(rows) + ("\n" if rows else "")
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@tasks.command("export")
@click.argument("files", nargs=-1, required=True)
@click.option("--journal", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--all", "include_all", is_flag=True)
def tasks_export(files, journal, out_path, include_all):
    """Export open tasks for offline annotation."""
    store = TaskStore(_load_inputs(files), journal_path=journal)
    rows = store.export_tasks(include_all=include_all)
    Path(out_path).write_text(
        "\n".join(json.dumps(r) for r in rows) + ("\n" if rows else ""),
        encoding="utf-8")
    store.close()


@tasks.command("import")
@click.argument("files", nargs=-1, required=True)
@click.option("--journal", type=click.Path(), required=True)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
def tasks_import(files, journal, in_path):
    """Import offline annotations through the same validation as the UI."""
    store = TaskStore(_load_inputs(files), journal_path=journal)
    rows = [json.loads(line) for line in
            Path(in_path).read_text(encoding="utf-8").splitlines() if line.strip()]
    results = store.import_annotations(rows)
    accepted = sum(r.accepted for r in results)
    click.echo(f"imported {accepted}/{len(results)} annotations")
    for row, result in zip(rows, results):
        for error in result.errors:
            click.echo(f"rejected {row['task']}: {error}", err=True)
    store.close()
    if accepted != len(results):
        sys.exit(1)


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--journal", type=click.Path(), required=True)
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--study", default=None,
              help="Comma-separated annotator ids for an agreement study.")
@click.option("--lease-seconds", type=float, default=1800.0)
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Directory with the built web interface.")
def serve(corpus_path, journal, port, host, study, lease_seconds, ui_dir):
    """Run the annotation service."""
    import uvicorn

    from .service import create_app

    corpus = _load_inputs((corpus_path,))
    store = TaskStore(
        corpus,
        journal_path=journal,
        lease_seconds=lease_seconds,
        study_annotators=study.split(",") if study else None,
    )
    app = create_app(store, static_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


@main.command("eval")
@click.argument("gold", type=click.Path(exists=True))
@click.argument("pred", type=click.Path(exists=True))
@click.option("--functions", is_flag=True, help="Match coordination functions too.")
@click.option("--confusion", "confusion_path", type=click.Path(), default=None,
              help="Write the function confusion matrix as TSV.")
@click.option("--json", "as_json", is_flag=True)
def eval_cmd(gold, pred, functions, confusion_path, as_json):
    """Score predicted trees against gold trees."""
    gold_trees = read_trees(gold)
    pred_trees = read_trees(pred)
    if len(gold_trees) != len(pred_trees):
        raise click.ClickException(
            f"tree counts differ: {len(gold_trees)} vs {len(pred_trees)}")
    pairs = list(zip(gold_trees, pred_trees))
    report = corpus_parseval(pairs, include_functions=functions)
    if as_json:
        click.echo(json.dumps(asdict(report), indent=2))
    else:
        click.echo(f"precision      {report.precision:.2f}")
        click.echo(f"recall         {report.recall:.2f}")
        click.echo(f"f1             {report.f1:.2f}")
        click.echo(f"complete match {report.complete_match_rate:.2f}")
    if confusion_path:
        matrix = ConfusionMatrix()
        for g, p in pairs:
            matrix.update(function_confusion(g, p))
        Path(confusion_path).write_text(matrix.to_tsv(), encoding="utf-8")


@main.command()
@click.argument("files", nargs=-1)
@click.option("--diff", "diff_path", type=click.Path(exists=True), default=None,
              help="Also report per-transform change counts from this diff.")
@click.option("--json", "as_json", is_flag=True)
def stats(files, diff_path, as_json):
    """Function-label counts and coordination ratio for a labeled corpus."""
    payload: dict = {}
    if files:
        corpus = _load_inputs(files)
        s = corpus_stats(corpus)
        payload["function_counts"] = s.function_counts
        payload["coordination_sentence_ratio"] = s.coordination_sentence_ratio
        payload["sentences"] = s.sentences
    if diff_path:
        payload["changes"] = change_stats(diffio.DiffFile.load(diff_path))
    if as_json:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


@main.group("diff")
def diff_group():
    """Apply, invert or compute annotation diffs."""


@diff_group.command("apply")
@click.argument("files", nargs=-1, required=True)
@click.option("--diff", "diff_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def diff_apply(files, diff_path, out_dir):
    corpus = _load_inputs(files)
    result = diffio.apply(corpus, diffio.DiffFile.load(diff_path))
    _write_corpus_per_file(result, Path(out_dir))


@diff_group.command("invert")
@click.argument("diff_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), required=True)
def diff_invert(diff_path, out_path):
    diffio.invert(diffio.DiffFile.load(diff_path)).save(out_path)


@diff_group.command("compute")
@click.argument("original", type=click.Path(exists=True))
@click.argument("annotated", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), required=True)
def diff_compute(original, annotated, out_path):
    orig = read_trees(original)
    annot = read_trees(annotated)
    annot = [Tree(o.id, a.root) for o, a in zip(orig, annot)]
    diffio.compute_diff(orig, annot).save(out_path)


@main.command()
@click.argument("files", nargs=-1, required=True)
@click.option("--annotations", "annotations_path", type=click.Path(exists=True),
              default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--diff", "diff_name", default="corpus.ccpdiff.jsonl")
@click.option("--skip-manual", is_flag=True,
              help="Leave phrases without annotations untouched.")
@click.option("--marker-lexicon", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
@click.option("--jobs", type=int, default=1, help="Parallel parse workers.")
def pipeline(files, annotations_path, out_dir, diff_name, skip_manual,
             marker_lexicon, as_json, jobs):
    """Full pass: detect, transform, label, diff and report."""
    corpus = _load_inputs(files)
    rows = load_annotations(annotations_path) if annotations_path else {}
    result = annotate_corpus(corpus, rows, _load_lexicon(marker_lexicon), jobs=jobs)
    if result.pending and not skip_manual:
        click.echo("pending annotation tasks:", err=True)
        for item in result.pending:
            click.echo(f"  {json.dumps(item)}", err=True)
        sys.exit(1)
    out = Path(out_dir)
    _write_corpus_per_file(result.labeled, out)
    result.diff.save(out / diff_name)
    stats_payload = {
        "function_counts": corpus_stats(result.labeled).function_counts,
        "coordination_sentence_ratio":
            corpus_stats(result.labeled).coordination_sentence_ratio,
        "changes": change_stats(result.diff),
        "pending": result.pending,
        "warnings": result.warnings,
    }
    if as_json:
        click.echo(json.dumps(stats_payload, indent=2, sort_keys=True))
    else:
        click.echo(f"labeled {len(result.labeled)} trees")
        click.echo(f"function counts: {stats_payload['function_counts']}")
        click.echo(f"changes: {stats_payload['changes']}")
        if result.pending:
            click.echo(f"pending (skipped): {len(result.pending)}")
        for warning in result.warnings:
            click.echo(f"warning: {warning}", err=True)


if __name__ == "__main__":
    main()
