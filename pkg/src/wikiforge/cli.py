"""Command-line surface: generate, evaluate, inspect."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import build_gateway, build_recognizer, load_config
from .errors import WikiforgeError
from .evaluation import evaluate_article
from .generation import parse_rendered
from .organization import dump_tree, outline_from_file
from .pipeline import run_generate, write_json_atomic
from .store import MemoryStore


def _fail(stage: str, message: str) -> int:
    print(f"[{stage}] error: {message}", file=sys.stderr)
    return 1


def cmd_generate(args) -> int:
    try:
        cfg = load_config(args.config)
    except WikiforgeError as exc:
        return _fail("config", str(exc))
    try:
        summary = run_generate(
            args.topic,
            cfg,
            Path(args.out),
            subtopic_explorer=not args.no_subtopic_explorer,
            memory_organization=not args.no_memory_organization,
        )
    except WikiforgeError as exc:
        return _fail("generate", str(exc))
    print(
        f"generated {summary['topic']!r}: {summary['pages_fetched']} pages, "
        f"{summary['units_saved']} units, {summary['sections']} sections, "
        f"{summary['references']} references "
        f"({summary['subtopic_rounds']} subtopic rounds)"
    )
    return 0


def _load_sidecar(path: Path) -> dict:
    try:
        sidecar = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise WikiforgeError(f"cannot read sidecar {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise WikiforgeError(f"sidecar {path} is not valid JSON: {exc}") from exc
    sentences = sidecar.get("sentences")
    if not isinstance(sentences, list):
        raise WikiforgeError(f"sidecar {path}: missing 'sentences' list")
    for i, row in enumerate(sentences):
        if not isinstance(row, dict) or "text" not in row:
            raise WikiforgeError(f"sidecar {path}: sentence record {i} lacks 'text'")
        for j, cite in enumerate(row.get("citations", [])):
            if not isinstance(cite, dict) or "unit_text" not in cite or "doc_id" not in cite:
                raise WikiforgeError(
                    f"sidecar {path}: sentence {i} citation {j} lacks unit_text/doc_id"
                )
    return sidecar


def cmd_evaluate(args) -> int:
    try:
        cfg = load_config(args.config)
    except WikiforgeError as exc:
        return _fail("config", str(exc))
    article_path = Path(args.article)
    sidecar_path = Path(args.sidecar)
    if not article_path.exists():
        return _fail("evaluate", f"article not found: {article_path}")
    if not sidecar_path.exists():
        return _fail(
            "evaluate",
            f"sidecar not found: {sidecar_path} (citation metrics need unit-level links)",
        )
    try:
        sidecar = _load_sidecar(sidecar_path)
        parsed = parse_rendered(article_path.read_text(encoding="utf-8"))
        gateway = build_gateway(cfg)
        recognizer = build_recognizer(cfg)
        reference_text = None
        if args.reference:
            reference_text = Path(args.reference).read_text(encoding="utf-8")
        report = evaluate_article(parsed, sidecar, gateway, recognizer, reference_text)
        write_json_atomic(Path(args.out), report.to_json())
    except WikiforgeError as exc:
        return _fail("evaluate", str(exc))
    except OSError as exc:
        return _fail("evaluate", str(exc))
    summary = report.to_json()
    for key in (
        "section_count_total",
        "word_count",
        "citation_rate",
        "citation_recall",
        "citation_precision",
        "utilization_rate",
    ):
        print(f"{key}: {summary.get(key)}")
    return 0


def cmd_inspect(args) -> int:
    store_path = Path(args.store)
    if not store_path.exists():
        return _fail("inspect", f"store not found: {store_path}")
    try:
        store = MemoryStore.load(store_path)
    except WikiforgeError as exc:
        return _fail("inspect", str(exc))
    print(f"{len(store)} units (topic: {store.topic!r}, dimension {store.dimension})")
    for label, count in store.labels().items():
        print(f"  {label}: {count}")
        if args.units:
            for unit in store.recall(label):
                print(f"    - {unit.text}")
    if args.outline:
        try:
            outline = outline_from_file(args.outline)
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            return _fail("inspect", f"cannot read outline {args.outline}: {exc}")
        print(dump_tree(outline, store, show_units=args.units))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wikiforge",
        description="Build a factoid memory for a topic, organize it into an "
        "outline hierarchy, and generate a cited wiki-style article.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run the full pipeline for one topic")
    gen.add_argument("--topic", required=True)
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument(
        "--no-subtopic-explorer", action="store_true",
        help="skip subtopic rounds; root-topic queries only",
    )
    gen.add_argument(
        "--no-memory-organization", action="store_true",
        help="single-level outline: one heading pass, no recursion",
    )
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="score a generated article")
    ev.add_argument("--article", required=True)
    ev.add_argument("--sidecar", required=True)
    ev.add_argument("--reference", default=None)
    ev.add_argument("--config", required=True)
    ev.add_argument("--out", required=True, help="report file path")
    ev.set_defaults(func=cmd_evaluate)

    ins = sub.add_parser("inspect", help="dump a persisted store/outline")
    ins.add_argument("--store", required=True)
    ins.add_argument("--outline", default=None)
    ins.add_argument("--units", action="store_true", help="list unit texts")
    ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
