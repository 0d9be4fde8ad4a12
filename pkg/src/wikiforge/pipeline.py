"""End-to-end orchestration used by the CLI: explore -> organize ->
generate -> render, with every output written atomically."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .acquisition import ConstructionReport, explore
from .config import (
    PipelineConfig,
    build_fetcher,
    build_gateway,
    build_organize_config,
    build_search,
)
from .generation import assemble_and_cite, render, sidecar_payload
from .organization import organize, organize_flat, outline_to_file
from .store import MemoryStore


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_json_atomic(path: Path, payload: dict) -> None:
    write_atomic(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def run_generate(
    topic: str,
    cfg: PipelineConfig,
    out_dir: Path,
    subtopic_explorer: bool = True,
    memory_organization: bool = True,
) -> dict:
    """Run the full pipeline for one topic, writing article.md,
    article.sidecar.json, construction_report.json, outline.json and
    memory.store under `out_dir`. Returns a small summary dict."""
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = build_gateway(cfg)
    search = build_search(cfg)
    fetcher = build_fetcher(cfg)
    store = MemoryStore(dimension=cfg.embed_backend.dimension, topic=topic)

    report: ConstructionReport = explore(
        gateway,
        search,
        fetcher,
        topic,
        cfg.budgets,
        store,
        explore_subtopics=subtopic_explorer,
        extraction=cfg.extraction,
    )

    organize_cfg = build_organize_config(cfg)
    if memory_organization:
        outline = organize(store, gateway, organize_cfg)
    else:
        outline = organize_flat(store, gateway, organize_cfg)

    doc_urls = report.document_urls()
    article = assemble_and_cite(outline, store, gateway, doc_urls)
    text = render(article, store)

    write_atomic(out_dir / "article.md", text)
    write_json_atomic(
        out_dir / "article.sidecar.json",
        sidecar_payload(article, store, doc_urls, report.collected_doc_ids()),
    )
    write_json_atomic(out_dir / "construction_report.json", report.to_json())
    tmp_outline = out_dir / "outline.json.tmp"
    outline_to_file(outline, tmp_outline)
    os.replace(tmp_outline, out_dir / "outline.json")
    tmp_store = out_dir / "memory.store.tmp"
    store.persist(tmp_store)
    os.replace(tmp_store, out_dir / "memory.store")

    leaves = outline.leaves()
    return {
        "topic": topic,
        "pages_fetched": report.pages_fetched,
        "units_saved": report.units_saved,
        "subtopic_rounds": report.subtopic_rounds,
        "sections": len(leaves) if outline.children else 1,
        "references": len(article.references),
    }
