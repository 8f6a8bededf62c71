#!/usr/bin/env python3
"""Turn a DocRED-style raw corpus into the canonical corpus files read by fcds.

    parse_prep.py prepare --raw <file.json> --out <dir> [--limit N] [--split NAME] [--backend SPEC]

Writes <split>.jsonl, <split>.conllu and <split>.trees into <dir> and extends
<dir>/relations.txt with any relation names not yet listed. Every sentence is
parsed in pre-tokenized mode; a document whose parse does not reproduce its
tokens exactly is skipped and reported, never realigned.

A backend is "stanza" or "module:factory", where factory() returns an object
with parse(tokens) -> (heads, deprels, tree). heads are 1-based with 0 for the
root; tree is one bracketed constituency tree whose leaves are the tokens.
"""

from __future__ import annotations

import argparse
import importlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

EXIT_USAGE, EXIT_DATA = 1, 2


class SkipDocument(Exception):
    pass


@dataclass
class ParsedSentence:
    heads: list[int]
    deprels: list[str]
    tree: str


class StanzaBackend:
    def __init__(self, lang: str = "en"):
        import stanza

        self._nlp = stanza.Pipeline(
            lang=lang,
            processors="tokenize,pos,lemma,depparse,constituency",
            tokenize_pretokenized=True,
            verbose=False,
        )

    def parse(self, tokens):
        sent = self._nlp([tokens]).sentences[0]
        words = [w.text for w in sent.words]
        if words != list(tokens):
            raise SkipDocument(f"parser retokenized {tokens!r} as {words!r}")
        return [w.head for w in sent.words], [w.deprel for w in sent.words], str(sent.constituency)


def load_backend(spec: str):
    if spec == "stanza":
        try:
            return StanzaBackend()
        except ImportError as e:
            raise RuntimeError("the stanza backend needs `pip install stanza` and its English models") from e
    module, _, attr = spec.partition(":")
    if not attr:
        raise ValueError(f"backend must be 'stanza' or 'module:factory', got {spec!r}")
    return getattr(importlib.import_module(module), attr)()


def escape_leaf(word: str) -> str:
    return {"(": "-LRB-", ")": "-RRB-"}.get(word, word)


def unescape_leaf(word: str) -> str:
    return {"-LRB-": "(", "-RRB-": ")"}.get(word, word)


def tree_leaves(tree: str) -> list[str]:
    """Leaves of a bracketed tree, read the way the fcds loader reads them."""
    parts = tree.replace("(", " ( ").replace(")", " ) ").split()
    leaves, depth, after_open = [], 0, False
    for p in parts:
        if p == "(":
            depth += 1
            after_open = True
        elif p == ")":
            depth -= 1
            if depth < 0:
                raise SkipDocument("unbalanced tree")
            after_open = False
        else:
            if not after_open:
                leaves.append(unescape_leaf(p))
            after_open = False
    if depth != 0:
        raise SkipDocument("unbalanced tree")
    return leaves


def check_sentence(tokens: list[str], parsed: ParsedSentence) -> None:
    n = len(tokens)
    for t in tokens:
        if not t or any(c.isspace() for c in t) or t in ("-LRB-", "-RRB-"):
            raise SkipDocument(f"token {t!r} cannot be written verbatim")
    if len(parsed.heads) != n or len(parsed.deprels) != n:
        raise SkipDocument(f"parser returned {len(parsed.heads)} heads for {n} tokens")
    if sum(h == 0 for h in parsed.heads) != 1:
        raise SkipDocument("dependency parse must have exactly one root")
    for i, h in enumerate(parsed.heads):
        if not 0 <= h <= n or h == i + 1:
            raise SkipDocument(f"bad head {h} for token {i + 1}")
        seen, cur = set(), i + 1
        while cur:
            if cur in seen:
                raise SkipDocument("dependency parse has a cycle")
            seen.add(cur)
            cur = parsed.heads[cur - 1]
    if tree_leaves(parsed.tree) != tokens:
        raise SkipDocument("constituency leaves do not match the tokens")


def one_line_tree(tree: str) -> str:
    return " ".join(tree.split())


def convert(raw: dict, index: int, parser) -> tuple[dict, list[ParsedSentence]]:
    doc_id = str(raw.get("doc_id") or raw.get("title") or f"doc{index}")
    sents = raw["sents"]
    parses = []
    for s, tokens in enumerate(sents):
        try:
            heads, deprels, tree = parser.parse(list(tokens))
        except SkipDocument:
            raise
        except Exception as e:
            raise SkipDocument(f"parser failed on sentence {s}: {e}") from e
        p = ParsedSentence(list(heads), list(deprels), one_line_tree(tree))
        try:
            check_sentence(list(tokens), p)
        except SkipDocument as e:
            raise SkipDocument(f"sentence {s}: {e}") from e
        parses.append(p)
    entities = []
    for e, vertex in enumerate(raw.get("vertexSet", [])):
        mentions = [{"sent": m["sent_id"], "start": m["pos"][0], "end": m["pos"][1]} for m in vertex]
        entities.append({"id": e, "type": vertex[0].get("type", "") if vertex else "", "mentions": mentions})
    for e in entities:
        if not e["mentions"]:
            raise SkipDocument(f"entity {e['id']} has no mentions")
        for m in e["mentions"]:
            if not (0 <= m["sent"] < len(sents) and 0 <= m["start"] < m["end"] <= len(sents[m["sent"]])):
                raise SkipDocument(f"entity {e['id']} has mention {m} outside its sentence")
    labels = [{"h": l["h"], "t": l["t"], "r": l["r"], "evidence": l.get("evidence", [])} for l in raw.get("labels", [])]
    for l in labels:
        if l["h"] == l["t"] or not (0 <= l["h"] < len(entities) and 0 <= l["t"] < len(entities)):
            raise SkipDocument(f"label {l} has an invalid head or tail entity")
        if any(not 0 <= ev < len(sents) for ev in l["evidence"]):
            raise SkipDocument(f"label {l} cites a missing sentence")
    record = {"doc_id": doc_id, "entities": entities, "labels": labels, "sentences": sents}
    return record, parses


def prepare(raw_path: Path, out_dir: Path, parser, split: str = "train", limit: int | None = None, log=sys.stderr):
    """Returns (written doc ids, [(doc id, reason)] for skipped documents)."""
    raw_docs = json.loads(raw_path.read_text(encoding="utf-8"))
    if not isinstance(raw_docs, list):
        raise ValueError(f"{raw_path}: expected a JSON list of documents")
    if limit is not None:
        raw_docs = raw_docs[:limit]
    records, skipped, seen = [], [], set()
    for i, raw in enumerate(raw_docs):
        doc_id = str(raw.get("doc_id") or raw.get("title") or f"doc{i}")
        try:
            if doc_id in seen:
                raise SkipDocument("duplicate doc_id")
            records.append(convert(raw, i, parser))
            seen.add(doc_id)
        except SkipDocument as e:
            skipped.append((doc_id, str(e)))
            print(f"skipped {doc_id}: {e}", file=log)

    out_dir.mkdir(parents=True, exist_ok=True)
    rel_file = out_dir / "relations.txt"
    relations = rel_file.read_text(encoding="utf-8").split() if rel_file.exists() else []
    for rec, _ in records:
        for l in rec["labels"]:
            if isinstance(l["r"], str) and l["r"] not in relations:
                relations.append(l["r"])

    jsonl, conllu, trees = [], [], []
    for rec, parses in records:
        jsonl.append(json.dumps(rec, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n")
        conllu.append(f"# newdoc id = {rec['doc_id']}\n")
        trees.append(f"# newdoc id = {rec['doc_id']}\n")
        for tokens, p in zip(rec["sentences"], parses):
            for k, (form, head, rel) in enumerate(zip(tokens, p.heads, p.deprels), 1):
                conllu.append(f"{k}\t{form}\t_\t_\t_\t_\t{head}\t{rel or '_'}\t_\t_\n")
            conllu.append("\n")
            trees.append(p.tree + "\n")

    def write(name: str, text: str) -> None:
        tmp = out_dir / (name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(out_dir / name)

    write(f"{split}.jsonl", "".join(jsonl))
    write(f"{split}.conllu", "".join(conllu))
    write(f"{split}.trees", "".join(trees))
    write("relations.txt", "".join(r + "\n" for r in relations))
    print(f"wrote {len(records)} documents, skipped {len(skipped)}", file=log)
    return [rec["doc_id"] for rec, _ in records], skipped


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def main(argv=None) -> int:
    ap = _Parser(prog="parse_prep.py", description="Prepare canonical corpus files from a raw corpus.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("prepare", help="parse a raw corpus and write the canonical files")
    p.add_argument("--raw", required=True, type=Path, help="DocRED-style JSON list of documents")
    p.add_argument("--out", required=True, type=Path, help="corpus directory to write into")
    p.add_argument("--limit", type=int, help="only the first N documents")
    p.add_argument("--split", default="train", help="split name for the output files (default: train)")
    p.add_argument("--backend", default="stanza", help="'stanza' or 'module:factory'")
    a = ap.parse_args(argv)
    if a.limit is not None and a.limit < 0:
        ap.error("--limit must be nonnegative")
    if not a.raw.is_file():
        print(f"raw corpus not found: {a.raw}", file=sys.stderr)
        return EXIT_DATA
    try:
        parser = load_backend(a.backend)
    except (RuntimeError, ValueError, ImportError, AttributeError) as e:
        print(f"cannot load backend {a.backend!r}: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        prepare(a.raw, a.out, parser, a.split, a.limit)
    except (ValueError, KeyError, TypeError) as e:
        print(f"{a.raw}: malformed raw corpus: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
