"""Sparse document-term counts with multi-label annotations.

File formats (all UTF-8):
  counts:  CSV ``doc_id,word_id,count``
  labels:  CSV ``doc_id,topic_id``        (topic ids are non-root tree nodes)
  vocab:   one token per line, line number = word_id
  lengths: CSV ``doc_id,length``          (optional; defaults to count totals)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    EmptyLabelSetError,
    MalformedRecordError,
    UnknownTopicIdError,
    ZeroLengthDocumentError,
)
from .tree import TopicTree


@dataclass(frozen=True)
class Corpus:
    """Immutable corpus: counts, normalized lengths, and binary topic labels.

    ``labels`` columns are topic indices (node id - 1).  ``norm_lengths`` are
    raw lengths divided by ``mean_length`` so a length-average document has
    exposure 1.
    """

    counts: sp.csr_matrix  # (D, V) nonnegative ints
    labels: np.ndarray  # (D, K) bool
    raw_lengths: np.ndarray  # (D,)
    mean_length: float
    vocab: tuple[str, ...]
    explicit_lengths: bool = False

    @property
    def n_docs(self) -> int:
        return self.counts.shape[0]

    @property
    def n_words(self) -> int:
        return self.counts.shape[1]

    @property
    def n_topics(self) -> int:
        return self.labels.shape[1]

    @property
    def norm_lengths(self) -> np.ndarray:
        return self.raw_lengths / self.mean_length

    def doc_label_sets(self) -> list[set[int]]:
        """Per-document sets of labeled topic node ids."""
        return [set(np.flatnonzero(self.labels[d]) + 1) for d in range(self.n_docs)]


def _read_pairs(path, n_cols, what):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedRecordError(f"{what} file {path!r} is empty")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise MalformedRecordError(f"{what} file {path!r} line {lineno}: expected {n_cols} fields")
            try:
                rows.append(tuple(int(v) for v in row))
            except ValueError as exc:
                raise MalformedRecordError(f"{what} file {path!r} line {lineno}: {exc}") from exc
    return rows


def load_vocab(path) -> tuple[str, ...]:
    with open(path, encoding="utf-8") as fh:
        return tuple(line.rstrip("\n") for line in fh)


def build_corpus(
    count_triples,
    label_pairs,
    vocab,
    tree: TopicTree,
    lengths=None,
    drop_unlabeled: bool = False,
) -> Corpus:
    """Assemble and validate a Corpus from in-memory records.

    ``count_triples`` are (doc_id, word_id, count); duplicate (doc, word)
    entries are summed.  ``label_pairs`` are (doc_id, topic_node_id).
    ``lengths`` is an optional dict doc_id -> raw length; when absent, raw
    lengths are the per-document count totals.
    """
    vocab = tuple(vocab)
    n_words = len(vocab)
    n_topics = tree.n_topics
    max_doc = -1
    for d, w, c in count_triples:
        if d < 0 or w < 0 or w >= n_words or c < 0:
            raise MalformedRecordError(f"bad count record (doc={d}, word={w}, count={c})")
        max_doc = max(max_doc, d)
    for d, t in label_pairs:
        if d < 0:
            raise MalformedRecordError(f"bad label record (doc={d}, topic={t})")
        if t < 1 or t > n_topics:
            raise UnknownTopicIdError(f"label topic id {t} is not a non-root tree node")
        max_doc = max(max_doc, d)
    if lengths:
        max_doc = max([max_doc, *lengths.keys()])
    n_docs = max_doc + 1

    if n_docs == 0:
        counts = sp.csr_matrix((0, n_words), dtype=np.int64)
        labels = np.zeros((0, n_topics), dtype=bool)
        return Corpus(counts, labels, np.zeros(0), 1.0, vocab, lengths is not None)

    rows = np.array([d for d, _, _ in count_triples], dtype=np.int64)
    cols = np.array([w for _, w, _ in count_triples], dtype=np.int64)
    vals = np.array([c for _, _, c in count_triples], dtype=np.int64)
    counts = sp.csr_matrix((vals, (rows, cols)), shape=(n_docs, n_words), dtype=np.int64)
    counts.sum_duplicates()

    labels = np.zeros((n_docs, n_topics), dtype=bool)
    for d, t in label_pairs:
        labels[d, t - 1] = True

    totals = np.asarray(counts.sum(axis=1)).ravel().astype(float)
    if lengths is not None:
        raw = totals.copy()
        for d, L in lengths.items():
            if L < 0:
                raise MalformedRecordError(f"negative length for doc {d}")
            raw[d] = float(L)
        explicit = True
    else:
        raw = totals
        explicit = False

    unlabeled = ~labels.any(axis=1)
    if unlabeled.any():
        if not drop_unlabeled:
            bad = np.flatnonzero(unlabeled)[:5].tolist()
            raise EmptyLabelSetError(f"documents without labels (e.g. {bad}); use drop_unlabeled to filter")
        keep = ~unlabeled
        counts = counts[keep]
        labels = labels[keep]
        raw = raw[keep]
        n_docs = int(keep.sum())

    if n_docs and (raw <= 0).any():
        bad = np.flatnonzero(raw <= 0)[:5].tolist()
        raise ZeroLengthDocumentError(f"documents with zero length (e.g. {bad})")

    mean_length = float(raw.mean()) if n_docs else 1.0
    return Corpus(counts, labels, raw, mean_length, vocab, explicit)


def load_corpus(
    counts_file,
    labels_file,
    vocab_file,
    tree: TopicTree,
    lengths_file=None,
    drop_unlabeled: bool = False,
) -> Corpus:
    """Load a corpus from its CSV/text files and compute normalized lengths."""
    vocab = load_vocab(vocab_file)
    count_triples = _read_pairs(counts_file, 3, "counts")
    label_pairs = _read_pairs(labels_file, 2, "labels")
    lengths = None
    if lengths_file is not None:
        lengths = {d: L for d, L in _read_pairs(lengths_file, 2, "lengths")}
    return build_corpus(count_triples, label_pairs, vocab, tree, lengths, drop_unlabeled)


def save_corpus(corpus: Corpus, counts_file, labels_file, vocab_file, lengths_file=None) -> None:
    coo = corpus.counts.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(counts_file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "word_id", "count"])
        for i in order:
            writer.writerow([int(coo.row[i]), int(coo.col[i]), int(coo.data[i])])
    with open(labels_file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "topic_id"])
        for d in range(corpus.n_docs):
            for t in np.flatnonzero(corpus.labels[d]):
                writer.writerow([d, int(t) + 1])
    with open(vocab_file, "w", encoding="utf-8") as fh:
        for token in corpus.vocab:
            fh.write(token + "\n")
    if lengths_file is not None:
        with open(lengths_file, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["doc_id", "length"])
            for d in range(corpus.n_docs):
                writer.writerow([d, int(corpus.raw_lengths[d])])


def strip_redundant_ancestors(label_set, tree: TopicTree) -> set[int]:
    """Drop labels that are strict ancestors of other labels in the set.

    A label implied by a more specific one carries no extra information and
    would blur the distinction between intentional general-topic assignments
    and inherited ones.
    """
    labels = set(int(t) for t in label_set)
    for t in labels:
        if t < 1 or t >= tree.n_nodes:
            raise UnknownTopicIdError(f"label {t} is not a non-root tree node")
    return {t for t in labels if not any(t != o and tree.is_ancestor(t, o) for o in labels)}


def membership_stats(corpus: Corpus, tree: TopicTree) -> list[dict]:
    """Per-topic document counts and mixed-membership percentages.

    For each topic: the number of documents labeled to it, the share of those
    documents carrying any additional label, and the share whose extra labels
    sit in a different branch, split by the level at which the branches
    diverge (divergence at level x means the deepest common ancestor is at
    level x-1).
    """
    depth = tree.depth
    out = []
    label_sets = corpus.doc_label_sets()
    for t in range(1, tree.n_nodes):
        docs = [s for s in label_sets if t in s]
        n = len(docs)
        mm = sum(1 for s in docs if len(s) > 1)
        cross = [0] * depth
        for s in docs:
            others = s - {t}
            if not others:
                continue
            div_levels = {tree.common_ancestor_level(t, o) + 1 for o in others}
            for lvl in div_levels:
                if lvl <= depth:
                    cross[lvl - 1] += 1
        row = {
            "topic_id": t,
            "name": tree.names[t],
            "n_docs": n,
            "any_mm": mm / n if n else 0.0,
        }
        for lvl in range(1, depth + 1):
            row[f"cross_branch_l{lvl}"] = cross[lvl - 1] / n if n else 0.0
        out.append(row)
    return out
