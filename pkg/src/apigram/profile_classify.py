"""Per-class reference profiles and Jaccard-similarity classification.

A class profile is the union of the class's training token sets intersected
with the selected vocabulary, capped by summed TF-IDF rank.  A test sample
is scored against every profile with Jaccard similarity over selected
tokens; the best-scoring class wins, ties broken lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import EmptyClass, OrderMismatch, UnlabeledSample
from .featurize import TokenDocument, tfidf


@dataclass(frozen=True)
class ClassProfile:
    """Selected token set representing one class, with training provenance."""

    class_name: str
    order_n: int
    token_set: frozenset[str]
    profile_cap: int
    provenance: int  # number of training samples behind this profile


@dataclass(frozen=True)
class ClassificationResult:
    sample_id: str
    scores: dict[str, float]
    predicted: str
    margin: float


@dataclass(frozen=True)
class SimilarityMatrix:
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    entries: np.ndarray


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """|a intersect b| / |a union b|; 0.0 when both sets are empty."""
    a = set(a)
    b = set(b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def top_tokens_by_mass(tokens: set[str], mass: Mapping[str, float],
                       cap: int) -> frozenset[str]:
    """Keep the cap highest-mass tokens; ties broken lexicographically.

    Only the ranking of masses matters, so scaling every mass by a positive
    constant never changes the result.
    """
    if len(tokens) <= cap:
        return frozenset(tokens)
    ranked = sorted(tokens, key=lambda t: (-mass.get(t, 0.0), t))
    return frozenset(ranked[:cap])


def build_profiles(
    docs: list[TokenDocument],
    labels: Mapping[str, str | None],
    selected: frozenset[str],
    cap: int,
) -> list[ClassProfile]:
    """Build one profile per class from labeled training documents.

    Raises UnlabeledSample for any document without a label and EmptyClass
    for a class whose selected-token union is empty.
    """
    if cap < 1:
        raise ValueError(f"profile cap must be >= 1, got {cap}")
    by_class: dict[str, list[TokenDocument]] = {}
    for doc in docs:
        label = labels.get(doc.sample_id)
        if label is None:
            raise UnlabeledSample(f"training sample {doc.sample_id!r} has no label")
        by_class.setdefault(label, []).append(doc)

    # Class-summed TF-IDF mass ranks tokens when a union exceeds the cap;
    # df is corpus-wide across all training documents.
    vectors = {v.sample_id: v for v in tfidf(docs)}

    profiles = []
    for class_name in sorted(by_class):
        class_docs = by_class[class_name]
        union: set[str] = set()
        for doc in class_docs:
            union.update(doc.token_set() & selected)
        if not union:
            raise EmptyClass(f"class {class_name!r} has no usable tokens after "
                             "selection")
        mass: dict[str, float] = {}
        for doc in class_docs:
            for token, weight in vectors[doc.sample_id].weights.items():
                if token in union:
                    mass[token] = mass.get(token, 0.0) + weight
        profiles.append(ClassProfile(
            class_name=class_name,
            order_n=class_docs[0].order_n,
            token_set=top_tokens_by_mass(union, mass, cap),
            profile_cap=cap,
            provenance=len(class_docs),
        ))
    return profiles


def _check_orders(order_n: int, profiles: list[ClassProfile]) -> None:
    if len(profiles) < 2:
        raise ValueError("classification needs at least 2 class profiles")
    bad = {p.order_n for p in profiles if p.order_n != order_n}
    if bad:
        raise OrderMismatch(f"document order {order_n} vs profile orders {sorted(bad)}")


def _decide(sample_id: str, class_names: list[str],
            row: list[float]) -> ClassificationResult:
    best_i = 0
    for i in range(1, len(row)):
        if row[i] > row[best_i]:
            best_i = i
    ordered = sorted(row, reverse=True)
    return ClassificationResult(
        sample_id=sample_id,
        scores=dict(zip(class_names, row)),
        predicted=class_names[best_i],
        margin=ordered[0] - ordered[1],
    )


def classify(doc: TokenDocument, profiles: list[ClassProfile],
             selected: frozenset[str]) -> ClassificationResult:
    """Score one document against every profile and pick the argmax class."""
    _check_orders(doc.order_n, profiles)
    profiles = sorted(profiles, key=lambda p: p.class_name)
    doc_set = doc.token_set() & selected
    row = [jaccard(doc_set, p.token_set) for p in profiles]
    return _decide(doc.sample_id, [p.class_name for p in profiles], row)


def _token_ids(token_sets: list[frozenset[str]],
               vocab_index: dict[str, int]) -> list[np.ndarray]:
    out = []
    for tokens in token_sets:
        ids = sorted(vocab_index[t] for t in tokens if t in vocab_index)
        out.append(np.asarray(ids, dtype=np.int64))
    return out


def classify_all(docs: list[TokenDocument], profiles: list[ClassProfile],
                 selected: frozenset[str]) -> list[ClassificationResult]:
    """Bulk classification through the kernel backend.

    Produces exactly the same results as mapping classify() over docs.
    """
    if not docs:
        return []
    for doc in docs:
        _check_orders(doc.order_n, profiles)
    profiles = sorted(profiles, key=lambda p: p.class_name)
    class_names = [p.class_name for p in profiles]

    vocab_index = {t: i for i, t in enumerate(sorted(selected))}
    doc_ids = _token_ids([doc.token_set() for doc in docs], vocab_index)
    prof_ids = _token_ids([p.token_set for p in profiles], vocab_index)
    matrix = kernels.jaccard_matrix(*kernels.pack_sets(doc_ids),
                                    *kernels.pack_sets(prof_ids))
    return [
        _decide(doc.sample_id, class_names, matrix[i].tolist())
        for i, doc in enumerate(docs)
    ]


def similarity_matrix(docs_a: list[TokenDocument], docs_b: list[TokenDocument],
                      selected: frozenset[str]) -> SimilarityMatrix:
    """Pairwise Jaccard similarity between two document collections."""
    orders = {d.order_n for d in docs_a} | {d.order_n for d in docs_b}
    if len(orders) > 1:
        raise OrderMismatch(f"mixed n-gram orders: {sorted(orders)}")
    vocab_index = {t: i for i, t in enumerate(sorted(selected))}
    ids_a = _token_ids([d.token_set() for d in docs_a], vocab_index)
    ids_b = _token_ids([d.token_set() for d in docs_b], vocab_index)
    entries = kernels.jaccard_matrix(*kernels.pack_sets(ids_a),
                                     *kernels.pack_sets(ids_b))
    return SimilarityMatrix(
        row_ids=tuple(d.sample_id for d in docs_a),
        col_ids=tuple(d.sample_id for d in docs_b),
        entries=entries,
    )
