"""Turn call sequences into n-gram token documents and weight them.

A unigram token is the API name underscore-joined with its argument values
(``LdrLoadDll_urlmon_urlmon.dll``); an argument-less call tokenizes to
``<api>_na``.  Higher-order n-grams join consecutive unigram tokens with a
comma.  Literal ``_`` and ``,`` inside argument values are escaped so the
two joiners stay unambiguous, and whitespace inside argument values becomes
a single underscore so tokens never contain whitespace.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .errors import BadOrder, EmptyCorpus, EmptyDocument, OrderMismatch
from .report_ingest import ApiCallRecord, BehaviorReport

ORDERS = (1, 2, 3)
NGRAM_JOINER = ","
ARG_JOINER = "_"
NO_ARGS_MARK = "na"

# Arguments longer than this are cut and tagged with a hash of the full
# value, bounding token length against megabyte-scale buffers.
MAX_ARG_CHARS = 256

TF = "tf"
TFIDF = "tfidf"

_WS_RUN = re.compile(r"\s+")


@dataclass(frozen=True)
class TokenDocument:
    """The ordered n-gram token list (and counts) for one sample."""

    sample_id: str
    order_n: int
    tokens: tuple[str, ...]
    counts: dict[str, int]

    def token_set(self) -> frozenset[str]:
        return frozenset(self.counts)


@dataclass(frozen=True)
class WeightedVector:
    """Sparse token->weight map under one weighting scheme (tf or tfidf)."""

    sample_id: str
    weights: dict[str, float]
    scheme: str


def _prepare_argument(value: str) -> str:
    if len(value) > MAX_ARG_CHARS:
        digest = hashlib.sha256(value.encode("utf-8")).hexdigest()[:8]
        value = value[:MAX_ARG_CHARS] + "~" + digest
    value = value.replace(",", "\\,").replace("_", "\\_")
    return _WS_RUN.sub(ARG_JOINER, value)


def tokenize_call(call: ApiCallRecord) -> str:
    """Unigram token for one call: api name + "_" + its argument values."""
    if not call.arguments:
        return call.api_name + ARG_JOINER + NO_ARGS_MARK
    parts = [call.api_name]
    parts.extend(_prepare_argument(a) for a in call.arguments)
    return ARG_JOINER.join(parts)


def ngrams(report: BehaviorReport, order_n: int) -> TokenDocument:
    """Sliding window of width ``order_n`` over the tokenized call sequence.

    A report with c calls yields max(0, c - order_n + 1) n-gram tokens.
    """
    if order_n not in ORDERS:
        raise BadOrder(f"order_n must be one of {ORDERS}, got {order_n}")
    unigrams = [tokenize_call(c) for c in report.calls]
    if order_n == 1:
        grams = unigrams
    else:
        grams = [
            NGRAM_JOINER.join(unigrams[i:i + order_n])
            for i in range(len(unigrams) - order_n + 1)
        ]
    return TokenDocument(sample_id=report.sample_id, order_n=order_n,
                         tokens=tuple(grams), counts=dict(Counter(grams)))


def term_frequency(doc: TokenDocument) -> WeightedVector:
    """TF weights: token count over total tokens; weights sum to 1."""
    total = len(doc.tokens)
    if total == 0:
        raise EmptyDocument(f"sample {doc.sample_id!r}: no tokens at order "
                            f"{doc.order_n}")
    weights = {t: c / total for t, c in doc.counts.items()}
    return WeightedVector(sample_id=doc.sample_id, weights=weights, scheme=TF)


def document_frequencies(docs: Iterable[TokenDocument]) -> Counter:
    """Number of documents containing each token."""
    df: Counter = Counter()
    for doc in docs:
        df.update(doc.counts.keys())
    return df


def smoothed_idf(df: int, n_docs: int) -> float:
    """ln((1+N)/(1+df)) + 1: strictly decreasing in df, never below 1."""
    return math.log((1.0 + n_docs) / (1.0 + df)) + 1.0


def tfidf(docs: list[TokenDocument]) -> list[WeightedVector]:
    """TF-IDF weights for every document against the corpus-wide df counts.

    A token present in every document gets the minimum idf factor of 1.0,
    so all weights stay strictly positive.  Documents with no tokens yield
    empty vectors.
    """
    if not docs:
        raise EmptyCorpus("tfidf needs at least one document")
    orders = {d.order_n for d in docs}
    if len(orders) > 1:
        raise OrderMismatch(f"mixed n-gram orders in corpus: {sorted(orders)}")

    df = document_frequencies(docs)
    n_docs = len(docs)
    out = []
    for doc in docs:
        total = len(doc.tokens)
        weights = {
            t: (c / total) * smoothed_idf(df[t], n_docs)
            for t, c in doc.counts.items()
        }
        out.append(WeightedVector(sample_id=doc.sample_id, weights=weights,
                                  scheme=TFIDF))
    return out


def dumps_token_document(doc: TokenDocument) -> str:
    """Dump format: header ``#sample_id order_n token_count``, one token per line."""
    lines = [f"#{doc.sample_id} {doc.order_n} {len(doc.tokens)}"]
    lines.extend(doc.tokens)
    return "\n".join(lines) + "\n"


def loads_token_document(text: str) -> TokenDocument:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("token document dump must start with a '#' header line")
    sample_id, order_s, count_s = lines[0][1:].rsplit(" ", 2)
    tokens = tuple(lines[1:])
    if len(tokens) != int(count_s):
        raise ValueError(f"token count mismatch: header says {count_s}, "
                         f"found {len(tokens)}")
    return TokenDocument(sample_id=sample_id, order_n=int(order_s),
                         tokens=tokens, counts=dict(Counter(tokens)))
