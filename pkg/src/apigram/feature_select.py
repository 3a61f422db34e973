"""Reduce the global n-gram vocabulary to a compact selected set.

Three rules run in a fixed order: a document-frequency floor, a
document-frequency ceiling, then a top-k cut by summed TF-IDF mass across
the corpus (ties broken lexicographically).  The same inputs and parameters
always select the same set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptySelection
from .featurize import TokenDocument, document_frequencies, tfidf


@dataclass(frozen=True)
class SelectionParams:
    min_df: int = 2
    max_df_fraction: float = 0.9
    top_k: int = 100_000

    def __post_init__(self):
        if self.min_df < 1:
            raise ValueError(f"min_df must be >= 1, got {self.min_df}")
        if not 0.0 < self.max_df_fraction <= 1.0:
            raise ValueError("max_df_fraction must be in (0, 1], got "
                             f"{self.max_df_fraction}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


@dataclass(frozen=True)
class SelectionReport:
    vocab_before: int
    vocab_after: int
    rules_applied: tuple[tuple[str, int], ...]

    @property
    def kept_fraction(self) -> float:
        return self.vocab_after / self.vocab_before


def select_features(
    docs: list[TokenDocument],
    params: SelectionParams | None = None,
) -> tuple[frozenset[str], SelectionReport]:
    """Apply the three-rule selection pipeline to the corpus vocabulary.

    Raises EmptySelection when no token survives (parameters too
    aggressive for the corpus).
    """
    params = params or SelectionParams()
    df = document_frequencies(docs)
    n_docs = len(docs)
    vocab_before = len(df)
    if vocab_before == 0:
        raise EmptySelection("corpus contains no tokens")

    surviving = {t for t, d in df.items() if d >= params.min_df}
    removed_min = vocab_before - len(surviving)

    kept = {t for t in surviving if df[t] / n_docs <= params.max_df_fraction}
    removed_max = len(surviving) - len(kept)
    surviving = kept

    removed_top = 0
    if len(surviving) > params.top_k:
        mass: dict[str, float] = {}
        for vec in tfidf(docs):
            for token, weight in vec.weights.items():
                if token in surviving:
                    mass[token] = mass.get(token, 0.0) + weight
        ranked = sorted(surviving, key=lambda t: (-mass[t], t))
        removed_top = len(surviving) - params.top_k
        surviving = set(ranked[:params.top_k])

    report = SelectionReport(
        vocab_before=vocab_before,
        vocab_after=len(surviving),
        rules_applied=(("min_df", removed_min),
                       ("max_df", removed_max),
                       ("top_k", removed_top)),
    )
    if not surviving:
        raise EmptySelection(
            f"all {vocab_before} tokens eliminated "
            f"(min_df={params.min_df} removed {removed_min}, "
            f"max_df_fraction={params.max_df_fraction} removed {removed_max}); "
            "relax the selection parameters")
    return frozenset(surviving), report


def dumps_vocabulary(selected: frozenset[str], params: SelectionParams,
                     report: SelectionReport) -> str:
    """Selected-vocabulary file: params/counts header, then sorted tokens."""
    header = (f"#min_df={params.min_df} "
              f"max_df_fraction={params.max_df_fraction!r} "
              f"top_k={params.top_k} "
              f"before={report.vocab_before} after={report.vocab_after}")
    return "\n".join([header, *sorted(selected)]) + "\n"


def loads_vocabulary(text: str) -> tuple[frozenset[str], dict[str, str]]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("vocabulary file must start with a '#' header line")
    fields = dict(part.split("=", 1) for part in lines[0][1:].split())
    return frozenset(lines[1:]), fields
