"""Versioned on-disk model store with integrity checking.

The store is a single UTF-8 text file (auditable diffs beat binary size at
this scale): a header block, the sorted selected vocabulary, one sorted
token block per class, and a trailing SHA-256 digest line covering every
byte before it.  Serialization is canonical, so save -> load -> save is
byte-identical.  See docs/formats.md for the full layout.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import IntegrityError, IoError, VersionError
from .feature_select import SelectionParams
from .image_export import vocabulary_sha
from .profile_classify import ClassProfile

MAGIC = "apigram-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelMeta:
    order_n: int
    selection: SelectionParams
    profile_cap: int
    created_by: str = "apigram/0.1.0"


@dataclass(frozen=True)
class ModelStore:
    meta: ModelMeta
    vocab: tuple[str, ...]  # sorted selected vocabulary
    profiles: tuple[ClassProfile, ...]  # sorted by class name


def dumps_model(profiles: list[ClassProfile], selected: frozenset[str],
                meta: ModelMeta) -> str:
    if not profiles:
        raise ValueError("cannot persist a model with no class profiles")
    vocab = sorted(selected)
    profiles = sorted(profiles, key=lambda p: p.class_name)
    for p in profiles:
        if not p.token_set <= selected:
            raise ValueError(f"profile {p.class_name!r} holds tokens outside "
                             "the selected vocabulary")

    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        f"created-by {meta.created_by}",
        f"order {meta.order_n}",
        f"selection min_df={meta.selection.min_df} "
        f"max_df_fraction={meta.selection.max_df_fraction!r} "
        f"top_k={meta.selection.top_k}",
        f"profile_cap {meta.profile_cap}",
        f"vocab-sha {vocabulary_sha(vocab)}",
        "classes " + ",".join(p.class_name for p in profiles),
        f"vocab {len(vocab)}",
        *vocab,
    ]
    for p in profiles:
        lines.append(f"profile {p.class_name} {len(p.token_set)} {p.provenance}")
        lines.extend(sorted(p.token_set))
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return body + f"digest sha256 {digest}\n"


def save_model(profiles: list[ClassProfile], selected: frozenset[str],
               meta: ModelMeta, path: str | Path) -> None:
    """Atomically write the model store (temp file + rename)."""
    path = Path(path)
    text = dumps_model(profiles, selected, meta)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write model to {path}: {exc}") from exc


def loads_model(text: str) -> ModelStore:
    marker = "digest sha256 "
    pos = text.rfind("\n" + marker)
    if not text.endswith("\n") or pos == -1:
        raise IntegrityError("model file is truncated: no digest line")
    body = text[:pos + 1]
    claimed = text[pos + 1 + len(marker):].strip()
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if claimed != actual:
        raise IntegrityError(f"model digest mismatch: file says {claimed[:12]}..., "
                             f"content hashes to {actual[:12]}...")

    lines = body.split("\n")[:-1]

    def take(prefix: str) -> str:
        if not lines or not lines[0].startswith(prefix + " "):
            found = lines[0] if lines else "<end of file>"
            raise IntegrityError(f"expected {prefix!r} line, found {found!r}")
        return lines.pop(0)[len(prefix) + 1:]

    version_s = take(MAGIC)
    try:
        version = int(version_s)
    except ValueError:
        raise IntegrityError(f"bad format version {version_s!r}") from None
    if version > FORMAT_VERSION:
        raise VersionError(f"model format version {version} is newer than "
                           f"supported version {FORMAT_VERSION}")

    created_by = take("created-by")
    order_n = int(take("order"))
    sel_fields = dict(part.split("=", 1) for part in take("selection").split())
    selection = SelectionParams(min_df=int(sel_fields["min_df"]),
                                max_df_fraction=float(sel_fields["max_df_fraction"]),
                                top_k=int(sel_fields["top_k"]))
    profile_cap = int(take("profile_cap"))
    vocab_sha = take("vocab-sha")
    class_names = take("classes").split(",")
    n_vocab = int(take("vocab"))
    if len(lines) < n_vocab:
        raise IntegrityError("vocab block shorter than declared")
    vocab = tuple(lines[:n_vocab])
    del lines[:n_vocab]
    if vocabulary_sha(vocab) != vocab_sha:
        raise IntegrityError("vocabulary digest mismatch")
    vocab_set = frozenset(vocab)

    profiles = []
    for name in class_names:
        header = take("profile").split(" ")
        if len(header) != 3 or header[0] != name:
            raise IntegrityError(f"profile block for {name!r} out of order or "
                                 "malformed")
        n_tokens, provenance = int(header[1]), int(header[2])
        if len(lines) < n_tokens:
            raise IntegrityError(f"profile block {name!r} shorter than declared")
        tokens = frozenset(lines[:n_tokens])
        del lines[:n_tokens]
        if len(tokens) != n_tokens:
            raise IntegrityError(f"profile block {name!r} holds duplicate tokens")
        if not tokens <= vocab_set:
            raise IntegrityError(f"profile {name!r} holds tokens outside the "
                                 "vocabulary")
        profiles.append(ClassProfile(class_name=name, order_n=order_n,
                                     token_set=tokens, profile_cap=profile_cap,
                                     provenance=provenance))
    if lines:
        raise IntegrityError(f"{len(lines)} unexpected trailing lines in model file")

    meta = ModelMeta(order_n=order_n, selection=selection,
                     profile_cap=profile_cap, created_by=created_by)
    return ModelStore(meta=meta, vocab=vocab, profiles=tuple(profiles))


def load_model(path: str | Path) -> ModelStore:
    """Read and verify a model store; inverse of save_model."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read model from {path}: {exc}") from exc
    return loads_model(text)
