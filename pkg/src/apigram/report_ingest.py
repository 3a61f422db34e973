"""Parse sandbox behavioral reports into an ordered in-memory call model.

The accepted input is the documented subset of a Cuckoo-style JSON report:
a top-level ``behavior`` object holding ``processes``, each process holding
``calls``, each call carrying ``category``, ``api``, ``arguments`` and
``return``.  Every other top-level key is ignored.  Call order is the
chronological order of the source: processes in array order, calls in array
order within each process.

Reports are decoded as UTF-8 with invalid bytes replaced by U+FFFD so that
tokenization downstream is deterministic for arbitrary input bytes.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyReport, MalformedReport, ManifestError

SPLITS = ("train", "test")

_WS_RUN = re.compile(r"\s+")

# Labels travel through comma-joined headers in several on-disk formats.
_LABEL_OK = re.compile(r"^[^\s,]+$")


@dataclass(frozen=True)
class ApiCallRecord:
    """One hooked call: category, name, ordered argument values, return value."""

    category: str
    api_name: str
    arguments: tuple[str, ...]
    return_value: str


@dataclass(frozen=True)
class BehaviorReport:
    """One sample's chronologically ordered call sequence plus metadata.

    ``dropped_calls`` counts source calls discarded for lacking an API name;
    it is bookkeeping, not part of the report's identity.
    """

    sample_id: str
    calls: tuple[ApiCallRecord, ...]
    label: str | None = None
    source_path: str = ""
    dropped_calls: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    sample_id: str
    label: str | None
    split: str


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]


@dataclass
class LoadStats:
    """Per-class train/test sample counts in the shape of a dataset table."""

    class_order: list[str]
    train: dict[str, int]
    test: dict[str, int]
    dropped_calls: int = 0

    def row(self, label: str) -> tuple[int, int, int]:
        tr = self.train.get(label, 0)
        te = self.test.get(label, 0)
        return tr, te, tr + te

    @property
    def total(self) -> int:
        return sum(self.train.values()) + sum(self.test.values())

    def table(self) -> str:
        """Aligned text table: one row per class plus a totals row."""
        rows = [("Type", "Train", "Test", "Total")]
        for label in self.class_order:
            tr, te, tot = self.row(label)
            rows.append((label, str(tr), str(te), str(tot)))
        rows.append(("Total", str(sum(self.train.values())),
                     str(sum(self.test.values())), str(self.total)))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
            for r in rows
        )


def _stringify(value) -> str:
    """Render a JSON value as the token-facing string form.

    Numbers are stringified with no padding, booleans as JSON literals,
    null as the empty string, and nested containers as compact JSON.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return repr(value) if isinstance(value, float) else str(value)
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _normalize_api(raw) -> str:
    """Strip and collapse whitespace; empty or non-string means no API name."""
    if not isinstance(raw, str):
        return ""
    return _WS_RUN.sub("_", raw.strip())


def _flatten_arguments(raw) -> tuple[str, ...]:
    """Flatten the schema's ``arguments`` field to an ordered value tuple.

    Maps are flattened to their values ordered by argument name so that the
    same call always tokenizes identically regardless of JSON key order.
    """
    if raw is None:
        return ()
    if isinstance(raw, dict):
        return tuple(_stringify(raw[k]) for k in sorted(raw))
    if isinstance(raw, list):
        return tuple(_stringify(v) for v in raw)
    return (_stringify(raw),)


def parse_report(raw_bytes: bytes, sample_id: str) -> BehaviorReport:
    """Parse behavioral-report bytes into a BehaviorReport.

    Calls missing an API name are dropped and counted on the result.
    Raises MalformedReport if the bytes do not match the schema and
    EmptyReport if no usable calls remain.
    """
    text = raw_bytes.decode("utf-8", errors="replace")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedReport(sample_id, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise MalformedReport(sample_id, "top level is not a JSON object")

    behavior = doc.get("behavior", {})
    if not isinstance(behavior, dict):
        raise MalformedReport(sample_id, "'behavior' is not an object")
    processes = behavior.get("processes", [])
    if not isinstance(processes, list):
        raise MalformedReport(sample_id, "'behavior.processes' is not an array")

    calls: list[ApiCallRecord] = []
    dropped = 0
    for pidx, proc in enumerate(processes):
        if not isinstance(proc, dict):
            raise MalformedReport(sample_id, f"process #{pidx} is not an object")
        raw_calls = proc.get("calls", [])
        if not isinstance(raw_calls, list):
            raise MalformedReport(sample_id, f"process #{pidx} 'calls' is not an array")
        for raw_call in raw_calls:
            if not isinstance(raw_call, dict):
                dropped += 1
                continue
            api = _normalize_api(raw_call.get("api"))
            if not api:
                dropped += 1
                continue
            calls.append(ApiCallRecord(
                category=_stringify(raw_call.get("category", "")),
                api_name=api,
                arguments=_flatten_arguments(raw_call.get("arguments")),
                return_value=_stringify(raw_call.get("return", "")),
            ))

    if not calls:
        raise EmptyReport(sample_id)
    return BehaviorReport(sample_id=sample_id, calls=tuple(calls),
                          dropped_calls=dropped)


def dump_report(report: BehaviorReport) -> str:
    """Serialize to the canonical internal dump (schema-shaped, single process).

    ``parse_report(dump_report(r).encode(), r.sample_id)`` reproduces ``r``'s
    call sequence exactly.
    """
    payload = {
        "behavior": {
            "processes": [{
                "calls": [
                    {
                        "category": c.category,
                        "api": c.api_name,
                        "arguments": list(c.arguments),
                        "return": c.return_value,
                    }
                    for c in report.calls
                ],
            }],
        },
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _manifest_rows_from_csv(text: str) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    expected = {"path", "sample_id", "label", "split"}
    if reader.fieldnames is None or set(reader.fieldnames) != expected:
        raise ManifestError(
            f"manifest header must be exactly {sorted(expected)}, "
            f"got {reader.fieldnames}")
    return [dict(row) for row in reader]


def _manifest_rows_from_json(text: str) -> list[dict[str, str]]:
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest JSON invalid: {exc.msg}") from exc
    if not isinstance(rows, list):
        raise ManifestError("manifest JSON must be an array of objects")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or set(row) != {"path", "sample_id", "label", "split"}:
            raise ManifestError(f"manifest JSON entry #{i} must have keys "
                                "path, sample_id, label, split")
        out.append({k: str(v) if v is not None else "" for k, v in row.items()})
    return out


def load_manifest(manifest_path: str | Path) -> CorpusManifest:
    """Load and validate a corpus manifest (CSV or JSON array form).

    Relative report paths are resolved against the manifest's directory.
    Raises ManifestError on duplicate sample ids, missing files, unknown
    split tags or malformed labels.
    """
    manifest_path = Path(manifest_path)
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {manifest_path}: {exc}") from exc

    if text.lstrip().startswith("["):
        rows = _manifest_rows_from_json(text)
    else:
        rows = _manifest_rows_from_csv(text)

    base = manifest_path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for i, row in enumerate(rows):
        sample_id = (row.get("sample_id") or "").strip()
        if not sample_id:
            raise ManifestError(f"manifest row #{i}: empty sample_id")
        if sample_id in seen:
            raise ManifestError(f"duplicate sample_id {sample_id!r}")
        seen.add(sample_id)

        split = (row.get("split") or "").strip()
        if split not in SPLITS:
            raise ManifestError(
                f"sample {sample_id!r}: unknown split {split!r} (expected train|test)")

        label = (row.get("label") or "").strip() or None
        if label is not None and not _LABEL_OK.match(label):
            raise ManifestError(
                f"sample {sample_id!r}: label {label!r} may not contain "
                "whitespace or commas")

        rel = (row.get("path") or "").strip()
        if not rel:
            raise ManifestError(f"sample {sample_id!r}: empty path")
        path = Path(rel)
        if not path.is_absolute():
            path = base / path
        if not path.is_file():
            raise ManifestError(f"sample {sample_id!r}: file not found: {path}")

        entries.append(ManifestEntry(path=path, sample_id=sample_id,
                                     label=label, split=split))
    return CorpusManifest(entries=tuple(entries))


def load_corpus(
    manifest: CorpusManifest | str | Path,
    split: str | None = None,
) -> tuple[list[BehaviorReport], LoadStats]:
    """Parse every report named by the manifest, in manifest order.

    ``split`` restricts loading to one split tag; stats always cover the
    loaded entries only.  Parse errors from individual reports propagate
    as their typed error.
    """
    if not isinstance(manifest, CorpusManifest):
        manifest = load_manifest(manifest)
    entries = [e for e in manifest.entries if split is None or e.split == split]

    reports: list[BehaviorReport] = []
    class_order: list[str] = []
    train: dict[str, int] = {}
    test: dict[str, int] = {}
    dropped = 0
    for entry in entries:
        raw = entry.path.read_bytes()
        report = parse_report(raw, entry.sample_id)
        report = BehaviorReport(
            sample_id=report.sample_id, calls=report.calls, label=entry.label,
            source_path=str(entry.path), dropped_calls=report.dropped_calls)
        reports.append(report)
        dropped += report.dropped_calls
        label = entry.label if entry.label is not None else "(unlabeled)"
        if label not in train and label not in test:
            class_order.append(label)
        bucket = train if entry.split == "train" else test
        bucket[label] = bucket.get(label, 0) + 1

    return reports, LoadStats(class_order=class_order, train=train, test=test,
                              dropped_calls=dropped)
