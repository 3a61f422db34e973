"""Seeded synthetic behavioral corpora from family behavior templates.

Each template carries a pool of (category, api, arguments) calls and a
list of chain motifs: ordered index sequences into that pool describing a
characteristic behavior (a worm enumerating shares then copying itself, a
downloader fetching and launching a second stage, ...).  A generated sample
walks the motifs in template order and interleaves noise calls drawn from a
shared benign pool at the template's noise rate.

Randomness comes from Mersenne Twister generators (random.Random) seeded
with the string "<seed>:<class>:<index>" per sample, which CPython hashes
via SHA-512; the same seed therefore reproduces a corpus byte for byte on
any platform.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import BadTemplate, IoError
from .report_ingest import _LABEL_OK

PoolCall = tuple[str, str, tuple[str, ...]]  # (category, api_name, arguments)


@dataclass(frozen=True)
class FamilyTemplate:
    class_name: str
    call_pool: tuple[PoolCall, ...]
    chain_motifs: tuple[tuple[int, ...], ...]
    noise_rate: float = 0.0

    def validate(self) -> None:
        if not _LABEL_OK.match(self.class_name or ""):
            raise BadTemplate(f"bad class_name {self.class_name!r}")
        if not self.call_pool:
            raise BadTemplate(f"{self.class_name}: empty call_pool")
        if not self.chain_motifs:
            raise BadTemplate(f"{self.class_name}: chain_motifs must be non-empty")
        for motif in self.chain_motifs:
            if not motif:
                raise BadTemplate(f"{self.class_name}: empty motif")
            for idx in motif:
                if not 0 <= idx < len(self.call_pool):
                    raise BadTemplate(
                        f"{self.class_name}: motif index {idx} outside call_pool")
        if not 0.0 <= self.noise_rate < 1.0:
            raise BadTemplate(
                f"{self.class_name}: noise_rate {self.noise_rate} outside [0, 1)")


# Benign background activity; doubles as the shared noise pool every
# template draws from when its noise_rate is above zero.
BENIGN_POOL: tuple[PoolCall, ...] = (
    ("system", "NtAllocateVirtualMemory", ()),
    ("system", "LdrLoadDll", ("ole32", "ole32.dll")),
    ("system", "LdrGetProcedureAddress", ("ole32", "OleUninitialize")),
    ("system", "NtClose", ("0x00000120",)),
    ("synchronization", "GetSystemTimeAsFileTime", ()),
    ("misc", "GetComputerNameW", ("DESKTOP-01",)),
    ("file", "NtQueryAttributesFile", ("C:\\Windows\\System32\\kernel32.dll",)),
    ("ui", "LoadStringW", ("1033", "OK")),
)

_ADWARE_POOL: tuple[PoolCall, ...] = (
    ("network", "InternetOpenUrlA", ("http://ads.trackpix.example/banner1",)),
    ("network", "URLDownloadToFileW",
     ("http://ads.trackpix.example/pop.gif", "C:\\ProgramData\\pop.gif")),
    ("ui", "FindWindowA", ("IEFrame",)),
    ("ui", "MessageBoxTimeoutA", ("Special offer!", "30000")),
    ("ui", "DrawTextExW", ("YOU WON",)),
    ("registry", "RegSetValueExA",
     ("HKCU\\Software\\Microsoft\\Internet Explorer\\Main\\Start Page",
      "http://start.adhub.example")),
)

_WORM_POOL: tuple[PoolCall, ...] = (
    ("netapi", "NetShareEnum", ("\\\\FILESRV",)),
    ("network", "WSASocketW", ("2", "1", "6")),
    ("network", "WSAConnect", ("10.0.0.23", "445")),
    ("network", "WSASend", ("10.0.0.23", "445", "1024")),
    ("network", "TransmitFile", ("\\\\FILESRV\\share\\wormcopy.exe",)),
    ("network", "GetAdaptersAddresses", ()),
)

_VIRUS_POOL: tuple[PoolCall, ...] = (
    ("file", "FindFirstFileExW", ("C:\\Users\\victim\\*.exe",)),
    ("file", "FindNextFileW", ("report.exe",)),
    ("file", "NtOpenFile", ("C:\\Users\\victim\\report.exe",)),
    ("file", "NtReadFile", ("C:\\Users\\victim\\report.exe", "4096")),
    ("file", "NtWriteFile", ("C:\\Users\\victim\\report.exe", "8192")),
    ("file", "NtSetInformationFile", ("C:\\Users\\victim\\report.exe", "basic")),
)

_BACKDOOR_POOL: tuple[PoolCall, ...] = (
    ("network", "WSAAccept", ("0.0.0.0", "4444")),
    ("network", "WSARecv", ("socket:5", "256")),
    ("system", "NtCreateThreadEx", ("0x00400000",)),
    ("system", "NtCreateUserProcess", ("C:\\Windows\\System32\\cmd.exe",)),
    ("system", "RtlCreateUserThread", ("0x00401000",)),
    ("network", "ConnectEx", ("198.51.100.7", "8080")),
)

_SPYWARE_POOL: tuple[PoolCall, ...] = (
    ("ui", "GetForegroundWindow", ()),
    ("ui", "GetAsyncKeyState", ("0x41",)),
    ("ui", "GetKeyState", ("0x0D",)),
    ("crypto", "CryptEncryptMessage", ("keystrokes.bin",)),
    ("network", "socket", ("2", "1", "6")),
    ("network", "send", ("203.0.113.9", "443", "keylog")),
)

_TROJAN_POOL: tuple[PoolCall, ...] = (
    ("system", "CreateProcessInternalW",
     ("C:\\Users\\victim\\AppData\\fakeinstaller.exe",)),
    ("registry", "RegOpenKeyExW",
     ("HKCU\\Software\\Microsoft\\Windows\\CurrentVersion\\Run",)),
    ("registry", "RegSetValueExW",
     ("HKCU\\Software\\Microsoft\\Windows\\CurrentVersion\\Run\\updater",
      "C:\\Users\\victim\\AppData\\fakeinstaller.exe")),
    ("network", "InternetConnectA", ("bank.example", "443")),
    ("network", "HttpOpenRequestA", ("bank.example", "POST")),
    ("network", "HttpSendRequestA", ("bank.example", "/login")),
)

_DOWNLOADER_POOL: tuple[PoolCall, ...] = (
    ("network", "InternetOpenW", ("Mozilla/5.0",)),
    ("network", "InternetOpenUrlW", ("http://cdn.dropzone.example/stage2.bin",)),
    ("network", "InternetReadFile", ("handle:7", "65536")),
    ("file", "NtCreateFile",
     ("C:\\Users\\victim\\AppData\\Local\\Temp\\stage2.exe",)),
    ("file", "NtQueryInformationFile",
     ("C:\\Users\\victim\\AppData\\Local\\Temp\\stage2.exe",)),
    ("system", "ShellExecuteExW",
     ("C:\\Users\\victim\\AppData\\Local\\Temp\\stage2.exe",)),
)

BUILTIN_TEMPLATES: dict[str, FamilyTemplate] = {
    t.class_name: t for t in (
        FamilyTemplate("adware", _ADWARE_POOL,
                       ((0, 1, 3), (2, 4, 3), (5, 0))),
        FamilyTemplate("backdoor", _BACKDOOR_POOL,
                       ((0, 1, 3), (5, 1, 2), (1, 4, 1))),
        FamilyTemplate("benign", BENIGN_POOL,
                       ((0, 1, 2), (6, 3), (4, 5, 7), (1, 2, 3))),
        FamilyTemplate("downloader", _DOWNLOADER_POOL,
                       ((0, 1, 2, 2), (3, 2, 4), (5,))),
        FamilyTemplate("spyware", _SPYWARE_POOL,
                       ((0, 1, 2, 1), (3, 4, 5), (1, 1, 5))),
        FamilyTemplate("trojan", _TROJAN_POOL,
                       ((0, 1, 2), (3, 4, 5), (5, 5))),
        FamilyTemplate("virus", _VIRUS_POOL,
                       ((0, 1, 2, 3, 4), (1, 2, 4, 5), (4,))),
        FamilyTemplate("worm", _WORM_POOL,
                       ((5, 0, 1, 2), (3, 3, 4), (1, 2, 3))),
    )
}


def load_template(path: str | Path) -> FamilyTemplate:
    """Read a template JSON file (class_name, call_pool, chain_motifs, noise_rate)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BadTemplate(f"cannot read template {path}: {exc}") from exc
    try:
        template = FamilyTemplate(
            class_name=doc["class_name"],
            call_pool=tuple((c[0], c[1], tuple(c[2])) for c in doc["call_pool"]),
            chain_motifs=tuple(tuple(m) for m in doc["chain_motifs"]),
            noise_rate=float(doc.get("noise_rate", 0.0)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise BadTemplate(f"template {path}: bad structure: {exc}") from exc
    template.validate()
    return template


def dump_template(template: FamilyTemplate) -> str:
    payload = {
        "class_name": template.class_name,
        "call_pool": [[c[0], c[1], list(c[2])] for c in template.call_pool],
        "chain_motifs": [list(m) for m in template.chain_motifs],
        "noise_rate": template.noise_rate,
    }
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _call_json(call: PoolCall) -> dict:
    category, api, args = call
    return {"category": category, "api": api, "arguments": list(args),
            "return": "0"}


def _sample_calls(template: FamilyTemplate, rng: random.Random) -> list[dict]:
    pool = template.call_pool
    rate = template.noise_rate
    noise = BENIGN_POOL
    calls: list[dict] = []

    def emit_noise():
        while rng.random() < rate:
            calls.append(_call_json(noise[rng.randrange(len(noise))]))

    for motif in template.chain_motifs:
        for idx in motif:
            emit_noise()
            calls.append(_call_json(pool[idx]))
    emit_noise()
    return calls


def generate(template: FamilyTemplate, count: int, seed: int) -> list[tuple[str, str]]:
    """Generate ``count`` reports; returns (sample_id, report JSON text) pairs.

    A pure function of (template, count, seed): per-sample generators are
    seeded independently so samples can be regenerated in any order.
    """
    if count < 1:
        raise BadTemplate(f"count must be >= 1, got {count}")
    template.validate()
    out = []
    for index in range(count):
        sample_id = f"{template.class_name}-{index:04d}"
        rng = random.Random(f"{seed}:{template.class_name}:{index}")
        report = {
            "info": {"id": sample_id, "generator": "apigram-synth"},
            "behavior": {
                "processes": [{
                    "pid": 2000 + index,
                    "process_name": f"{template.class_name}.exe",
                    "calls": _sample_calls(template, rng),
                }],
            },
        }
        out.append((sample_id, json.dumps(report, indent=1, sort_keys=True) + "\n"))
    return out


def write_corpus(
    templates: list[FamilyTemplate],
    train_per_class: int,
    test_per_class: int,
    seed: int,
    out_dir: str | Path,
) -> Path:
    """Write reports plus a train/test manifest; returns the manifest path.

    Per class, sample indices [0, train) are tagged train and
    [train, train + test) are tagged test.
    """
    out_dir = Path(out_dir)
    reports_dir = out_dir / "reports"
    try:
        reports_dir.mkdir(parents=True, exist_ok=True)
        rows = ["path,sample_id,label,split"]
        for template in templates:
            per_class = train_per_class + test_per_class
            for i, (sample_id, text) in enumerate(generate(template, per_class, seed)):
                rel = f"reports/{sample_id}.json"
                (out_dir / rel).write_text(text, encoding="utf-8")
                split = "train" if i < train_per_class else "test"
                rows.append(f"{rel},{sample_id},{template.class_name},{split}")
        manifest_path = out_dir / "manifest.csv"
        manifest_path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write corpus under {out_dir}: {exc}") from exc
    return manifest_path
