"""Data model and ingestion: domain snapshots, keyword suggestions, SERP
fixtures, category labels, parked-domain filtering.

Everything downstream runs on offline :class:`DomainSnapshot` records; there
is no live fetching here, so any pipeline result can be replayed bit-exactly
from the same snapshot files.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field, asdict
from datetime import date, datetime, timezone
from enum import Enum
from importlib import resources
from typing import Iterable, Iterator, Optional

from .errors import SchemaError, SnapshotParseError, UnreachableSnapshotError
from .psl import root_domain

ENGINES = ("GOOGLE", "BING", "BAIDU", "NAVER")
COMPETITION_LEVELS = ("LOW", "MEDIUM", "HIGH")


@dataclass
class WhoisRecord:
    created: Optional[date] = None
    expires: Optional[date] = None
    registrar: Optional[str] = None
    registrar_country: Optional[str] = None
    registrant_country: Optional[str] = None
    privacy: Optional[bool] = None
    registrant_email_domain: Optional[str] = None

    @property
    def is_empty(self) -> bool:
        return all(
            getattr(self, name) is None for name in self.__dataclass_fields__
        )


@dataclass
class RankSignals:
    tranco: Optional[int] = None
    majestic: Optional[int] = None
    majestic_refips: Optional[int] = None
    majestic_refsubnets: Optional[int] = None
    majestic_tldrank: Optional[int] = None
    cisco: Optional[int] = None


@dataclass
class DomainSnapshot:
    """Offline capture of one website at one point in time.

    ``http_status`` 0 means the domain never resolved; ``final_url`` is the
    post-redirect landing page that all content features are computed from.
    """

    url: str
    fetched_at: datetime
    http_status: int = 0
    final_url: Optional[str] = None
    html: str = ""
    dns: dict[str, list[str]] = field(default_factory=dict)
    whois: WhoisRecord = field(default_factory=WhoisRecord)
    ranks: RankSignals = field(default_factory=RankSignals)

    @property
    def resolving(self) -> bool:
        return self.http_status != 0

    def root_domain(self) -> str:
        return root_domain(self.url)


@dataclass
class KeywordSuggestion:
    text: str
    source_domain: str = ""
    category: str = ""
    competition: str = "LOW"
    monthly_volume: Optional[int] = None

    def __post_init__(self):
        self.text = self.text.strip().lower()
        if not self.text:
            raise SchemaError("keyword text must be non-empty")
        if self.competition not in COMPETITION_LEVELS:
            raise SchemaError(f"competition must be one of {COMPETITION_LEVELS}, got {self.competition!r}")


@dataclass
class SerpEntry:
    engine: str
    rank: int
    url: str
    title: str = ""
    description: str = ""
    root_domain: str = ""

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise SchemaError(f"unknown engine {self.engine!r}")
        if self.rank < 1:
            raise SchemaError(f"rank must be >= 1, got {self.rank}")
        if not self.root_domain:
            self.root_domain = root_domain(self.url)


@dataclass
class SerpResultSet:
    query: str
    entries: list[SerpEntry] = field(default_factory=list)

    def __post_init__(self):
        self.entries = sorted(self.entries, key=lambda e: (e.engine, e.rank))

    def root_domains(self) -> set[str]:
        return {e.root_domain for e in self.entries}


@dataclass
class LabeledDomain:
    root_domain: str
    label: str  # SCAM | BENIGN
    category: str = ""

    def __post_init__(self):
        if self.label not in ("SCAM", "BENIGN"):
            raise SchemaError(f"label must be SCAM or BENIGN, got {self.label!r}")


class SnapshotState(Enum):
    LIVE = "live"
    PARKED = "parked"
    UNREACHABLE = "unreachable"


# --------------------------------------------------------------------------
# snapshot (de)serialization


def _parse_date(value) -> Optional[date]:
    if value is None:
        return None
    return date.fromisoformat(value)


def _parse_timestamp(value) -> datetime:
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def parse_snapshot(raw: str, line_number: Optional[int] = None) -> DomainSnapshot:
    """Parse one snapshots.jsonl record. Absent optionals become None."""
    try:
        rec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SnapshotParseError(f"malformed JSON: {exc.msg}", line_number) from exc
    if not isinstance(rec, dict):
        raise SnapshotParseError("record is not a JSON object", line_number)
    if "url" not in rec or not rec["url"]:
        raise SchemaError(f"line {line_number}: snapshot record missing 'url'"
                          if line_number else "snapshot record missing 'url'")

    whois_rec = rec.get("whois") or {}
    whois = WhoisRecord(
        created=_parse_date(whois_rec.get("created")),
        expires=_parse_date(whois_rec.get("expires")),
        registrar=whois_rec.get("registrar"),
        registrar_country=whois_rec.get("registrar_country"),
        registrant_country=whois_rec.get("registrant_country"),
        privacy=whois_rec.get("privacy"),
        registrant_email_domain=whois_rec.get("registrant_email_domain"),
    )
    ranks_rec = rec.get("ranks") or {}
    ranks = RankSignals(**{k: ranks_rec.get(k) for k in RankSignals.__dataclass_fields__})
    fetched = rec.get("fetched_at")
    return DomainSnapshot(
        url=rec["url"],
        fetched_at=_parse_timestamp(fetched) if fetched else datetime(1970, 1, 1, tzinfo=timezone.utc),
        http_status=int(rec.get("http_status") or 0),
        final_url=rec.get("final_url"),
        html=rec.get("html") or "",
        dns={k: list(v) for k, v in (rec.get("dns") or {}).items()},
        whois=whois,
        ranks=ranks,
    )


def serialize_snapshot(snap: DomainSnapshot) -> str:
    rec = {
        "url": snap.url,
        "fetched_at": snap.fetched_at.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
        "http_status": snap.http_status,
        "final_url": snap.final_url,
        "html": snap.html,
        "dns": snap.dns,
        "whois": {
            "created": snap.whois.created.isoformat() if snap.whois.created else None,
            "expires": snap.whois.expires.isoformat() if snap.whois.expires else None,
            "registrar": snap.whois.registrar,
            "registrar_country": snap.whois.registrar_country,
            "registrant_country": snap.whois.registrant_country,
            "privacy": snap.whois.privacy,
            "registrant_email_domain": snap.whois.registrant_email_domain,
        },
        "ranks": asdict(snap.ranks),
    }
    return json.dumps(rec, sort_keys=True, ensure_ascii=False)


def read_snapshots(path) -> Iterator[DomainSnapshot]:
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if line.strip():
                yield parse_snapshot(line, line_number=i)


# --------------------------------------------------------------------------
# parked-domain filtering


def load_parked_patterns(path=None) -> list[re.Pattern]:
    if path is None:
        text = resources.files("scamscout.data").joinpath("parked_patterns.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    patterns = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            patterns.append(re.compile(line, re.IGNORECASE))
    return patterns


_DEFAULT_PARKED: Optional[list[re.Pattern]] = None


def _parked_patterns() -> list[re.Pattern]:
    global _DEFAULT_PARKED
    if _DEFAULT_PARKED is None:
        _DEFAULT_PARKED = load_parked_patterns(None)
    return _DEFAULT_PARKED


def is_parked(snapshot: DomainSnapshot, patterns: Optional[list[re.Pattern]] = None) -> bool:
    """True iff any parked-page pattern matches the snapshot HTML.

    Raises :class:`UnreachableSnapshotError` for non-resolving snapshots:
    "unreachable" is a distinct terminal state, not a parked verdict.
    """
    if not snapshot.resolving:
        raise UnreachableSnapshotError(snapshot.url)
    html = snapshot.html
    return any(p.search(html) for p in (patterns if patterns is not None else _parked_patterns()))


def snapshot_state(snapshot: DomainSnapshot, patterns: Optional[list[re.Pattern]] = None) -> SnapshotState:
    if not snapshot.resolving:
        return SnapshotState.UNREACHABLE
    if is_parked(snapshot, patterns):
        return SnapshotState.PARKED
    return SnapshotState.LIVE


def admit(snapshot: DomainSnapshot, patterns: Optional[list[re.Pattern]] = None) -> bool:
    """Pipeline admission: only live pages (HTTP >= 200, not parked) go on."""
    if snapshot.http_status < 200:
        return False
    return snapshot_state(snapshot, patterns) is SnapshotState.LIVE


# --------------------------------------------------------------------------
# keyword / serp / label file IO


def read_keywords(path) -> list[KeywordSuggestion]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            out.append(KeywordSuggestion(
                text=rec["text"],
                source_domain=rec.get("source_domain", ""),
                category=rec.get("category", ""),
                competition=rec.get("competition", "LOW"),
                monthly_volume=rec.get("monthly_volume"),
            ))
    return out


def write_keywords(path, keywords: Iterable[KeywordSuggestion]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for kw in keywords:
            fh.write(json.dumps({
                "text": kw.text,
                "source_domain": kw.source_domain,
                "category": kw.category,
                "competition": kw.competition,
                "monthly_volume": kw.monthly_volume,
            }, ensure_ascii=False) + "\n")


def serp_to_record(rs: SerpResultSet) -> dict:
    return {
        "query": rs.query,
        "entries": [
            {
                "engine": e.engine,
                "rank": e.rank,
                "url": e.url,
                "root_domain": e.root_domain,
                "title": e.title,
                "description": e.description,
            }
            for e in rs.entries
        ],
    }


def serp_from_record(rec: dict) -> SerpResultSet:
    entries = [
        SerpEntry(
            engine=e["engine"],
            rank=e["rank"],
            url=e["url"],
            title=e.get("title", ""),
            description=e.get("description", ""),
            root_domain=e.get("root_domain", ""),
        )
        for e in rec.get("entries", [])
    ]
    return SerpResultSet(query=rec["query"], entries=entries)


def read_serps(path) -> list[SerpResultSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(serp_from_record(json.loads(line)))
    return out


def write_serps(path, serps: Iterable[SerpResultSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rs in serps:
            fh.write(json.dumps(serp_to_record(rs), ensure_ascii=False) + "\n")


def read_labels(path) -> list[LabeledDomain]:
    """labels.csv: root_domain,label,category (one label per root domain)."""
    seen: dict[str, LabeledDomain] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            dom = row["root_domain"].strip().lower()
            if dom in seen and seen[dom].label != row["label"].strip().upper():
                raise SchemaError(f"conflicting labels for {dom}")
            seen[dom] = LabeledDomain(dom, row["label"].strip().upper(), row.get("category", "").strip())
    return list(seen.values())


def write_labels(path, labels: Iterable[LabeledDomain]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["root_domain", "label", "category"])
        for lab in labels:
            writer.writerow([lab.root_domain, lab.label, lab.category])
