"""Audit log tied to the side chain, and after-the-fact compliance checking.

Every executed query is stored once in the log and once, as a SHA-256 digest,
in a DATA transaction.  Reads are stored exactly as rewritten.  Writes are
stored with their data values replaced by the mask token, so a record can still
be checked after the underlying values are deleted.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional

from .enforcement import (
    ComplianceContext,
    Delete,
    FieldDomain,
    Insert,
    Query,
    Select,
    Update,
    check_compliance,
    check_write_compliance,
    is_masked,
    mask_query,
    parse_query,
    render_query,
)
from .lang import MASKED, Esa, EsaSyntaxError, hash_esa
from .ledger import DataTx, EsadTx, EsarTx, SideChain, address_of, agreements_in_force


class AuditError(ValueError):
    pass


class AuditFormatError(AuditError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DisclosureError(AuditError):
    pass


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    requester: str
    purpose: str
    masked: bool
    text: str
    query_hash: str  # hex
    timestamp: int
    tx_ref: str  # "<chain id>:<block height>"


_RECORD_KEYS = tuple(AuditRecord.__dataclass_fields__)


def stored_form(q: Query, owner: str = "owner") -> str:
    return render_query(mask_query(q, owner))


def query_digest(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


class AuditLog:
    def __init__(self, records: Iterable[AuditRecord] = ()):
        self.records: list[AuditRecord] = list(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r), ensure_ascii=False, separators=(",", ":")) + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "AuditLog":
        records = []
        for n, ln in enumerate(text.split("\n")[:-1] if text else [], start=1):
            try:
                obj = json.loads(ln)
            except json.JSONDecodeError as e:
                raise AuditFormatError(e.msg, n) from None
            if not isinstance(obj, dict) or tuple(obj) != _RECORD_KEYS:
                raise AuditFormatError("unexpected record layout", n)
            types = {"seq": int, "timestamp": int, "masked": bool}
            for k in _RECORD_KEYS:
                want = types.get(k, str)
                if type(obj[k]) is not want:
                    raise AuditFormatError(f"field {k!r} has the wrong type", n)
            records.append(AuditRecord(**obj))
        if text and not text.endswith("\n"):
            raise AuditFormatError("missing final newline", text.count("\n") + 1)
        return cls(records)


def log_query(
    log: AuditLog,
    q: Query,
    ctx: ComplianceContext,
    side: SideChain,
    provider: str,
    timestamp: int,
    owner: str = "owner",
) -> tuple[AuditRecord, DataTx]:
    """Record an executed query on the chain first, then in the log."""
    text = stored_form(q, owner)
    digest = query_digest(text)
    block = side.append_block(
        [DataTx(address_of(provider), address_of(ctx.requester), digest, timestamp)], timestamp, provider
    )
    tx = block.txs[0]
    rec = AuditRecord(
        tx.seq, ctx.requester, ctx.purpose, is_masked(parse_query(text)), text, digest.hex(), timestamp,
        f"{side.chain_id}:{block.height}",
    )
    log.records.append(rec)
    return rec, tx


@dataclass(frozen=True)
class RecordVerdict:
    seq: int
    hash_ok: bool
    compliant: bool
    unverifiable: bool = False
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.hash_ok and self.compliant and not self.unverifiable


@dataclass(frozen=True)
class AuditVerdict:
    records: tuple
    orphan_txs: tuple = ()  # DATA sequence numbers with no record
    problems: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.orphan_txs and not self.problems and all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "records": [dict(asdict(r), passed=r.passed) for r in self.records],
            "orphan_txs": list(self.orphan_txs),
            "problems": list(self.problems),
        }


def _raw_write_values(q: Query, owner: str) -> bool:
    if not isinstance(q, (Insert, Update)):
        return False
    return any(c != owner and v is not None and v is not MASKED for c, v in q.assignments)


def _in_force(side: SideChain, seq: int, esa_store: Mapping[bytes, Esa]) -> tuple[list[Esa], str]:
    out = []
    for h in sorted(agreements_in_force(side, seq)):
        esa = esa_store.get(h)
        if esa is None:
            return [], f"agreement {h.hex()} not revealed"
        if hash_esa(esa) != h:
            return [], f"agreement {h.hex()} does not match its ledger hash"
        out.append(esa)
    return out, ""


def verify_audit(
    log: AuditLog,
    side: SideChain,
    esa_store: Mapping[bytes, Esa],
    owners: Mapping[str, str] | None = None,
    domains: Mapping[str, Mapping[str, FieldDomain]] | None = None,
) -> AuditVerdict:
    """Check every record against its DATA transaction and the agreements in force then.

    ``owners`` maps table names to their owner column (default ``owner``) and
    ``domains`` gives optional per-table value domains for the entailment check.
    """
    owners = owners or {}
    domains = domains or {}
    data = {tx.seq: tx for tx in side.transactions() if isinstance(tx, DataTx)}
    problems = []
    seen: set[int] = set()
    verdicts = []
    last = -1
    for rec in log.records:
        if rec.seq in seen:
            problems.append(f"sequence {rec.seq} recorded twice")
        elif rec.seq < last:
            problems.append(f"sequence {rec.seq} logged after {last}")
        seen.add(rec.seq)
        last = max(last, rec.seq)
        tx = data.get(rec.seq)
        if tx is None:
            verdicts.append(RecordVerdict(rec.seq, False, False, reason="no DATA transaction at this sequence"))
            continue
        block, _ = side.locate(rec.seq)
        digest = query_digest(rec.text)
        hash_ok = (
            digest == tx.query_hash
            and rec.query_hash == digest.hex()
            and tx.requester == address_of(rec.requester)
            and rec.timestamp == tx.time
            and rec.tx_ref == f"{side.chain_id}:{block.height}"
        )
        try:
            q = parse_query(rec.text)
        except EsaSyntaxError as e:
            verdicts.append(RecordVerdict(rec.seq, hash_ok, False, reason=f"unparseable query: {e}"))
            continue
        owner = owners.get(q.table, "owner")
        if _raw_write_values(q, owner) or rec.masked != is_masked(q):
            verdicts.append(RecordVerdict(rec.seq, hash_ok, False, reason="write record exposes values"))
            continue
        agreements, why = _in_force(side, rec.seq, esa_store)
        if why:
            verdicts.append(RecordVerdict(rec.seq, hash_ok, False, unverifiable=True, reason=why))
            continue
        if isinstance(q, Select):
            ctx = ComplianceContext(rec.requester, rec.purpose, agreements)
            ok = check_compliance(q, ctx, owner, domains.get(q.table))
        elif isinstance(q, Delete):
            ok = True
        else:
            ok = check_write_compliance(q, agreements, owner, rec.requester, rec.purpose)
        verdicts.append(RecordVerdict(rec.seq, hash_ok, ok, reason="" if ok else "not entailed by agreements in force"))
    orphans = tuple(sorted(set(data) - seen))
    return AuditVerdict(tuple(verdicts), orphans, tuple(problems))


@dataclass(frozen=True)
class Disclosure:
    esa: Esa
    esa_hash: str
    deployed_seq: int
    revoked_seq: Optional[int] = None


def reveal_agreements(side: SideChain, esa_store: Mapping[bytes, Esa], consumer: str) -> list[Disclosure]:
    """Every agreement deployed for ``consumer``, in ledger order, checked against its hash."""
    who = address_of(consumer)
    revoked: dict[bytes, int] = {}
    deployed: list[EsadTx] = []
    for tx in side.transactions():
        if isinstance(tx, EsadTx) and tx.owner == who:
            deployed.append(tx)
        elif isinstance(tx, EsarTx):
            revoked.setdefault(tx.esa_hash, tx.seq)
    if not deployed:
        raise DisclosureError(f"no agreement was deployed for {consumer!r}")
    bundle = []
    for tx in deployed:
        esa = esa_store.get(tx.esa_hash)
        if esa is None or hash_esa(esa) != tx.esa_hash or esa.consumer != consumer:
            raise DisclosureError(f"stored agreement for {tx.esa_hash.hex()} does not match the ledger")
        end = revoked.get(tx.esa_hash)
        bundle.append(Disclosure(esa, tx.esa_hash.hex(), tx.seq, end if end is not None and end > tx.seq else None))
    return bundle
