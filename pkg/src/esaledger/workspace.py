"""Directory-backed provider state: data, agreements, ledger and audit log.

Layout::

    config.json       provider name, logical clock, rejected-write counter
    schema.json       {"tables": [{"name", "owner", "columns": [[name, kind], ...]}]}
    data/<table>.csv  one file per table, header row first
    esas/<hash>.esa   canonical text of every deployed agreement
    chain.jsonl       side chain export
    anchors.jsonl     base-chain anchor records
    audit.jsonl       audit log

The logical clock advances one second per ledger operation so that runs are
reproducible.
"""
from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .audit import AuditFormatError, AuditLog, AuditRecord, AuditVerdict, log_query, verify_audit
from .enforcement import (
    ComplianceContext,
    Database,
    Delete,
    Query,
    QueryError,
    ResultSet,
    Schema,
    Select,
    apply_deletion,
    apply_revocation,
    execute,
    parse_query,
    rewrite_select,
    rewrite_write,
)
from .lang import Esa, EsaSyntaxError, PredicateError, hash_esa, parse_esa, render_esa
from .ledger import (
    Block,
    ChainFormatError,
    EsadTx,
    EsarTx,
    SideChain,
    address_of,
    agreements_in_force,
    anchor,
    export_base,
    export_chain,
    import_base,
    import_chain,
    verify_anchors,
    verify_chain,
)

TICK_MS = 1000
REVOCATION_PURPOSE = "revocation"


class WorkspaceError(Exception):
    """Bad input or unusable workspace files."""


class RejectedWrite(Exception):
    """A write with no applicable agreement; it was neither run nor logged."""


@dataclass
class QueryOutcome:
    query: Query
    result: Optional[ResultSet] = None
    count: int = 0
    record: Optional[AuditRecord] = None


@dataclass
class RevocationOutcome:
    esar: EsarTx
    queries: list = field(default_factory=list)
    records: list = field(default_factory=list)
    esad: Optional[EsadTx] = None


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise WorkspaceError(f"{path}: missing; run 'urm init' first") from None


def _load_schema(path: Path) -> list[Schema]:
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise WorkspaceError(f"{path}:{e.lineno}: {e.msg}") from None
    try:
        return [
            Schema(t["name"], tuple(tuple(c) for c in t["columns"]), t.get("owner", "owner"))
            for t in doc["tables"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise WorkspaceError(f"{path}: bad schema: {e}") from None


class Workspace:
    def __init__(self, root):
        self.root = Path(root)
        cfg_path = self.root / "config.json"
        try:
            self.config = json.loads(_read(cfg_path))
        except json.JSONDecodeError as e:
            raise WorkspaceError(f"{cfg_path}:{e.lineno}: {e.msg}") from None
        self.provider = self.config["provider"]
        self.schemas = {s.table: s for s in _load_schema(self.root / "schema.json")}
        self.db = Database(self.schemas.values())
        for s in self.schemas.values():
            path = self.root / "data" / f"{s.table}.csv"
            if path.exists():
                try:
                    self.db.load_csv(s, path)
                except (ValueError, PredicateError) as e:
                    raise WorkspaceError(str(e)) from None
        self.side = self._load(self.root / "chain.jsonl", import_chain)
        self.base = self._load(self.root / "anchors.jsonl", import_base)
        self.log = self._load(self.root / "audit.jsonl", AuditLog.from_jsonl)
        self.esa_store = self._load_esas()

    @staticmethod
    def _load(path: Path, parser):
        try:
            return parser(_read(path))
        except (ChainFormatError, AuditFormatError) as e:
            raise WorkspaceError(f"{path}:{e.line}: {str(e).split(': ', 1)[-1]}") from None

    def _load_esas(self) -> dict[bytes, Esa]:
        store = {}
        for path in sorted((self.root / "esas").glob("*.esa")):
            try:
                key = bytes.fromhex(path.stem)
                store[key] = parse_esa(path.read_text(encoding="utf-8"))
            except ValueError as e:
                raise WorkspaceError(f"{path}: {e}") from None
        return store

    @classmethod
    def init(cls, root, provider: str, schema_file, data: dict | None = None) -> "Workspace":
        root = Path(root)
        if (root / "config.json").exists():
            raise WorkspaceError(f"{root} is already a workspace")
        schemas = _load_schema(Path(schema_file))
        known = {s.table: s for s in schemas}
        for table in data or {}:
            if table not in known:
                raise WorkspaceError(f"no table {table!r} in {schema_file}")
        (root / "data").mkdir(parents=True, exist_ok=True)
        (root / "esas").mkdir(exist_ok=True)
        shutil.copyfile(schema_file, root / "schema.json")
        db = Database(schemas)
        for table, path in (data or {}).items():
            try:
                db.load_csv(known[table], path)
            except (ValueError, PredicateError) as e:
                raise WorkspaceError(str(e)) from None
        for s in schemas:
            db.dump_csv(s.table, root / "data" / f"{s.table}.csv")
        (root / "config.json").write_text(
            json.dumps({"provider": provider, "clock": 0, "rejected_writes": 0}, indent=2) + "\n", encoding="utf-8"
        )
        (root / "chain.jsonl").write_text(export_chain(SideChain()), encoding="utf-8")
        (root / "anchors.jsonl").write_text("", encoding="utf-8")
        (root / "audit.jsonl").write_text("", encoding="utf-8")
        return cls(root)

    # state helpers

    def tick(self) -> int:
        self.config["clock"] += TICK_MS
        return self.config["clock"]

    def save(self) -> None:
        anchor(self.side, self.base, self.config["clock"])
        for table in self.schemas:
            self.db.dump_csv(table, self.root / "data" / f"{table}.csv")
        (self.root / "chain.jsonl").write_text(export_chain(self.side), encoding="utf-8")
        (self.root / "anchors.jsonl").write_text(export_base(self.base), encoding="utf-8")
        (self.root / "audit.jsonl").write_text(self.log.to_jsonl(), encoding="utf-8")
        (self.root / "config.json").write_text(json.dumps(self.config, indent=2) + "\n", encoding="utf-8")

    def _check_ledger(self) -> None:
        if not verify_chain(self.side):
            raise WorkspaceError(f"{self.root / 'chain.jsonl'}: hash chain does not verify")

    def in_force(self) -> list[Esa]:
        out = []
        for h in sorted(agreements_in_force(self.side, self.side.next_seq)):
            if h not in self.esa_store:
                raise WorkspaceError(f"agreement {h.hex()} missing from {self.root / 'esas'}")
            out.append(self.esa_store[h])
        return out

    def _append(self, txs) -> Block:
        now = self.tick()
        return self.side.append_block(txs, now, self.provider)

    def _store(self, esa: Esa) -> bytes:
        h = hash_esa(esa)
        (self.root / "esas" / f"{h.hex()}.esa").write_text(render_esa(esa) + "\n", encoding="utf-8")
        self.esa_store[h] = esa
        return h

    def _parse_new(self, text: str) -> Esa:
        try:
            esa = parse_esa(text)
        except (EsaSyntaxError, PredicateError, ValueError) as e:
            raise WorkspaceError(f"cannot parse agreement: {e}") from None
        if esa.domain not in self.schemas:
            raise WorkspaceError(f"agreement refers to unknown table {esa.domain!r}")
        schema = self.schemas[esa.domain]
        try:
            for f in esa.fields:
                schema.kind(f)
            schema.check_predicate(esa.row)
        except (QueryError, PredicateError) as e:
            raise WorkspaceError(str(e)) from None
        if hash_esa(esa) in agreements_in_force(self.side, self.side.next_seq):
            raise WorkspaceError("an identical agreement is already in force")
        return esa

    def _esad(self, esa: Esa, h: bytes, now: int) -> EsadTx:
        return EsadTx(address_of(esa.consumer), address_of(self.provider), h, now)

    # operations

    def deploy(self, text: str) -> tuple[EsadTx, Esa]:
        self._check_ledger()
        esa = self._parse_new(text)
        h = self._store(esa)
        block = self._append([self._esad(esa, h, self.config["clock"] + TICK_MS)])
        self.save()
        return block.txs[0], esa

    def _resolve(self, hash_hex: str) -> tuple[bytes, Esa]:
        try:
            h = bytes.fromhex(hash_hex)
        except ValueError:
            raise WorkspaceError(f"not a hex digest: {hash_hex!r}") from None
        if h not in agreements_in_force(self.side, self.side.next_seq):
            raise WorkspaceError(f"no agreement {hash_hex} is in force")
        if h not in self.esa_store:
            raise WorkspaceError(f"agreement {hash_hex} missing from {self.root / 'esas'}")
        return h, self.esa_store[h]

    def revoke(self, hash_hex: str, replacement: str | None = None) -> RevocationOutcome:
        """Revoke an agreement; with ``replacement`` deploy its successor in the same block."""
        self._check_ledger()
        h, old = self._resolve(hash_hex)
        new = self._parse_new(replacement) if replacement is not None else None
        now = self.config["clock"] + TICK_MS
        txs = [EsarTx(h, now)]
        if new is not None:
            txs.append(self._esad(new, self._store(new), now))
        block = self._append(txs)
        out = RevocationOutcome(block.txs[0], esad=block.txs[1] if new is not None else None)
        remaining = [e for e in self.in_force() if e.consumer == old.consumer]
        ctx = ComplianceContext(self.provider, REVOCATION_PURPOSE)
        for q in apply_revocation(self.db, old.consumer, remaining, old):
            rec, _ = log_query(self.log, q, ctx, self.side, self.provider, self.tick(), self._owner(q.table))
            out.queries.append(q)
            out.records.append(rec)
        self.save()
        return out

    def _owner(self, table: str) -> str:
        if table not in self.schemas:
            raise WorkspaceError(f"unknown table {table!r}")
        return self.schemas[table].owner

    def query(self, requester: str, purpose: str, text: str) -> QueryOutcome:
        self._check_ledger()
        try:
            q = parse_query(text)
        except (EsaSyntaxError, PredicateError, ValueError) as e:
            raise WorkspaceError(f"cannot parse query: {e}") from None
        owner = self._owner(q.table)
        agreements = self.in_force()
        try:
            if isinstance(q, Select):
                ctx = ComplianceContext(requester, purpose, agreements)
                final: Query = rewrite_select(q, ctx, owner)
                result = execute(self.db, final)
                out = QueryOutcome(final, result=result, count=len(result))
            elif isinstance(q, Delete):
                final = q
                out = QueryOutcome(final, count=apply_deletion(self.db, q))
            else:
                decision = rewrite_write(q, agreements, owner, requester, purpose)
                if not decision.executed:
                    self.config["rejected_writes"] = self.config.get("rejected_writes", 0) + 1
                    (self.root / "config.json").write_text(json.dumps(self.config, indent=2) + "\n", encoding="utf-8")
                    raise RejectedWrite("no write agreement covers this row; nothing was stored or logged")
                final = decision.query
                out = QueryOutcome(final, count=execute(self.db, final))
        except (QueryError, PredicateError) as e:
            raise WorkspaceError(str(e)) from None
        out.record, _ = log_query(
            self.log, final, ComplianceContext(requester, purpose), self.side, self.provider, self.tick(), owner
        )
        self.save()
        return out

    def audit(self) -> AuditVerdict:
        verdict = verify_audit(
            self.log,
            self.side,
            self.esa_store,
            {t: s.owner for t, s in self.schemas.items()},
            {t: s.domains() for t, s in self.schemas.items()},
        )
        problems = list(verdict.problems)
        if not verify_chain(self.side):
            problems.append("side chain hashes do not verify")
        if not verify_anchors(self.side, self.base):
            problems.append("anchor records do not match the side chain")
        return AuditVerdict(verdict.records, verdict.orphan_txs, tuple(problems))


