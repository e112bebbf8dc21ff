"""Side chains of hash-linked blocks and a base chain of anchored roots.

Canonical transaction bytes: a type tag followed by length-prefixed fields in
declaration order (4-byte big-endian length, then the field bytes; integers are
8-byte big-endian signed, booleans one byte, digests raw).
"""
from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from .merkle import merkle_root

ZERO_HASH = bytes(32)


class LedgerError(ValueError):
    pass


class ChainFormatError(LedgerError):
    """Raised on malformed export lines; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def address_of(name: str) -> str:
    """Ledger address for a party; the name itself never reaches the chain."""
    return "0x" + hashlib.sha256(name.encode("utf-8")).hexdigest()[:40]


def _field(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


def _int(v: int) -> bytes:
    return _field(struct.pack(">q", v))


def _str(v: str) -> bytes:
    return _field(v.encode("utf-8"))


def _bool(v: bool) -> bytes:
    return _field(b"\x01" if v else b"\x00")


@dataclass(frozen=True)
class EsadTx:
    owner: str
    provider: str
    esa_hash: bytes
    deployed_at: int
    valid: bool = True
    seq: int = -1

    TAG = b"ESAD"

    def encode(self) -> bytes:
        return (
            self.TAG
            + _int(self.seq)
            + _str(self.owner)
            + _str(self.provider)
            + _field(self.esa_hash)
            + _int(self.deployed_at)
            + _bool(self.valid)
        )


@dataclass(frozen=True)
class DataTx:
    provider: str
    requester: str
    query_hash: bytes
    time: int
    seq: int = -1

    TAG = b"DATA"

    def encode(self) -> bytes:
        return self.TAG + _int(self.seq) + _str(self.provider) + _str(self.requester) + _field(self.query_hash) + _int(self.time)


@dataclass(frozen=True)
class EsarTx:
    esa_hash: bytes
    time: int
    valid: bool = False
    seq: int = -1

    TAG = b"ESAR"

    def encode(self) -> bytes:
        return self.TAG + _int(self.seq) + _field(self.esa_hash) + _bool(self.valid) + _int(self.time)


LedgerTx = Union[EsadTx, DataTx, EsarTx]


def block_hash(prev_hash: bytes, root: bytes, timestamp: int, proposer: str) -> bytes:
    return hashlib.sha256(prev_hash + root + _int(timestamp) + _str(proposer)).digest()


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int  # simulated milliseconds
    proposer: str
    txs: tuple
    block_hash: bytes


class SideChain:
    """Append-only, single-writer chain.  Sequence numbers run across blocks."""

    def __init__(self, chain_id: str = "side-0", genesis_time: int = 0):
        self.chain_id = chain_id
        root = merkle_root([])
        # the genesis proposer slot carries the chain id so it is covered by a hash
        self.blocks: list[Block] = [
            Block(0, ZERO_HASH, root, genesis_time, chain_id, (), block_hash(ZERO_HASH, root, genesis_time, chain_id))
        ]
        self._by_seq: dict[int, tuple[int, int]] = {}
        self._deployed: set[bytes] = set()

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.head.height

    @property
    def next_seq(self) -> int:
        return len(self._by_seq)

    def snapshot(self, height: int | None = None) -> tuple:
        return tuple(self.blocks if height is None else self.blocks[: height + 1])

    def locate(self, seq: int) -> tuple[Block, LedgerTx]:
        try:
            h, i = self._by_seq[seq]
        except KeyError:
            raise LedgerError(f"no transaction with sequence number {seq}") from None
        block = self.blocks[h]
        return block, block.txs[i]

    def transactions(self) -> Iterable[LedgerTx]:
        for b in self.blocks:
            yield from b.txs

    def append_block(self, txs: Iterable[LedgerTx], timestamp: int, proposer: str) -> Block:
        prev = self.head
        if timestamp < prev.timestamp:
            raise LedgerError(f"timestamp {timestamp} precedes previous block time {prev.timestamp}")
        numbered = []
        deployed = set(self._deployed)
        for i, tx in enumerate(txs):
            if isinstance(tx, EsarTx) and tx.esa_hash not in deployed:
                raise LedgerError("revocation must follow a deployment of the same agreement on this chain")
            if isinstance(tx, EsadTx):
                deployed.add(tx.esa_hash)
            numbered.append(replace(tx, seq=self.next_seq + i))
        root = merkle_root(numbered)
        block = Block(
            prev.height + 1, prev.block_hash, root, timestamp, proposer, tuple(numbered),
            block_hash(prev.block_hash, root, timestamp, proposer),
        )
        self._attach(block)
        self._deployed = deployed
        return block

    def _attach(self, block: Block) -> None:
        for i, tx in enumerate(block.txs):
            self._by_seq[tx.seq] = (block.height, i)
        self.blocks.append(block)


def verify_chain(chain: SideChain) -> bool:
    blocks = chain.blocks
    if not blocks:
        return False
    g = blocks[0]
    if g.height != 0 or g.prev_hash != ZERO_HASH or g.txs or g.proposer != chain.chain_id:
        return False
    expected_seq = 0
    prev: Optional[Block] = None
    for b in blocks:
        if prev is not None:
            if b.height != prev.height + 1 or b.prev_hash != prev.block_hash or b.timestamp < prev.timestamp:
                return False
        if b.merkle_root != merkle_root(b.txs):
            return False
        if b.block_hash != block_hash(b.prev_hash, b.merkle_root, b.timestamp, b.proposer):
            return False
        for tx in b.txs:
            if tx.seq != expected_seq:
                return False
            expected_seq += 1
        prev = b
    return True


# base chain


@dataclass(frozen=True)
class AnchorRecord:
    chain_id: str
    side_height: int
    root: bytes
    base_time: int
    prev_hash: bytes
    record_hash: bytes


def anchor_hash(prev_hash: bytes, chain_id: str, side_height: int, root: bytes, base_time: int) -> bytes:
    return hashlib.sha256(prev_hash + _str(chain_id) + _int(side_height) + _field(root) + _int(base_time)).digest()


class BaseChain:
    """Trusted append-only log of side-chain roots, itself hash-linked."""

    def __init__(self, commit_delay: int = 15_000):
        self.commit_delay = commit_delay
        self.records: list[AnchorRecord] = []

    def append(self, chain_id: str, side_height: int, root: bytes, base_time: int) -> AnchorRecord:
        prev = self.records[-1].record_hash if self.records else ZERO_HASH
        rec = AnchorRecord(chain_id, side_height, root, base_time, prev, anchor_hash(prev, chain_id, side_height, root, base_time))
        self.records.append(rec)
        return rec

    def anchored_height(self, chain_id: str) -> int:
        heights = [r.side_height for r in self.records if r.chain_id == chain_id]
        return max(heights) if heights else -1

    def anchor_for(self, chain_id: str, side_height: int) -> Optional[AnchorRecord]:
        for r in self.records:
            if r.chain_id == chain_id and r.side_height == side_height:
                return r
        return None


def anchor(side: SideChain, base: BaseChain, now: int) -> list[AnchorRecord]:
    """Anchor every not-yet-anchored side block; an empty list means nothing to do."""
    start = base.anchored_height(side.chain_id) + 1
    stamp = now + base.commit_delay
    return [base.append(side.chain_id, b.height, b.merkle_root, stamp) for b in side.blocks[start:]]


def verify_anchors(side: SideChain, base: BaseChain, complete: bool = False) -> bool:
    prev = ZERO_HASH
    last_height = -1
    for r in base.records:
        if r.prev_hash != prev or r.record_hash != anchor_hash(prev, r.chain_id, r.side_height, r.root, r.base_time):
            return False
        prev = r.record_hash
        if r.chain_id != side.chain_id:
            continue
        if r.side_height <= last_height or r.side_height > side.height:
            return False
        if side.blocks[r.side_height].merkle_root != r.root:
            return False
        last_height = r.side_height
    if complete:
        heights = [r.side_height for r in base.records if r.chain_id == side.chain_id]
        return heights == list(range(side.height + 1))
    return True


def interchain_latency(seq: int, side: SideChain, base: BaseChain) -> Optional[int]:
    """Milliseconds from side commit to base anchoring; None while pending."""
    block, _ = side.locate(seq)
    rec = base.anchor_for(side.chain_id, block.height)
    if rec is None:
        return None
    return rec.base_time - block.timestamp


def agreements_in_force(side: SideChain, upto_seq: int) -> set[bytes]:
    """Agreement digests deployed before ``upto_seq`` and not revoked at or before it."""
    live: set[bytes] = set()
    for tx in side.transactions():
        if tx.seq > upto_seq:
            break
        if isinstance(tx, EsadTx) and tx.seq < upto_seq:
            live.add(tx.esa_hash)
        elif isinstance(tx, EsarTx):
            live.discard(tx.esa_hash)
    return live


# line-delimited export

_HEX64 = re.compile(r"[0-9a-f]{64}\Z")
_TX_KEYS = {
    "esad": ("type", "seq", "owner", "provider", "esa_hash", "deployed_at", "valid"),
    "data": ("type", "seq", "provider", "requester", "query_hash", "time"),
    "esar": ("type", "seq", "esa_hash", "valid", "time"),
}
_BLOCK_KEYS = ("height", "prev_hash", "merkle_root", "timestamp", "proposer", "block_hash", "txs")
_ANCHOR_KEYS = ("chain_id", "side_height", "root", "base_time", "prev_hash", "record_hash")


def tx_record(tx: LedgerTx) -> dict:
    if isinstance(tx, EsadTx):
        return {"type": "esad", "seq": tx.seq, "owner": tx.owner, "provider": tx.provider,
                "esa_hash": tx.esa_hash.hex(), "deployed_at": tx.deployed_at, "valid": tx.valid}
    if isinstance(tx, DataTx):
        return {"type": "data", "seq": tx.seq, "provider": tx.provider, "requester": tx.requester,
                "query_hash": tx.query_hash.hex(), "time": tx.time}
    return {"type": "esar", "seq": tx.seq, "esa_hash": tx.esa_hash.hex(), "valid": tx.valid, "time": tx.time}


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def export_chain(chain: SideChain) -> str:
    lines = [_dumps({"chain_id": chain.chain_id})]
    for b in chain.blocks:
        lines.append(_dumps({
            "height": b.height, "prev_hash": b.prev_hash.hex(), "merkle_root": b.merkle_root.hex(),
            "timestamp": b.timestamp, "proposer": b.proposer, "block_hash": b.block_hash.hex(),
            "txs": [tx_record(t) for t in b.txs],
        }))
    return "\n".join(lines) + "\n"


def _strict(obj, keys: tuple, line: int) -> dict:
    if not isinstance(obj, dict) or tuple(obj.keys()) != keys:
        raise ChainFormatError(f"expected keys {list(keys)}", line)
    return obj


def _int_field(obj: dict, key: str, line: int) -> int:
    v = obj[key]
    if type(v) is not int:
        raise ChainFormatError(f"{key} must be an integer", line)
    return v


def _str_field(obj: dict, key: str, line: int) -> str:
    v = obj[key]
    if type(v) is not str:
        raise ChainFormatError(f"{key} must be a string", line)
    return v


def _bool_field(obj: dict, key: str, line: int) -> bool:
    v = obj[key]
    if type(v) is not bool:
        raise ChainFormatError(f"{key} must be a boolean", line)
    return v


def _hex_field(obj: dict, key: str, line: int) -> bytes:
    v = obj[key]
    if type(v) is not str or not _HEX64.match(v):
        raise ChainFormatError(f"{key} must be 64 lowercase hex digits", line)
    return bytes.fromhex(v)


def _tx_from(obj, line: int) -> LedgerTx:
    kind = obj.get("type") if isinstance(obj, dict) else None
    if kind not in _TX_KEYS:
        raise ChainFormatError(f"unknown transaction type {kind!r}", line)
    _strict(obj, _TX_KEYS[kind], line)
    seq = _int_field(obj, "seq", line)
    if kind == "esad":
        return EsadTx(_str_field(obj, "owner", line), _str_field(obj, "provider", line), _hex_field(obj, "esa_hash", line),
                      _int_field(obj, "deployed_at", line), _bool_field(obj, "valid", line), seq)
    if kind == "data":
        return DataTx(_str_field(obj, "provider", line), _str_field(obj, "requester", line),
                      _hex_field(obj, "query_hash", line), _int_field(obj, "time", line), seq)
    return EsarTx(_hex_field(obj, "esa_hash", line), _int_field(obj, "time", line), _bool_field(obj, "valid", line), seq)


def _lines(text: str) -> list[str]:
    if not text.endswith("\n"):
        raise ChainFormatError("missing final newline", text.count("\n") + 1)
    lines = text[:-1].split("\n")
    for i, ln in enumerate(lines, start=1):
        if not ln:
            raise ChainFormatError("empty line", i)
    return lines


def _load(ln: str, lineno: int):
    try:
        return json.loads(ln)
    except ValueError as exc:
        raise ChainFormatError(f"invalid JSON: {exc}", lineno) from None


def import_chain(text: str) -> SideChain:
    """Parse an export without recomputing anything; run :func:`verify_chain` after."""
    lines = _lines(text)
    head = _strict(_load(lines[0], 1), ("chain_id",), 1)
    chain = SideChain(_str_field(head, "chain_id", 1))
    chain.blocks.clear()
    chain._by_seq.clear()
    for lineno, ln in enumerate(lines[1:], start=2):
        obj = _strict(_load(ln, lineno), _BLOCK_KEYS, lineno)
        if type(obj["txs"]) is not list:
            raise ChainFormatError("txs must be a list", lineno)
        txs = tuple(_tx_from(t, lineno) for t in obj["txs"])
        block = Block(
            _int_field(obj, "height", lineno), _hex_field(obj, "prev_hash", lineno), _hex_field(obj, "merkle_root", lineno),
            _int_field(obj, "timestamp", lineno), _str_field(obj, "proposer", lineno), txs, _hex_field(obj, "block_hash", lineno),
        )
        for i, tx in enumerate(block.txs):
            if tx.seq in chain._by_seq:
                raise ChainFormatError(f"duplicate sequence number {tx.seq}", lineno)
            chain._by_seq[tx.seq] = (len(chain.blocks), i)
        chain.blocks.append(block)
    if not chain.blocks:
        raise ChainFormatError("chain has no genesis block", 1)
    chain._deployed = {t.esa_hash for t in chain.transactions() if isinstance(t, EsadTx)}
    return chain


def export_base(base: BaseChain) -> str:
    lines = []
    for r in base.records:
        lines.append(_dumps({"chain_id": r.chain_id, "side_height": r.side_height, "root": r.root.hex(),
                             "base_time": r.base_time, "prev_hash": r.prev_hash.hex(), "record_hash": r.record_hash.hex()}))
    return "".join(ln + "\n" for ln in lines)


def import_base(text: str, commit_delay: int = 15_000) -> BaseChain:
    base = BaseChain(commit_delay)
    if text == "":
        return base
    for lineno, ln in enumerate(_lines(text), start=1):
        obj = _strict(_load(ln, lineno), _ANCHOR_KEYS, lineno)
        base.records.append(AnchorRecord(
            _str_field(obj, "chain_id", lineno), _int_field(obj, "side_height", lineno), _hex_field(obj, "root", lineno),
            _int_field(obj, "base_time", lineno), _hex_field(obj, "prev_hash", lineno), _hex_field(obj, "record_hash", lineno),
        ))
    return base
