"""Shared generators and brute-force oracles for the test-suite."""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np
from hypothesis import strategies as st

from esaledger.audit import AuditLog, query_digest
from esaledger.consensus import TimeoutConfig
from esaledger.enforcement import (
    ComplianceContext,
    Database,
    Delete,
    FieldDomain,
    Insert,
    Schema,
    Select,
    Update,
    parse_query,
    render_query,
)
from esaledger.lang import FALSE, TRUE, And, Atom, Const, Esa, Or, eval_predicate, hash_esa
from esaledger.ledger import (
    BaseChain,
    ChainFormatError,
    DataTx,
    EsadTx,
    EsarTx,
    SideChain,
    address_of,
    anchor,
    import_base,
    import_chain,
    verify_anchors,
    verify_chain,
)
from esaledger.netsim import Behavior, BlockRecord, CpuModel, DelayModel, SimConfig, Trace
from esaledger.workspace import RejectedWrite, Workspace

OPS = ("=", "!=", "<", "<=", ">", ">=")
SMALL = range(8)


def int_atoms(fields=("x", "y"), lo=-1, hi=8):
    return st.builds(Atom, st.sampled_from(fields), st.sampled_from(OPS), st.integers(lo, hi))


def predicates(fields=("x", "y"), max_depth=3, lo=-1, hi=8):
    leaves = st.one_of(int_atoms(fields, lo, hi), st.sampled_from([TRUE, FALSE]))

    def extend(children):
        return st.one_of(
            st.lists(children, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
            st.lists(children, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
        )

    return st.recursive(leaves, extend, max_leaves=9).filter(lambda p: _depth(p) <= max_depth)


def _depth(p) -> int:
    if isinstance(p, (And, Or)):
        return 1 + max(_depth(q) for q in p.items)
    return 0


def random_predicate(rng: random.Random, fields=("x", "y"), depth=3, lo=-1, hi=8):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.08:
            return Const(rng.random() < 0.5)
        return Atom(rng.choice(fields), rng.choice(OPS), rng.randint(lo, hi))
    items = tuple(random_predicate(rng, fields, depth - 1, lo, hi) for _ in range(rng.randint(2, 3)))
    return And(items) if rng.random() < 0.5 else Or(items)


def assignments(fields=("x", "y"), values=SMALL, nullable=False):
    pool = list(values) + ([None] if nullable else [])
    for combo in itertools.product(pool, repeat=len(fields)):
        yield dict(zip(fields, combo))


def brute_entails(pi, phi, fields=("x", "y"), values=SMALL, nullable=False) -> bool:
    return all(
        eval_predicate(phi, a) for a in assignments(fields, values, nullable) if eval_predicate(pi, a)
    )


def small_domains(fields=("x", "y"), nullable=False) -> dict:
    return {f: FieldDomain("int", 0, 7, nullable) for f in fields}


# random databases, agreements and queries over a small table

OWNERS = ("u0", "u1", "u2", "u3")
DATA_FIELDS = ("a", "b", "c")
TABLE = Schema("T", (("owner", "text"), ("a", "int"), ("b", "int"), ("c", "bool")))
NUMS = range(6)


def table_domains(nullable=True) -> dict:
    return {
        "owner": FieldDomain("text", nullable=nullable),
        "a": FieldDomain("int", 0, 5, nullable),
        "b": FieldDomain("int", 0, 5, nullable),
        "c": FieldDomain("bool", nullable=nullable),
    }


def _maybe_null(rng, value, p=0.1):
    return None if rng.random() < p else value


def random_database(rng: random.Random, max_rows=100) -> Database:
    rows = [
        {
            "owner": rng.choice(OWNERS),
            "a": _maybe_null(rng, rng.choice(NUMS)),
            "b": _maybe_null(rng, rng.choice(NUMS)),
            "c": _maybe_null(rng, rng.random() < 0.5),
        }
        for _ in range(rng.randint(0, max_rows))
    ]
    db = Database()
    db.add_table(TABLE, rows)
    return db


def random_row_predicate(rng: random.Random, depth=2):
    if depth == 0 or rng.random() < 0.45:
        roll = rng.random()
        if roll < 0.1:
            return TRUE
        if roll < 0.25:
            return Atom("c", rng.choice(("=", "!=")), rng.choice((True, False, None)))
        if roll < 0.32:
            return Atom("owner", rng.choice(("=", "!=")), rng.choice(OWNERS))
        return Atom(rng.choice(("a", "b")), rng.choice(OPS), rng.randint(-1, 6))
    items = tuple(random_row_predicate(rng, depth - 1) for _ in range(rng.randint(2, 3)))
    return And(items) if rng.random() < 0.6 else Or(items)


def random_context(rng: random.Random):
    req = Atom("requester", "=", rng.choice(("r0", "r1")))
    pur = Atom("purpose", "=", rng.choice(("p0", "p1")))
    return rng.choice((TRUE, req, pur, And((req, pur)), Or((req, pur))))


def random_agreements(rng: random.Random, max_count=5) -> list:
    out = []
    for _ in range(rng.randint(0, max_count)):
        fields = frozenset(f for f in DATA_FIELDS if rng.random() < 0.5) or frozenset({rng.choice(DATA_FIELDS)})
        out.append(Esa(rng.choice(OWNERS), random_context(rng), "T", fields, random_row_predicate(rng)))
    return out


def random_select(rng: random.Random) -> Select:
    fields = tuple(f for f in ("owner",) + DATA_FIELDS if rng.random() < 0.5) or (rng.choice(DATA_FIELDS),)
    where = TRUE if rng.random() < 0.3 else random_row_predicate(rng)
    return Select(fields, "T", where)


def random_context_for(rng: random.Random, agreements) -> ComplianceContext:
    return ComplianceContext(rng.choice(("r0", "r1")), rng.choice(("p0", "p1")), agreements)


def expected_rows(db: Database, q: Select, ctx: ComplianceContext) -> tuple:
    """Per-row reference semantics for an agreement-restricted SELECT."""
    granted = [a for a in ctx.agreements if a.domain == q.table and a.allows(ctx.requester, ctx.purpose)]
    exposed = set().union(*(a.fields for a in granted)) if granted else set()
    columns = tuple(f for f in q.fields if f in exposed) or q.fields
    rows = []
    for row in db.rows(q.table):
        if not eval_predicate(q.where, row):
            continue
        covering = [a for a in granted if row["owner"] == a.consumer and eval_predicate(a.row, row)]
        if not covering:
            continue
        rows.append({f: row[f] if any(f in a.fields for a in covering) else None for f in columns})
    return columns, rows


def table_assignments():
    for owner in OWNERS + ("zz", None):
        for a in list(NUMS) + [None]:
            for b in list(NUMS) + [None]:
                for c in (True, False, None):
                    yield {"owner": owner, "a": a, "b": b, "c": c}


_TABLE_COLUMNS = None


def _table_columns():
    """Every row of the bounded table, column by column: (values, is-null) pairs."""
    global _TABLE_COLUMNS
    if _TABLE_COLUMNS is None:
        rows = list(table_assignments())
        _TABLE_COLUMNS = {
            f: (np.array([r[f] for r in rows], dtype=object), np.array([r[f] is None for r in rows]))
            for f in ("owner",) + DATA_FIELDS
        }
    return _TABLE_COLUMNS


_VEC_OPS = {
    "=": np.equal, "!=": np.not_equal, "<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
}


def vec_eval(p, cols) -> np.ndarray:
    size = len(next(iter(cols.values()))[0])
    if isinstance(p, Const):
        return np.full(size, bool(p.value))
    if isinstance(p, And):
        return np.logical_and.reduce([vec_eval(q, cols) for q in p.items])
    if isinstance(p, Or):
        return np.logical_or.reduce([vec_eval(q, cols) for q in p.items])
    values, null = cols[p.field]
    if p.value is None:
        return null.copy() if p.op == "=" else ~null
    out = np.zeros(size, dtype=bool)
    present = ~null
    out[present] = _VEC_OPS[p.op](values[present], p.value).astype(bool)
    return out


def brute_compliant(q: Select, ctx: ComplianceContext) -> bool:
    """Could ``q`` ever return a row or cell no granted agreement covers?"""
    cols = _table_columns()
    granted = [a for a in ctx.agreements if a.domain == q.table and a.allows(ctx.requester, ctx.purpose)]
    owner = cols["owner"][0]
    covers = [(a, (owner == a.consumer) & vec_eval(a.row, cols)) for a in granted]
    where = vec_eval(q.where, cols)
    any_cover = np.logical_or.reduce([c for _, c in covers]) if covers else np.zeros_like(where)
    if (where & ~any_cover).any():
        return False
    for f in q.fields:
        shown = where & vec_eval(q.guard(f), cols)
        allowed = np.logical_or.reduce([c for a, c in covers if f in a.fields] or [np.zeros_like(where)])
        if (shown & ~allowed).any():
            return False
    return True


def mutations(rq: Select) -> list:
    """Adversarial edits of a rewritten SELECT: widen its columns or weaken its filter."""
    out = []
    user_where, formula = rq.where.items
    for f in ("owner",) + DATA_FIELDS:
        if f not in rq.fields:
            out.append(("add field", Select(rq.fields + (f,), rq.table, rq.where, rq.guards)))
    for i in range(len(rq.guards)):
        out.append(("drop guard", Select(rq.fields, rq.table, rq.where, rq.guards[:i] + rq.guards[i + 1:])))
    out.append(("drop formula", Select(rq.fields, rq.table, user_where, rq.guards)))
    clauses = formula.items if isinstance(formula, Or) else (formula,) if isinstance(formula, And) else ()
    for i, clause in enumerate(clauses):
        who, live, row = clause.items
        if live != TRUE:
            continue
        variants = []
        if row != TRUE:
            variants.append(("row to true", And((who, live, TRUE))))
        for other in OWNERS:
            if other != who.value:
                variants.append(("change owner", And((Atom(who.field, "=", other), live, row))))
        for kind, new in variants:
            changed = clauses[:i] + (new,) + clauses[i + 1:]
            f2 = Or(changed) if isinstance(formula, Or) else changed[0]
            out.append((kind, Select(rq.fields, rq.table, And((user_where, f2)), rq.guards)))
    return [(k, m) for k, m in out if m != rq]


# ledgers


def build_ledger(rng: random.Random, blocks=50, anchor_every=10):
    """A side chain with mixed transactions, anchored every few blocks and at the end."""
    side, base = SideChain(), BaseChain()
    live: list[bytes] = []
    t = 0
    for h in range(1, blocks + 1):
        t += rng.randint(500, 5000)
        txs = []
        for _ in range(rng.randint(0, 4)):
            roll = rng.random()
            if roll < 0.2 or not live:
                digest = rng.randbytes(32)
                txs.append(EsadTx(address_of(f"owner{rng.randint(0, 9)}"), address_of("prov"), digest, t))
                live.append(digest)
            elif roll < 0.3:
                txs.append(EsarTx(live.pop(rng.randrange(len(live))), t))
            else:
                txs.append(DataTx(address_of("prov"), address_of(f"req{rng.randint(0, 3)}"), rng.randbytes(32), t))
        side.append_block(txs, t, f"v{rng.randint(0, 3)}")
        if h % anchor_every == 0:
            anchor(side, base, t)
    anchor(side, base, t)
    return side, base


def tamper_detected(chain_text: bytes, base_text: bytes) -> str:
    """Which check notices the change: 'import', 'chain', 'anchors', or '' when none does."""
    try:
        side = import_chain(chain_text.decode("utf-8"))
        base = import_base(base_text.decode("utf-8"))
    except (ChainFormatError, UnicodeDecodeError):
        return "import"
    if not verify_chain(side):
        return "chain"
    if not verify_anchors(side, base, complete=True):
        return "anchors"
    return ""


# simulator scenarios

BEHAVIORS = ("silent", "equivocate", "delay(400)")


def safety_config(n: int, byzantine: dict, seed: int) -> SimConfig:
    """Short, cheap runs that still cover several heights and round changes."""
    return SimConfig(
        n=n,
        byzantine=tuple(sorted((i, Behavior.parse(b)) for i, b in byzantine.items())),
        seed=seed,
        rate=20,
        duration_s=30,
        drain_s=0,
        commit_interval_s=0.2,
        timeouts=TimeoutConfig(1000, 200),
        max_heights=6,
        ledger=False,
        cpu=CpuModel(0, 0, 0, 0),
        scenario=f"safety-n{n}",
    )


def liveness_config(seed: int) -> SimConfig:
    """N=4 with every link at most 200 ms (base plus jitter)."""
    return SimConfig(
        n=4,
        delay=DelayModel(jitter="uniform", jitter_ms=10),
        seed=seed,
        rate=10,
        duration_s=600,
        drain_s=0,
        timeouts=TimeoutConfig(1000, 200),
        max_heights=50,
        ledger=False,
        scenario="liveness",
    )


# scripted traces with hand-computed metrics

NAN = float("nan")


def _blocks(spec):
    return [BlockRecord(h, 0, t, ntx, "v0", f"b{h}") for h, (t, ntx) in enumerate(spec, start=1)]


def scripted_traces():
    """(name, trace, tps_avg, latency_avg seconds, uncommitted) with values worked out by hand."""
    # one validator: 100 tx in a 5 s block (20 tx/s), then 28 tx in a 4 s block (7 tx/s)
    submit = np.array([0.0] * 100 + [5.0] * 28)
    commit = np.array([[5.0] * 100 + [9.0] * 28])
    single = Trace("single", 100, ("v0",), (0,), submit, commit, [_blocks([(5.0, 100), (9.0, 28)])])
    # tps: (20 + 7) / 2; latency: (100 * 5 + 28 * 4) / 128

    # three validators commit one tx at 1.0, 1.2 and 2.0 s: median latency 1.2
    median = Trace(
        "median", 1, ("v0", "v1", "v2"), (0, 1, 2), np.array([0.0]), np.array([[1.0], [1.2], [2.0]]),
        [_blocks([(1.0, 1)]), _blocks([(1.2, 1)]), _blocks([(2.0, 1)])],
    )
    # tps: (1/1 + 1/1.2 + 1/2) / 3 = 7/9

    # two honest validators, one Byzantine row that must be ignored, an even-count median,
    # a transaction only one validator committed, one nobody committed, and an empty block
    mixed = Trace(
        "mixed", 3, ("v0", "v1", "v2"), (0, 1),
        np.array([0.0, 1.0, 1.5]),
        np.array([[2.0, 2.0, NAN], [4.0, NAN, NAN], [0.5, 0.5, 0.5]]),
        [_blocks([(2.0, 2), (4.0, 0)]), _blocks([(4.0, 1)]), _blocks([(0.5, 1000)])],
    )
    # v0: [2/2, 0/2] -> 0.5; v1: [1/4] -> 0.25; tps (0.5 + 0.25) / 2
    # latency: tx0 median(2, 4) = 3, tx1 median(1) = 1 -> 2; tx2 uncommitted
    return [
        ("single", single, 13.5, 612 / 128, 0),
        ("median", median, 7 / 9, 1.2, 0),
        ("mixed", mixed, 0.375, 2.0, 1),
    ]


# provider workspace fixture

EHR_SCHEMA = {
    "tables": [
        {
            "name": "EHR",
            "owner": "owner",
            "columns": [["owner", "text"], ["age", "int"], ["ethnicity", "text"], ["PSA", "decimal"],
                        ["phone", "text"], ["smoker", "bool"]],
        }
    ]
}
EHR_CSV = (
    "owner,age,ethnicity,PSA,phone,smoker\n"
    "Bob,52,white,6.1,555-0101,true\n"
    "Bob,53,white,1.5,555-0101,false\n"
    "Ann,40,asian,7.0,555-0202,\n"
    "Cid,61,pacific,9.0,555-0303,true\n"
)
SMC = "Stanford Medical Center"
BOB_READ = f'Bob, requester = "{SMC}" and purpose = "research" : [age, ethnicity, PSA] of EHR, PSA >= 2'
BOB_WRITE = "Bob, true : [age, PSA] of EHR.write"
ANN_READ = 'Ann, requester = "Other Lab" : [age] of EHR'
# plaintexts that must never reach the ledger
PRIVATE = ["Bob", "Ann", "Cid", SMC, "Other Lab", "research", "555-0101", "555-0202", "555-0404", "white",
           "asian", "pacific", "ethnicity", "PSA"]


def write_fixture(root) -> tuple[Path, Path]:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    schema = root / "schema.json"
    schema.write_text(json.dumps(EHR_SCHEMA))
    data = root / "ehr.csv"
    data.write_text(EHR_CSV)
    return schema, data


def audit_workflow(root) -> Workspace:
    """deploy, query, write, rejected write, revoke, blocked query."""
    root = Path(root)
    schema, data = write_fixture(root / "fixture")
    ws = Workspace.init(root / "ws", "Acme Health", schema, {"EHR": data})
    _, bob_read = ws.deploy(BOB_READ)
    ws.deploy(BOB_WRITE)
    ws.deploy(ANN_READ)
    ws.query(SMC, "research", "SELECT age, PSA, phone FROM EHR WHERE PSA >= 5")
    ws.query(SMC, "research", 'INSERT INTO EHR SET owner = "Bob", age = 54, PSA = 3.3, phone = "555-0404", smoker = true')
    try:
        ws.query(SMC, "research", 'INSERT INTO EHR SET owner = "Cid", age = 62')
    except RejectedWrite:
        pass
    else:
        raise AssertionError("write without agreement was accepted")
    ws.revoke(hash_esa(bob_read).hex())
    ws.query(SMC, "research", 'SELECT age, PSA FROM EHR WHERE owner = "Bob"')
    ws.query("Other Lab", "care", "SELECT age FROM EHR")
    ws.query(SMC, "research", 'DELETE FROM EHR WHERE owner = "Cid"')
    return Workspace(root / "ws")


def tamper_cases(log):
    """Single-record edits of an audit log; every one must make the audit fail."""


    recs = list(log.records)

    def with_record(i, rec):
        out = list(recs)
        out[i] = rec
        return AuditLog(out)

    def widen(text):
        q = parse_query(text)
        if isinstance(q, Select):
            q = Select(q.fields + ("phone",), q.table, TRUE)
        elif isinstance(q, Delete):
            q = Delete(q.table, TRUE)
        elif isinstance(q, Insert):
            q = Insert(q.table, q.assignments + (("ethnicity", None),))
        else:
            q = Update(q.table, q.assignments, TRUE)
        return render_query(q)

    def flip(text):
        k = len(text) // 2
        return text[:k] + ("X" if text[k] != "X" else "Y") + text[k + 1:]

    cases = []
    for i, r in enumerate(recs):
        wide = widen(r.text)
        cases += [
            (f"seq {r.seq}: one character of the text", with_record(i, dc_replace(r, text=flip(r.text)))),
            (f"seq {r.seq}: widened text with matching record hash",
             with_record(i, dc_replace(r, text=wide, query_hash=query_digest(wide).hex()))),
            (f"seq {r.seq}: record hash", with_record(i, dc_replace(r, query_hash="0" * 64))),
            (f"seq {r.seq}: requester", with_record(i, dc_replace(r, requester=r.requester + " Inc"))),
            (f"seq {r.seq}: timestamp", with_record(i, dc_replace(r, timestamp=r.timestamp + 1))),
            (f"seq {r.seq}: transaction reference", with_record(i, dc_replace(r, tx_ref="side-0:0"))),
        ]
    a, b = recs[0], recs[2]
    swapped = list(recs)
    swapped[0], swapped[2] = dc_replace(a, seq=b.seq), dc_replace(b, seq=a.seq)
    cases.append(("seq swap across the revocation", AuditLog(swapped)))
    cases.append(("record dropped", AuditLog(recs[1:])))
    cases.append(("record duplicated", AuditLog(recs + [recs[-1]])))
    cases.append(("records reordered", AuditLog([recs[1], recs[0]] + recs[2:])))
    cases.append(("record without transaction", AuditLog(recs + [dc_replace(recs[0], seq=10_000)])))
    cases.append(("purpose of a read", with_record(0, dc_replace(recs[0], purpose="marketing"))))
    cases.append(("masked flag", with_record(1, dc_replace(recs[1], masked=not recs[1].masked))))
    return cases
