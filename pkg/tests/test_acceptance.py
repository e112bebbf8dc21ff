"""End-to-end acceptance checks, each at its stated tolerance and time budget.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section of the terminal summary: one PASS/FAIL line per criterion.
"""
import functools
import itertools
import random
import time
from decimal import Decimal

import numpy as np

from conftest import ACCEPTANCE
from esaledger.audit import verify_audit
from esaledger.consensus import TimeoutConfig, decision_consistency, timeout_duration
from esaledger.enforcement import (
    Database,
    Schema,
    check_compliance,
    entails,
    execute,
    parse_query,
    rewrite_select,
    rewrite_write,
)
from esaledger.lang import parse_esa, render_natural_language
from esaledger.ledger import InclusionProof, export_base, export_chain, merkle_proof, merkle_root, verify_proof
from esaledger.metrics import compute_report, latency_avg, tps_avg, uncommitted
from esaledger.netsim import SimConfig, run_simulation

from helpers import (
    BEHAVIORS,
    PRIVATE,
    audit_workflow,
    brute_compliant,
    brute_entails,
    build_ledger,
    expected_rows,
    liveness_config,
    mutations,
    random_agreements,
    random_context_for,
    random_database,
    random_predicate,
    random_select,
    safety_config,
    scripted_traces,
    small_domains,
    table_domains,
    tamper_cases,
    tamper_detected,
)


def criterion(num, title):
    """Record the outcome of a check under its criterion number, then let pytest judge it."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except Exception as e:
                first = str(e).splitlines()[0] if str(e) else type(e).__name__
                ACCEPTANCE[num] = (False, title, f"{first} ({time.perf_counter() - start:.1f} s)")
                raise
            ACCEPTANCE[num] = (True, title, f"{detail} ({time.perf_counter() - start:.1f} s)")

        return run

    return wrap


BOB_TEXT = (
    'Bob, requester = "Stanford Medical Center" and purpose = "research" : [age, ethnicity, PSA] of EHR, PSA >= 2'
)
BOB_SENTENCE = (
    "Stanford Medical Center can read the age, ethnicity and PSA of Bob's EHR "
    "for research and if the PSA is greater than or equal to 2."
)


@criterion(1, "agreement rendered as a sentence")
def test_natural_language_rendering():
    start = time.perf_counter()
    sentence = render_natural_language(parse_esa(BOB_TEXT))
    elapsed_ms = (time.perf_counter() - start) * 1000
    assert sentence == BOB_SENTENCE, sentence
    assert elapsed_ms < 1, f"{elapsed_ms:.3f} ms"
    return f"byte-exact in {elapsed_ms:.3f} ms"


@criterion(2, "write masking")
def test_insert_masking():
    schema = Schema(
        "EHR",
        (
            ("person", "text"), ("age", "int"), ("ethnicity", "text"), ("PSA", "decimal"), ("phone", "text"),
            ("medication", "text"), ("smoker", "bool"), ("consumesAlcohol", "bool"),
        ),
        owner="person",
    )
    esa = parse_esa("Bob, true : [age, ethnicity, PSA, phone, medication] of EHR.write")
    q = parse_query(
        'INSERT INTO EHR SET person = "Bob", age = 52, ethnicity = white, PSA = 1.5, '
        'phone = "555-555-5555", smoker = true, consumesAlcohol = false'
    )
    decision = rewrite_write(q, [esa], owner="person")
    db = Database([schema])
    assert decision.executed and execute(db, decision.query) == 1
    expected = {
        "person": "Bob", "age": 52, "ethnicity": "white", "PSA": Decimal("1.5"), "phone": "555-555-5555",
        "medication": None, "smoker": None, "consumesAlcohol": None,
    }
    assert db.rows("EHR") == [expected], db.rows("EHR")
    return "smoker and consumesAlcohol stored as NULL, allowed columns kept"


@criterion(3, "entailment matches brute force")
def test_entailment_oracle():
    rng = random.Random(3)
    doms = small_domains()
    disagree = 0
    for _ in range(1000):
        pi, phi = random_predicate(rng), random_predicate(rng)
        disagree += entails(pi, phi, doms) != brute_entails(pi, phi)
    assert disagree == 0, f"{disagree}/1000 disagreements"
    return "1000/1000 pairs agree"


@criterion(4, "enforcement soundness")
def test_enforcement_soundness():
    start = time.perf_counter()
    rng = random.Random(4)
    doms = table_domains()
    mismatched = refused = 0
    leaking = leaking_rejected = raw = agree = 0
    for _ in range(200):
        db = random_database(rng, max_rows=100)
        ctx = random_context_for(rng, random_agreements(rng, max_count=5))
        q = random_select(rng)
        rq = rewrite_select(q, ctx)
        got = execute(db, rq)
        mismatched += (got.columns, got.rows) != expected_rows(db, q, ctx)
        refused += not check_compliance(rq, ctx, domains=doms)
        for _, m in mutations(rq):
            rejected = not check_compliance(m, ctx, domains=doms)
            # a mutation is adversarial when it really exposes something the agreements do not allow
            leaks = not brute_compliant(m, ctx)
            raw += 1
            agree += rejected == leaks
            leaking += leaks
            leaking_rejected += rejected and leaks
    elapsed = time.perf_counter() - start
    rate = leaking_rejected / leaking
    assert mismatched == 0, f"{mismatched}/200 results differ from the row oracle"
    assert refused == 0, f"{refused}/200 rewritten queries refused"
    assert rate >= 0.99, f"rejected {leaking_rejected}/{leaking} leaking mutations"
    assert elapsed < 30, f"{elapsed:.1f} s"
    return (
        f"200/200 results exact, 200/200 rewrites accepted, {leaking_rejected}/{leaking} leaking mutations "
        f"rejected; checker matches the exhaustive oracle on {agree}/{raw} mutations"
    )


def _safety_runs():
    for behavior in BEHAVIORS:
        for seed in range(500):
            yield f"N=4 {behavior}", safety_config(4, {1: behavior}, seed)
    pairs = list(itertools.product(BEHAVIORS, repeat=2))
    for seed in range(500):
        a, b = pairs[seed % len(pairs)]
        yield "N=7", safety_config(7, {2: a, 5: b}, seed)


@criterion(5, "consensus safety")
def test_consensus_safety():
    start = time.perf_counter()
    runs = violations = 0
    for label, cfg in _safety_runs():
        trace = run_simulation(cfg)
        honest = [trace.validator_ids[i] for i in trace.honest]
        runs += 1
        if not decision_consistency(trace.decision_logs(), honest):
            violations += 1
    elapsed = time.perf_counter() - start
    assert violations == 0, f"{violations} of {runs} runs violated agreement"
    assert elapsed < 120, f"{elapsed:.1f} s"
    return f"{runs} runs, 0 violations"


@criterion(6, "consensus liveness")
def test_consensus_liveness():
    worst = 0.0
    for seed in range(100):
        cfg = liveness_config(seed)
        trace = run_simulation(cfg)
        for i in trace.honest:
            blocks = trace.blocks[i]
            assert len(blocks) >= 50, f"seed {seed}: validator {i} reached {len(blocks)} heights"
            worst = max(worst, blocks[49].commit_time)
        assert worst <= 600, f"seed {seed}: height 50 at {worst:.1f} s"
    return f"100/100 seeds reach height 50, slowest at {worst:.1f} s simulated"


@criterion(7, "metrics on scripted traces")
def test_scripted_metrics():
    for name, trace, tps, lat, unc in scripted_traces():
        got = (tps_avg(trace), latency_avg(trace), uncommitted(trace))
        assert got == (tps, lat, unc), f"{name}: {got} != {(tps, lat, unc)}"
    return "3/3 traces exact"


SWEEP_RATES = list(range(100, 1300, 100))


def _knee(reports):
    tps = [r.tps_avg for r in reports]
    k = int(np.argmax(tps))
    rising = all(a <= b for a, b in zip(tps[:k], tps[1 : k + 1]))
    falling = k < len(tps) - 1 and all(t < tps[k] for t in tps[k + 1 :])
    return SWEEP_RATES[k], rising and falling


@criterion(8, "throughput and latency trends")
def test_sweep_trends():
    start = time.perf_counter()

    def report(n, rate):
        return compute_report(run_simulation(SimConfig(n=n, rate=rate, scenario=f"sweep-n{n}")))

    sweeps = {n: [report(n, r) for r in SWEEP_RATES] for n in (4, 16)}
    lat = {(n, r.input_rate): r.latency_avg for n, rs in sweeps.items() for r in rs}
    for rate in (100, 500, 1200):
        lat[32, rate] = report(32, rate).latency_avg
    lat[64, 500] = report(64, 500).latency_avg
    elapsed = time.perf_counter() - start

    knee4, shape4 = _knee(sweeps[4])
    knee16, _ = _knee(sweeps[16])
    assert shape4, f"4-node throughput not rise-then-fall: {[round(r.tps_avg) for r in sweeps[4]]}"
    assert 400 <= knee4 <= 600, f"4-node knee at {knee4}"
    assert knee16 < knee4, f"16-node knee {knee16} not below {knee4}"
    for n in (4, 16, 32):
        assert lat[n, 1200] >= 5 * lat[n, 100], f"N={n}: {lat[n, 1200]:.1f} s vs {lat[n, 100]:.1f} s"
    assert lat[64, 500] > lat[32, 500] > lat[16, 500] >= lat[4, 500], "latency ordering at 500 tx/s"
    assert elapsed < 300, f"{elapsed:.1f} s"
    ratios = ", ".join(f"N={n} x{lat[n, 1200] / lat[n, 100]:.0f}" for n in (4, 16, 32))
    order = " > ".join(f"{lat[n, 500]:.1f}" for n in (64, 32, 16, 4))
    return f"knees 4-node {knee4}, 16-node {knee16}; latency 1200 vs 100: {ratios}; at 500 tx/s: {order} s"


@criterion(9, "ledger integrity")
def test_ledger_integrity():
    side, base = build_ledger(random.Random(9), blocks=50)
    chain_bytes = export_chain(side).encode()
    blob = chain_bytes + export_base(base).encode()
    rng = random.Random(90)
    missed = 0
    for _ in range(10_000):
        pos, bit = rng.randrange(len(blob)), rng.randrange(8)
        flipped = bytearray(blob)
        flipped[pos] ^= 1 << bit
        flipped = bytes(flipped)
        missed += not tamper_detected(flipped[: len(chain_bytes)], flipped[len(chain_bytes) :])
    assert missed == 0, f"{missed}/10000 flips undetected"

    proofs = swaps = 0
    for n in range(1, 17):
        items = [f"tx{i}".encode() for i in range(n)]
        root = merkle_root(items)
        for i in range(n):
            proof = merkle_proof(items, i)
            assert verify_proof(root, items[i], proof), (n, i)
            proofs += 1
            for level in range(len(proof.siblings)):
                swapped = InclusionProof(i ^ (1 << level), n, proof.siblings)
                assert not verify_proof(root, items[i], swapped), (n, i, level)
                swaps += 1
    return f"10000/10000 flips detected; {proofs} proofs verify, {swaps}/{swaps} swapped siblings fail"


@criterion(10, "end-to-end audit")
def test_end_to_end_audit(tmp_path):
    ws = audit_workflow(tmp_path)
    owners = {t: s.owner for t, s in ws.schemas.items()}
    domains = {t: s.domains() for t, s in ws.schemas.items()}
    assert verify_audit(ws.log, ws.side, ws.esa_store, owners, domains).passed, "honest workflow fails"
    cases = tamper_cases(ws.log)
    survived = [name for name, log in cases if verify_audit(log, ws.side, ws.esa_store, owners, domains).passed]
    assert len(cases) >= 30 and not survived, f"tampering not detected: {survived}"
    serialized = export_chain(ws.side) + export_base(ws.base)
    leaked = [s for s in PRIVATE if s in serialized]
    assert not leaked, f"plaintext in ledger: {leaked}"
    return f"workflow passes, {len(cases)}/{len(cases)} tamper cases fail, no plaintext in ledger"


@criterion(11, "timeout schedule")
def test_timeout_schedule():
    cfg = TimeoutConfig(1000, 200)
    t = cfg.base_ms
    for r in range(101):
        if r:
            t += r * cfg.delta_ms
        closed = cfg.base_ms + cfg.delta_ms * r * (r + 1) // 2
        assert timeout_duration(r, cfg) == closed == t, r
    return "r = 0..100 match closed form and recurrence"
