"""Deterministic discrete-event simulation of a validator network.

Virtual time runs in milliseconds.  A client pushes transactions in 100 ms
chunks, round-robin over the validators; the receiving validator relays each
chunk to its peers.  Validators run :class:`~esaledger.consensus.ValidatorState`
behind a per-validator CPU queue, so vote handling, transaction checks and block
execution all take simulated time.  That is what makes throughput saturate.

Ties in the event queue are broken by insertion order, so a run is a pure
function of its :class:`SimConfig`.
"""
from __future__ import annotations

import csv
import hashlib
import heapq
import io
import itertools
import json
import random
import re
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .consensus import (
    Broadcast,
    Decision,
    Proposal,
    ScheduleTimeout,
    StartHeight,
    TimeoutConfig,
    Validator,
    ValidatorState,
    total_power,
    value_id,
)
from .ledger import BaseChain, DataTx, SideChain, anchor

REGIONS = ("taiwan", "singapore", "belgium", "columbia")

# one-way base latency in ms between the default regions
REGION_LATENCY_MS = {
    ("taiwan", "taiwan"): 5.0,
    ("singapore", "singapore"): 5.0,
    ("belgium", "belgium"): 5.0,
    ("columbia", "columbia"): 5.0,
    ("taiwan", "singapore"): 50.0,
    ("taiwan", "belgium"): 140.0,
    ("taiwan", "columbia"): 130.0,
    ("singapore", "belgium"): 160.0,
    ("singapore", "columbia"): 110.0,
    ("belgium", "columbia"): 50.0,
}

CHUNK_MS = 100.0
JITTERS = ("none", "uniform", "exponential")


class SimConfigError(ValueError):
    pass


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class DelayModel:
    """Base latency (region table or explicit matrix) plus nonnegative jitter.

    ``uniform`` jitter draws from ``[0, 2 * jitter_ms]``; ``exponential`` has mean
    ``jitter_ms``.  Either way the expected delay is ``base + jitter_ms``.
    """

    kind: str = "regions"
    regions: tuple = ()  # per-validator region; empty means cycle through REGIONS
    matrix: tuple = ()  # per-pair ms, used when kind == "matrix"
    jitter: str = "uniform"
    jitter_ms: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in ("regions", "matrix"):
            raise SimConfigError(f"unknown delay model {self.kind!r}")
        if self.jitter not in JITTERS:
            raise SimConfigError(f"unknown jitter distribution {self.jitter!r}")
        if self.jitter_ms < 0:
            raise SimConfigError("jitter must be nonnegative")
        for r in self.regions:
            if r not in REGIONS:
                raise SimConfigError(f"unknown region {r!r}")
        for row in self.matrix:
            if len(row) != len(self.matrix) or any(x < 0 for x in row):
                raise SimConfigError("latency matrix must be square and nonnegative")

    def region_of(self, i: int) -> str:
        if self.regions:
            return self.regions[i]
        return REGIONS[i % len(REGIONS)]

    def base(self, src: int, dst: int) -> float:
        try:
            if self.kind == "matrix":
                if src < 0 or dst < 0:
                    raise IndexError
                return float(self.matrix[src][dst])
            a, b = self.region_of(src), self.region_of(dst)
        except IndexError:
            raise SimConfigError(f"no latency defined for pair ({src}, {dst})") from None
        return REGION_LATENCY_MS[(a, b)] if (a, b) in REGION_LATENCY_MS else REGION_LATENCY_MS[(b, a)]

    def mean(self, src: int, dst: int) -> float:
        return self.base(src, dst) + (self.jitter_ms if self.jitter != "none" else 0.0)


def delay_sample(model: DelayModel, src: int, dst: int, rng: random.Random) -> float:
    base = model.base(src, dst)
    if model.jitter == "none" or model.jitter_ms == 0:
        return base
    if model.jitter == "uniform":
        return base + rng.uniform(0.0, 2.0 * model.jitter_ms)
    return base + rng.expovariate(1.0 / model.jitter_ms)


@dataclass(frozen=True)
class Behavior:
    kind: str  # silent | equivocate | delay
    delay_ms: float = 0.0

    _PATTERN = re.compile(r"delay\(\s*([0-9]+(?:\.[0-9]+)?)\s*\)\Z")

    @classmethod
    def parse(cls, text: str) -> "Behavior":
        if text in ("silent", "equivocate"):
            return cls(text)
        m = cls._PATTERN.match(text)
        if m:
            return cls("delay", float(m.group(1)))
        raise SimConfigError(f"unknown Byzantine behavior {text!r}")

    def __str__(self) -> str:
        return f"delay({self.delay_ms:g})" if self.kind == "delay" else self.kind


@dataclass(frozen=True)
class CpuModel:
    """Simulated processing costs in microseconds.

    A vote or proposal costs ``vote_us_per_peer * N``: with gossip each message
    arrives once per peer.  ``recheck_us`` is charged per transaction still in
    the mempool after a block, which is what makes an overloaded validator slow
    down further.
    """

    vote_us_per_peer: float = 4000.0
    tx_check_us: float = 20.0
    exec_us: float = 30.0
    recheck_us: float = 100.0

    def __post_init__(self) -> None:
        if min(asdict(self).values()) < 0:
            raise SimConfigError("CPU costs must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    n: int = 4
    powers: tuple = ()
    byzantine: tuple = ()  # ((validator index, Behavior), ...)
    delay: DelayModel = field(default_factory=DelayModel)
    seed: int = 0
    rate: float = 100.0
    tx_size: int = 212
    max_block: int = 3000
    commit_interval_s: float = 5.0
    timeouts: TimeoutConfig = field(default_factory=lambda: TimeoutConfig(3000, 500))
    duration_s: float = 180.0
    drain_s: float = 600.0
    anchor_interval_s: float = 60.0
    base_commit_delay_s: float = 15.0
    max_heights: Optional[int] = None
    cpu: CpuModel = field(default_factory=CpuModel)
    ledger: bool = True
    scenario: str = "default"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise SimConfigError("need at least one validator")
        if self.powers and (len(self.powers) != self.n or min(self.powers) <= 0):
            raise SimConfigError("powers must list one positive value per validator")
        seen = set()
        for i, b in self.byzantine:
            if not 0 <= i < self.n or i in seen:
                raise SimConfigError(f"bad Byzantine validator index {i}")
            if not isinstance(b, Behavior):
                raise SimConfigError(f"bad behavior for validator {i}")
            seen.add(i)
        if self.duration_s <= 0 or self.drain_s < 0:
            raise SimConfigError("duration must be positive and drain nonnegative")
        if self.rate < 0 or self.max_block < 1 or self.tx_size < 1:
            raise SimConfigError("rate, block size and tx size must be positive")
        if self.commit_interval_s < 0 or self.anchor_interval_s <= 0 or self.base_commit_delay_s < 0:
            raise SimConfigError("intervals must be nonnegative")
        if self.max_heights is not None and self.max_heights < 1:
            raise SimConfigError("max_heights must be positive")
        if self.delay.kind == "matrix" and len(self.delay.matrix) != self.n:
            raise SimConfigError("latency matrix size must equal N")
        if self.delay.regions and len(self.delay.regions) != self.n:
            raise SimConfigError("region list size must equal N")

    @property
    def validator_ids(self) -> tuple:
        width = len(str(self.n - 1))
        return tuple(f"v{i:0{width}d}" for i in range(self.n))

    @property
    def validators(self) -> tuple:
        powers = self.powers or (1,) * self.n
        return tuple(Validator(v, p) for v, p in zip(self.validator_ids, powers))

    @property
    def byzantine_map(self) -> dict:
        return dict(self.byzantine)

    @property
    def fault_tolerant(self) -> bool:
        """Byzantine power stays strictly below a third of the total."""
        vals = self.validators
        bad = sum(vals[i].power for i, _ in self.byzantine)
        return 3 * bad < total_power(vals)

    def replace(self, **changes) -> "SimConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return SimConfig(**d)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "powers": list(self.powers),
            "byzantine": {str(i): str(b) for i, b in self.byzantine},
            "delay": {
                "kind": self.delay.kind,
                "regions": list(self.delay.regions),
                "matrix": [list(r) for r in self.delay.matrix],
                "jitter": self.delay.jitter,
                "jitter_ms": self.delay.jitter_ms,
            },
            "seed": self.seed,
            "rate": self.rate,
            "tx_size": self.tx_size,
            "max_block": self.max_block,
            "commit_interval_s": self.commit_interval_s,
            "timeouts": {"base_ms": self.timeouts.base_ms, "delta_ms": self.timeouts.delta_ms},
            "duration_s": self.duration_s,
            "drain_s": self.drain_s,
            "anchor_interval_s": self.anchor_interval_s,
            "base_commit_delay_s": self.base_commit_delay_s,
            "max_heights": self.max_heights,
            "cpu": asdict(self.cpu),
            "ledger": self.ledger,
            "scenario": self.scenario,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        if not isinstance(d, dict):
            raise SimConfigError("config must be a JSON object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SimConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kw = dict(d)
        try:
            if "powers" in kw:
                kw["powers"] = tuple(int(p) for p in kw["powers"])
            if "byzantine" in kw:
                kw["byzantine"] = tuple(sorted((int(i), Behavior.parse(b)) for i, b in kw["byzantine"].items()))
            if "delay" in kw:
                dm = dict(kw["delay"])
                dm["regions"] = tuple(dm.get("regions", ()))
                dm["matrix"] = tuple(tuple(float(x) for x in row) for row in dm.get("matrix", ()))
                kw["delay"] = DelayModel(**dm)
            if "timeouts" in kw:
                kw["timeouts"] = TimeoutConfig(**kw["timeouts"])
            if "cpu" in kw:
                kw["cpu"] = CpuModel(**kw["cpu"])
            cfg = cls(**kw)
        except SimConfigError:
            raise
        except (TypeError, ValueError, AttributeError) as e:
            raise SimConfigError(f"invalid config: {e}") from None
        return cfg


def load_config(path) -> SimConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise SimConfigError(f"{path}:{e.lineno}: {e.msg}") from None
    return SimConfig.from_dict(data)


# faults

Send = tuple  # (destination index, message, extra delay ms)


def inject_fault(
    validator: int, behavior: Behavior, byzantine: dict, peers: int
) -> Callable[[object, ValidatorState], list[Send]]:
    """Return a hook turning one outgoing message into per-destination sends."""
    if byzantine.get(validator) != behavior:
        raise SimConfigError(f"validator {validator} is not configured as {behavior}")
    others = [j for j in range(peers) if j != validator]
    half_a = set(others[: len(others) // 2])
    alt_ids: dict = {}

    def honest(msg, delay=0.0):
        return [(j, msg, delay) for j in range(peers)]

    if behavior.kind == "silent":
        return lambda msg, state: []
    if behavior.kind == "delay":
        return lambda msg, state: honest(msg, behavior.delay_ms)

    def equivocate(msg, state):
        if isinstance(msg, Proposal):
            tag, ranges = msg.value
            twin = Proposal(msg.height, msg.round, (tag + 1, ranges), msg.valid_round, msg.sender)
            alt_ids[value_id(msg.value)] = value_id(twin.value)
            other = twin
        else:
            if msg.value is None:
                prop = state.proposals.get(msg.round)
                alt = value_id(prop.value) if prop is not None else None
            else:
                alt = alt_ids.get(msg.value)
            other = type(msg)(msg.height, msg.round, alt, msg.sender)
        return [(j, msg if j == validator or j in half_a else other, 0.0) for j in range(peers)]

    return equivocate


# trace


@dataclass(frozen=True)
class BlockRecord:
    height: int
    round: int
    commit_time: float  # seconds
    ntx: int
    proposer: str
    value_id: str


@dataclass
class Trace:
    scenario: str
    rate: float
    validator_ids: tuple
    honest: tuple  # indices of honest validators
    submit_times: np.ndarray  # seconds, per transaction
    commit_times: np.ndarray  # seconds, validators x transactions, NaN if never committed
    blocks: list  # per validator: list[BlockRecord]
    conflicts: list = field(default_factory=list)
    malformed: int = 0
    end_time: float = 0.0
    start_time: float = 0.0
    anchor_latencies_ms: tuple = ()

    @property
    def n(self) -> int:
        return len(self.validator_ids)

    @property
    def tx_count(self) -> int:
        return len(self.submit_times)

    def decision_logs(self) -> dict:
        return {self.validator_ids[i]: self.blocks[i] for i in range(self.n)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "submit_time"] + [f"commit_time_{v}" for v in self.validator_ids])
        for j in range(self.tx_count):
            row = [j, repr(float(self.submit_times[j]))]
            row += ["" if np.isnan(c) else repr(float(c)) for c in self.commit_times[:, j]]
            w.writerow(row)
        return buf.getvalue()


def consistent(trace: Trace) -> bool:
    """Honest validators agree on the value decided at every height they both reached."""
    chosen: dict = {}
    for i in trace.honest:
        for b in trace.blocks[i]:
            if chosen.setdefault(b.height, b.value_id) != b.value_id:
                return False
    return True


# simulation


@dataclass
class _Node:
    index: int
    state: ValidatorState
    chunks: deque = field(default_factory=deque)  # chunk ids in arrival order
    held: set = field(default_factory=set)  # chunk ids received
    committed: dict = field(default_factory=dict)  # chunk id -> committed prefix end
    pending: int = 0  # uncommitted transactions held
    cpu_free: float = 0.0
    commit_done: float = 0.0
    hook: Optional[Callable] = None


class Simulation:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.queue: list = []
        self.counter = itertools.count()
        self.now = 0.0
        self.validators = cfg.validators
        ids = cfg.validator_ids
        self.index = {v: i for i, v in enumerate(ids)}
        byz = cfg.byzantine_map
        self.honest = tuple(i for i in range(cfg.n) if i not in byz)
        self.nodes = [
            _Node(
                i,
                ValidatorState(ids[i], self.validators, cfg.timeouts, int(round(cfg.commit_interval_s * 1000))),
                hook=inject_fault(i, byz[i], byz, cfg.n) if i in byz else None,
            )
            for i in range(cfg.n)
        ]
        self.chunk_bounds: list[tuple[int, int]] = []
        horizon = cfg.duration_s * 1000.0
        self.total_tx = int(np.floor(cfg.rate * cfg.duration_s - 1e-9)) + 1 if cfg.rate > 0 else 0
        self.submit_ms = np.arange(self.total_tx, dtype=float) * (1000.0 / cfg.rate) if cfg.rate > 0 else np.zeros(0)
        self.submit_ms = self.submit_ms[self.submit_ms < horizon]
        self.total_tx = len(self.submit_ms)
        self.commit_ms = np.full((cfg.n, self.total_tx), np.nan)
        self.blocks: list[list[BlockRecord]] = [[] for _ in range(cfg.n)]
        self.committed_count = [0] * cfg.n
        self.side = SideChain("side-0") if cfg.ledger else None
        self.base = BaseChain(int(round(cfg.base_commit_delay_s * 1000))) if cfg.ledger else None
        self.ledger_writer = self.honest[0] if self.honest else None
        self.stopped = False

    # queue plumbing

    def push(self, t: float, kind: str, *payload) -> None:
        if t < self.now:
            raise SimulationError("event scheduled in the past")
        heapq.heappush(self.queue, (t, next(self.counter), kind, payload))

    def run(self) -> Trace:
        cfg = self.cfg
        for node in self.nodes:
            # genesis sits at t=0; height 1 keeps the same minimum gap as every later height
            self.push(cfg.commit_interval_s * 1000.0, "start", node.index)
        if self.total_tx:
            self.push(0.0, "submit", 0)
        if self.side is not None:
            self.push(cfg.anchor_interval_s * 1000.0, "anchor")
        limit = (cfg.duration_s + cfg.drain_s) * 1000.0
        handlers = {
            "start": self._on_start,
            "deliver": self._on_deliver,
            "process": self._on_process,
            "timer": self._on_timer,
            "submit": self._on_submit,
            "chunk": self._on_chunk,
            "anchor": self._on_anchor,
        }
        while self.queue and not self.stopped:
            t, _, kind, payload = heapq.heappop(self.queue)
            if t > limit:
                break
            self.now = t
            handlers[kind](*payload)
        return self._trace()

    # client

    def _on_submit(self, k: int) -> None:
        # each tick hands over every transaction whose submit time has passed
        lo = self.chunk_bounds[-1][1] if self.chunk_bounds else 0
        hi = int(np.searchsorted(self.submit_ms, k * CHUNK_MS, side="right"))
        if hi > lo:
            cid = len(self.chunk_bounds)
            self.chunk_bounds.append((lo, hi))
            self.push(self.now, "chunk", cid % self.cfg.n, cid, True)
        if hi < self.total_tx:
            self.push((k + 1) * CHUNK_MS, "submit", k + 1)

    def _on_chunk(self, i: int, cid: int, relay: bool) -> None:
        node = self.nodes[i]
        lo, hi = self.chunk_bounds[cid]
        start = max(self.now, node.cpu_free)
        node.cpu_free = start + (hi - lo) * self.cfg.cpu.tx_check_us / 1000.0
        if cid in node.held:
            return
        node.held.add(cid)
        done = node.committed.get(cid, lo)
        if done < hi:
            node.chunks.append(cid)
            node.pending += hi - done
        behavior = self.cfg.byzantine_map.get(i)
        if relay and not (behavior and behavior.kind == "silent"):
            extra = behavior.delay_ms if behavior else 0.0
            for j in range(self.cfg.n):
                if j != i:
                    self.push(self.now + delay_sample(self.cfg.delay, i, j, self.rng) + extra, "chunk", j, cid, False)

    # consensus plumbing

    def _get_value(self, node: _Node) -> Callable:
        def build(h, r):
            ranges, room = [], self.cfg.max_block
            for cid in node.chunks:
                if room == 0:
                    break
                lo, hi = self.chunk_bounds[cid]
                done = node.committed.get(cid, lo)
                if done >= hi:
                    continue
                take = min(room, hi - done)
                ranges.append((cid, done, done + take))
                room -= take
            return (0, tuple(ranges))

        return build

    def _is_valid(self, node: _Node) -> Callable:
        def check(value) -> bool:
            if not (isinstance(value, tuple) and len(value) == 2 and isinstance(value[1], tuple)):
                return False
            total, seen = 0, set()
            for cid, lo, hi in value[1]:
                if cid in seen or not 0 <= cid < len(self.chunk_bounds):
                    return False
                seen.add(cid)
                c_lo, c_hi = self.chunk_bounds[cid]
                if lo != node.committed.get(cid, c_lo) or not lo < hi <= c_hi:
                    return False
                total += hi - lo
            return total <= self.cfg.max_block

        return check

    def _apply(self, node: _Node, event) -> None:
        if node.hook is not None and self.cfg.byzantine_map[node.index].kind == "silent":
            return
        outs = node.state.apply(event, self.now, self._get_value(node), self._is_valid(node))
        for out in outs:
            if isinstance(out, Broadcast):
                self._send(node, out.message)
            elif isinstance(out, ScheduleTimeout):
                at = self.now + out.delay_ms
                if out.timeout.step == "commit":
                    at = node.commit_done + out.delay_ms
                self.push(at, "timer", node.index, out.timeout)
            elif isinstance(out, Decision):
                self._commit(node, out)

    def _send(self, node: _Node, msg) -> None:
        i = node.index
        sends = node.hook(msg, node.state) if node.hook is not None else [(j, msg, 0.0) for j in range(self.cfg.n)]
        for j, m, extra in sends:
            d = 0.0 if j == i else delay_sample(self.cfg.delay, i, j, self.rng)
            self.push(self.now + d + extra, "deliver", j, m)

    def _on_start(self, i: int) -> None:
        self._apply(self.nodes[i], StartHeight(1))

    def _on_deliver(self, i: int, msg) -> None:
        node = self.nodes[i]
        if msg.sender == node.state.id:
            self._apply(node, msg)
            return
        cost = self.cfg.cpu.vote_us_per_peer * self.cfg.n / 1000.0
        start = max(self.now, node.cpu_free)
        node.cpu_free = start + cost
        if node.cpu_free > self.now:
            self.push(node.cpu_free, "process", i, msg)
        else:
            self._apply(node, msg)

    def _on_process(self, i: int, msg) -> None:
        self._apply(self.nodes[i], msg)

    def _on_timer(self, i: int, timeout) -> None:
        self._apply(self.nodes[i], timeout)

    def _commit(self, node: _Node, d: Decision) -> None:
        i = node.index
        ntx = 0
        for cid, lo, hi in d.value[1]:
            col = self.commit_ms[i, lo:hi]
            if not np.all(np.isnan(col)):
                raise SimulationError(f"transactions {lo}..{hi} committed twice on {node.state.id}")
            ntx += hi - lo
            node.committed[cid] = hi
            if cid in node.held:
                node.pending -= hi - lo
        while node.chunks:
            c_lo, c_hi = self.chunk_bounds[node.chunks[0]]
            if node.committed.get(node.chunks[0], c_lo) < c_hi:
                break
            node.chunks.popleft()
        cpu = self.cfg.cpu
        start = max(self.now, node.cpu_free)
        node.cpu_free = start + (ntx * cpu.exec_us + node.pending * cpu.recheck_us) / 1000.0
        node.commit_done = node.cpu_free
        for cid, lo, hi in d.value[1]:
            self.commit_ms[i, lo:hi] = node.commit_done
        self.committed_count[i] += ntx
        self.blocks[i].append(
            BlockRecord(d.height, d.round, node.commit_done / 1000.0, ntx,
                        node.state.proposer(d.height, d.round), d.value_id)
        )
        if i == self.ledger_writer and self.side is not None:
            self._record_block(d, node.commit_done)
        self._maybe_stop()

    def _record_block(self, d: Decision, t_ms: float) -> None:
        provider = self.cfg.validator_ids[self.ledger_writer]
        txs = []
        for _, lo, hi in d.value[1]:
            for j in range(lo, hi):
                qh = hashlib.sha256(f"tx:{j}".encode()).digest()
                txs.append(DataTx(provider, f"client-{j % self.cfg.n}", qh, int(self.submit_ms[j])))
        stamp = max(int(round(t_ms)), self.side.head.timestamp)
        self.side.append_block(txs, stamp, self.nodes[self.ledger_writer].state.proposer(d.height, d.round))

    def _on_anchor(self) -> None:
        anchor(self.side, self.base, int(round(self.now)))
        self.push(self.now + self.cfg.anchor_interval_s * 1000.0, "anchor")

    def _maybe_stop(self) -> None:
        cfg = self.cfg
        if not self.honest:
            return
        if cfg.max_heights is not None:
            if all(len(self.blocks[i]) >= cfg.max_heights for i in self.honest):
                self.stopped = True
            return
        if self.now >= cfg.duration_s * 1000.0 and all(self.committed_count[i] == self.total_tx for i in self.honest):
            self.stopped = True

    def _trace(self) -> Trace:
        cfg = self.cfg
        anchors: tuple = ()
        if self.side is not None:
            if self.side.height > self.base.anchored_height(self.side.chain_id):
                step = cfg.anchor_interval_s * 1000.0
                anchor(self.side, self.base, int(np.ceil(self.now / step) * step))
            anchors = tuple(
                self.base.anchor_for(self.side.chain_id, b.height).base_time - b.timestamp
                for b in self.side.blocks[1:]
            )
        conflicts = [c for n in self.nodes for c in n.state.conflicts]
        return Trace(
            scenario=cfg.scenario,
            rate=cfg.rate,
            validator_ids=cfg.validator_ids,
            honest=self.honest,
            submit_times=self.submit_ms / 1000.0,
            commit_times=self.commit_ms / 1000.0,
            blocks=self.blocks,
            conflicts=conflicts,
            malformed=sum(n.state.malformed for n in self.nodes),
            end_time=self.now / 1000.0,
            anchor_latencies_ms=anchors,
        )


def run_simulation(cfg: SimConfig) -> Trace:
    return Simulation(cfg).run()
