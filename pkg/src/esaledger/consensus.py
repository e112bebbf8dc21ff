"""Round-based BFT consensus: propose, prevote, precommit, commit.

A single mode of operation: every round has a proposer picked by weighted
round-robin, failed rounds move on after growing timeouts, and a per-validator
lock (plus the most recent valid value) keeps decisions consistent across
rounds.

:func:`handle_event` is the pure transition function.  The simulator uses
:meth:`ValidatorState.apply`, which performs the same transition in place.
"""
from __future__ import annotations

import copy
import enum
import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

NIL = None


class ConsensusError(ValueError):
    pass


@dataclass(frozen=True)
class Validator:
    id: str
    power: int = 1

    def __post_init__(self) -> None:
        if self.power <= 0:
            raise ConsensusError(f"validator {self.id!r} needs positive voting power")


@dataclass(frozen=True)
class TimeoutConfig:
    base_ms: int = 1000
    delta_ms: int = 200

    def __post_init__(self) -> None:
        if self.base_ms <= 0 or self.delta_ms < 0:
            raise ConsensusError("timeouts need base > 0 and delta >= 0")


def timeout_duration(r: int, cfg: TimeoutConfig) -> int:
    """``timeout(r) = timeout(r-1) + r * delta`` in closed form."""
    if r < 0:
        raise ConsensusError("round must be non-negative")
    return cfg.base_ms + cfg.delta_ms * r * (r + 1) // 2


def total_power(validators: Iterable[Validator]) -> int:
    return sum(v.power for v in validators)


def quorum_power(validators: Iterable[Validator]) -> int:
    """Smallest power strictly above two thirds of the total."""
    return 2 * total_power(validators) // 3 + 1


@lru_cache(maxsize=64)
def _schedule(validators: tuple) -> tuple:
    # smooth weighted round-robin: add power, pick the largest, charge the total
    total = total_power(validators)
    prio = {v.id: 0 for v in validators}
    order = []
    for _ in range(total):
        for v in validators:
            prio[v.id] += v.power
        pick = min(validators, key=lambda v: (-prio[v.id], v.id)).id
        prio[pick] -= total
        order.append(pick)
    return tuple(order)


def select_leader(validators: Sequence[Validator], h: int, r: int) -> str:
    """Proposer of slot ``h + r``; each validator leads ``power`` of every ``sum(power)`` slots."""
    if not validators:
        raise ConsensusError("empty validator set")
    order = _schedule(tuple(validators))
    return order[(h + r) % len(order)]


@lru_cache(maxsize=4096)
def value_id(value) -> Optional[str]:
    """Digest naming a proposed value in votes; values must be hashable."""
    if value is None:
        return None
    return hashlib.sha256(repr(value).encode()).hexdigest()


# messages and events


@dataclass(frozen=True)
class Proposal:
    height: int
    round: int
    value: object
    valid_round: int
    sender: str
    kind = "proposal"


@dataclass(frozen=True)
class Prevote:
    height: int
    round: int
    value: Optional[str]  # value id or nil
    sender: str
    kind = "prevote"


@dataclass(frozen=True)
class Precommit:
    height: int
    round: int
    value: Optional[str]
    sender: str
    kind = "precommit"


Message = Union[Proposal, Prevote, Precommit]


@dataclass(frozen=True)
class Timeout:
    step: str  # propose | prevote | precommit | commit
    height: int
    round: int


@dataclass(frozen=True)
class StartHeight:
    height: int


Event = Union[Proposal, Prevote, Precommit, Timeout, StartHeight]


@dataclass(frozen=True)
class Broadcast:
    message: Message


@dataclass(frozen=True)
class ScheduleTimeout:
    timeout: Timeout
    delay_ms: int


@dataclass(frozen=True)
class Decision:
    height: int
    round: int
    value: object
    value_id: str
    time: float = 0.0


Output = Union[Broadcast, ScheduleTimeout, Decision]


class Step(enum.IntEnum):
    PROPOSE = 0
    PREVOTE = 1
    PRECOMMIT = 2
    COMMIT = 3


@dataclass
class _Tally:
    votes: dict = field(default_factory=dict)  # sender -> value id
    power: dict = field(default_factory=dict)  # value id -> power
    total: int = 0


@dataclass
class ValidatorState:
    id: str
    validators: tuple
    timeouts: TimeoutConfig = field(default_factory=TimeoutConfig)
    commit_interval_ms: int = 0
    height: int = 1
    round: int = 0
    step: Step = Step.PROPOSE
    locked_value: object = None
    locked_round: int = -1
    valid_value: object = None
    valid_round: int = -1
    started: bool = False
    proposals: dict = field(default_factory=dict)  # round -> Proposal
    prevotes: dict = field(default_factory=dict)  # round -> _Tally
    precommits: dict = field(default_factory=dict)
    round_senders: dict = field(default_factory=dict)  # round -> set of senders
    scheduled: set = field(default_factory=set)  # (step, round) timeouts already armed
    polka_done: set = field(default_factory=set)
    future: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    conflicts: list = field(default_factory=list)
    malformed: int = 0

    def __post_init__(self) -> None:
        self.validators = tuple(self.validators)
        self._power = {v.id: v.power for v in self.validators}
        if self.id not in self._power:
            raise ConsensusError(f"{self.id!r} is not in the validator set")
        self._total = total_power(self.validators)
        self._quorum = quorum_power(self.validators)

    @property
    def quorum(self) -> int:
        return self._quorum

    def proposer(self, h: int, r: int) -> str:
        return select_leader(self.validators, h, r)

    # transition

    def apply(
        self,
        event: Event,
        now: float = 0.0,
        get_value: Callable[[int, int], object] | None = None,
        is_valid: Callable[[object], bool] | None = None,
    ) -> list[Output]:
        self._now = now
        self._get_value = get_value or (lambda h, r: ())
        self._is_valid = is_valid or (lambda v: v is not None)
        out: list[Output] = []
        if isinstance(event, StartHeight):
            if not self.started:
                self.started = True
                self.height = event.height
                self._start_round(0, out)
                self._replay_future()
        elif isinstance(event, Timeout):
            self._on_timeout(event, out)
        elif isinstance(event, (Proposal, Prevote, Precommit)):
            self._on_message(event, out)
        else:
            self.malformed += 1
        self._progress(out)
        return out

    def _start_round(self, r: int, out: list) -> None:
        self.round = r
        self.step = Step.PROPOSE
        h = self.height
        if self.proposer(h, r) == self.id:
            if self.valid_value is not None:
                value = self.valid_value
            else:
                value = self._get_value(h, r)
            out.append(Broadcast(Proposal(h, r, value, self.valid_round, self.id)))
        self._arm("propose", r, out)

    def _arm(self, step: str, r: int, out: list) -> None:
        if (step, r) in self.scheduled:
            return
        self.scheduled.add((step, r))
        out.append(ScheduleTimeout(Timeout(step, self.height, r), timeout_duration(r, self.timeouts)))

    def _on_timeout(self, t: Timeout, out: list) -> None:
        if t.height != self.height:
            return
        if t.step == "commit":
            if self.step is Step.COMMIT:
                self._next_height(out)
            return
        if t.round != self.round:
            return
        if t.step == "propose" and self.step is Step.PROPOSE:
            self._vote(Prevote, NIL, out)
            self.step = Step.PREVOTE
        elif t.step == "prevote" and self.step is Step.PREVOTE:
            self._vote(Precommit, NIL, out)
            self.step = Step.PRECOMMIT
        elif t.step == "precommit" and self.step is not Step.COMMIT:
            self._start_round(self.round + 1, out)

    def _vote(self, cls, vid: Optional[str], out: list) -> None:
        out.append(Broadcast(cls(self.height, self.round, vid, self.id)))

    def _well_formed(self, m: Message) -> bool:
        if m.sender not in self._power or not isinstance(m.round, int) or m.round < 0:
            return False
        if isinstance(m, Proposal):
            if not isinstance(m.valid_round, int) or not -1 <= m.valid_round < m.round:
                return False
            return m.sender == self.proposer(m.height, m.round)
        return m.value is None or isinstance(m.value, str)

    def _on_message(self, m: Message, out: list) -> None:
        if not isinstance(m.height, int) or not self._well_formed(m):
            self.malformed += 1
            return
        if m.height < self.height:
            return
        if m.height > self.height or not self.started:
            self.future.append(m)
            return
        self._record(m)

    def _record(self, m: Message) -> None:
        r = m.round
        if isinstance(m, Proposal):
            prev = self.proposals.get(r)
            if prev is not None:
                if prev != m:
                    self.conflicts.append((m.sender, m.height, r, "proposal"))
                return
            self.proposals[r] = m
        else:
            book = self.prevotes if isinstance(m, Prevote) else self.precommits
            tally = book.setdefault(r, _Tally())
            if m.sender in tally.votes:
                if tally.votes[m.sender] != m.value:
                    self.conflicts.append((m.sender, m.height, r, m.kind))
                return
            p = self._power[m.sender]
            tally.votes[m.sender] = m.value
            tally.power[m.value] = tally.power.get(m.value, 0) + p
            tally.total += p
        self.round_senders.setdefault(r, set()).add(m.sender)

    def _power_for(self, book: dict, r: int, vid) -> int:
        t = book.get(r)
        return t.power.get(vid, 0) if t else 0

    def _progress(self, out: list) -> None:
        if not self.started:
            return
        changed = True
        while changed:
            changed = self._step_once(out)

    def _step_once(self, out: list) -> bool:
        r = self.round
        if self.step is Step.COMMIT:
            return False

        # decide on any round with a quorum of precommits for a known proposal
        for rr, tally in self.precommits.items():
            if tally.total < self._quorum:
                continue
            prop = self.proposals.get(rr)
            if prop is None:
                continue
            vid = value_id(prop.value)
            if tally.power.get(vid, 0) >= self._quorum and self._is_valid(prop.value):
                self._decide(rr, prop.value, vid, out)
                return False

        # a later round with more than a third of the power present: catch up
        for rr in sorted(self.round_senders):
            if rr > r and 3 * sum(self._power[s] for s in self.round_senders[rr]) > self._total:
                self._start_round(rr, out)
                return True

        prop = self.proposals.get(r)
        if self.step is Step.PROPOSE and prop is not None:
            choice = self._prevote_choice(prop)
            if choice is not _WAIT:
                self._vote(Prevote, choice, out)
                self.step = Step.PREVOTE
                return True

        pv = self.prevotes.get(r)
        if pv is not None and pv.total >= self._quorum and self.step is Step.PREVOTE:
            self._arm("prevote", r, out)

        if prop is not None and r not in self.polka_done and self.step >= Step.PREVOTE:
            vid = value_id(prop.value)
            if self._power_for(self.prevotes, r, vid) >= self._quorum and self._is_valid(prop.value):
                self.polka_done.add(r)
                if self.step is Step.PREVOTE:
                    self.locked_value, self.locked_round = prop.value, r
                    self._vote(Precommit, vid, out)
                    self.step = Step.PRECOMMIT
                self.valid_value, self.valid_round = prop.value, r
                return True

        if self.step is Step.PREVOTE and self._power_for(self.prevotes, r, NIL) >= self._quorum:
            self._vote(Precommit, NIL, out)
            self.step = Step.PRECOMMIT
            return True

        pc = self.precommits.get(r)
        if pc is not None and pc.total >= self._quorum:
            self._arm("precommit", r, out)
        return False

    def _prevote_choice(self, prop: Proposal):
        v, vr = prop.value, prop.valid_round
        if not self._is_valid(v):
            return NIL
        vid = value_id(v)
        locked_vid = value_id(self.locked_value)
        if self.locked_round == -1 or locked_vid == vid:
            return vid
        if vr > self.locked_round:
            # unlock only against a prevote quorum this validator has itself observed
            if self._power_for(self.prevotes, vr, vid) >= self._quorum:
                return vid
            return _WAIT
        return locked_vid

    def _decide(self, r: int, value, vid: str, out: list) -> None:
        d = Decision(self.height, r, value, vid, self._now)
        self.decisions.append(d)
        out.append(d)
        self.step = Step.COMMIT
        out.append(ScheduleTimeout(Timeout("commit", self.height, r), self.commit_interval_ms))

    def _next_height(self, out: list) -> None:
        self.height += 1
        self.locked_value, self.locked_round = None, -1
        self.valid_value, self.valid_round = None, -1
        self.proposals.clear()
        self.prevotes.clear()
        self.precommits.clear()
        self.round_senders.clear()
        self.scheduled.clear()
        self.polka_done.clear()
        self._start_round(0, out)
        self._replay_future()

    def _replay_future(self) -> None:
        pending, self.future = self.future, []
        for m in pending:
            if m.height == self.height:
                self._record(m)
            elif m.height > self.height:
                self.future.append(m)

    def __deepcopy__(self, memo):
        cls = self.__class__
        clone = cls.__new__(cls)
        memo[id(self)] = clone
        for k, v in self.__dict__.items():
            if k.startswith("_get") or k.startswith("_is"):
                continue
            setattr(clone, k, copy.deepcopy(v, memo))
        return clone


_WAIT = object()


def handle_event(
    state: ValidatorState,
    event: Event,
    now: float = 0.0,
    get_value: Callable[[int, int], object] | None = None,
    is_valid: Callable[[object], bool] | None = None,
) -> tuple[ValidatorState, list[Output]]:
    """Pure transition: returns the successor state and the outputs, leaving ``state`` untouched."""
    nxt = copy.deepcopy(state)
    outputs = nxt.apply(event, now, get_value, is_valid)
    return nxt, outputs


def decision_consistency(logs: Mapping[str, Iterable[Decision]], honest: Iterable[str] | None = None) -> bool:
    """No two honest validators decided different values at the same height."""
    chosen: dict[int, str] = {}
    keep = set(honest) if honest is not None else None
    for vid, log in logs.items():
        if keep is not None and vid not in keep:
            continue
        seen_heights = set()
        for d in log:
            if d.height in seen_heights:
                return False
            seen_heights.add(d.height)
            if chosen.setdefault(d.height, d.value_id) != d.value_id:
                return False
    return True
