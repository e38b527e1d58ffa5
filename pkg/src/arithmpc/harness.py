"""OT-hybrid execution harness.

A :class:`Session` runs a protocol between named in-process parties.  Every
message and every call to the ideal OT functionality is appended to the
transcript, so communication can be counted and replayed.  Parties hold
erasable memory; :func:`capture_view` reports what a passive adversary
corrupting a party would see at that moment.

Round numbers are causal: a message is stamped one past the sender's clock,
and receiving a message advances the receiver's clock.  Independent
sub-protocols can be declared parallel so that running them one after another
in Python does not inflate the round count.
"""
from __future__ import annotations

import csv
import io
import json
import random
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

from .ring import Abort

ELEMENT_KINDS = ("ring_elems", "code", "ciphertexts", "bits", "ot")


@dataclass
class Message:
    round: int
    sender: str
    receiver: str
    kind: str
    count: int
    ot_type: str = None

    def record(self):
        return {"round": self.round, "from": self.sender, "to": self.receiver,
                "kind": self.kind, "count": self.count}


@dataclass
class View:
    party: str
    inputs: dict
    tape: str
    memory: dict
    outputs: dict

    def values(self):
        """Every value a corrupt party could read, flattened."""
        out = []

        def walk(v):
            if isinstance(v, (list, tuple)):
                for x in v:
                    walk(x)
            elif isinstance(v, dict):
                for x in v.values():
                    walk(x)
            else:
                out.append(v)

        walk(self.inputs)
        walk(self.memory)
        walk(self.outputs)
        return out


class Party:
    def __init__(self, session, name, oracle, seed):
        self.session = session
        self.name = name
        self.oracle = oracle
        self.tape = seed
        self.inputs = {}
        self.memory = {}
        self.outputs = {}
        self.clock = 0
        self._scope = ()
        self._recv = 0

    def __repr__(self):
        return f"Party({self.name!r})"

    @property
    def rng(self):
        return self.oracle.rng

    def remember(self, key, value):
        self.memory[(self._scope, key)] = value
        return value

    def recall(self, key):
        return self.memory[(self._scope, key)]

    @contextmanager
    def scope(self, name):
        """Run a sub-protocol with its own random tape and memory region."""
        path = self._scope + (name,)
        self.session._scope_counter += 1
        seed = f"{self.session.seed}:{self.name}:{'/'.join(path)}:{self.session._scope_counter}"
        old_scope, old_rng = self._scope, self.oracle.rng
        self._scope = path
        self.remember("tape", seed)
        self.oracle.rng = random.Random(seed)
        try:
            yield self
        finally:
            self._scope = old_scope
            self.oracle.rng = old_rng

    def erase(self, name):
        """Overwrite and drop every memory cell written inside scope ``name``."""
        path = self._scope + (name,)
        doomed = [k for k in self.memory if k[0][:len(path)] == path]
        for k in doomed:
            self.memory[k] = None
        for k in doomed:
            del self.memory[k]

    def receive(self, payload, kind):
        self._recv += 1
        self.remember(f"recv:{self._recv}:{kind}", payload)


def _count(payload):
    if isinstance(payload, (list, tuple)):
        return sum(_count(x) for x in payload)
    return 1


@dataclass
class PartyStats:
    elements_sent: int = 0
    code_elements_sent: int = 0
    ciphertexts_sent: int = 0
    bits_sent: int = 0
    ot_elements_sent: int = 0
    ot_invocations: int = 0
    ot_1of2_equivalent: int = 0
    oracle_calls: int = 0


@dataclass
class CommStats:
    parties: dict = field(default_factory=dict)
    rounds: int = 0

    def total(self, name):
        return sum(getattr(p, name) for p in self.parties.values())

    @property
    def elements_transmitted(self):
        return self.total("elements_sent")

    @property
    def ot_elements(self):
        return self.total("ot_elements_sent")

    @property
    def ot_invocations(self):
        # every OT call involves both parties; count it once
        return sum(p.ot_invocations for p in self.parties.values()) // 2

    @property
    def ot_1of2_equivalent(self):
        return sum(p.ot_1of2_equivalent for p in self.parties.values()) // 2

    @property
    def oracle_calls(self):
        return self.total("oracle_calls")

    @property
    def ciphertexts(self):
        return self.total("ciphertexts_sent")

    @property
    def code_elements(self):
        return self.total("code_elements_sent")

    def as_dict(self):
        return {"rounds": self.rounds,
                "elements_transmitted": self.elements_transmitted,
                "ot_elements": self.ot_elements,
                "code_elements": self.code_elements,
                "ciphertexts": self.ciphertexts,
                "ot_invocations": self.ot_invocations,
                "ot_1of2_equivalent": self.ot_1of2_equivalent,
                "oracle_calls": self.oracle_calls,
                "parties": {k: asdict(v) for k, v in self.parties.items()}}


class Session:
    """One protocol execution between named parties sharing a ring oracle."""

    def __init__(self, oracle, parties=("A", "B"), seed=0, tamper=None):
        self.oracle = oracle
        self.seed = seed
        self.tamper = tamper
        self.transcript = []
        self.ot_log = []
        # long-lived per-run setup such as key pairs
        self.cache = {}
        self._scope_counter = 0
        self.parties = {}
        for name in parties:
            tape = f"{seed}:{name}"
            self.parties[name] = Party(self, name, oracle.spawn(random.Random(tape), strict=True), tape)
        self.public_coin = random.Random(f"{seed}:coin")
        # the random-field-element oracle everyone can query; not charged to any party
        self.coin = oracle.spawn(random.Random(f"{seed}:coin-elems"), strict=True)

    def __getitem__(self, name):
        return self.parties[name]

    # ---- messaging ----
    def _stamp(self, sender, receiver, rnd):
        self.parties[sender].clock = max(self.parties[sender].clock, rnd)
        self.parties[receiver].clock = max(self.parties[receiver].clock, rnd)

    def send(self, sender, receiver, payload, kind="ring_elems", count=None):
        if kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown payload kind {kind!r}")
        count = _count(payload) if count is None else count
        rnd = self.parties[sender].clock + 1
        msg = Message(rnd, sender, receiver, kind, count)
        self.transcript.append(msg)
        self.parties[receiver].clock = max(self.parties[receiver].clock, rnd)
        if kind == "ring_elems":
            self.parties[sender].oracle.counter.elements_transmitted += count
        if self.tamper is not None:
            payload = self.tamper(msg, payload)
        self.parties[receiver].receive(payload, kind)
        return payload

    def broadcast(self, sender, payload, kind="ring_elems", to=None):
        """Atomic broadcast: one transcript record (receiver ``*``), delivered to all."""
        if kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown payload kind {kind!r}")
        targets = to if to is not None else [p for p in self.parties if p != sender]
        count = _count(payload)
        rnd = self.parties[sender].clock + 1
        msg = Message(rnd, sender, "*", kind, count)
        self.transcript.append(msg)
        if kind == "ring_elems":
            self.parties[sender].oracle.counter.elements_transmitted += count
        if self.tamper is not None:
            payload = self.tamper(msg, payload)
        for r in targets:
            self.parties[r].clock = max(self.parties[r].clock, rnd)
            self.parties[r].receive(payload, kind)
        return payload

    # ---- ideal OT ----
    def ot_1of2(self, sender, receiver, m0, m1, choice):
        """Receiver learns ``m_choice``; the sender's state gains nothing."""
        rnd = max(self.parties[sender].clock, self.parties[receiver].clock) + 1
        # the empty side of a decomposed k-of-n carries no element
        count = (m0 is not None) + (m1 is not None)
        msg = Message(rnd, sender, receiver, "ot", count, ot_type="1of2")
        self.transcript.append(msg)
        self.ot_log.append(("1of2", count, 1))
        self._stamp(sender, receiver, rnd)
        for p in (sender, receiver):
            self.parties[p].oracle.counter.ot_invocations += 1
        out = m1 if choice else m0
        if self.tamper is not None:
            out = self.tamper(msg, out)
        self.parties[receiver].receive(out, "ot")
        return out

    def ot_kofn(self, sender, receiver, msgs, subset, mode="monolithic"):
        """Receiver learns ``msgs[i]`` for ``i`` in ``subset`` (0-based)."""
        msgs = list(msgs)
        n = len(msgs)
        subset = list(subset)
        if len(subset) > n or any(not 0 <= i < n for i in subset):
            raise IndexError("OT index out of range")
        if mode == "decomposed":
            chosen = set(subset)
            got = {}
            with self.parallel() as branch:
                for i, m in enumerate(msgs):
                    with branch():
                        got[i] = self.ot_1of2(sender, receiver, None, m, i in chosen)
            return [got[i] for i in subset]
        if mode != "monolithic":
            raise ValueError(f"unknown OT mode {mode!r}")
        rnd = max(self.parties[sender].clock, self.parties[receiver].clock) + 1
        msg = Message(rnd, sender, receiver, "ot", n, ot_type=f"{len(subset)}of{n}")
        self.transcript.append(msg)
        self.ot_log.append(("kofn", n, len(subset)))
        self._stamp(sender, receiver, rnd)
        for p in (sender, receiver):
            self.parties[p].oracle.counter.ot_invocations += 1
        out = [msgs[i] for i in subset]
        if self.tamper is not None:
            out = self.tamper(msg, out)
        self.parties[receiver].receive(out, "ot")
        return out

    # ---- scheduling ----
    @contextmanager
    def parallel(self):
        """Declare the enclosed branches independent for round counting.

        Usage::

            with session.parallel() as branch:
                for job in jobs:
                    with branch():
                        run(job)
        """
        start = {p: party.clock for p, party in self.parties.items()}
        ends = []

        @contextmanager
        def branch():
            for p, c in start.items():
                self.parties[p].clock = c
            try:
                yield
            finally:
                ends.append({p: party.clock for p, party in self.parties.items()})

        try:
            yield branch
        finally:
            for p in self.parties:
                self.parties[p].clock = max([start[p]] + [e[p] for e in ends])

    # ---- accounting ----
    def stats(self):
        st = CommStats()
        for name, party in self.parties.items():
            st.parties[name] = PartyStats(oracle_calls=party.oracle.counter.oracle_calls)
        for m in self.transcript:
            s, r = st.parties[m.sender], st.parties.get(m.receiver)
            if m.kind == "ring_elems":
                s.elements_sent += m.count
            elif m.kind == "code":
                s.code_elements_sent += m.count
            elif m.kind == "ciphertexts":
                s.ciphertexts_sent += m.count
            elif m.kind == "bits":
                s.bits_sent += m.count
            else:
                s.ot_elements_sent += m.count
                for p in (s, r):
                    p.ot_invocations += 1
                    p.ot_1of2_equivalent += 1 if m.ot_type == "1of2" else int(m.ot_type.split("of")[1])
        st.rounds = max((m.round for m in self.transcript), default=0)
        return st

    def transcript_jsonl(self):
        return "".join(json.dumps(m.record(), sort_keys=True) + "\n" for m in self.transcript)


def capture_view(party):
    """Input tape, random tape and every non-erased memory cell of ``party``."""
    mem = {("/".join(k[0]) + ":" if k[0] else "") + k[1]: v for k, v in party.memory.items()}
    return View(party.name, dict(party.inputs), party.tape, mem, dict(party.outputs))


@dataclass
class RunResult:
    outputs: dict
    transcript: list
    stats: CommStats
    abort: Abort = None
    session: Session = None

    @property
    def aborted(self):
        return self.abort is not None

    def transcript_jsonl(self):
        return self.session.transcript_jsonl()


PROTOCOLS = {}


def register(name):
    def deco(fn):
        PROTOCOLS[name] = fn
        return fn
    return deco


def run_protocol(spec, oracle, inputs, seed=0, *, parties=None, tamper=None, **params):
    """Run a registered (or callable) protocol and collect outputs, transcript and stats.

    ``inputs`` maps party name to a dict of named input values.  The protocol
    callable receives the session plus ``params`` and writes party outputs.
    An :class:`Abort` raised anywhere becomes ``RunResult.abort``.
    """
    fn = PROTOCOLS[spec] if isinstance(spec, str) else spec
    names = parties or tuple(inputs) or ("A", "B")
    session = Session(oracle, names, seed=seed, tamper=tamper)
    for name, vals in inputs.items():
        session[name].inputs.update(vals)
    abort = None
    try:
        fn(session, **params)
    except Abort as e:
        abort = e
    outputs = {name: dict(p.outputs) for name, p in session.parties.items()}
    return RunResult(outputs, list(session.transcript), session.stats(), abort, session)


def stats_csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: row.get(c, "") for c in columns})
    return buf.getvalue()
