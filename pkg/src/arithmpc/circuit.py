"""Arithmetic circuits: text format, plain evaluation, and two-party shared evaluation.

Circuit text, one statement per line::

    RING zm:97          # optional header
    INPUT A x
    INPUT B y
    ONE c
    ADD s x y
    MUL p s c
    OUTPUT A p

Gates may appear in any order; they are sorted topologically and cycles are
rejected.  Shared evaluation keeps every wire additively shared between A and
B, does additions locally and reduces each multiplication to two product
sharings.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

from .harness import Session
from .pdtshr import Backend

OPS = ("add", "sub", "mul")
PARTIES = ("A", "B")
_WIRE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class CircuitError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass(frozen=True)
class Gate:
    op: str
    out: str
    in1: str = None
    in2: str = None


@dataclass
class ArithCircuit:
    inputs: list = field(default_factory=list)    # (party, wire)
    ones: list = field(default_factory=list)      # wires carrying the constant 1
    gates: list = field(default_factory=list)     # topologically sorted
    outputs: list = field(default_factory=list)   # (party, wire)
    ring: str = None

    def __post_init__(self):
        self._check()

    # ---- structure ----
    def _check(self):
        defined = {}
        for p, w in self.inputs:
            if p not in PARTIES:
                raise CircuitError(f"unknown party {p!r}")
            self._define(defined, w, "input")
        for w in self.ones:
            self._define(defined, w, "one")
        producers = {}
        for g in self.gates:
            if g.op not in OPS:
                raise CircuitError(f"unknown op {g.op!r}")
            self._define(defined, g.out, "gate")
            producers[g.out] = g
        ts = TopologicalSorter()
        for g in self.gates:
            for w in (g.in1, g.in2):
                if w not in defined:
                    raise CircuitError(f"undefined wire {w!r}")
            ts.add(g.out, *[w for w in (g.in1, g.in2) if w in producers])
        try:
            order = list(ts.static_order())
        except CycleError as e:
            raise CircuitError(f"cycle through wires {e.args[1]}") from None
        self.gates = [producers[w] for w in order if w in producers]
        for p, w in self.outputs:
            if p not in PARTIES:
                raise CircuitError(f"unknown party {p!r}")
            if w not in defined:
                raise CircuitError(f"undefined output wire {w!r}")

    @staticmethod
    def _define(defined, w, kind):
        if w in defined:
            raise CircuitError(f"wire {w!r} defined twice")
        defined[w] = kind

    @property
    def size(self):
        return len(self.gates)

    def wires(self):
        return [w for _, w in self.inputs] + list(self.ones) + [g.out for g in self.gates]

    def mult_depths(self):
        d = {w: 0 for w in self.wires()}
        for g in self.gates:
            d[g.out] = max(d[g.in1], d[g.in2]) + (g.op == "mul")
        return d

    def mult_depth(self):
        d = self.mult_depths()
        return max((d[w] for _, w in self.outputs), default=0) if self.outputs else max(d.values(), default=0)

    def depths(self):
        """Longest path length (all gates count) from the inputs."""
        d = {w: 0 for w in self.wires()}
        for g in self.gates:
            d[g.out] = max(d[g.in1], d[g.in2]) + 1
        return d

    def is_layered(self):
        d = self.depths()
        return all(d[g.in1] == d[g.out] - 1 == d[g.in2] for g in self.gates)

    def to_text(self):
        lines = [f"RING {self.ring}"] if self.ring else []
        lines += [f"INPUT {p} {w}" for p, w in self.inputs]
        lines += [f"ONE {w}" for w in self.ones]
        lines += [f"{g.op.upper()} {g.out} {g.in1} {g.in2}" for g in self.gates]
        lines += [f"OUTPUT {p} {w}" for p, w in self.outputs]
        return "\n".join(lines) + "\n"


def parse_circuit(text):
    inputs, ones, gates, outputs = [], [], [], []
    ring = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0].upper()
        arity = {"RING": 2, "INPUT": 3, "ONE": 2, "OUTPUT": 3, "ADD": 4, "SUB": 4, "MUL": 4}
        if kw not in arity:
            raise CircuitError(f"unknown statement {tok[0]!r}", no)
        if len(tok) != arity[kw]:
            raise CircuitError(f"{kw} takes {arity[kw] - 1} argument(s)", no)
        names = tok[2:] if kw in ("INPUT", "OUTPUT") else tok[1:]
        if kw != "RING":
            for w in names:
                if not _WIRE.match(w):
                    raise CircuitError(f"bad wire name {w!r}", no)
        if kw == "RING":
            if ring is not None or inputs or gates:
                raise CircuitError("RING must be the first statement", no)
            ring = tok[1]
        elif kw == "INPUT":
            inputs.append((tok[1], tok[2]))
        elif kw == "ONE":
            ones.append(tok[1])
        elif kw == "OUTPUT":
            outputs.append((tok[1], tok[2]))
        else:
            gates.append(Gate(kw.lower(), tok[1], tok[2], tok[3]))
    try:
        return ArithCircuit(inputs, ones, gates, outputs, ring)
    except CircuitError as e:
        # attach the line of the offending wire where we can find it
        raise CircuitError(str(e), _line_of(text, str(e))) from None


def _line_of(text, msg):
    m = re.search(r"'([^']+)'", msg)
    if not m:
        return None
    hits = [no for no, raw in enumerate(text.splitlines(), 1)
            if m.group(1) in raw.split("#", 1)[0].split()]
    if not hits:
        return None
    # a second definition is the offending one
    return hits[1] if "twice" in msg and len(hits) > 1 else hits[0]


# --- evaluation ------------------------------------------------------------

def eval_plain(circuit, inputs, oracle):
    """Outputs as ``{party: {wire: label}}``; every output is ``None`` on a bad input."""
    o = oracle.spawn(strict=False)
    val = {}
    bad = False
    for _, w in circuit.inputs:
        x = inputs.get(w)
        if x is None or not o.valid(x):
            bad = True
        val[w] = x
    out = {p: {} for p in PARTIES}
    if bad:
        for p, w in circuit.outputs:
            out[p][w] = None
        return out
    for w in circuit.ones:
        val[w] = o.one()
    for g in circuit.gates:
        f = {"add": o.add, "sub": o.sub, "mul": o.mul}[g.op]
        val[g.out] = f(val[g.in1], val[g.in2])
    for p, w in circuit.outputs:
        out[p][w] = val[w]
    return out


def batch_scheduler(n_instances, t):
    """Split ``n_instances`` product sharings into batches of at most ``t``."""
    if t < 1:
        raise ValueError("batch size must be positive")
    return [list(range(i, min(i + t, n_instances))) for i in range(0, n_instances, t)]


class _Counting(Backend):
    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name
        self.batch_size = inner.batch_size
        self.calls = 0
        self.instances = 0

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        self.calls += 1
        self.instances += 1
        return self.inner(session, a, b, alice=alice, bob=bob)

    def batch(self, session, avec, bvec, *, alice="A", bob="B"):
        self.calls += 1
        self.instances += len(avec)
        return self.inner.batch(session, avec, bvec, alice=alice, bob=bob)


@dataclass
class SharedEvalResult:
    outputs: dict
    stats: object
    backend_calls: int
    instances: int
    session: Session

    @property
    def rounds(self):
        return self.stats.rounds


def eval_shared(circuit, inputs, backend, oracle, seed=0, *, session=None):
    """Evaluate with A and B holding additive shares of every wire.

    Inputs are shared as ``(x, 0)`` by their owner, so sharing costs nothing;
    each output wire is opened by the other party sending its share.
    """
    s = session or Session(oracle, PARTIES, seed=seed)
    oA, oB = s["A"].oracle, s["B"].oracle
    for p, w in circuit.inputs:
        s[p].inputs[w] = inputs[w]
    sh = {}
    for p, w in circuit.inputs:
        x = inputs[w]
        if not oracle.valid(x):
            raise ValueError(f"input {w!r} is not a ring element")
        sh[w] = (x, oB.zero()) if p == "A" else (oA.zero(), x)
    for w in circuit.ones:
        sh[w] = (oA.one(), oB.zero())
    counter = _Counting(backend)
    md = circuit.mult_depths()
    by_level = {}
    for g in circuit.gates:
        by_level.setdefault(md[g.out], []).append(g)

    def local(g):
        a1, b1 = sh[g.in1]
        a2, b2 = sh[g.in2]
        if g.op == "add":
            sh[g.out] = (oA.add(a1, a2), oB.add(b1, b2))
        else:
            sh[g.out] = (oA.sub(a1, a2), oB.sub(b1, b2))

    for level in sorted(by_level):
        gates = by_level[level]
        muls = [g for g in gates if g.op == "mul"]
        if muls:
            _mul_layer(s, muls, sh, counter)
        for g in gates:
            if g.op != "mul":
                local(g)
    with s.parallel() as branch:
        for p, w in circuit.outputs:
            with branch():
                other = "B" if p == "A" else "A"
                mine = sh[w][0] if p == "A" else sh[w][1]
                theirs = s.send(other, p, sh[w][1] if p == "A" else sh[w][0])
                s[p].outputs[w] = s[p].oracle.add(mine, theirs)
    outputs = {p: dict(s[p].outputs) for p in PARTIES}
    return SharedEvalResult(outputs, s.stats(), counter.calls, counter.instances, s)


def _mul_layer(s, muls, sh, backend):
    """All multiplications of one level: two product sharings per gate, batched."""
    oA, oB = s["A"].oracle, s["B"].oracle
    commutative = oA.commutative
    # instance 2g: (xA, yB) with A on the left; 2g+1: the (xB, yA) cross term
    ab_a, ab_b, ba_a, ba_b = [], [], [], []
    for g in muls:
        xA, xB = sh[g.in1]
        yA, yB = sh[g.in2]
        ab_a.append(xA)
        ab_b.append(yB)
        if commutative:
            ab_a.append(yA)
            ab_b.append(xB)
        else:
            ba_a.append(xB)
            ba_b.append(yA)
    res_ab, res_ba = [None] * len(ab_a), [None] * len(ba_a)
    t = max(1, backend.batch_size)
    with s.parallel() as branch:
        for idx in batch_scheduler(len(ab_a), t):
            with branch():
                out = backend.batch(s, [ab_a[i] for i in idx], [ab_b[i] for i in idx])
                for i, r in zip(idx, out):
                    res_ab[i] = r
        for idx in batch_scheduler(len(ba_a), t):
            with branch():
                out = backend.batch(s, [ba_a[i] for i in idx], [ba_b[i] for i in idx],
                                    alice="B", bob="A")
                for i, r in zip(idx, out):
                    res_ba[i] = r
    for k, g in enumerate(muls):
        xA, xB = sh[g.in1]
        yA, yB = sh[g.in2]
        if commutative:
            alpha, beta = res_ab[2 * k], res_ab[2 * k + 1]
            bA, bB = beta.zA, beta.zB
        else:
            alpha, beta = res_ab[k], res_ba[k]
            bA, bB = beta.zB, beta.zA
        cA = oA.add(oA.add(oA.mul(xA, yA), alpha.zA), bA)
        cB = oB.add(oB.add(oB.mul(xB, yB), alpha.zB), bB)
        sh[g.out] = (cA, cB)


# --- random circuits -------------------------------------------------------

def random_circuit(rng, *, n_inputs=6, n_gates=32, max_mult_depth=6, ops=OPS, ones=True,
                   n_outputs=4):
    """Random DAG over ``ops`` with bounded multiplicative depth."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    inputs = [(rng.choice(PARTIES), f"i{k}") for k in range(n_inputs)]
    wires = [w for _, w in inputs]
    depth = {w: 0 for w in wires}
    one = []
    if ones:
        one = ["one"]
        wires.append("one")
        depth["one"] = 0
    gates = []
    for k in range(n_gates):
        op = rng.choice(ops)
        a, b = rng.choice(wires), rng.choice(wires)
        d = max(depth[a], depth[b]) + (op == "mul")
        if d > max_mult_depth:
            op = rng.choice([x for x in ops if x != "mul"] or ["add"])
            d = max(depth[a], depth[b])
        w = f"g{k}"
        gates.append(Gate(op, w, a, b))
        wires.append(w)
        depth[w] = d
    tail = [g.out for g in gates[-n_outputs:]] if gates else wires[:n_outputs]
    outputs = [(rng.choice(PARTIES), w) for w in tail]
    return ArithCircuit(inputs, one, gates, outputs)


def random_layered_circuit(rng, *, layers=3, width=8, n_inputs=None, ops=OPS, n_outputs=None):
    """Circuit whose gates in layer h read only wires of layer h-1."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    n_inputs = width if n_inputs is None else n_inputs
    inputs = [(PARTIES[k % 2], f"i{k}") for k in range(n_inputs)]
    prev = [w for _, w in inputs]
    gates = []
    for h in range(1, layers + 1):
        cur = []
        for k in range(width):
            w = f"l{h}_{k}"
            gates.append(Gate(rng.choice(ops), w, rng.choice(prev), rng.choice(prev)))
            cur.append(w)
        prev = cur
    n_outputs = len(prev) if n_outputs is None else n_outputs
    outputs = [(rng.choice(PARTIES), w) for w in prev[:n_outputs]]
    return ArithCircuit(inputs, [], gates, outputs)
