"""Command-line front end.

Exit codes: 0 success, 1 protocol abort, 2 bad parameters, 3 a correctness
check failed.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import codes, homenc, packed
from .circuit import eval_plain, eval_shared, parse_circuit
from .harness import PROTOCOLS, Session, run_protocol, stats_csv
from .pdtshr import Ideal, Rho, Sigma, Tau, Wrapped
from .ring import Abort, parse_ring

BIG_PRIME = "gf:2305843009213693951"

BENCH_COLUMNS = ["protocol", "ring", "params", "trials", "elements_transmitted", "ot_elements",
                 "code_elements", "ciphertexts", "elements_per_product", "oracle_calls",
                 "ot_invocations", "rounds", "wall_time_ms", "correctness_pass_rate"]

PDT_PROTOCOLS = ["rho", "sigma", "sigma-ring", "sigma-slwalk", "tau", "theta", "psi",
                 "wrapped-rho", "wrapped-sigma", "wrapped-theta"]


class ParamError(Exception):
    pass


# --- helpers ---------------------------------------------------------------

def _plain(o, lab):
    x = o.decode(lab) if lab is not None else None
    return list(x) if isinstance(x, tuple) else x


def _label(o, v):
    if isinstance(v, list):
        return o.encode(tuple(int(x) % o.params["m"] for x in v))
    return o.from_int(int(v))


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    return x


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(args, text, default=None):
    path = args.out or default
    if path and path != "-":
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _ring(spec, seed=0):
    try:
        return parse_ring(spec, seed=seed)
    except ValueError as e:
        raise ParamError(str(e)) from None


def make_backend(name, args):
    k = getattr(args, "k", None)
    stat_k = getattr(args, "stat_k", None)
    if name.startswith("wrapped-"):
        return Wrapped(make_backend(name[len("wrapped-"):], args))
    if name == "rho":
        return Rho(n=getattr(args, "n", None), k=stat_k or 40)
    if name in ("sigma", "sigma-ring", "sigma-slwalk"):
        scheme = {"sigma": "rand", "sigma-ring": "ring", "sigma-slwalk": "slwalk"}[name]
        return Sigma(scheme, k=k or 8)
    if name == "tau":
        return Tau(k=k or 8, c=getattr(args, "c", None) or 8, t=getattr(args, "t", None))
    if name == "theta":
        return homenc.Theta()
    if name == "psi":
        return homenc.Psi(k=stat_k or 40)
    if name == "ideal":
        return Ideal()
    raise ParamError(f"unknown backend {name!r}")


# --- product-sharing trials ------------------------------------------------

def _trial(job):
    """One seeded product-sharing run; module level so it can run in a worker."""
    name, ring_spec, params, seed, i = job
    o = parse_ring(ring_spec)
    ns = argparse.Namespace(**params)
    be = make_backend(name, ns)
    s = Session(o, seed=f"{seed}:{i}")
    src = o.spawn(random.Random(f"{seed}:{i}:inputs"))
    count = be.batch_size if name == "tau" else 1
    a = [src.sample() for _ in range(count)]
    b = [src.sample() for _ in range(count)]
    t0 = time.perf_counter()
    outs = be.batch(s, a, b) if name == "tau" else [be(s, a[0], b[0])]
    ms = (time.perf_counter() - t0) * 1000
    ok = all(out.total(o) == o.mul(x, y) for out, x, y in zip(outs, a, b))
    st = s.stats()
    return {"ok": ok, "products": count, "ms": ms, "elements_transmitted": st.elements_transmitted,
            "ot_elements": st.ot_elements, "code_elements": st.code_elements,
            "ciphertexts": st.ciphertexts, "oracle_calls": st.oracle_calls,
            "ot_invocations": st.ot_invocations, "rounds": st.rounds}


def run_trials(name, ring_spec, params, trials, seed, jobs=1):
    jobs_list = [(name, ring_spec, params, seed, i) for i in range(trials)]
    if jobs > 1 and trials > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_trial, jobs_list))
    return [_trial(j) for j in jobs_list]


def bench_row(name, ring_spec, params, results, timing=False):
    n = len(results)
    tot = {k: sum(r[k] for r in results) for k in
           ("elements_transmitted", "ot_elements", "code_elements", "ciphertexts", "oracle_calls",
            "ot_invocations", "rounds", "products")}
    per_product = Fraction(tot["elements_transmitted"] + tot["ot_elements"], tot["products"] or 1)
    shown = ";".join(f"{k}={v}" for k, v in sorted(params.items()) if v is not None)
    row = {"protocol": name, "ring": ring_spec, "params": shown, "trials": n,
           "elements_per_product": _fmt(float(per_product)),
           "wall_time_ms": _fmt(sum(r["ms"] for r in results) / n) if timing else "",
           "correctness_pass_rate": _fmt(sum(r["ok"] for r in results) / n)}
    for k in ("elements_transmitted", "ot_elements", "code_elements", "ciphertexts",
              "oracle_calls", "ot_invocations", "rounds"):
        row[k] = _fmt(tot[k] / n)
    return row


def _pdt_params(args):
    return {"n": args.n, "k": args.k, "c": args.c, "t": args.t, "stat_k": args.stat_k}


def cmd_bench(args):
    ring = args.ring or BIG_PRIME
    _ring(ring)
    if args.trials < 1:
        raise ParamError("--trials must be positive")
    rows, failed = [], False
    for name in args.protocol:
        params = _pdt_params(args)
        try:
            res = run_trials(name, ring, params, args.trials, args.seed, args.jobs)
        except ValueError as e:
            raise ParamError(f"{name}: {e}") from None
        row = bench_row(name, ring, params, res, args.timing)
        failed |= not all(r["ok"] for r in res)
        rows.append(row)
    text = stats_csv(rows, BENCH_COLUMNS) if args.format == "csv" else _dump(rows)
    _write(args, text)
    return 3 if failed else 0


def cmd_pdtshr(args):
    ring = args.ring or BIG_PRIME
    _ring(ring)
    params = _pdt_params(args)
    try:
        res = run_trials(args.protocol, ring, params, args.trials, args.seed, args.jobs)
    except ValueError as e:
        raise ParamError(str(e)) from None
    row = bench_row(args.protocol, ring, params, res, args.timing)
    if args.stats:
        with open(args.stats, "w") as f:
            f.write(stats_csv([row], BENCH_COLUMNS))
    _write(args, _dump(row))
    return 0 if all(r["ok"] for r in res) else 3


# --- single registered run -------------------------------------------------

def _run_inputs(name, o, seed, args):
    src = o.spawn(random.Random(f"{seed}:inputs"))
    if name == "tau":
        t = args.t or (args.k or 8) // 2
        return {"A": {"a": [src.sample() for _ in range(t)]}, "B": {"b": [src.sample() for _ in range(t)]}}
    if name == "degree2":
        return {p: {"x": src.sample(), "y": src.sample()} for p in ("A", "B")}
    if name == "multiparty":
        return {f"P{i}": {"x": src.sample(), "y": src.sample()} for i in range(1, args.parties + 1)}
    return {"A": {"a": src.sample()}, "B": {"b": src.sample()}}


def _expected(name, o, inputs):
    if name == "tau":
        return [o.mul(x, y) for x, y in zip(inputs["A"]["a"], inputs["B"]["b"])]
    if name in ("degree2", "multiparty"):
        xs = [v["x"] for v in inputs.values()]
        ys = [v["y"] for v in inputs.values()]
        sx, sy = xs[0], ys[0]
        for x, y in zip(xs[1:], ys[1:]):
            sx, sy = o.add(sx, x), o.add(sy, y)
        return o.mul(sx, sy)
    return o.mul(inputs["A"]["a"], inputs["B"]["b"])


def cmd_run(args):
    o = _ring(args.ring)
    name = args.protocol
    inputs = _run_inputs(name, o, args.seed, args)
    params = {}
    if name == "rho":
        params = {"n": args.n, "k": args.stat_k or 40}
    elif name in ("sigma", "sigma-ring"):
        params = {"k": args.k or 8}
    elif name == "tau":
        params = {"k": args.k or 8, "c": args.c or 8}
    elif name in ("degree2", "multiparty", "wrapped"):
        params = {"backend" if name != "wrapped" else "inner": make_backend(args.backend, args)}
    try:
        res = run_protocol(name, o, inputs, seed=args.seed, **params)
    except ValueError as e:
        raise ParamError(str(e)) from None
    if args.transcript:
        with open(args.transcript, "w") as f:
            f.write(res.transcript_jsonl())
    if args.stats:
        with open(args.stats, "w") as f:
            f.write(stats_csv([_flat_stats(res.stats)], list(_flat_stats(res.stats))))
    report = {"protocol": name, "ring": args.ring, "seed": args.seed,
              "stats": res.stats.as_dict()}
    if res.aborted:
        report["abort"] = res.abort.to_dict()
        _write(args, _dump(report))
        return 1
    key = "c" if name in ("degree2", "multiparty") else "z"
    outs = {p: v[key] for p, v in res.outputs.items()}
    report["outputs"] = {p: ([_plain(o, x) for x in v] if isinstance(v, list) else _plain(o, v))
                         for p, v in outs.items()}
    if name == "tau":
        total = [o.add(x, y) for x, y in zip(outs["A"], outs["B"])]
    else:
        total = outs[next(iter(outs))]
        for p in list(outs)[1:]:
            total = o.add(total, outs[p])
    report["correct"] = total == _expected(name, o, inputs)
    _write(args, _dump(report))
    return 0 if report["correct"] else 3


def _flat_stats(st):
    d = st.as_dict()
    d.pop("parties")
    return d


# --- distances ---------------------------------------------------------------

def _rational(fr):
    return {"numerator": fr.numerator, "denominator": fr.denominator, "value": f"{float(fr):.12g}",
            "text": f"{fr.numerator}/{fr.denominator}"}


def cmd_distance(args):
    if args.kind == "stat":
        if args.n is None or args.n < 1:
            raise ParamError("--n must be at least 1")
        o = _ring(args.ring or "zm:2")
        xs = [o.from_int(args.x)] if args.x is not None else o.elements()
        try:
            ds = {_plain(o, x): codes.stat_distance_bruteforce(o, args.n, x) for x in xs}
        except ValueError as e:
            raise ParamError(str(e)) from None
        worst = max(ds.values())
        report = {"kind": "stat", "ring": args.ring or "zm:2", "n": args.n,
                  "per_x": {str(k): _rational(v) for k, v in ds.items()},
                  "distance": _rational(worst), "x_independent": len(set(ds.values())) == 1}
    else:
        if args.M is None or args.stat_k is None and args.k is None:
            raise ParamError("--M and --k are required")
        k = args.stat_k if args.stat_k is not None else args.k
        try:
            if None not in (args.a, args.b, args.r):
                d = homenc.blinding_distance_bruteforce(args.M, k, args.a, args.b, args.r)
                scope = {"a": args.a, "b": args.b, "r": args.r}
            else:
                d = homenc.blinding_distance_worst(args.M, k)
                scope = "worst-case"
        except ValueError as e:
            raise ParamError(str(e)) from None
        report = {"kind": "psi", "M": args.M, "k": k, "over": scope, "distance": _rational(d),
                  "bound": _rational(Fraction(1, 2**k)), "within_bound": d <= Fraction(1, 2**k)}
    _write(args, _dump(report))
    return 0


# --- codes -----------------------------------------------------------------

def cmd_codes(args):
    o = _ring(args.ring or ("gf:97" if args.scheme in ("rand", "rs") else "zm:6"), seed=args.seed)
    try:
        if args.scheme == "rs":
            code = codes.gen_rs_code(o, args.k, args.c or 8, t=args.t, eval_points=args.eval_points)
        elif args.scheme == "slwalk":
            code = codes.gen_slwalk_code(o, args.k, steps=args.steps)
        else:
            code = codes.GENERATORS[args.scheme](o, args.k)
    except ValueError as e:
        raise ParamError(str(e)) from None
    if args.json or not args.out:
        text = json.dumps(codes.code_to_json(code), sort_keys=True) + "\n"
        if args.out and args.json:
            with open(args.out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    if args.out and not args.json:
        with open(args.out, "wb") as f:
            f.write(codes.dump_code(code))
    return 0


# --- circuits --------------------------------------------------------------

def _load_circuit(path):
    try:
        with open(path) as f:
            return parse_circuit(f.read())
    except (OSError, ValueError) as e:
        raise ParamError(str(e)) from None


def _load_inputs(path, circuit, o):
    if path:
        with open(path) as f:
            raw = json.load(f)
    else:
        raw = {}
    missing = [w for _, w in circuit.inputs if w not in raw]
    if missing:
        raise ParamError(f"missing inputs: {', '.join(missing)}")
    return {w: _label(o, raw[w]) for _, w in circuit.inputs}


def cmd_eval(args):
    circuit = _load_circuit(args.circuit)
    o = _ring(args.ring or circuit.ring or BIG_PRIME)
    inputs = _load_inputs(args.inputs, circuit, o)
    be = make_backend(args.backend, args)
    try:
        res = eval_shared(circuit, inputs, be, o, args.seed)
    except ValueError as e:
        raise ParamError(str(e)) from None
    except Abort as e:
        _write(args, _dump({"abort": e.to_dict()}))
        return 1
    plain = eval_plain(circuit, inputs, o)
    report = {"backend": args.backend, "ring": o.id.id, "mult_depth": circuit.mult_depth(),
              "gates": circuit.size, "backend_calls": res.backend_calls,
              "outputs": {p: {w: _plain(o, v) for w, v in sorted(ws.items())}
                          for p, ws in res.outputs.items()},
              "matches_plain": res.outputs == plain, "stats": _flat_stats(res.stats)}
    _write(args, _dump(report))
    return 0 if report["matches_plain"] else 3


def cmd_outer(args):
    circuit = _load_circuit(args.circuit)
    o = _ring(args.ring or circuit.ring or "gf:97")
    try:
        params = packed.PackedParams(o, args.servers, args.block, args.degree)
        corrupt = packed.parse_corrupt(args.corrupt)
    except ValueError as e:
        raise ParamError(str(e)) from None
    inputs = _load_inputs(args.inputs, circuit, o)
    res = packed.run_outer_protocol(circuit, inputs, params, seed=args.seed, mode=args.mode,
                                    coin=args.coin, corrupt=corrupt,
                                    boolean_inputs=args.boolean_inputs)
    report = {"ring": o.id.id, "servers": params.n, "block": params.ell, "degree": params.delta,
              "depth": res.plan.depth, "stats": _flat_stats(res.stats)}
    if res.aborted:
        report["abort"] = res.abort.to_dict()
        _write(args, _dump(report))
        return 1
    plain = eval_plain(circuit, inputs, o)
    report["outputs"] = {p: {w: _plain(o, v) for w, v in sorted(ws.items())}
                         for p, ws in res.outputs.items()}
    report["matches_plain"] = res.outputs == plain
    _write(args, _dump(report))
    return 0 if report["matches_plain"] else 3


# --- argument parsing ------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="u64 seed (default 0)")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="parallel trials")
    p.add_argument("--out", default=argparse.SUPPRESS, help="write the report here")
    return p


def _pdt_flags(p):
    p.add_argument("--ring", help="zm:<m>, gf:<p> or mat:<m>:<dim>")
    p.add_argument("--n", type=int, help="rho: encoding length")
    p.add_argument("--k", type=int, help="code dimension (sigma, tau)")
    p.add_argument("--c", type=int, help="tau: rate constant")
    p.add_argument("--t", type=int, help="tau: products per run")
    p.add_argument("--stat-k", type=int, help="statistical parameter (rho default n, psi)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--timing", action="store_true", help="fill wall_time_ms (not reproducible)")


def build_parser():
    common = _common()
    ap = argparse.ArgumentParser(prog="arithmpc", parents=[common],
                                 description="Secure arithmetic computation over black-box rings.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one registered protocol")
    p.add_argument("--protocol", required=True, choices=sorted(PROTOCOLS))
    p.add_argument("--ring", default="zm:97")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--stat-k", type=int)
    p.add_argument("--backend", default="rho", help="inner backend for degree2/multiparty/wrapped")
    p.add_argument("--parties", type=int, default=3)
    p.add_argument("--stats", help="CSV file for communication stats")
    p.add_argument("--transcript", help="JSON-lines transcript file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", parents=[common], help="benchmark product-sharing protocols")
    p.add_argument("--protocol", required=True, action="append", choices=PDT_PROTOCOLS)
    _pdt_flags(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("pdtshr", parents=[common], help="run product-sharing trials")
    p.add_argument("--protocol", required=True, choices=PDT_PROTOCOLS)
    _pdt_flags(p)
    p.add_argument("--stats", help="CSV file for the report row")
    p.set_defaults(func=cmd_pdtshr)

    p = sub.add_parser("distance", parents=[common], help="exact brute-force distances")
    p.add_argument("kind", choices=("stat", "psi"))
    p.add_argument("--ring")
    p.add_argument("--n", type=int)
    p.add_argument("--x", type=int, help="stat: encoded element (default: all)")
    p.add_argument("--M", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--stat-k", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--r", type=int)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("codes", parents=[common], help="noisy linear codes")
    csub = p.add_subparsers(dest="codes_cmd", required=True)
    g = csub.add_parser("gen", parents=[common], help="generate (G, H, L)")
    g.add_argument("--scheme", required=True, choices=("rand", "ring", "rs", "slwalk"))
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--c", type=int)
    g.add_argument("--t", type=int)
    g.add_argument("--ring")
    g.add_argument("--steps", type=int)
    g.add_argument("--eval-points", choices=("random", "structured"), default="random")
    g.add_argument("--json", action="store_true", help="JSON debug dump instead of the binary container")
    g.set_defaults(func=cmd_codes)

    p = sub.add_parser("eval", parents=[common], help="two-party shared circuit evaluation")
    p.add_argument("--circuit", required=True)
    p.add_argument("--ring")
    p.add_argument("--backend", default="rho",
                   choices=PDT_PROTOCOLS + ["ideal"])
    p.add_argument("--inputs")
    p.add_argument("--k", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--stat-k", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("outer", parents=[common], help="packed-sharing server protocol")
    p.add_argument("--circuit", required=True)
    p.add_argument("--ring")
    p.add_argument("--servers", type=int, default=16)
    p.add_argument("--block", type=int)
    p.add_argument("--degree", type=int)
    p.add_argument("--corrupt", default="", help="stage:count[,...]; stages " + ", ".join(packed.CORRUPT_STAGES))
    p.add_argument("--inputs")
    p.add_argument("--mode", choices=("typewise", "inner-product"), default="typewise")
    p.add_argument("--coin", choices=("public", "client"), default="public")
    p.add_argument("--boolean-inputs", action="store_true")
    p.set_defaults(func=cmd_outer)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    for name, default in (("seed", 0), ("jobs", 1), ("out", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except ParamError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
