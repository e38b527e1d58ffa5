# %% [markdown]
# Two clients, sixteen servers, packed Shamir blocks of four.

# %%
from arithmpc import PackedParams, eval_plain, parse_circuit, parse_ring, run_outer_protocol

o = parse_ring("gf:97")
p = PackedParams(o, 16, 4, 5)
print(p, "privacy threshold t =", p.t)

c = parse_circuit("""
INPUT A x1
INPUT A x2
INPUT B y1
INPUT B y2
ONE one
MUL m1 x1 y1
MUL m2 x2 y2
ADD s m1 m2
ADD r s one
OUTPUT A r
OUTPUT B s
""")
ins = {w: o.from_int(v) for w, v in {"x1": 3, "x2": 4, "y1": 5, "y2": 6}.items()}

# %%
res = run_outer_protocol(c, ins, p, seed=1)
print({q: {w: o.decode(v) for w, v in ws.items()} for q, ws in res.outputs.items()})
print(res.outputs == eval_plain(c, ins, o), res.stats.elements_transmitted, "elements,",
      res.stats.rounds, "rounds")

# %% [markdown]
# A corrupted server at any stage ends in an abort naming who complained.

# %%
for stage in ["share", "reveal", "reshare", "output"]:
    res = run_outer_protocol(c, ins, p, seed=1, corrupt=f"{stage}:1")
    print(stage, res.abort_json())

# %% [markdown]
# Boolean inputs can be enforced: a - a*a must open to zero.

# %%
bad = dict(ins, x1=o.from_int(3))
print(run_outer_protocol(c, bad, p, boolean_inputs=True).abort_json())
