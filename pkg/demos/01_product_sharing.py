# %% [markdown]
# Product sharing over a black-box ring.
# Alice holds a, Bob holds b; afterwards they hold zA + zB = a*b and nothing else.

# %%
from arithmpc import Rho, Sigma, Tau, Wrapped, Session, parse_ring
from arithmpc.homenc import Psi, Theta

o = parse_ring("gf:2305843009213693951")
a, b = o.from_int(1234), o.from_int(5678)

# %%
for be in [Rho(), Sigma("rand"), Sigma("ring"), Theta(), Psi(), Wrapped(Rho())]:
    s = Session(o, seed=1)
    out = be(s, a, b)
    st = s.stats()
    print(f"{be.name:12} ok={out.total(o) == o.mul(a, b)}  elems={st.elements_transmitted:4}"
          f"  ot_elems={st.ot_elements:4}  code={st.code_elements:4}  ctxt={st.ciphertexts}"
          f"  rounds={st.rounds}")

# %% [markdown]
# tau packs t products into one Reed-Solomon encoding.
# With k=8, c=8 it sends n=64 elements and gets 64 back through one 15-of-64 OT,
# so four products cost 32 elements each.

# %%
s = Session(o, seed=2)
xs = [o.from_int(v) for v in (2, 3, 5, 7)]
ys = [o.from_int(v) for v in (11, 13, 17, 19)]
outs = Tau(k=8, c=8, t=4).batch(s, xs, ys)
print([o.decode(x.total(o)) for x in outs])
st = s.stats()
print("elements per product:", (st.elements_transmitted + st.ot_elements) / 4)

# %% [markdown]
# Matrices are fine for rho and the wrapper; the left factor stays on the left.

# %%
m = parse_ring("mat:5:2")
x, y = m.encode((1, 2, 3, 4)), m.encode((0, 1, 1, 0))
out = Rho()(Session(m), x, y)
print(m.decode(out.total(m)), "==", m.decode(m.mul(x, y)))
