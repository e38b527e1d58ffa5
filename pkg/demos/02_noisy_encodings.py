# %% [markdown]
# Noisy encodings and the exact distances behind them.

# %%
from fractions import Fraction

from arithmpc import codes, homenc, parse_ring

z2 = parse_ring("zm:2")
for n in range(1, 6):
    d = codes.stat_distance_bruteforce(z2, n, z2.one())
    print(n, d, float(d), "bound", 2 ** (-(n - 1) / 2))

# %% [markdown]
# The distance does not depend on the encoded element.

# %%
print(codes.stat_distance_bruteforce(z2, 4, z2.zero()) == codes.stat_distance_bruteforce(z2, 4, z2.one()))

# %% [markdown]
# Linear codes: H inverts G on the clean coordinates L.

# %%
from arithmpc import linalg as la

for scheme, spec in [("rand", "gf:97"), ("ring", "zm:6"), ("slwalk", "zm:6")]:
    o = parse_ring(spec, seed=3)
    c = codes.GENERATORS[scheme](o, 6)
    print(scheme, la.matmul(o, c.H, [c.G[i] for i in c.L]) == la.identity(o, 6))

# %% [markdown]
# The psi blinding: ab + r + sM against (ab + r mod M) + sM.

# %%
for k in range(2, 5):
    d = homenc.blinding_distance_worst(3, k)
    print(k, d, d <= Fraction(1, 2**k))
