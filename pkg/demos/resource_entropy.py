"""
How much trusted randomness does a reduction need?
==================================================

The entropy sum H_max(U|V) + H_max(V|U) of a resource can only be met by
enough independent copies. We compare a few resources with the minimum
required for inner product and string OT.
"""

import math

from qsfe import bounds
from qsfe.functions import builtin, concealment_t
from qsfe.primitives import entropy_sum, min_sufficient_stat, oblivious_key, power, rabin_key

# oblivious keys: (n-1)k + log2 n, additive over copies
for n, k in [(2, 1), (2, 3), (4, 1), (4, 2)]:
    print(f"oblivious_key({n},{k}): entropy sum {entropy_sum(oblivious_key(n, k)):.4f}"
          f"  (formula {(n - 1) * k + math.log2(n):.4f})")
print("three copies of oblivious_key(2,1):", entropy_sum(power(oblivious_key(2, 1), 3)))

# a Rabin key is already in reduced form
P = rabin_key(0.5, 1)
print("rabin key reduced support:", min_sufficient_stat(P).support_size, "of", P.support_size)

# inner product mod 2 needs about n-1 bit-OTs' worth of entropy
for n in (3, 6, 10):
    t = concealment_t(builtin("ip", n=n))
    rep = bounds.cor5_bound(n, 0.0)
    print(f"ip({n}): t={t:g}, at least {rep.extras['min_m']} OT instances")

# string OT from bit OT: k -> infinity needs n-1 instances
for k in (1, 4, 64):
    print(f"ot(4,{k}) from bit OT: m >= {bounds.cor4_min_m(4, k, 0):.4f}")

# small errors weaken the bound quickly
for eps in (0, 1e-10, 1e-8, 1e-6):
    print(f"eps={eps:g}: ip(8) requires rhs {bounds.cor5_bound(8, eps).rhs:.4f}")
