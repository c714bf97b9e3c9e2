"""Walk the orbit k -> M^k Gamma on the Heisenberg nilmanifold and read off e(k^2 t/m^2).

Run: python3 demos/heisenberg_nilsequence.py
"""

import numpy as np

from hofa.abelian import GroupFunction, GroupSpec
from hofa.gowers import gowers_norm
from hofa.heisenberg import closed_form_phase, reduce_to_domain, tau, u3_of_heis

m, t = 7, 3

# %% the orbit before and after reduction; entries print as (a, c, b)
print(f"m={m}, t={t}")
print(f"{'k':>3}  {'M^k':<28} {'reduced':<22} phase")
for k in range(m + 2):
    X = tau(k, m, t)
    rep = reduce_to_domain(X)
    raw = "(" + ", ".join(str(v) for v in X.entries()) + ")"
    red = "(" + ", ".join(str(v) for v in rep.entries()) + ")"
    print(f"{k:>3}  {raw:<28} {red:<22} {rep.c}")

# %% periodic in k, and equal to the closed form on 0..m-1
assert reduce_to_domain(tau(m, m, t)) == reduce_to_domain(tau(0, m, t))
assert all(reduce_to_domain(tau(k, m, t)).c == closed_form_phase(k, m, t) for k in range(m))

# %% U_3 of the nilsequence against random unimodular functions
rng = np.random.default_rng(0)
for m in (8, 12, 16):
    spec = GroupSpec((m,))
    rand = [gowers_norm(GroupFunction.random_unimodular(spec, rng), 3) for _ in range(200)]
    print(f"m={m:>2}: U_3 heis t=2 {u3_of_heis(m, 2):.3f}, t=3 {u3_of_heis(m, 3):.3f}; "
          f"random median {np.median(rand):.3f}, 99% {np.quantile(rand, 0.99):.3f}")
# small m: degenerate cubes keep random U_3 high, so the gap only opens up as m grows
