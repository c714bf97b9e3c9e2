"""Structured plus uniform at k = 1, and correlation search over polynomial phases.

Run: python3 demos/regularity.py
"""

import numpy as np

from hofa.abelian import GroupFunction, GroupSpec
from hofa.decompose import PhaseDictionary, correlation_search, fourier_regularize
from hofa.gowers import gowers_norm
from hofa.heisenberg import nilsequence_function

# %% a signal with two large characters plus bounded noise
spec = GroupSpec((32,))
rng = np.random.default_rng(3)
x = np.arange(32)
signal = 0.5 * np.exp(2j * np.pi * 3 * x / 32) + 0.3 * np.exp(2j * np.pi * 11 * x / 32)
f = GroupFunction(spec, signal + 0.2 * GroupFunction.random_bounded(spec, rng).values)
for delta in (0.5, 0.25, 0.1):
    d = fourier_regularize(f, delta)
    print(f"delta={delta}: kept {d.kept.tolist()}, ||f_r||_U2 = {gowers_norm(d.f_r, 2):.3f}, "
          f"bound {(delta**2 * f.lp_norm(2) ** 2) ** 0.25:.3f}")

# %% a quadratic phase hidden in noise is found by the degree-2 dictionary
m = 11
D = PhaseDictionary.build(m, 2)
target = D[30]
g = GroupFunction(GroupSpec((m,)), 0.6 * target.function.values
                  + 0.4 * GroupFunction.random_bounded(GroupSpec((m,)), rng).values)
res = correlation_search(g, D)
print(f"planted {target.description}, found {res.best.description}, |corr| {abs(res.value):.3f}")
for row in res.ranked[:3]:
    print("  ", row[1], f"{row[2]:.3f}")

# %% the Heisenberg nilsequence against wrapping phases only and with itself in the dictionary
h = nilsequence_function(8, 3)
for heis in (False, True):
    res = correlation_search(h, PhaseDictionary.build(8, 2, heisenberg=heis))
    print(f"heisenberg entries={heis}: best {res.best.description}, |corr| {abs(res.value):.3f}")
