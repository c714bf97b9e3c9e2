"""chi + chi^j on Z_m has the same simple moments as e(x/m) + e(y/m) on Z_m x Z_m
unless 1 and j satisfy a short additive relation.

Run: python3 demos/limit_example.py
"""

from hofa.moments import (Moment, chi_plus_chi_power, moment_value, search_limit_exponents,
                          torus_limit, triangle_moment)

m = 17
matches, disc = search_limit_exponents(m)
print(f"m={m}: moments match for j in {matches}")
for j in sorted(disc):
    print(f"  j={j:>2}  max moment gap {disc[j]:.3g}")

# %% which moment tells j = 2 apart: 2x - (x + x) style relations
g = torus_limit(m)
f = chi_plus_chi_power(m, 2)
M = Moment(2, (((1,), 2, 0), ((1,), 0, 1)))
print("f^2 conj f:", moment_value(f, M), "vs torus", moment_value(g, M))
print("triangle:", moment_value(f, triangle_moment()), "vs torus", moment_value(g, triangle_moment()))
