"""Cubes on abelian groups, the Gray code test in the Heisenberg group, and the nilspace axioms.

Run: python3 demos/cubes_and_nilspaces.py
"""

import numpy as np

from hofa.abelian import GroupSpec
from hofa.cubespace import all_cubes, degree_cube_mask
from hofa.nilspace import (FilteredGroup, check_nilspace_axioms, corner_complete, degree_cube_space,
                           filtered_cube_mask, filtered_group_space, gray_code_order, hk_count, hk_sample)

# %% Gray code ordering of {0,1}^3
print("Gray order:", gray_code_order(3))

# %% degree-k cubes of Z_5: how many of the 5^4 labelings of {0,1}^2 qualify
Z5 = GroupSpec((5,))
grid = np.indices((5,) * 4).reshape(4, -1).T
for k in (0, 1, 2):
    print(f"degree {k}: {int(degree_cube_mask(Z5, grid, k).sum())} of {len(grid)}")
print("2-cubes of Z_5 (parallelograms):", len(all_cubes(Z5, 2)))

# %% corner completion: unique at dimension k+1, |A| ways at dimension k
D2 = degree_cube_space(GroupSpec((3,)), 2)
print("D_2(Z_3), 2-corner [0,1,2] completes to", corner_complete(D2, [0, 1, 2]))
print("D_2(Z_3), 3-corner completes to", corner_complete(D2, [0, 1, 2, 0, 1, 2, 0]))

# %% Heisenberg group over Z_3 with filtration H, H, centre, {1}
H = FilteredGroup.heisenberg(3)
print(f"|H| = {H.order}, degree {H.degree}, 2-cubes generated: {hk_count(H, 2)}")
cubes = hk_sample(H, 3, seed=1, size=1000)
print("generated 3-cubes passing the Gray code test:", int(filtered_cube_mask(H, cubes).sum()), "/ 1000")
noise = np.random.default_rng(1).integers(H.order, size=(1000, 8))
print("uniform labelings passing:", int(filtered_cube_mask(H, noise).sum()), "/ 1000")

# %% axioms
for name, space, k in [("D_1(Z_4)", degree_cube_space(GroupSpec((4,)), 1), 1),
                       ("D_2(Z_3)", D2, 2), ("D_2(Z_3) as 1-step", D2, 1),
                       ("Heisenberg(Z_3)", filtered_group_space(H), 2)]:
    rep = check_nilspace_axioms(space, k, 3)
    print(f"{name:<20} passed={rep.passed} completions={rep.completion_counts}")
