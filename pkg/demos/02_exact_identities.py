"""
Quantum norms are clock partition functions
===========================================

On small tori both sides can be computed exactly: the norm of the deformed
Kitaev state by summing its amplitudes, the clock partition function by
exhaustive enumeration.  They agree up to the constant d^(N/2), so the
ground-state fidelity is a ratio of clock partition functions and its
curvature is the clock heat capacity.
"""

import numpy as np

from zdclock.bridge import (kitaev, verify_curvature_identity, verify_fidelity_identity,
                            verify_partition_identity)
from zdclock.kitaev import PLAQUETTE_FORM

# %% Partition identity, beta = 1/(2T)
for d in (2, 3, 5, 6):
    reps = verify_partition_identity(d, 2, [0.5, 1.0, 2.0])
    print(f"d={d}: max rel. deviation {max(r.rel_dev for r in reps):.1e}, "
          f"Z_clock/Z_q = {reps[0].constant:.6g} (d^(N/2) = {d ** 4})")

# %% The plaquette form does not satisfy it
# Its support includes non-trivial holonomy sectors, which have no clock
# counterpart.  This is the negative control.
reps = verify_partition_identity(3, 2, [0.7, 1.3], form=PLAQUETTE_FORM)
print("plaquette form deviations:", [f"{r.rel_dev:.2f}" for r in reps])

# %% Fidelity as a partition-function ratio
rng = np.random.default_rng(0)
worst = max(verify_fidelity_identity(3, 2, b, db).abs_dev
            for b, db in zip(rng.uniform(0.1, 1.5, 20), rng.uniform(1e-3, 5e-2, 20)))
print(f"fidelity identity, 20 random pairs: max |F_q - F_clock| = {worst:.1e}")

# %% Curvature: (1 - F)/dbeta^2 -> Var(C)/2
# The residual (1 - F) - Var(C) dbeta^2 / 2 is third order, so halving the
# step shrinks it by about 8.  Two Richardson steps remove the O(dbeta) and
# O(dbeta^2) terms of the ratio; what remains is O(dbeta^3) and scales with
# the excitation gap cubed, which is why small d at large beta needs smaller
# steps to reach 1e-6.
for d, beta in ((2, 0.3), (2, 0.8), (5, 0.3), (5, 0.8)):
    for steps in ((1e-2, 5e-3, 2.5e-3), (1e-3, 5e-4, 2.5e-4)):
        rep = verify_curvature_identity(d, 2, beta, dbetas=steps)
        print(f"d={d} beta={beta} dbeta0={steps[0]:.0e}: shrink "
              f"{np.round(rep.extra['shrink_factors'], 2)} limit rel. dev {rep.rel_dev:.1e}")
