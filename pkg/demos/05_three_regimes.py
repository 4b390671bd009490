"""
Three regimes for d = 6, two for d = 2
======================================

Correlation profiles C(r) from Metropolis chains are classified as
long-range (ordered), power-law (quasi-long-range) or exponential
(disordered).  For d = 6 an intermediate power-law window separates the two;
the Ising case d = 2 goes straight from ordered to disordered.  Through
beta = 1/(2T) the clock regimes map to the trivial, KT-like and Z_d
topological phases of the deformed Kitaev state.
"""

from zdclock.scan import classify_phases

# %% d = 6 on L = 16 and 32
rep = classify_phases(6, [16, 32], [0.4, 0.78, 1.3], sweeps=50_000, therm=5_000)
for T in rep.temperatures:
    fits = rep.per_L[T]
    etas = ", ".join(f"L={L}: eta={f['eta']:.3f} xi={f['xi']:.2f}" for L, f in fits.items())
    print(f"T={T:4.2f} {rep.labels[T]:12s} -> {rep.quantum_labels[T]:16s} ({etas})")
print("boundaries:", [(round(b["T"], 3), round(b["err"], 3)) for b in rep.boundaries])
print("beta_c:", {k: round(v, 3) for k, v in rep.beta_c.items()})

# %% d = 2 control
rep2 = classify_phases(2, [8, 16], [1.2, 1.5, 1.8, 3.0, 3.3, 3.6], sweeps=20_000, therm=2_000)
print("d=2 regimes:", rep2.regimes(), "beta_c:", {k: round(v, 3) for k, v in rep2.beta_c.items()})
