"""Critical energies of random polymer models.

A critical energy is one where both single-polymer transfer matrices are
elliptic (or +-identity) and commute; there the pair is simultaneously
conjugate to rotations and the Lyapunov exponent vanishes.  The random dimer
model has the pair E_c = +-V; the single-site Bernoulli model has none.
"""
import numpy as np

from polyspec import (dimer_preset, anderson_preset, find_critical_energies,
                      expansion_coeffs, dos_at_critical, ids_at_critical)

for V in (0.3, 0.6, 1 / np.sqrt(2)):
    model = dimer_preset(V, 0.5)
    print(f"\nrandom dimer, V = {V:.4f}:")
    for rep in find_critical_energies(model):
        coeffs = expansion_coeffs(model, rep)
        n = dos_at_critical(coeffs, model)
        N = ids_at_critical(rep, model)
        viol = ", ".join(f"k={k}" for k, _ in rep.irrationality_violations) or "none"
        print(f"  E_c = {rep.energy:+.6f}  ({rep.kind_plus}, {rep.kind_minus})")
        print(f"    eta = ({rep.eta_plus:.6f}, {rep.eta_minus:.6f})"
              f"  d = ({coeffs.d_plus:.4f}, {coeffs.d_minus:.4f})")
        print(f"    DOS n(E_c) = {n:.5f}   IDS N(E_c) = {N:.5f}"
              f"   irrationality violations up to k=64: {viol}")

print("\nsingle-site Bernoulli model, V = 0.7:")
reps = find_critical_energies(anderson_preset(0.7, 0.5))
print(f"  critical energies found: {len(reps)} "
      "(single-site transfer matrices never commute nontrivially)")
