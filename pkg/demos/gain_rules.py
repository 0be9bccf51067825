"""
==========================
Proportionate gain rules
==========================

How each gain rule spreads the adaptation effort over the taps of a sparse
weight vector. Large taps get large gains, small taps are held at a floor so
they can still move.
"""

# %%
# Setup
# -----
# A 32-tap system with two active taps.
import numpy as np

from ptlms import GainRule, generate_sparse_system, gain_vector

w = generate_sparse_system(32, 2, seed=0)
active = np.flatnonzero(w)
print("active taps:", active, "values:", np.round(w[active], 3))

# %%
# Gains per rule
# --------------
# Proportionate rules are normalised so the gains sum to the filter length.
# IPLMS is built directly and sums to roughly one instead.
rules = [GainRule("StandardLMS"), GainRule("PLMS"),
         GainRule("IPLMS", alpha=-0.5), GainRule("MuLawPLMS")]
gains = {r.name: gain_vector(w, r) for r in rules}
for name, g in gains.items():
    print(f"{name:12s} sum={g.sum():8.3f} active={np.round(g[active], 3)} idle={g[0]:.4f}")

# %%
# The rho floor
# -------------
# Raising rho lifts the gain of the idle taps and pulls the rule toward plain LMS.
for rho in (0.001, 0.01, 0.1, 1.0):
    g = gain_vector(w, GainRule("PLMS", rho=rho))
    print(f"rho={rho:<6g} idle gain={g[0]:.4f} max gain={g.max():.3f}")

# %%
# Plot
# ----
if __name__ == "__main__":
    try:
        import matplotlib.pyplot as plt
    except ImportError:
        plt = None
    if plt is not None:
        fig, ax = plt.subplots(figsize=(8, 4))
        for name, g in gains.items():
            ax.semilogy(g, marker=".", label=name)
        ax.set_xlabel("tap")
        ax.set_ylabel("gain")
        ax.legend()
        plt.show()

# %%
# Takeaways
# ---------
# - PLMS and mu-law PLMS put almost all the step size on the active taps.
# - rho controls how much effort idle taps keep.
