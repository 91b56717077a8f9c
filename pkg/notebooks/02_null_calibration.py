"""
Calibration of the parametric bootstrap under the null
======================================================

With no association the p-values should be uniform. We simulate one cell
of the size study and compare empirical rejection rates with the nominal
levels.
"""

# %%
import numpy as np

from dbreg.simulation import ScenarioSpec, run_size_experiment

spec = ScenarioSpec(n=300, model="equal", rho=0.8, replicates=500, B=1000, seed=3)
curve = run_size_experiment(spec)

# %%
print(" alpha   pseudo   sqrt")
for a, s1, s2 in zip(curve.alphas, curve.size_pseudo, curve.size_sqrt):
    print(f"{a:6.3f}  {s1:7.3f}  {s2:6.3f}")
print(f"KS distance: pseudo {curve.ks_pseudo:.3f}, sqrt {curve.ks_sqrt:.3f}")

# %% [markdown]
# A histogram of the null p-values, in text form.

# %%
counts, _ = np.histogram(curve.pvalues[:, 1], bins=10, range=(0, 1))
for i, c in enumerate(counts):
    print(f"[{i / 10:.1f}, {(i + 1) / 10:.1f})  {'#' * (c // 2)}")
