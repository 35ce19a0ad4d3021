# %% [markdown]
# # Exponential average and violation bounds
#
# The exponential average of the spinlabor has a closed form, which gives a
# Jarzynski-like equality. Restricting the average yields two exponential
# bounds on the probability that the cost falls below ln 2 / g by epsilon.

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spinerase import ErasureParams, pmf_full_erasure
from spinerase.fluctuation import jarzynski_lhs, jarzynski_rhs, partial_exp_averages, violation_curve

# %%
for g in (0.05, np.log(2) / 4, np.log(2), 3.0):
    pmf = pmf_full_erasure(ErasureParams(g))
    print(f"g={g:.4f}  lhs={jarzynski_lhs(pmf):.12f}  rhs={jarzynski_rhs(g):.12f}")

# %% [markdown]
# The average factorises: the first CNOT gives (1+r)/2 and the rest telescopes
# to 1/(1+r^2).

# %%
print(partial_exp_averages(ErasureParams(np.log(2))))

# %%
fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
for ax, b in zip(axes, (1, 8)):
    curve = violation_curve(ErasureParams.from_b(b))
    curve.validate()
    ax.semilogy(curve.epsilons, curve.pr_violation, "k-", label="Pr_v")
    ax.semilogy(curve.epsilons, curve.bound_a, label="A")
    ax.semilogy(curve.epsilons, curve.bound_b, label="B")
    ax.semilogy(curve.epsilons, curve.bound_semi, "--", label="C e^-a eps")
    ax.semilogy(curve.epsilons, curve.bound_sqrt, ":", label="C e^-sqrt(g) eps")
    ax.set_title(f"g = ln2/{b}")
    ax.set_xlabel("epsilon (quanta)")
axes[0].legend()
fig.tight_layout()
fig.savefig("violation_bounds.png", dpi=120)
