# %% [markdown]
# # Spinlabor distribution of the spin-reservoir erasure
#
# The memory spin starts up with probability p. Each cycle adds an ancilla
# with a CNOT (costing one quantum of spinlabor iff the memory is up) and then
# lets the memory and its aligned ancillas equilibrate with the reservoir.
# The total cost is a sum of independent Bernoulli increments.

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spinerase import ErasureParams, pmf_full_erasure, vb_bound
from spinerase.distribution import closed_form_pm, pmf_after_m_cycles

# %% [markdown]
# At alpha = 1/3 (g = ln 2) the increments are 1/2, 1/5, 1/9, ...

# %%
params = ErasureParams.from_alpha(1 / 3)
pmf = pmf_full_erasure(params)
print("cycles needed:", params.n_terms)
for q, p in enumerate(pmf.probs[:6]):
    print(f"P({q}) = {p:.6f}")
print("mean", pmf.mean, "variance", pmf.variance, "bound", vb_bound(params.g))

# %% [markdown]
# Closed form after m cycles against the recurrence.

# %%
m = 8
rec = pmf_after_m_cycles(params, m).probs
closed = np.array([closed_form_pm(params, m, q) for q in range(m + 1)])
print("max difference", np.abs(rec - closed).max())

# %% [markdown]
# Colder reservoirs concentrate the cost near one quantum; warmer ones spread
# it out and the distribution looks almost continuous.

# %%
fig, ax = plt.subplots(figsize=(6, 3.5))
for alpha in (0.2, 0.4, 0.45, 0.48):
    p = ErasureParams.from_alpha(alpha)
    dist = pmf_full_erasure(p)
    ax.plot(dist.support, dist.probs, "o-", ms=3, label=f"alpha={alpha}")
    ax.axvline(vb_bound(p.g), ls=":", lw=0.8)
ax.set_xlim(0, 40)
ax.set_xlabel("spinlabor (quanta)")
ax.set_ylabel("probability")
ax.legend()
fig.tight_layout()
fig.savefig("spinlabor_pmf.png", dpi=120)
