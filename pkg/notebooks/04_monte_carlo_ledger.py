# %% [markdown]
# # Monte Carlo check and the first-law ledger
#
# Each trajectory samples the memory spin after every equilibration. The
# change in J_z of the memory plus ancillas equals spinlabor plus spintherm,
# exactly, in integer half-quanta.

# %%
import numpy as np

from spinerase import ErasureParams
from spinerase.montecarlo import (
    chi_square_vs_exact,
    exact_pmf_for,
    ledger_check,
    sample_reservoir_up_count,
    simulate_ensemble,
    simulate_trajectory,
)

# %%
rec = simulate_trajectory(ErasureParams(np.log(2)), seed=42)
print("cycles", rec.cycles_run, "spinlabor", rec.spinlabor, rec.ledger)
print("per-cycle spintherm", rec.per_cycle_spintherm()[:8])

# %%
ens = simulate_ensemble(ErasureParams(np.log(2)), 10**6, master_seed=1, workers=4)
print("mean spinlabor", ens.mean_spinlabor, "+-", ens.standard_errors["spinlabor"])
print("mean spintherm", ens.mean_spintherm)
print(chi_square_vs_exact(ens, exact_pmf_for(ens)))
print(ledger_check(ens))
print("exp average", ens.exp_average())

# %% [markdown]
# The reservoir's up count is Binomial(N, alpha).

# %%
draws = sample_reservoir_up_count(10_000, np.log(2), seed=3, size=100_000)
print(draws.mean() / 10_000, "vs", 1 / 3)
