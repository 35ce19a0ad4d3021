# %% [markdown]
# # Decay rate of the fitted bound
#
# At g = ln2 / b the violation probability is a finite sum over q <= b, and
# the ratios P(b-n)/P(b) have product formulas. Matching C e^(-a eps) at
# eps = 0 and eps = 1 fixes a. The question is how a^2 compares with g.

# %%
import numpy as np

from spinerase import ErasureParams
from spinerase.fluctuation import decay_limit_study, decay_trend, violation_curve

# %%
rows = decay_limit_study([1, 2, 4, 8, 16, 32, 64, 128])
for r in rows:
    print(f"b={r.b:4d}  g={r.g:.5f}  a={r.a:.6f}  a^2/g={r.a_squared / r.g:.4f}")
print(decay_trend(rows[1:]))

# %% [markdown]
# a^2/g dips below 1 near b = 2 to 4 and then keeps rising. For small g the
# distribution is close to Gaussian with variance about 1/(2g), C tends to 1/2,
# and a approaches 2 sqrt(g/pi), so a^2/g tends to 4/pi rather than 1.

# %%
print("4/pi =", 4 / np.pi)

# %% [markdown]
# Where a < sqrt(g), the bound with rate sqrt(g) sits below the exact value at
# eps = 1.

# %%
for b in (2, 3, 4, 5):
    c = violation_curve(ErasureParams.from_b(b), eps_max=1.0, eps_step=1.0)
    print(b, "Pr_v(1) =", c.pr_violation[-1], " C e^-sqrt(g) =", c.bound_sqrt[-1])
