"""One-step-ahead conditional VaR and an exceedance backtest."""
import numpy as np

from acaf import TABLE9_THETA, conditional_var, simulate

path = simulate(TABLE9_THETA, n=5000, seed=12)
q = path.series.values
for level in (0.95, 0.99):
    var = conditional_var(TABLE9_THETA, path.series, level)
    hits = q > var
    print(f"level {level}: exceedance rate {hits.mean():.4f} (nominal {1 - level:.2f}), "
          f"VaR range [{var.min():.3f}, {var.max():.3f}]")

# Clustering check: exceedances should not bunch up if the model is right.
var = conditional_var(TABLE9_THETA, path.series, 0.99)
hits = (q > var).astype(int)
both = np.sum(hits[1:] & hits[:-1])
print("back-to-back 99% exceedances:", int(both), "of", int(hits.sum()))
