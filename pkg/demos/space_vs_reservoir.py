"""Same memory, different accuracy: online summary vs a uniform reservoir sample.

The reservoir gets exactly as many slots as the online summary's peak tuple
count, and both are scored on the same quantile grid.
"""
from streamquantiles import StreamSpec, evaluate

eps, m, n = 0.1, 5120, 1_000_000
spec = StreamSpec("uniform", n, 11)
online = evaluate("online", spec, eps, m, trials=3, probes=[n])
reservoir = evaluate("reservoir", spec, eps, None, trials=3, probes=[n])

print(f"reservoir slots (matched to online peak): {reservoir.config['m']}")
for name, rep in (("online", online), ("reservoir", reservoir)):
    agg = rep.aggregate()
    print(f"{name:<10} mean error {agg['mean_norm_err']:.5f}  max error {agg['max_norm_err']:.5f}")
