"""Deterministic GK summary: a few hundred tuples answer rank queries on 200k items."""
import numpy as np

from streamquantiles import ExactOracle, GKSummary

rng = np.random.default_rng(7)
stream = rng.normal(size=200_000).round(4)

eps = 0.01
gk = GKSummary(eps)
gk.extend(stream.tolist())
print(f"items seen: {gk.count}, tuples kept: {gk.tuple_count}")

oracle = ExactOracle(stream)
n = gk.count
for phi in (0.01, 0.25, 0.5, 0.75, 0.99):
    rho = round(phi * n)
    y = gk.query(rho)
    err = oracle.rank_error(y, rho)
    print(f"phi={phi:<5} answer={y:+.4f}  rank error={err:5d}  allowed={eps * n:.0f}")

# the tuples themselves: value, g, delta
for t in gk.tuples[:5]:
    print(t)
