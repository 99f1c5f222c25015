"""Known stream length: sample at rate m/n, summarise the sample.

Before n/64 items have arrived the sample is too small to promise anything;
the `guaranteed` flag says when answers start to count.
"""
import numpy as np

from streamquantiles import ExactOracle, FixedNSummary

n, m, eps = 1 << 20, 1 << 15, 0.1
stream = np.random.default_rng(3).permutation(n) + 1

s = FixedNSummary(eps, n, m, seed=1)
oracle = ExactOracle()
checkpoints = [1000, n // 64, n // 4, n]
t = 0
for cp in checkpoints:
    s.extend(stream[t:cp])
    oracle.extend(stream[t:cp])
    t = cp
    ans = s.query_detailed(t // 2)
    err = oracle.rank_error(ans.value, t // 2)
    print(f"t={t:>8}  sampled={s.gk.count:>6}  guaranteed={ans.guaranteed!s:<5}  "
          f"median error={err / t:.4f} (target {eps / 2})")
