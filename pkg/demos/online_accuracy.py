"""Online error against the exact answer, at times the row hand-off is most delicate."""
import numpy as np

from streamquantiles import StreamSpec, evaluate

eps, m = 0.1, 5120
n = 200 * m
probes = [m // 2, 16 * m, 32 * m, 32 * m + 1, 64 * m, n]
for kind in ("sorted", "uniform", "zipf"):
    report = evaluate("online", StreamSpec(kind, n, 0), eps, m, trials=5, probes=probes)
    print(f"{kind}:")
    for t, agg in report.by_probe().items():
        print(f"  t={t:>8}  max error {agg['max_norm_err']:.4f} of t, "
              f"failures {agg['failure_fraction']:.2%}")
