"""The online summary never needs n: watch rows come and go as the stream grows."""
import numpy as np

from streamquantiles import OnlineSummary

m = 1024
s = OnlineSummary(epsilon=0.5, m=m, seed=0)
stream = np.random.default_rng(0).integers(0, 10**9, 600_000)

last = None
for t in range(1, len(stream) + 1, 1024):
    s.extend(stream[s.t:t])
    st = s.stats()
    key = (tuple(st.live_rows), st.active)
    if key != last:
        print(f"t={st.t:>7}  live rows={st.live_rows}  active={st.active}  "
              f"tuples={st.total_tuples}")
        last = key

s.extend(stream[s.t:])
print("final:", s.stats().as_dict())
print("sample counts per retired row:", s.retired_insertions)
