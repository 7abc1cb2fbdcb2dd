import json
import math
import time

from ilwkit import measures as ms

sp = ms.GaussianSpec("deep", 3, 2.0)
big_k = math.sqrt(ms.expected_sobolev_sq(sp, 64, 0.0))
out = {}
for n in (32, 64):
    t0 = time.time()
    rep = ms.invariance_battery(
        "deep", 3, 2.0, count=n, t_final=1.0, samples=768, seed=2026,
        big_k=big_k, dt=5.0e-4,
    )
    rep["runtime_s"] = time.time() - t0
    out[n] = rep
    print(n, "done", rep["runtime_s"], flush=True)
with open("/tmp/battery_rehearsal.json", "w") as fh:
    json.dump(out, fh, indent=1)
for n, rep in out.items():
    print(n, "max ratio", rep["max_drift_over_se"], "ess", rep["effective_samples"])
    for name, row in rep["observables"].items():
        print("  ", name, "drift", row["drift"], "se", row["stderr"])
