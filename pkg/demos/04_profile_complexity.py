"""Parameter and MAC accounting for the reference configuration.

The profiler derives per-layer multiply-accumulate counts from layer
geometry (a complex multiply costs 4 real MACs; activations, norms,
and the FFT frontend are excluded) and scales them to one second of
16 kHz audio at 62.5 frames per second.
"""
import winnow
from winnow.profiler import profile_model

model = winnow.build_model(winnow.reference_config(), seed=0)
report = profile_model(model)

print(report.table())
print()
print(f"total:        {report.total_params:,} params, "
      f"{report.total_macs_per_second / 1e9:.3f} G MACs/s")
print(f"coarse stage: {report.coarse_params:,} params, "
      f"{report.coarse_macs_per_second / 1e9:.3f} G MACs/s")

# the same numbers, machine-readable
d = report.to_dict()
print(f"\nJSON keys: {sorted(d)}")
