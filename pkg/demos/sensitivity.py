"""Compare the five detection methods by their shot-normalised sensitivity.

First the printed (A, B, N) triples are pushed through the projection-noise
model, then every method is simulated end to end with photon-counting
readout.

    python demos/sensitivity.py
"""
from catspec.montecarlo import RngStream
from catspec.statistics import MethodConfig, analytic_reports, compare_methods, published_reports

print("recomputed from the printed signals")
for r in published_reports():
    print(f"  {r.name:26s} SNR {r.snr:6.2f}  beta {r.beta:.4f}  N_3sigma {r.shots_3sigma:8.0f}")

cfg = MethodConfig()
print("\nanalytic model")
for r in analytic_reports(cfg):
    print(f"  {r.name:26s} A {r.signal_a:.3f}  B {r.signal_b:.3f}  beta {r.beta:.4f}")

print("\nsimulated, 50000 shots per branch")
reports = {r.name: r for r in compare_methods(cfg, 50_000, RngStream(1, 3))}
for name, r in reports.items():
    print(f"  {name:26s} A {r.signal_a:.3f}  B {r.signal_b:.3f}  beta {r.beta:.4f}")
print(f"\ncat sigma_y over direct: {reports['css_sigma_y'].beta / reports['direct_sigma_z'].beta:.1f}x")
