"""Small success-rate grid over (m, k+n), printed as a text table.

The full desk-scale study lives behind `blindphase phase --preset desk`;
this script runs a reduced grid in about a minute and writes the same
CSV, manifest, and SVG artifacts to ./demo_out/phase.
"""

from blindphase import ExperimentConfig, run_phase

cfg = ExperimentConfig(m_values=[16, 32, 64],
                       kn_pairs=[(2, 2), (3, 3), (4, 4), (8, 8)],
                       trials=5,
                       out_dir="demo_out/phase")
cells = run_phase(cfg)

kn_sums = [k + n for k, n in cfg.kn_pairs]
rate = {(c.m, c.k + c.n): c.success_count / c.trials for c in cells}

label = "m | k+n"
header = f"{label:>8}" + "".join(f"{s:>7}" for s in kn_sums)
print(header)
print("-" * len(header))
for m in cfg.m_values:
    print(f"{m:>8}" + "".join(f"{rate[(m, s)]:>7.2f}" for s in kn_sums))

print("\nsuccess = both aligned relative errors <= 1e-2")
print("artifacts: demo_out/phase/{phase.csv,phase_grid.csv,manifest.json,phase.svg}")
print("rerunning reproduces every file byte for byte (timings go only to "
      "the manifest)")
