"""Build a problem instance and look at its measurements from both ends.

The forward model takes two short coefficient vectors, expands them
through their subspace bases, circularly convolves the results, and
records only the magnitudes of the unitary DFT of that convolution.
For Fourier-mode instances the same numbers fall out of a per-frequency
product of two quadratic forms; this script checks the two paths agree
and then demonstrates the scaling ambiguity and the noise model.
"""

import numpy as np

from blindphase import (SubspaceMode, add_noise, forward_measure,
                        forward_measure_via_convolution, gen_instance,
                        time_domain_bases)

inst = gen_instance(m=32, k=4, n=4, mode=SubspaceMode.FOURIER_GAUSSIAN, seed=7)
print(f"instance: m={inst.m}, k={inst.k}, n={inst.n}, mode={inst.mode.value}")
print(f"ground truth norms: |h|={np.linalg.norm(inst.h_true):.4f}, "
      f"|m|={np.linalg.norm(inst.m_true):.4f}")

meas_rows = forward_measure(inst)
meas_conv = forward_measure_via_convolution(inst)
gap = np.max(np.abs(meas_rows.y - meas_conv.y))
print(f"\nrow path vs convolution path: max |y - y'| = {gap:.3e}")

# The measurements only see the product of the two signals, so trading a
# factor between them changes nothing.  gamma = 2 keeps floats exact.
inst_scaled = gen_instance(inst.m, inst.k, inst.n, inst.mode, inst.seed)
inst_scaled.h_true[:] = 2.0 * inst.h_true
inst_scaled.m_true[:] = 0.5 * inst.m_true
y_scaled = forward_measure(inst_scaled).y
print(f"after (h, m) -> (2h, m/2): max |y - y'| = "
      f"{np.max(np.abs(meas_rows.y - y_scaled)):.3e}")

# Multiplicative noise: y' = y (1 + xi) with xi >= -1 entrywise.
rng = np.random.default_rng(0)
xi = 0.05 * rng.uniform(-1.0, 1.0, inst.m)
noisy = add_noise(meas_rows, xi)
rel = np.linalg.norm(noisy.y - meas_rows.y) / np.linalg.norm(meas_rows.y)
print(f"\n5% multiplicative noise: relative change in y = {rel:.3f}")
print(f"delta = m * y^2, so delta scales roughly twice as fast: "
      f"{np.linalg.norm(noisy.delta - meas_rows.delta) / np.linalg.norm(meas_rows.delta):.3f}")

# The stored rows are sqrt(m) * DFT * basis; the inverse transform gets
# the time-domain bases back.  In identity-column mode that recovery is
# exact down to the unit entries.
B, C = time_domain_bases(inst)
print(f"\ntime-domain basis shapes: B {B.shape}, C {C.shape}")

inst_id = gen_instance(m=32, k=4, n=4,
                       mode=SubspaceMode.FOURIER_IDENTITY_B, seed=7)
B_id, _ = time_domain_bases(inst_id)
support = np.flatnonzero(np.abs(B_id).max(axis=1) > 0.5)
print(f"identity-column mode: B support rows {support.tolist()}, "
      f"entries off {{0,1}} by {np.max(np.abs(B_id - np.round(B_id))):.1e}")
