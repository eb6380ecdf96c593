"""Asymptotic MSE and the locally optimal bandwidth for a known model.

Everything here is computed from the true trend, design density and the
mean resultant length, so it is a theory-side check rather than something
estimated from data.
"""
import numpy as np

from circtrend import (BandwidthMatrix, ComponentFunctions, KernelSpec, TrueModelOracle, amse,
                       h_opt_local, kernel_moments, regression_r1, variance_identity_check)

mom = kernel_moments(KernelSpec(d=2))
m = lambda x: float(regression_r1(x))
oracle = TrueModelOracle(m=m, f=lambda x: 1.0 + 0.5 * x[0] * x[1],
                         ell=lambda x: 0.8 - 0.1 * x[0] ** 2 + 0.05 * x[1],
                         sigma1_2=0.3, rho_c=(0.2, 0.0, 0.0))
x = np.array([0.15, 0.15])

for p in (0, 1):
    H = h_opt_local(oracle, x, 100, p, mom)
    print(f"p = {p}: optimal H at {x}\n{np.round(H.matrix, 4)}")
    print(f"  AMSE there {amse(oracle, x, 100, H, p, mom):.5f}")
    # Scaling H away from the optimum can only make things worse.
    for s in (0.7, 1.4):
        print(f"  x{s}: {amse(oracle, x, 100, BandwidthMatrix(s * H.matrix), p, mom):.5f}")

comp = ComponentFunctions.from_trend(m)
lx = oracle.ell(x)
defect = variance_identity_check(comp, oracle, x, comp.f1(x) * lx, comp.f2(x) * lx)
print(f"variance identity defect: {defect:.2e}")
