"""
The radial family
=================

Every solution of det D^2 u = 1 + a delta_0 that grows like |x|^2/2 is,
up to affine changes, the profile U(r) = int_0^r (t^n + c)^(1/n) dt with
c = a / |B_1|. This script walks through its basic features.
"""
import numpy as np

from singular_ma.radial import (RadialSingularSolution, asymptotic_offset, decay_tail,
                                hessian_metric_length, radial_hessian_spectrum,
                                radial_legendre, radial_value, unit_ball_volume)

# a profile in the plane with c = 1, i.e. an atom of mass pi at the origin
sol = RadialSingularSolution(2, 1.0)
r = np.array([1e-4, 1e-2, 0.5, 1.0, 2.0])
lam_r, lam_t = radial_hessian_spectrum(sol, r)
print("   r          U(r)        lambda_r     lambda_t     det")
for row in zip(r, radial_value(sol, r), lam_r, lam_t, lam_r * lam_t):
    print("  ".join(f"{v:11.6g}" for v in row))

# the tangential eigenvalue blows up like c^(1/n) / r: the cone at the origin
print("\nr * lambda_t near the origin:", r[:2] * lam_t[:2])

# the gradient jumps from 0 to a ball of radius c^(1/n); its area is the atom
print("area of the subgradient at 0:", unit_ball_volume(2) * sol.subgradient_radius ** 2)

# the Legendre dual is flat exactly on that ball
dual = radial_legendre(sol)
print("dual profile at |y| = 0, 0.5, 1, 1.5:", dual.value(np.array([0.0, 0.5, 1.0, 1.5])))

# In dimension 3 and up the profile approaches r^2/2 + kappa, and the gap decays like r^(2-n)
for n in (3, 4, 5):
    R = 200.0
    scaled = R ** (n - 2) * decay_tail(n, 1.0, R)[0]
    print(f"n={n}: kappa = {asymptotic_offset(n, 1.0):.6f}, "
          f"r^(n-2) * gap at r={R:g}: {scaled:.6f} (limit {1 / (n * (n - 2)):.6f})")

# the Hessian metric puts the singular point at finite distance
print("\nmetric distance from e1 to 0 (c = 1):", hessian_metric_length(sol, 0.0, 1.0))
print("metric distance from e1 to 0 (c = 0):",
      hessian_metric_length(RadialSingularSolution(2, 0.0), 0.0, 1.0))
