"""
Counting and normalising singular solutions
===========================================

Solutions with k atoms in dimension n >= 3, up to unimodular affine
changes, form a family of dimension d(n, k). This script prints the table,
puts a configuration into normal form, and checks the building blocks of
the existence argument: the averaged subsolution, the radial sandwich and
the ellipsoid barrier.
"""
import numpy as np

from singular_ma.solver import (SingularConfiguration, averaged_subsolution, build_sandwich,
                                ellipsoid_barrier)
from singular_ma.verify import canonicalize, orbifold_dimension

ks = range(2, 9)
print("n \\ k " + "".join(f"{k:4d}" for k in ks))
for n in range(3, 7):
    print(f"{n:5d} " + "".join(f"{orbifold_dimension(n, k):4d}" for k in ks))

# normal form: the last atom goes to the origin with unit mass
cfg = SingularConfiguration(3, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], [2.0, 8.0])
can = canonicalize(cfg)
print("\nnormal form points:", can.config.points.round(6).tolist())
print("normal form masses:", can.config.masses.tolist(), " scale:", can.transform.scale)

# averaging the radial solutions keeps det >= 1 off the atoms
sub = averaged_subsolution(cfg)
X = np.random.default_rng(0).normal(scale=2, size=(2000, 3))
print("\nsmallest det of the averaged subsolution:", sub.det_hessian(X).min())

# the sandwich for one atom in R^3: constants and the slope jump at r = 1
sb = build_sandwich(SingularConfiguration(3, [[0.0, 0.0, 0.0]], [1.0]))
inner, outer = sb.gradient_jump()
print(f"sandwich: c0 = {sb.c0:.4f}, K1 = {sb.K1:.4f}, K2 = {sb.K2:.4f}, "
      f"beta- = {sb.beta_minus:.4f}, beta+ = {sb.beta_plus:.4f}")
print(f"slopes at r = 1: {inner:.4f} inside, {outer:.4f} outside")

b = ellipsoid_barrier(3, 2.5, 0.4)
print("\nbarrier determinant:", np.linalg.det(b.hessian()), " minimum:", b.minimum())
