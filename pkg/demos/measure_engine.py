"""
Monge-Ampere measures of piecewise linear functions
===================================================

A convex piecewise linear function on a node set concentrates its
Monge-Ampere measure on the nodes: the mass at a node is the area of the set
of slopes of its supporting planes. We compute those cells from the lower
convex hull of the lifted points and compare with a brute-force clipping.
"""
import numpy as np

from singular_ma import geometry as geo

# the cone over a diamond: one interior node with a square of slopes
nodes = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1.0]])
cone = geo.build_pl(nodes, np.array([0, 1, 1, 1, 1.0]))
print("cone cell:", geo.subgradient_cells(cone)[0].tolist())
print("cone mass:", geo.ma_measure(cone).mass_at(0))

# random convex data: facet cells against half-plane intersections
rng = np.random.default_rng(1)
pts = rng.uniform(-1, 1, (40, 2))
vals = 0.5 * (pts ** 2).sum(axis=1) + np.abs(pts @ [0.3, -0.7])
f = geo.build_pl(pts, vals)
areas = geo.cell_areas(f)
brute = [geo._polygon_area(geo.halfplane_cell(pts, vals, i)) for i in f.interior_nodes]
print("\nlargest disagreement over", len(brute), "cells:",
      np.max(np.abs(areas[f.interior_nodes] - brute)))

# the masses, including the clipped boundary cells, tile the gradient image
meas = geo.ma_measure(f)
print("interior + boundary mass:", meas.masses.sum() + meas.boundary_masses.sum())
print("area of gradient image:  ", geo._polygon_area(geo.gradient_image(f)))

# the discrete Legendre transform turns cells into facets and back
back = geo.legendre_pl(geo.legendre_pl(f), at=f.nodes)
print("\ndouble conjugate error:", np.max(np.abs(back.values - f.values)[f.vertex_mask]))

# contact sets: |x_1| has a ridge, so supporting planes there touch a segment
x = np.linspace(-1, 1, 11)
X, Y = np.meshgrid(x, x)
P = np.c_[X.ravel(), Y.ravel()]
crease = geo.build_pl(P, np.abs(P[:, 0]))
print("contact set diameter on the ridge:", geo.contact_set(crease, [0.0, 0.2]).diameter)
print("contact set diameter off the ridge:", geo.contact_set(crease, [0.5, 0.2]).diameter)
