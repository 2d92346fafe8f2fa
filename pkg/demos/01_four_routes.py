"""Compute one off-shell scalar product four different ways.

The dense route builds the double-row monodromy on 2^L states and contracts
the dual Bethe vector with the Bethe vector.  The others avoid the Hilbert
space: a finite residue sum over permutation pairs, a nested circle
quadrature of the same integrand, and a recursion that strips one site at a
time with the separation-of-variables kernel.
"""
import time

import numpy as np

from openxxz import ModelParams, SpectralSets
from openxxz.bethe import direct_value
from openxxz.solver import contour_scalar_product, n1_value, scalar_product_recursion

rng = np.random.default_rng(2024)
p = ModelParams.random_generic(3, rng)
s = SpectralSets.random(2, rng, params=p)
print("gamma =", np.round(p.gamma, 4), " h =", np.round(p.h, 4), " L =", p.L)
print("X =", np.round(s.X, 4))
print("Y =", np.round(s.Y, 4))

routes = {
    "dense contraction": lambda: direct_value(s.X, s.Y, p),
    "residue sum": lambda: contour_scalar_product(s, p).value,
    "circle quadrature": lambda: contour_scalar_product(s, p, mode="quadrature").value,
    "site recursion": lambda: scalar_product_recursion(s, p),
}
ref = None
for name, fn in routes.items():
    t = time.perf_counter()
    v = fn()
    dt = time.perf_counter() - t
    ref = v if ref is None else ref
    print(f"{name:>18}: {v:.12e}   rel. diff {abs(v - ref) / abs(ref):.1e}   ({dt:.2f}s)")

# for a single magnon there is also a closed form
s1 = SpectralSets.random(1, rng, params=p)
d1 = direct_value(s1.X, s1.Y, p)
c1 = n1_value(s1.X[0], s1.Y[0], p)
print(f"\nn = 1 closed form vs dense: rel. diff {abs(c1 - d1) / abs(d1):.1e}")
