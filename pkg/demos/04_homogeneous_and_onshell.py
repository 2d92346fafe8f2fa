"""Two physical specializations: the homogeneous chain and on-shell states.

At mu_j = 0 the contour integrand has 0/0 factors, so it is evaluated at
mu_j = eps * j for a few small eps and extrapolated.  Separately, solving the
Bethe equations turns B(y)|0> into an eigenvector of the transfer matrix,
which is checked against its open-chain Hamiltonian.
"""
import numpy as np

from openxxz import ModelParams, SpectralSets
from openxxz.algebra import hamiltonian, hamiltonian_from_transfer
from openxxz.bethe import bethe_residual, bethe_vector, eigencheck, solve_bethe_newton
from openxxz.numkernel import relerr
from openxxz.solver import homogeneous_scalar_product

rng = np.random.default_rng(3)
p = ModelParams.random_generic(2, rng)
s = SpectralSets.random(2, rng, params=p)
direct = homogeneous_scalar_product(s, p, "direct")
rec = homogeneous_scalar_product(s, p, "contour")
print("samples at eps =", rec.diagnostics["eps"])
for e, v in zip(rec.diagnostics["eps"], rec.diagnostics["samples"]):
    print(f"  eps {e:.4f}: rel. distance to mu = 0 value {abs(v - direct.value) / abs(direct.value):.2e}")
print(f"extrapolated: {abs(rec.value - direct.value) / abs(direct.value):.2e}"
      f"  (spread of two estimates {rec.diagnostics['spread']:.1e})")

p = ModelParams(0.5 + 0.3j, 0.8 - 0.2j, -0.6 + 0.4j, 3, (0.0, 0.0, 0.0))
print(f"\nHamiltonian from dT/dlambda at 0: rel. error {relerr(hamiltonian_from_transfer(p), hamiltonian(p)):.1e}")
roots = solve_bethe_newton(2, None, p, rng=1)
print("two-magnon Bethe roots:", np.round(roots, 6))
print(f"Bethe residual {np.max(np.abs(bethe_residual(roots, p))):.1e}, "
      f"transfer-matrix eigencheck {eigencheck(roots, 0.3 + 0.2j, p):.1e}")
psi = bethe_vector(roots, p)
H = hamiltonian(p)
E = np.vdot(psi, H @ psi) / np.vdot(psi, psi)
print(f"energy {E:.8f}; Hamiltonian eigencheck {np.linalg.norm(H @ psi - E * psi) / np.linalg.norm(H @ psi):.1e}")
