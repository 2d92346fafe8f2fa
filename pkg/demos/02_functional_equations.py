"""The scalar product satisfies two linear functional equations.

Each equation ties S_n(X|Y) to the 2n products obtained by swapping the
auxiliary point lambda0 into X or into Y.  The dense scalar product satisfies
them to rounding error; a function that is not the scalar product does not.
"""
import numpy as np

from openxxz import ModelParams, SpectralSets
from openxxz.funceq import equation_residual, residue_cancellation, verify_exchange_relation

rng = np.random.default_rng(7)
p = ModelParams.random_generic(3, rng)
s = SpectralSets.random(2, rng, params=p)
lam0 = 0.31 - 0.42j

for kind in ("typeA", "typeD"):
    good = equation_residual(kind, lam0, s, None, p)
    bad = equation_residual(kind, lam0, s, lambda X, Y, q: np.prod(np.sinh(np.array(X) - np.array(Y))), p)
    print(f"{kind}: scalar product residual {good:.1e}, impostor residual {bad:.1e}")

# the equations hold with hbar changed, because S_n never sees hbar
p2 = p.replace(hbar=p.hbar + 0.5)
print("typeA with a different hbar:", f"{equation_residual('typeA', lam0, s, None, p2):.1e}")

# they come from operator exchange relations, checked here as matrix identities
for kind in ("AB", "CA", "DB", "CD"):
    print(f"exchange {kind}: {verify_exchange_relation(kind, lam0, [0.2 + 0.1j, -0.5 + 0.3j], p):.1e}")

# the apparent pole of the coefficients at lambda0 = x_1 cancels between two of them
r = residue_cancellation(0, s, p)
print(f"residues at lambda0 = x_1: {r['res_M0']:.3e} and {r['res_NC']:.3e}, defect {r['defect']:.1e}")
