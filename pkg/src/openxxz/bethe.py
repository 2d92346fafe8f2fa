"""Bethe vectors, the dense scalar product, Bethe equations and on-shell checks."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .algebra import double_row_monodromy, magnon_number, transfer_matrix
from .numkernel import (GenericityError, ModelParams, SingularDenominatorError,
                        SpectralSets, check_sites, guard, ipi_distance, theta)


def highest_weight(L: int) -> np.ndarray:
    v = np.zeros(2 ** L, dtype=complex)
    v[0] = 1.0
    return v


def dual_highest_weight(L: int) -> np.ndarray:
    # the dual of (1,0)^{(x)L}; as a row vector it has the same entries
    return highest_weight(L)


def bethe_vector(Y: Sequence, params: ModelParams) -> np.ndarray:
    """B(y_1) B(y_2) ... B(y_n) |0>."""
    check_sites(params.L)
    v = highest_weight(params.L)
    for y in reversed(list(Y)):
        v = double_row_monodromy(y, params).B @ v
    return v


def dual_bethe_vector(X: Sequence, params: ModelParams) -> np.ndarray:
    """<0| C(x_n) ... C(x_1), returned as a row vector."""
    check_sites(params.L)
    w = dual_highest_weight(params.L)
    for x in reversed(list(X)):
        w = w @ double_row_monodromy(x, params).C
    return w


def sector_weight_outside(v: np.ndarray, L: int, n: int) -> float:
    m = magnon_number(L)
    tot = np.linalg.norm(v)
    return float(np.linalg.norm(v[m != n]) / tot) if tot else 0.0


def direct_value(X: Sequence, Y: Sequence, params: ModelParams) -> complex:
    """<0| C(x_n)...C(x_1) B(y_1)...B(y_n) |0> by dense contraction."""
    if len(X) != len(Y):
        raise ValueError("X and Y must have the same length")
    if len(X) > params.L:
        raise ValueError(f"n={len(X)} exceeds L={params.L}")
    return complex(dual_bethe_vector(X, params) @ bethe_vector(Y, params))


def _jsonable(z):
    if isinstance(z, (complex, np.complexfloating)):
        return {"re": float(np.real(z)), "im": float(np.imag(z))}
    if isinstance(z, (list, tuple)):
        return [_jsonable(v) for v in z]
    if isinstance(z, dict):
        return {k: _jsonable(v) for k, v in z.items()}
    if isinstance(z, np.floating):
        return float(z)
    if isinstance(z, np.integer):
        return int(z)
    return z


@dataclass
class EvalRecord:
    """One scalar-product evaluation plus whatever diagnostics its method produced."""

    method: str
    params: ModelParams
    sets: SpectralSets
    value: complex
    diagnostics: dict = field(default_factory=dict)
    seed: int | None = None
    flags: list = field(default_factory=list)

    @property
    def trusted(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return _jsonable(dict(method=self.method, params=self.params.as_dict(),
                              sets=self.sets.as_dict(), value=complex(self.value),
                              diagnostics=self.diagnostics, seed=self.seed,
                              flags=list(self.flags)))


def scalar_product_direct(sets: SpectralSets, params: ModelParams, seed=None,
                          require_generic: bool = True) -> EvalRecord:
    if sets.n > params.L:
        raise ValueError(f"n={sets.n} exceeds L={params.L}")
    if require_generic:
        bad = params.genericity_violations() + sets.genericity_violations(params)
        if bad:
            raise GenericityError(", ".join(bad))
    val = direct_value(sets.X, sets.Y, params)
    return EvalRecord("direct", params, sets, val, {}, seed)


# ----- Bethe equations -------------------------------------------------------------

def bethe_residual(Y: Sequence, params: ModelParams, printed: bool = False) -> np.ndarray:
    """LHS_j / RHS_j - 1 for each root.

    The pair factor on the right is
        sinh(y_j - y_l + g) sinh(y_j + y_l + 2g) / (sinh(y_j - y_l - g) sinh(y_j + y_l)),
    which is the form whose solutions are transfer-matrix eigenvectors for
    n = 2.  printed=True swaps the sum part for
        sinh(y_j + y_l + g) / sinh(y_j + y_l - g),
    which is not (kept for comparison only; both agree at n = 1).
    """
    Y = [complex(y) for y in Y]
    g, h, hb, d = params.gamma, params.h, params.hbar, params.delta_gen
    s_num, s_den = (g, -g) if printed else (2 * g, 0.0)
    out = []
    for j, y in enumerate(Y):
        lhs = theta(y, h, params) * theta(y, -hb, params)
        for m in params.mu:
            den = guard(np.sinh(y - m) * np.sinh(y + m), "b(lambda -+ mu)", d)
            lhs *= np.sinh(y - m + g) * np.sinh(y + m + g) / den
        rhs = 1.0 + 0j
        for l, z in enumerate(Y):
            if l == j:
                continue
            den = guard(np.sinh(y - z - g) * np.sinh(y + z + s_den), "pair denominator", d)
            rhs *= np.sinh(y - z + g) * np.sinh(y + z + s_num) / den
        out.append(lhs / guard(rhs, "Bethe right-hand side", d) - 1.0)
    return np.array(out)


class NewtonError(RuntimeError):
    pass


def _trivial_root(y, params: ModelParams) -> bool:
    # points where B(y)|0> degenerates or the equation itself is singular
    d = 10 * params.delta_gen
    g = params.gamma
    pts = [2 * y, 2 * y + g, 2 * y + 2 * g, 2 * y - g]
    pts += [y - m for m in params.mu] + [y + m for m in params.mu]
    pts += [y - m + g for m in params.mu] + [y + m + g for m in params.mu]
    return any(ipi_distance(z) < d for z in pts)


def solve_bethe_newton(n: int, initial: Sequence | None, params: ModelParams,
                       maxiter: int = 200, tol: float = 1e-10, rng=0) -> np.ndarray:
    """Bethe roots for n <= 2 from a seed, or from a seeded grid of guesses."""
    if n > 2:
        raise ValueError("Newton solve supports n <= 2 only")

    def fun(v):
        Y = v[:n] + 1j * v[n:]
        try:
            with np.errstate(all="ignore"):
                r = bethe_residual(Y, params)
        except SingularDenominatorError:
            return np.full(2 * n, 1e6)
        return np.concatenate([r.real, r.imag])

    if initial is not None:
        guesses = [np.asarray(initial, dtype=complex)]
    else:
        gen = np.random.default_rng(rng)
        guesses = [gen.uniform(-2.5, 2.5, n) + 1j * gen.uniform(-1.6, 1.6, n) for _ in range(200)]

    last = None
    for z0 in guesses:
        if len(z0) != n:
            raise ValueError(f"initial guess has {len(z0)} entries, expected {n}")
        sol = optimize.root(fun, np.concatenate([z0.real, z0.imag]), method="hybr",
                            options=dict(maxfev=maxiter * (2 * n + 1), xtol=1e-14))
        Y = sol.x[:n] + 1j * sol.x[n:]
        try:
            with np.errstate(all="ignore"):
                res = np.max(np.abs(bethe_residual(Y, params)))
        except SingularDenominatorError:
            continue
        if not np.isfinite(res):
            continue
        last = res
        if res < tol and not any(_trivial_root(y, params) for y in Y):
            if n == 2 and (ipi_distance(Y[0] - Y[1]) < 1e-3
                           or ipi_distance(Y[0] + Y[1] + params.gamma) < 1e-3):
                continue
            return Y
    if initial is not None and last is not None and np.isfinite(last):
        raise NewtonError(f"no convergence from the supplied guess (residual {last:.3e})")
    raise NewtonError("no nontrivial root found from the default grid")


def eigencheck(roots: Sequence, probe, params: ModelParams) -> float:
    """Collinearity residual of T(probe)|Psi> with |Psi>."""
    psi = bethe_vector(roots, params)
    nrm = np.linalg.norm(psi)
    if nrm < 1e-300:
        raise ValueError("Bethe vector vanishes")
    Tpsi = transfer_matrix(probe, params) @ psi
    tau = np.vdot(psi, Tpsi) / np.vdot(psi, psi)
    den = np.linalg.norm(Tpsi)
    if den == 0:
        return 0.0
    return float(np.linalg.norm(Tpsi - tau * psi) / den)


# ----- polynomial, symmetry and zero properties -------------------------------------

def polynomial_holdout_error(sets: SpectralSets, params: ModelParams, which: str = "Y",
                             index: int = 0, evaluator: Callable | None = None,
                             radius: float | None = None) -> float:
    """Fit x^L S as a degree-2L polynomial in x = exp(2 lambda), predict a fresh point.

    The 2L+1 nodes sit on a circle in the x plane around the original point, so
    the fit is a discrete Fourier transform and is well conditioned.
    """
    ev = evaluator or direct_value
    L = params.L
    X, Y = list(sets.X), list(sets.Y)
    Z = X if which == "X" else Y
    x0 = np.exp(2 * Z[index])
    rho = abs(x0) if radius is None else radius
    N = 2 * L + 1
    ang = 2 * np.pi * np.arange(N) / N + 0.37
    nodes = rho * np.exp(1j * ang)

    def sample(x):
        Zc = list(Z)
        Zc[index] = 0.5 * np.log(x)
        args = (Zc, Y) if which == "X" else (X, Zc)
        return x ** L * ev(*args, params)

    vals = np.array([sample(x) for x in nodes])
    V = np.vander(nodes, N, increasing=True)
    coef = np.linalg.solve(V, vals)
    x_new = 0.8 * rho * np.exp(1j * 1.1)
    pred = np.polyval(coef[::-1], x_new)
    true = sample(x_new)
    return float(abs(pred - true) / abs(true))


def symmetry_defect(sets: SpectralSets, params: ModelParams, evaluator: Callable | None = None) -> float:
    """Largest relative change of S over all permutations of X and of Y separately."""
    ev = evaluator or direct_value
    base = ev(sets.X, sets.Y, params)
    worst = 0.0
    for pX in itertools.permutations(sets.X):
        for pY in itertools.permutations(sets.Y):
            worst = max(worst, abs(ev(list(pX), list(pY), params) - base) / abs(base))
    return worst


def special_zero_pairs(params: ModelParams) -> list:
    g, m1 = params.gamma, params.mu[0]
    return [(m1 - g, m1), (m1 - g, -m1 - g), (-m1, m1)]


def generic_scale(sets: SpectralSets, params: ModelParams, rng=0, count: int = 10,
                  evaluator: Callable | None = None, spread: float = 0.3) -> float:
    """Median |S| over random points near the given ones."""
    ev = evaluator or direct_value
    gen = np.random.default_rng(rng)
    n = sets.n
    vals = []
    for _ in range(count):
        dX = spread * (gen.uniform(-1, 1, n) + 1j * gen.uniform(-1, 1, n))
        dY = spread * (gen.uniform(-1, 1, n) + 1j * gen.uniform(-1, 1, n))
        vals.append(abs(ev(list(np.array(sets.X) + dX), list(np.array(sets.Y) + dY), params)))
    return float(np.median(vals))


def special_zero_values(sets: SpectralSets, params: ModelParams, evaluator: Callable | None = None,
                        rng=0) -> dict:
    """|S| / generic scale at the three B-pair and three C-pair specializations."""
    if sets.n < 2:
        raise ValueError("special zeroes need n >= 2")
    ev = evaluator or direct_value
    scale = generic_scale(sets, params, rng, evaluator=ev)
    out = {}
    for k, pair in enumerate(special_zero_pairs(params)):
        Yz = list(pair) + list(sets.Y[2:])
        Xz = list(pair) + list(sets.X[2:])
        out[f"B{k}"] = abs(ev(sets.X, Yz, params)) / scale
        out[f"C{k}"] = abs(ev(Xz, sets.Y, params)) / scale
    return out
