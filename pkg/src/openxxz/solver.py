"""Separation-of-variables kernels, the size recursion, the n = 1 closed form and the
multiple contour integral for S_n, evaluated by residues or by circle quadrature."""
from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from .algebra import lambda_A, lambda_Dtilde
from .bethe import EvalRecord, direct_value
from .numkernel import (GenericityError, ModelParams, SingularDenominatorError, SpectralSets,
                        drop, guard, ipi_distance)


class ResonanceError(SingularDenominatorError):
    """A bracket that is divided by vanishes at the requested point."""


class QuadratureError(RuntimeError):
    pass


class ExtrapolationError(RuntimeError):
    pass


def _ab(params: ModelParams):
    g = params.gamma

    def a(x):
        return np.sinh(x + g)

    return a, np.sinh, np.sinh(g)


def _inv(x, what, params):
    return 1.0 / guard(x, what, params.delta_gen)


# ----- Step functions V, W, F, Omega ---------------------------------------------------

def _prefactor_V(Xr, Yr, params):
    a, b, _ = _ab(params)
    m1 = params.mu[0]
    return np.prod([b(l - m1) * a(l + m1) for l in Xr]) * np.prod([a(l - m1) * b(l + m1) for l in Yr])


def _prefactor_W(Xr, Yr, params):
    a, b, _ = _ab(params)
    m1 = params.mu[0]
    return np.prod([a(l - m1) * b(l + m1) for l in Xr]) * np.prod([b(l - m1) * a(l + m1) for l in Yr])


def extract_V(Xr: Sequence, Yr: Sequence, params: ModelParams, oracle: Callable | None = None) -> complex:
    """S_n(Xr + {mu_1 - g} | Yr + {mu_1}) with its explicit prefactor divided out."""
    ev = oracle or direct_value
    m1, g = params.mu[0], params.gamma
    pref = guard(_prefactor_V(Xr, Yr, params), "V prefactor", params.delta_gen)
    return ev(list(Xr) + [m1 - g], list(Yr) + [m1], params) / pref


def extract_W(Xr: Sequence, Yr: Sequence, params: ModelParams, oracle: Callable | None = None) -> complex:
    """S_n(Xr + {mu_1} | Yr + {mu_1 - g}) with its explicit prefactor divided out."""
    ev = oracle or direct_value
    m1, g = params.mu[0], params.gamma
    pref = guard(_prefactor_W(Xr, Yr, params), "W prefactor", params.delta_gen)
    return ev(list(Xr) + [m1], list(Yr) + [m1 - g], params) / pref


def _rest_prod(params, fn):
    return np.prod([fn(m) for m in params.mu[1:]]) if params.L > 1 else 1.0


def f_omega(Z: Sequence, params: ModelParams) -> complex:
    """The set function F(Z) multiplying the Omega sums at the mu_1 - g specialization."""
    a, b, c = _ab(params)
    m1, h = params.mu[0], params.h
    den = c * b(2 * m1) * b(h + m1) * _rest_prod(params, lambda m: a(m1 - m) * a(m1 + m))
    return np.prod([b(l - m1) * a(l + m1) for l in Z]) * _inv(den, "F denominator", params)


def omega(lam, Zl: Sequence, params: ModelParams, printed: bool = False) -> complex:
    """Omega_lambda(Z_lambda).

    The Dtilde term carries c / b(lambda + mu_1); printed=True uses
    c / a(lambda + mu_1), which breaks the specialization identities.
    """
    a, b, c = _ab(params)
    g, m1 = params.gamma, params.mu[0]
    t1 = lambda_A(lam, params) * c * _inv(a(lam - m1), "a(lambda - mu1)", params) * \
        b(2 * lam) * _inv(a(2 * lam), "a(2 lambda)", params)
    for t in Zl:
        t1 *= a(t - lam) / b(t - lam) * b(t + lam) / a(t + lam) * b(t - m1) * a(t + m1)
    den = a(lam + m1) if printed else b(lam + m1)
    t2 = lambda_Dtilde(lam, params) * c * _inv(den, "Omega denominator", params)
    for t in Zl:
        t2 *= a(lam - t) / b(lam - t) * a(t + lam + g) / b(t + lam + g) * b(t - m1) * a(t + m1)
    return t1 + t2


def fbar_omega(Z: Sequence, params: ModelParams) -> complex:
    """The set function Fbar(Z) for the mu_1 specialization."""
    a, b, c = _ab(params)
    g, m1, h = params.gamma, params.mu[0], params.h
    den = c * b(2 * m1 - 2 * g) * b(h - m1) * _rest_prod(params, lambda m: a(m - m1) * a(-m - m1))
    return np.prod([a(l - m1) * b(l + m1) for l in Z]) * _inv(den, "Fbar denominator", params)


def omega_bar(lam, Zl: Sequence, params: ModelParams) -> complex:
    a, b, c = _ab(params)
    g, m1 = params.gamma, params.mu[0]
    t1 = lambda_A(lam, params) * c * _inv(a(lam + m1), "a(lambda + mu1)", params) * \
        b(2 * lam) * _inv(a(2 * lam), "a(2 lambda)", params)
    for t in Zl:
        t1 *= a(t - lam) / b(t - lam) * b(t + lam) / a(t + lam) * a(t - m1) * b(t + m1)
    t2 = lambda_Dtilde(lam, params) * c * _inv(b(lam - m1), "b(lambda - mu1)", params)
    for t in Zl:
        t2 *= a(lam - t) / b(lam - t) * a(t + lam + g) / b(t + lam + g) * a(t - m1) * b(t + m1)
    return t1 + t2


def specialization_identity(which: str, sets: SpectralSets, params: ModelParams,
                            oracle: Callable | None = None, printed: bool = False):
    """Return (lhs, rhs) of one of the four single-point specialization identities.

    which: "Y_at_mu1_minus_g" (a Y entry set to mu_1 - g), "X_at_mu1_minus_g" (an X entry set to mu_1 - g),
    "Y_at_mu1" (a Y entry set to mu_1), "X_at_mu1" (an X entry set to mu_1).
    """
    ev = oracle or direct_value
    X, Y = list(sets.X), list(sets.Y)
    n = len(X)
    m1, g = params.mu[0], params.gamma

    def V(Xr, Yr):
        return extract_V(Xr, Yr, params, ev)

    def W(Xr, Yr):
        return extract_W(Xr, Yr, params, ev)

    if which == "Y_at_mu1_minus_g":
        Y1 = Y[:n - 1]
        lhs = ev(X, Y1 + [m1 - g], params)
        rhs = f_omega(Y1, params) * sum(omega(X[i], drop(X, i), params, printed) * V(drop(X, i), Y1)
                                        for i in range(n))
    elif which == "X_at_mu1_minus_g":
        X1 = X[:n - 1]
        lhs = ev(X1 + [m1 - g], Y, params)
        rhs = f_omega(X1, params) * sum(omega(Y[i], drop(Y, i), params, printed) * W(X1, drop(Y, i))
                                        for i in range(n))
    elif which == "Y_at_mu1":
        Y1 = Y[:n - 1]
        lhs = ev(X, Y1 + [m1], params)
        rhs = fbar_omega(Y1, params) * sum(omega_bar(X[i], drop(X, i), params) * W(drop(X, i), Y1)
                                           for i in range(n))
    elif which == "X_at_mu1":
        X1 = X[:n - 1]
        lhs = ev(X1 + [m1], Y, params)
        rhs = fbar_omega(X1, params) * sum(omega_bar(Y[i], drop(Y, i), params) * V(X1, drop(Y, i))
                                           for i in range(n))
    else:
        raise ValueError(f"unknown identity {which!r}")
    return complex(lhs), complex(rhs)


# ----- kernels ---------------------------------------------------------------------------

def _ratio_f(x, m1, params):
    a, b, _ = _ab(params)
    return a(x - m1) / b(x - m1) * b(x + m1) / a(x + m1)


def _gamma_matrix(lam, lamb, Zc, Zb, params, bar):
    a, b, _ = _ab(params)
    g, h, mu = params.gamma, params.h, params.mu
    m1 = mu[0]
    kap, Zs = (lam, lamb), (Zc, Zb)
    G = np.zeros((2, 2), dtype=complex)
    for i in (1, 2):
        for j in (1, 2):
            k, Z = kap[j - 1], Zs[j - 1]
            sg = (-1) ** (i - 1)
            s1 = sg if bar else -sg
            om = np.sinh(k + s1 * m1 + (i - 1) * g)
            omb = np.sinh(k - s1 * m1 + (2 - i) * g)
            t1 = b(h + k) * _inv(om, "omega", params) * np.prod([a(k - m) * a(k + m) for m in mu])
            t1 *= np.prod([a(t - k) / b(t - k) * b(t + k) / a(t + k) for t in Z])
            t2 = a(k - h) * _inv(omb, "omega bar", params) * np.prod([b(k - m) * b(k + m) for m in mu])
            t2 *= np.prod([a(k - t) / b(k - t) * a(t + k + g) / b(t + k + g) for t in Z])
            G[i - 1, j - 1] = t1 - t2
    return G


def _kernel(lam, lamb, sets, params, bar):
    a, b, _ = _ab(params)
    g, h = params.gamma, params.h
    m1 = params.mu[0]
    X, Y = list(sets.X), list(sets.Y)
    i, j = X.index(complex(lam)), Y.index(complex(lamb))
    Zc, Zb = drop(X, i), drop(Y, j)
    base = b(h + m1) * b(h - m1) * b(2 * m1 - 2 * g) * \
        np.prod([a(m1 - e * m) * a(e * m - m1) for m in params.mu[1:] for e in (1, -1)])
    fX = np.prod([_ratio_f(x, m1, params) for x in X])
    fY = np.prod([_ratio_f(y, m1, params) for y in Y])
    if bar:
        bracket = 1 / fX - 1 / fY
        scale = max(abs(1 / fX), abs(1 / fY))
        c0inv = base * b(2 * m1 - g) * bracket
        pr = np.prod([b(t - m1) * a(t + m1) for t in Zc + Zb])
    else:
        bracket = fX - fY
        scale = max(abs(fX), abs(fY))
        c0inv = base * b(2 * m1 + g) * bracket
        pr = np.prod([a(t - m1) * b(t + m1) for t in Zc + Zb])
    if abs(bracket) < params.delta_gen * scale:
        raise ResonanceError("the kernel normalization bracket vanishes (resonant point)")
    G = _gamma_matrix(lam, lamb, Zc, Zb, params, bar)
    return np.linalg.det(G) * b(2 * lam) / a(2 * lam) * b(2 * lamb) / a(2 * lamb) * pr / \
        guard(c0inv, "kernel normalization", params.delta_gen)


def kernel_K(lam, lamb, sets: SpectralSets, params: ModelParams) -> complex:
    """K_{lambda lambdabar}; lam must be an entry of X and lamb an entry of Y."""
    return complex(_kernel(lam, lamb, sets, params, False))


def kernel_Kbar(lam, lamb, sets: SpectralSets, params: ModelParams) -> complex:
    return complex(_kernel(lam, lamb, sets, params, True))


def kernel_expansion(sets: SpectralSets, params: ModelParams, V: Callable | None = None,
                     bar: bool = False) -> complex:
    """Sum over (lambda, lambdabar) of K (or Kbar) times V on the reduced sets."""
    Vf = V or (lambda Xr, Yr: extract_V(Xr, Yr, params))
    X, Y = list(sets.X), list(sets.Y)
    kf = kernel_Kbar if bar else kernel_K
    tot = 0j
    for i, j in itertools.product(range(len(X)), range(len(Y))):
        tot += kf(X[i], Y[j], sets, params) * Vf(drop(X, i), drop(Y, j))
    return tot


def kappa_V(params: ModelParams) -> complex:
    """Constant with V(X|Y) = kappa_V * S_{n-1}(X|Y) on the chain with mu_1 removed."""
    a, b, c = _ab(params)
    g, h, m1 = params.gamma, params.h, params.mu[0]
    out = c ** 2 * b(2 * m1) * b(h + m1) * b(h - m1) * b(2 * m1 - 2 * g)
    for m in params.mu[1:]:
        out *= a(m1 - m) * a(m1 + m) * a(m - m1) * a(-m - m1)
    return complex(out)


# ----- n = 1 closed form ----------------------------------------------------------------

def psi(lam, lamb, params: ModelParams) -> complex:
    a, b, _ = _ab(params)
    h, mu = params.h, params.mu

    def PA(x):
        return np.prod([a(x - m) * a(x + m) for m in mu])

    def PB(x):
        return np.prod([b(x - m) * b(x + m) for m in mu])

    return complex(b(h + lam) * PA(lam) * (b(h + lamb) * b(lam - lamb) * PA(lamb)
                                           + a(lamb - h) * a(lam + lamb) * PB(lamb))
                   - a(lam - h) * PB(lam) * (b(h + lamb) * a(lam + lamb) * PA(lamb)
                                             + a(lamb - h) * b(lam - lamb) * PB(lamb)))


def n1_value(lamC, lamB, params: ModelParams, kappa=None) -> complex:
    a, b, c = _ab(params)
    k = c if kappa is None else kappa
    den = guard(b(lamB - lamC) * a(lamB + lamC), "b(lB - lC) a(lB + lC)", params.delta_gen)
    r = b(2 * lamC) * _inv(a(2 * lamC), "a(2 lC)", params) * b(2 * lamB) * _inv(a(2 * lamB), "a(2 lB)", params)
    return complex(k * r * psi(lamB, lamC, params) / den)


def scalar_product_n1(lamC, lamB, params: ModelParams, seed=None) -> EvalRecord:
    v = n1_value(lamC, lamB, params)
    return EvalRecord("closed_n1", params, SpectralSets((lamC,), (lamB,)), v, {}, seed)


def n1_free_function(lamC, lamB, params: ModelParams, oracle: Callable | None = None) -> complex:
    """F(lambda^C) obtained by dividing the oracle S_1 by the remaining explicit factors."""
    ev = oracle or direct_value
    a, b, _ = _ab(params)
    s = ev([lamC], [lamB], params)
    return complex(s * b(lamB - lamC) * a(lamB + lamC) * a(2 * lamB) / b(2 * lamB) / psi(lamB, lamC, params))


def scalar_product_recursion(sets: SpectralSets, params: ModelParams) -> complex:
    """S_n from the kernel expansion, recursing on the chain with mu_1 removed down to n = 1."""
    if sets.n > params.L:
        raise ValueError("n exceeds L")
    if sets.n == 1:
        return n1_value(sets.X[0], sets.Y[0], params)
    sub = params.shifted()
    kv = kappa_V(params)

    def V(Xr, Yr):
        return kv * scalar_product_recursion(SpectralSets(Xr, Yr), sub)

    return kernel_expansion(sets, params, V)


# ----- contour integrand ------------------------------------------------------------------

def _fratio(x, m, g):
    return np.sinh(x - m + g) / np.sinh(x - m) * np.sinh(x + m) / np.sinh(x + m + g)


def _cols(w):
    """Split (..., n) into a list of n arrays, or pass a list through unchanged."""
    if isinstance(w, (list, tuple)):
        return [np.asarray(x, dtype=complex) for x in w]
    w = np.asarray(w, dtype=complex)
    return [w[..., i] for i in range(w.shape[-1])]


def r_factor(i: int, w, wb, params: ModelParams, return_scale: bool = False):
    """R_i (0-based level i).  w, wb: arrays shaped (..., n) or lists of broadcastable columns."""
    g, m = params.gamma, params.mu[i]
    w, wb = _cols(w), _cols(wb)
    p1 = np.prod(np.broadcast_arrays(*[_fratio(x, m, g) for x in w[i:]]), axis=0)
    p2 = np.prod(np.broadcast_arrays(*[_fratio(x, m, g) for x in wb[i:]]), axis=0)
    if return_scale:
        return p1 - p2, np.maximum(np.abs(p1), np.abs(p2))
    return p1 - p2


def phi_columns(i: int, s, params: ModelParams, printed_phi1: bool = False):
    """Both entries (l = 1, 2) of one column of Phi^(i), for the points s (w or wb).

    printed_phi1 applies the level-one variant whose last factor reads
    a(2 s_1 + gamma) / b(s_1 + s_j + gamma) instead of a(s_1 + s_j + gamma) / b(...).
    """
    g, h, mu = params.gamma, params.h, params.mu
    s = _cols(s)
    si = s[i]
    PA = 1.0 + 0j
    PB = 1.0 + 0j
    for mk in mu[i:]:
        PA = PA * np.sinh(si - mk + g) * np.sinh(si + mk + g)
        PB = PB * np.sinh(si - mk) * np.sinh(si + mk)
    pa = 1.0 + 0j
    pd = 1.0 + 0j
    for sj in s[i + 1:]:
        d, u = sj - si, sj + si
        pa = pa * np.sinh(d + g) / np.sinh(d) * np.sinh(u) / np.sinh(u + g)
        num = np.sinh(2 * si + 2 * g) if printed_phi1 else np.sinh(u + 2 * g)
        pd = pd * np.sinh(g - d) / np.sinh(-d) * num / np.sinh(u + g)
    out = []
    for l in (1, 2):
        sg = (-1) ** (l - 1)
        om = np.sinh(si - sg * mu[i] + (l - 1) * g)
        omb = np.sinh(si + sg * mu[i] + (2 - l) * g)
        out.append(np.sinh(h + si) / om * PA * pa - np.sinh(si - h + g) / omb * PB * pd)
    return out


def phi_matrix(i: int, w, wb, params: ModelParams, printed_phi1: bool = False):
    """Phi^(i) with shape (..., 2, 2); column 1 uses w, column 2 uses wb."""
    c1 = phi_columns(i, w, params, printed_phi1)
    c2 = phi_columns(i, wb, params, printed_phi1)
    e = np.broadcast_arrays(c1[0], c2[1], c1[1], c2[0])
    return np.stack([np.stack([e[0], e[3]], -1), np.stack([e[2], e[1]], -1)], -2)


def _det_phi(i, w, wb, params):
    c1 = phi_columns(i, w, params)
    c2 = phi_columns(i, wb, params)
    return c1[0] * c2[1] - c2[0] * c1[1]


def integrand_H(w, wb, params: ModelParams, with_diag: bool = False):
    """Numerator H(w | wb) of the contour integrand (the b(w - lambda) poles excluded).

    w and wb have shape (..., n), or are lists of n mutually broadcastable
    arrays.  with_diag also returns min_i |R_i| / scale_i.
    """
    w, wb = _cols(w), _cols(wb)
    n = len(w)
    g, mu = params.gamma, np.asarray(params.mu)
    c = np.sinh(g)
    out = c ** (2 * n) * np.prod(np.sinh(2 * mu[:n]) / np.sinh(2 * mu[:n] + g))
    for i in range(n):
        m = mu[i]
        for j in range(i + 1, n):
            out = out * (np.sinh(w[j] - m + g) * np.sinh(w[j] + m) * np.sinh(w[j] - w[i]) ** 2)
            out = out * (np.sinh(wb[j] - m + g) * np.sinh(wb[j] + m) * np.sinh(wb[j] - wb[i]) ** 2)
    worst = np.inf
    for i in range(n):
        R, sc = r_factor(i, w, wb, params, True)
        if with_diag:
            worst = np.minimum(worst, np.abs(R) / sc)
        out = out * (np.sinh(2 * w[i]) / np.sinh(2 * w[i] + g))
        out = out * (np.sinh(2 * wb[i]) / np.sinh(2 * wb[i] + g))
        out = out * _det_phi(i, w, wb, params) / R
    if with_diag:
        return out, worst
    return out


def contour_residue_value(X: Sequence, Y: Sequence, params: ModelParams, diag: dict | None = None) -> complex:
    """Sum over permutation pairs of the residue weights, deterministic (sigma, tau) order."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    n = len(X)
    if n > params.L:
        raise ValueError(f"n={n} exceeds L={params.L}")
    perms = list(itertools.permutations(range(n)))
    sig = np.array([[X[s] for s in p] for p in perms])
    tau = np.array([[Y[s] for s in p] for p in perms])
    P = len(perms)
    w = np.repeat(sig, P, axis=0)
    wb = np.tile(tau, (P, 1))
    H, worst = integrand_H(w, wb, params, with_diag=True)

    def poles(v, pts, idx):
        den = np.ones(v.shape[0], complex)
        for i in range(n):
            for j in range(n):
                mask = idx[:, i] != j
                den = den * np.where(mask, np.sinh(v[:, i] - pts[j]), 1.0)
        return den

    sidx = np.repeat(np.array(perms), P, axis=0)
    tidx = np.tile(np.array(perms), (P, 1))
    terms = H / (poles(w, X, sidx) * poles(wb, Y, tidx))
    if diag is not None:
        diag["term_count"] = int(P * P)
        diag["min_R_ratio"] = float(np.min(worst))
    return complex(np.sum(terms))


def contour_value(X, Y, params: ModelParams) -> complex:
    """Evaluator-signature wrapper for the residue mode."""
    return contour_residue_value(X, Y, params)


def _known_singularities(params: ModelParams) -> list:
    g = params.gamma
    pts = [-g / 2, -g / 2 + 1j * np.pi / 2]
    for m in params.mu:
        pts += [m, -m - g, -m, m - g]
    return pts


def default_radius(centers: Sequence, params: ModelParams, r0: float = 0.1) -> float:
    r = r0
    cs = list(centers)
    for i, z in enumerate(cs):
        for u in cs[i + 1:]:
            r = min(r, ipi_distance(z - u) / 3)
        for s in _known_singularities(params):
            r = min(r, ipi_distance(z - s) / 3)
    return r


def contour_quadrature_value(X, Y, params: ModelParams, nodes: int = 96,
                             radius=None) -> complex:
    """Nested trapezoid rule on circles around every lambda (w around X, wb around Y).

    Each of the 2n variables gets its own array axis; the first variable is
    looped over so that memory stays at (n * nodes)^(2n - 1) points.
    """
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    n = len(X)
    if radius is None:
        rw, rb = default_radius(X, params), default_radius(Y, params)
    elif np.ndim(radius) == 0:
        rw = rb = float(radius)
    else:
        rw, rb = radius
    th = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
    e = np.exp(1j * th)

    def circle(centers, r):
        z = (centers[:, None] + r * e[None, :]).ravel()
        wt = np.tile(r * e / nodes, len(centers))
        return z, wt

    zw, ww = circle(X, rw)
    zb, wbt = circle(Y, rb)
    nv = 2 * n - 1

    def axis(v, k):
        shape = [1] * nv
        shape[k] = -1
        return v.reshape(shape)

    # variables 1..2n-1 on axes 0..2n-2; variable 0 (w_1) is looped over
    rest_w = [axis(zw, k - 1) for k in range(1, n)]
    rest_b = [axis(zb, n - 1 + k) for k in range(n)]
    wt = 1.0 + 0j
    for k in range(1, n):
        wt = wt * axis(ww, k - 1)
    for k in range(n):
        wt = wt * axis(wbt, n - 1 + k)
    den = 1.0 + 0j
    for x in rest_w:
        den = den * np.prod(np.sinh(x[..., None] - X), axis=-1)
    for x in rest_b:
        den = den * np.prod(np.sinh(x[..., None] - Y), axis=-1)
    acc = 0j
    with np.errstate(all="ignore"):
        for z0, w0 in zip(zw, ww):
            cols = [np.asarray(z0)] + rest_w
            vals = integrand_H(cols, rest_b, params) * wt * (w0 / np.prod(np.sinh(z0 - X)) / den)
            vals = np.where(np.isfinite(vals), vals, 0.0)
            acc += vals.sum()
    return complex(acc)


QUAD_BUDGET = 17_000_000
MIN_QUAD_NODES = 8


def quadrature_nodes(n: int, requested: int = 96, budget: int = QUAD_BUDGET) -> int:
    """Largest node count <= requested whose doubled grid stays within the point budget."""
    N = requested
    while N > MIN_QUAD_NODES and (2 * n * N) ** (2 * n) > budget:
        N -= 1
    if (2 * n * N) ** (2 * n) > budget:
        raise QuadratureError(f"n={n} needs more than {budget} grid points even at {N} nodes")
    return N


def contour_scalar_product(sets: SpectralSets, params: ModelParams, mode: str = "residue",
                           seed=None, nodes: int | None = None, require_generic: bool = True,
                           resonance_check: bool = True, quad_tol: float = 1e-8) -> EvalRecord:
    if sets.n > params.L:
        raise ValueError(f"n={sets.n} exceeds L={params.L}")
    if require_generic:
        bad = params.genericity_violations() + sets.genericity_violations(params)
        if bad:
            raise GenericityError(", ".join(bad))
    diag: dict = {}
    flags = []
    if mode == "residue":
        val = contour_residue_value(sets.X, sets.Y, params, diag)
        if resonance_check and diag["min_R_ratio"] < params.delta_gen:
            flags.append("resonance: some |R_i| is below delta_gen times its scale")
    elif mode == "quadrature":
        N = nodes if nodes is not None else quadrature_nodes(sets.n)
        rX, rY = default_radius(sets.X, params), default_radius(sets.Y, params)
        attempts = []
        for _ in range(2):
            v1 = contour_quadrature_value(sets.X, sets.Y, params, N, (rX, rY))
            v2 = contour_quadrature_value(sets.X, sets.Y, params, 2 * N, (rX, rY))
            change = abs(v2 - v1) / abs(v2) if v2 else abs(v1)
            attempts.append(dict(radius_X=rX, radius_Y=rY, doubling_change=float(change)))
            if change <= quad_tol:
                break
            # an integrand singularity sits close to a circle: shrink and retry once
            rX, rY = rX / 2, rY / 2
        diag.update(nodes=N, doubled_nodes=2 * N, doubling_change=attempts[-1]["doubling_change"],
                    radius_X=rX, radius_Y=rY, attempts=attempts)
        val = v2
        if change > quad_tol:
            flags.append(f"quadrature: doubling nodes changed the result by {change:.2e}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return EvalRecord(f"contour_{mode}", params, sets, val, diag, seed, flags)


# ----- level-one recursion of the integrand ----------------------------------------------

def r1(w, wb, params: ModelParams) -> complex:
    """R_1 assembled from its own level-one formula."""
    a, b, _ = _ab(params)
    m1 = params.mu[0]
    p1 = np.prod([a(x - m1) / b(x - m1) * b(x + m1) / a(x + m1) for x in w])
    p2 = np.prod([a(x - m1) / b(x - m1) * b(x + m1) / a(x + m1) for x in wb])
    return complex(p1 - p2)


def phi1(w, wb, params: ModelParams, printed: bool = False) -> np.ndarray:
    """Level-one Phi matrix assembled independently of phi_matrix."""
    a, b, _ = _ab(params)
    g, h, mu = params.gamma, params.h, params.mu
    n = len(w)
    M = np.zeros((2, 2), dtype=complex)
    for m, s in enumerate((list(w), list(wb))):
        s1 = s[0]
        for l in (1, 2):
            sg = (-1) ** (l - 1)
            t1 = b(h + s1) / np.sinh(s1 - sg * mu[0] + (l - 1) * g)
            t1 *= np.prod([a(s1 - mk) * a(s1 + mk) for mk in mu])
            t1 *= np.prod([a(s[j] - s1) / b(s[j] - s1) * b(s[j] + s1) / a(s[j] + s1) for j in range(1, n)])
            t2 = a(s1 - h) / np.sinh(s1 + sg * mu[0] + (2 - l) * g)
            t2 *= np.prod([b(s1 - mk) * b(s1 + mk) for mk in mu])
            for j in range(1, n):
                top = a(s1 + s1) if printed else a(s1 + s[j] + g)
                t2 *= a(s1 - s[j]) / b(s1 - s[j]) * top / b(s1 + s[j] + g)
            M[l - 1, m] = t1 - t2
    return M


def level_one_bracket(params: ModelParams) -> complex:
    a, b, _ = _ab(params)
    g, h, m1 = params.gamma, params.h, params.mu[0]
    out = b(2 * m1 - 2 * g) * b(2 * m1 + g)
    for e in (1, -1):
        out *= b(h + e * m1)
        for m in params.mu[1:]:
            out *= a(m1 - e * m) * a(e * m - m1)
    return complex(out)


def level_one_factor(w, wb, params: ModelParams, printed: bool = False) -> complex:
    """Everything the integrand recursion puts in front of the level-shifted integrand."""
    a, b, _ = _ab(params)
    m1 = params.mu[0]
    w, wb = list(w), list(wb)
    out = b(2 * w[0]) / a(2 * w[0]) * b(2 * wb[0]) / a(2 * wb[0]) / r1(w, wb, params) * \
        np.linalg.det(phi1(w, wb, params, printed)) / level_one_bracket(params)
    for k in range(1, len(w)):
        out *= b(w[k] - w[0]) ** 2 * b(wb[k] - wb[0]) ** 2 * a(w[k] - m1) * b(w[k] + m1) * \
            a(wb[k] - m1) * b(wb[k] + m1)
    return complex(out)


def level_one_ratio(w, wb, params: ModelParams, printed: bool = False) -> complex:
    """H_n(w|wb) / (level-one factor * H_{n-1} on the shifted chain).

    The recursion fixes the shifted integrand only up to a constant, so this
    ratio must be independent of (w, wb); its predicted value is
    c^2 b(2 mu_1) / a(2 mu_1) times the bracket.
    """
    w = np.asarray(w, dtype=complex)
    wb = np.asarray(wb, dtype=complex)
    H = integrand_H(w[None], wb[None], params)[0]
    Hs = integrand_H(w[None, 1:], wb[None, 1:], params.shifted())[0]
    return complex(H / (level_one_factor(w, wb, params, printed) * Hs))


def level_one_constant(params: ModelParams) -> complex:
    g, m1 = params.gamma, params.mu[0]
    return complex(np.sinh(g) ** 2 * np.sinh(2 * m1) / np.sinh(2 * m1 + g) * level_one_bracket(params))


# ----- homogeneous limit -----------------------------------------------------------------

HOMOGENEOUS_EPS = (1e-2, 5e-3, 2.5e-3)


def homogeneous_scalar_product(sets: SpectralSets, params: ModelParams, method: str = "direct",
                               eps: Sequence = HOMOGENEOUS_EPS, tol: float = 1e-6, seed=None) -> EvalRecord:
    """S_n with every mu_j = 0.

    The contour route evaluates at mu_j = eps * j, which is even in eps, and
    Richardson-extrapolates (4 S(eps/2) - S(eps)) / 3 from the first two eps values.
    The third value gives a second extrapolation; if the two disagree by more
    than tol the limit is declared unstable.
    """
    L = params.L
    p0 = params.replace(mu=(0.0,) * L)
    if method == "direct":
        v = direct_value(sets.X, sets.Y, p0)
        return EvalRecord("homogeneous_direct", p0, sets, v, {}, seed)
    if method != "contour":
        raise ValueError(f"unknown method {method!r}")
    vals, ratios = [], []
    for e in eps:
        pe = params.replace(mu=tuple(e * (j + 1) for j in range(L)))
        vals.append(contour_residue_value(sets.X, sets.Y, pe))
        w, wb = np.asarray(sets.X)[None], np.asarray(sets.Y)[None]
        ratios.append(complex(np.sinh(2 * pe.mu[0]) / r_factor(0, w, wb, pe)[0]))
    est1 = (4 * vals[1] - vals[0]) / 3
    est2 = (4 * vals[2] - vals[1]) / 3
    spread = abs(est2 - est1) / abs(est2)
    diag = dict(eps=list(eps), samples=vals, estimates=[est1, est2], spread=float(spread),
                b2mu_over_R1=ratios)
    if spread > tol:
        raise ExtrapolationError(f"Richardson estimates differ by {spread:.2e}")
    return EvalRecord("homogeneous_contour", p0, sets, est1, diag, seed)
