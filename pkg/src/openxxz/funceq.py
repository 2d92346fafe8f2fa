"""The two linear functional equations, exchange relations and large-x asymptotics."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import d_tilde, double_row_monodromy, lambda_A, lambda_Dtilde
from .bethe import direct_value, highest_weight
from .numkernel import ModelParams, SpectralSets, delta_sum, drop, guard, relerr


def _weights(params: ModelParams):
    g, dg = params.gamma, params.delta_gen

    def a(x):
        return np.sinh(x + g)

    def b(x):
        return np.sinh(x)

    def inv(x, what):
        return 1.0 / guard(x, what, dg)

    return a, b, np.sinh(g), inv


def _fA(lam, lam0, params):
    # a(lam - lam0)/b(lam - lam0) * b(lam + lam0)/a(lam + lam0)
    a, b, _, inv = _weights(params)
    return a(lam - lam0) * inv(b(lam - lam0), "b(lambda - lambda0)") * \
        b(lam + lam0) * inv(a(lam + lam0), "a(lambda + lambda0)")


def _fD(lam, lam0, params):
    a, b, _, inv = _weights(params)
    g = params.gamma
    return a(lam0 - lam) * inv(b(lam0 - lam), "b(lambda0 - lambda)") * \
        a(lam0 + lam + g) * inv(b(lam0 + lam + g), "b(lambda0 + lambda + gamma)")


def _prod_A(lam, others, params):
    """Product over the other points of a(t-l)/b(t-l) * b(t+l)/a(t+l)."""
    out = 1.0 + 0j
    for t in others:
        out *= _fA(t, lam, params)
    return out


def _prod_D(lam, others, params):
    """Product over the other points of a(l-t)/b(l-t) * a(l+t+g)/b(l+t+g)."""
    out = 1.0 + 0j
    for t in others:
        out *= _fD(t, lam, params)
    return out


@dataclass(frozen=True)
class EquationCoefficients:
    kind: str
    lambda0: complex
    M0: complex
    NC: tuple
    NB: tuple


def _N(kind, lam, lam0, others, params):
    a, b, c, inv = _weights(params)
    g = params.gamma
    LA, LD = lambda_A(lam, params), lambda_Dtilde(lam, params)
    r2 = b(2 * lam) * inv(a(2 * lam), "a(2 lambda)")
    if kind == "typeA":
        tA = LA * c * inv(b(lam - lam0), "b(lambda - lambda0)") * r2 * _prod_A(lam, others, params)
        tD = LD * c * inv(a(lam + lam0), "a(lambda + lambda0)") * _prod_D(lam, others, params)
        return tA + tD
    if kind == "typeD":
        s = a(2 * lam0 + g)
        tA = -LA * c * inv(a(2 * lam0), "a(2 lambda0)") * r2 * s * \
            inv(a(lam0 + lam), "a(lambda0 + lambda)") * _prod_A(lam, others, params)
        tD = LD * s * inv(b(2 * lam0 + g), "b(2 lambda0 + gamma)") * c * \
            inv(b(lam0 - lam), "b(lambda0 - lambda)") * _prod_D(lam, others, params)
        return tA + tD
    raise ValueError(f"unknown equation kind {kind!r}")


def coefficients(kind: str, lambda0, sets: SpectralSets, params: ModelParams) -> EquationCoefficients:
    X, Y = list(sets.X), list(sets.Y)
    if kind == "typeA":
        f, pre = _fA, lambda_A(lambda0, params)
    elif kind == "typeD":
        f, pre = _fD, lambda_Dtilde(lambda0, params)
    else:
        raise ValueError(f"unknown equation kind {kind!r}")
    pY = np.prod([f(l, lambda0, params) for l in Y])
    pX = np.prod([f(l, lambda0, params) for l in X])
    M0 = pre * (pY - pX)
    NC = tuple(_N(kind, X[i], lambda0, drop(X, i), params) for i in range(len(X)))
    NB = tuple(-_N(kind, Y[i], lambda0, drop(Y, i), params) for i in range(len(Y)))
    return EquationCoefficients(kind, complex(lambda0), complex(M0), NC, NB)


def equation_terms(kind: str, lambda0, sets: SpectralSets, params: ModelParams,
                   evaluator: Callable | None = None) -> np.ndarray:
    ev = evaluator or direct_value
    co = coefficients(kind, lambda0, sets, params)
    X, Y = list(sets.X), list(sets.Y)
    terms = [co.M0 * ev(X, Y, params)]
    for i, N in enumerate(co.NC):
        terms.append(N * ev([lambda0] + drop(X, i), Y, params))
    for i, N in enumerate(co.NB):
        terms.append(N * ev(X, [lambda0] + drop(Y, i), params))
    return np.array(terms)


def equation_residual(kind: str, lambda0, sets: SpectralSets, evaluator: Callable | None,
                      params: ModelParams) -> float:
    """|sum of terms| / max |term|."""
    t = equation_terms(kind, lambda0, sets, params, evaluator)
    return float(abs(t.sum()) / np.max(np.abs(t)))


def residue_cancellation(k: int, sets: SpectralSets, params: ModelParams,
                         radius: float = 1e-2, nodes: int = 64) -> dict:
    """Circle integrals of M0 and of N^C_{x_k} (type A) around lambda0 = x_k.

    Returns both residues plus the relative defect of Res M0 + Res N = 0 and
    the change in that defect when the node count is doubled.
    """
    xk = sets.X[k]

    def circle(N):
        th = 2 * np.pi * (np.arange(N) + 0.5) / N
        pts = xk + radius * np.exp(1j * th)
        m0 = n0 = 0j
        for z, e in zip(pts, np.exp(1j * th)):
            co = coefficients("typeA", z, sets, params)
            w = radius * e / N
            m0 += co.M0 * w
            n0 += co.NC[k] * w
        return m0, n0

    m, nn = circle(nodes)
    m2, n2 = circle(2 * nodes)
    scale = max(abs(m), abs(nn))
    return dict(res_M0=m, res_NC=nn, defect=abs(m + nn) / scale,
                doubling_change=max(abs(m2 - m), abs(n2 - nn)) / scale)


# ----- exchange relations ------------------------------------------------------------

def _blocks(lam, params):
    blk = double_row_monodromy(lam, params)
    return dict(A=blk.A, B=blk.B, C=blk.C, D=blk.D, Dt=d_tilde(lam, blk, params))


def _chain(ops, d):
    out = np.eye(d, dtype=complex)
    for o in ops:
        out = out @ o
    return out


def exchange_sides(kind: str, lambda0, Z: Sequence, params: ModelParams, printed: bool = False):
    """Left and right sides of the A/D exchange relation through n B's or C's.

    For the D relations the operator moved through the string is Dtilde(lambda0)
    (the combination the type D equation is built from).  printed=True uses the
    plain D(lambda0) instead, which does not satisfy the displayed right side.
    """
    a, b, c, inv = _weights(params)
    g = params.gamma
    Z = list(Z)
    n = len(Z)
    d = 2 ** params.L
    bl = [_blocks(z, params) for z in Z]
    b0 = _blocks(lambda0, params)
    key = "B" if kind in ("AB", "DB") else "C"
    string = _chain([bl[i][key] for i in range(n)], d)

    def replaced(i):
        return _chain([b0[key]] + [bl[j][key] for j in range(n) if j != i], d)

    if kind in ("AB", "CA"):
        lead = np.prod([_fA(l, lambda0, params) for l in Z])
        op0 = b0["A"]

        def inner(i):
            zi, rest = Z[i], drop(Z, i)
            cA = c * inv(b(zi - lambda0), "b") * b(2 * zi) * inv(a(2 * zi), "a(2l)") * _prod_A(zi, rest, params)
            cD = c * inv(a(zi + lambda0), "a") * _prod_D(zi, rest, params)
            return cA * bl[i]["A"] + cD * bl[i]["Dt"]
        sign = -1.0
    elif kind in ("DB", "CD"):
        lead = np.prod([_fD(l, lambda0, params) for l in Z])
        op0 = b0["D"] if printed else b0["Dt"]
        s = a(2 * lambda0 + g)

        def inner(i):
            zi, rest = Z[i], drop(Z, i)
            cA = c * inv(a(2 * lambda0), "a(2l0)") * b(2 * zi) * inv(a(2 * zi), "a(2l)") * s * \
                inv(a(lambda0 + zi), "a") * _prod_A(zi, rest, params)
            cD = s * inv(b(2 * lambda0 + g), "b(2l0+g)") * c * inv(b(lambda0 - zi), "b") * \
                _prod_D(zi, rest, params)
            return cA * bl[i]["A"] - cD * bl[i]["Dt"]
        sign = 1.0
    else:
        raise ValueError(f"unknown exchange relation {kind!r}")

    if kind in ("AB", "DB"):
        lhs = op0 @ string
        rhs = lead * string @ op0 + sign * sum(replaced(i) @ inner(i) for i in range(n))
    else:
        lhs = string @ op0
        rhs = lead * op0 @ string + sign * sum(inner(i) @ replaced(i) for i in range(n))
    return lhs, rhs


def verify_exchange_relation(kind: str, lambda0, Z: Sequence, params: ModelParams,
                             printed: bool = False) -> float:
    if len(Z) > params.L:
        raise ValueError("need L >= n")
    lhs, rhs = exchange_sides(kind, lambda0, Z, params, printed)
    return relerr(rhs, lhs)


# ----- large-x asymptotics ------------------------------------------------------------

XPLUS = np.array([[0, 1], [0, 0]], dtype=complex)
XMINUS = np.array([[0, 0], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class AsymptoticOperators:
    """P_j^s and Pbar_j^s on the 2^L space, keyed by (s, j) with s = +1/-1, j = 1..L.

    convention="calibrated" is the form matching the numerical limit of B(x)/x^L
    and C(x)/x^L in this package's site ordering: the K^s string sits on sites
    before j and P carries y_j^(-1/2).  convention="printed" puts K^s on the
    sites after j with y_j^(+1/2), the mirror image.  Both give the same vacuum
    expectation <0|Jbar J|0>, because the scalar product is invariant under
    reversing the sites combined with mu -> -mu.
    """

    P: dict
    Pbar: dict
    K: np.ndarray
    Xplus: np.ndarray
    Xminus: np.ndarray
    norm: complex
    convention: str


def asymptotic_operators(params: ModelParams, convention: str = "calibrated") -> AsymptoticOperators:
    L, q, t = params.L, params.q, params.t
    K = np.diag([q, 1 / q]).astype(complex)
    if convention == "calibrated":
        ysign, k_before = -1, True
    elif convention == "printed":
        ysign, k_before = 1, False
    else:
        raise ValueError(f"unknown convention {convention!r}")

    def build(X, ys):
        out = {}
        for s in (1, -1):
            Ks = np.linalg.matrix_power(K, s)
            for j in range(1, L + 1):
                pref = s * (t * np.exp(ys * params.mu[j - 1])) ** s
                M = np.array([[1]], dtype=complex)
                for k in range(1, L + 1):
                    if k == j:
                        f = X
                    elif (k < j) == k_before:
                        f = Ks
                    else:
                        f = np.eye(2)
                    M = np.kron(M, f)
                out[(s, j)] = pref * M
        return out

    norm = q ** (L - 1) / 2 ** (2 * L + 1) * (q - 1 / q)
    return AsymptoticOperators(build(XMINUS, ysign), build(XPLUS, -ysign), K, XPLUS, XMINUS,
                               norm, convention)


def asymptotic_operator(kind: str, params: ModelParams, convention: str = "calibrated") -> np.ndarray:
    """Limit of B(x)/x^L (kind "B") or C(x)/x^L (kind "C") as x = exp(2 lambda) grows."""
    ops = asymptotic_operators(params, convention)
    src = ops.P if kind == "B" else ops.Pbar
    return ops.norm * sum(src.values())


def q_operator(ops: AsymptoticOperators, j: int, m: int, bar: bool = False) -> np.ndarray:
    q = ops.K[0, 0]
    if bar:
        return ops.Pbar[(1, j)] * q ** (2 * m) + ops.Pbar[(-1, j)] * q ** (-2 * m)
    return ops.P[(1, j)] * q ** (-2 * m) + ops.P[(-1, j)] * q ** (2 * m)


def _site_pairs(ops: AsymptoticOperators, L: int):
    """Site pairs (i, j) playing the role of i < j in the ordering rules."""
    pairs = list(itertools.combinations(range(1, L + 1), 2))
    if ops.convention == "calibrated":
        pairs = [(j, i) for i, j in pairs]
    return pairs


def commutation_defects(params: ModelParams, convention: str = "calibrated", mmax: int = 2) -> dict:
    """Largest relative defect of each family of P, Pbar and Q ordering rules.

    Keys: "P", "Pbar" (the q^(-+2) exchange rules and P_i^s P_i^s' = 0),
    "Q", "Qbar" (Q_i^(m) Q_j^(k) = Q_j^(k) Q_i^(m+1) and Q_i Q_i = 0).
    The nilpotent rules report absolute norms scaled by |P|^2.
    """
    ops = asymptotic_operators(params, convention)
    L, q = params.L, params.q

    def rel(A, B):
        den = max(np.linalg.norm(A), np.linalg.norm(B))
        return float(np.linalg.norm(A - B) / den) if den else 0.0

    out = dict(P=0.0, Pbar=0.0, Q=0.0, Qbar=0.0)
    for key, src, sg in (("P", ops.P, -1), ("Pbar", ops.Pbar, 1)):
        for i, j in _site_pairs(ops, L):
            for s in (1, -1):
                for s2 in (1, -1):
                    lhs = src[(s, i)] @ src[(s2, j)]
                    rhs = q ** (2 * sg * s) * src[(s2, j)] @ src[(s, i)]
                    out[key] = max(out[key], rel(lhs, rhs))
        for i in range(1, L + 1):
            for s in (1, -1):
                for s2 in (1, -1):
                    scale = np.linalg.norm(src[(s, i)]) * np.linalg.norm(src[(s2, i)])
                    out[key] = max(out[key], float(np.linalg.norm(src[(s, i)] @ src[(s2, i)]) / scale))
    for key, bar in (("Q", False), ("Qbar", True)):
        for m in range(mmax + 1):
            for k in range(mmax + 1):
                for i, j in _site_pairs(ops, L):
                    lhs = q_operator(ops, i, m, bar) @ q_operator(ops, j, k, bar)
                    rhs = q_operator(ops, j, k, bar) @ q_operator(ops, i, m + 1, bar)
                    out[key] = max(out[key], rel(lhs, rhs))
                for i in range(1, L + 1):
                    A, B = q_operator(ops, i, m, bar), q_operator(ops, i, k, bar)
                    out[key] = max(out[key], float(np.linalg.norm(A @ B) /
                                                   (np.linalg.norm(A) * np.linalg.norm(B))))
    return out


def convention_calibration(params: ModelParams, re_lambda: float = 10.0, khalf: bool = False) -> dict:
    """Relative distance between B(x)/x^L, C(x)/x^L and their limit operators.

    khalf=True rebuilds the operators with K = diag(q^(1/2), q^(-1/2)) to show
    that this choice does not reproduce the dense limit.
    """
    p = params
    if khalf:
        p = params.replace(gamma=params.gamma / 2)
    out = {}
    lam = re_lambda + 0.3j
    blk = double_row_monodromy(lam, params)
    x = np.exp(2 * lam)
    for conv in ("calibrated", "printed"):
        ops = asymptotic_operators(p, conv)
        norm = asymptotic_operators(params, conv).norm
        limB = norm * sum(ops.P.values())
        limC = norm * sum(ops.Pbar.values())
        out[conv] = dict(B=relerr(blk.B / x ** params.L, limB), C=relerr(blk.C / x ** params.L, limC))
    return out


def jj_vacuum(n: int, params: ModelParams, convention: str = "calibrated",
              route: str = "power") -> complex:
    """<0| Jbar J |0> from the assembled operators.

    route="power": J = (sum_j Q_j^(0))^n, its definition as an unrestricted sum.
    route="ordered": the restricted ordered sums over r_1 < ... < r_n.
    """
    ops = asymptotic_operators(params, convention)
    L = params.L
    v = highest_weight(L)
    if route == "power":
        J = np.linalg.matrix_power(sum(q_operator(ops, j, 0) for j in range(1, L + 1)), n)
        Jb = np.linalg.matrix_power(sum(q_operator(ops, j, 0, True) for j in range(1, L + 1)), n)
    elif route == "ordered":
        d = 2 ** L
        J = np.zeros((d, d), dtype=complex)
        Jb = np.zeros((d, d), dtype=complex)
        for rs in itertools.combinations(range(1, L + 1), n):
            if ops.convention == "calibrated":
                # mirrored chain: the ordering rules run over decreasing sites
                rs = rs[::-1]
            # leftward product: s = n leftmost
            T = np.eye(d, dtype=complex)
            Tb = np.eye(d, dtype=complex)
            for s in range(n, 0, -1):
                T = T @ sum(q_operator(ops, rs[s - 1], l) for l in range(n - s + 1))
                Tb = Tb @ sum(q_operator(ops, rs[s - 1], l, True) for l in range(n - s + 1))
            J += T
            Jb += Tb
    else:
        raise ValueError(route)
    return complex(v @ Jb @ J @ v)


def closed_vacuum_sum(n: int, params: ModelParams, printed: bool = False) -> complex:
    """Closed sum for <0|Jbar J|0> over 1 <= r_1 < ... < r_n <= L.

    Each factor is t y^(-e/2) q^(L-r) D^- - t^(-1) y^(e/2) q^(r-L) D^+ with
    D^pm = delta_sum(n-s, pm).  The bar string picks up a q^(-2(n-s)) from the
    sites it has already flipped, which turns its q^(L-r) D^+ into q^(L-r) D^-.
    printed=True instead uses D^e and D^-e, which agrees only for n = 1.
    """
    L, q, t = params.L, params.q, params.t
    y = params.y
    tot = 0j
    for rs in itertools.combinations(range(1, L + 1), n):
        term = 1.0 + 0j
        for s, r in enumerate(rs, 1):
            for e in (1, -1):
                if printed:
                    dl, dr = delta_sum(n - s, e, params), delta_sum(n - s, -e, params)
                else:
                    dl, dr = delta_sum(n - s, -1, params), delta_sum(n - s, 1, params)
                term *= t * y[r - 1] ** (-e / 2) * q ** (L - r) * dl - \
                    y[r - 1] ** (e / 2) * q ** (r - L) * dr / t
        tot += term
    return tot


def asymptotic_prefactor(n: int, params: ModelParams) -> complex:
    L, q = params.L, params.q
    return q ** (2 * n * (L - 1)) / 2 ** (2 * n * (2 * L + 1)) * (q - 1 / q) ** (2 * n)


def asymptotic_coefficient(n: int, params: ModelParams, printed: bool = False) -> complex:
    """Coefficient of prod (x^B x^C)^(2L) in the leading large-x behavior of x^L-scaled S_n."""
    if n > params.L:
        raise ValueError("n exceeds L")
    return asymptotic_prefactor(n, params) * closed_vacuum_sum(n, params, printed)


def scaled_limit(n: int, params: ModelParams, re_lambda: float, evaluator: Callable | None = None) -> complex:
    """S_n / prod (x^B x^C)^L at a point with every Re lambda near re_lambda."""
    ev = evaluator or direct_value
    X = [re_lambda + 0.05 * i + 0.1j * i for i in range(n)]
    Y = [re_lambda + 0.07 * i - 0.13j * i + 0.2j for i in range(n)]
    x = np.exp(2 * np.array(X + Y))
    return ev(X, Y, params) / np.prod(x) ** params.L
