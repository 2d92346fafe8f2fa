"""R and K matrices, monodromy blocks, transfer matrix and Hamiltonian.

The auxiliary space is always tensor factor 0 and sites are ordered
aux (x) site_1 (x) ... (x) site_L, so site 1 is the most significant bit of a
basis index.  Monodromy matrices are held as arrays of shape (2, 2, d, d),
indexed by auxiliary row and column, with d = 2**L.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkernel import ModelParams, check_sites, guard, relerr

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PERM = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def r_matrix(lam, params: ModelParams) -> np.ndarray:
    g = params.gamma
    a, b, c = np.sinh(lam + g), np.sinh(lam), np.sinh(g)
    return np.array([[a, 0, 0, 0],
                     [0, b, c, 0],
                     [0, c, b, 0],
                     [0, 0, 0, a]], dtype=complex)


def k_matrix(lam, params: ModelParams) -> np.ndarray:
    h = params.h
    return np.diag([np.sinh(h + lam), np.sinh(h - lam)]).astype(complex)


def k_dual(lam, params: ModelParams) -> np.ndarray:
    hb, g = params.hbar, params.gamma
    return np.diag([np.sinh(hb - lam - g), np.sinh(hb + lam + g)]).astype(complex)


def dual_map(kfun, lam, params: ModelParams) -> np.ndarray:
    """Transpose of kfun at -lam-gamma, with h replaced by hbar."""
    p = params.replace(h=params.hbar)
    return kfun(-lam - params.gamma, p).T


def partial_transpose(M4: np.ndarray, factor: int) -> np.ndarray:
    """Transpose one factor of an operator on C^2 (x) C^2."""
    T = M4.reshape(2, 2, 2, 2)
    if factor == 1:
        T = T.transpose(2, 1, 0, 3)
    else:
        T = T.transpose(0, 3, 2, 1)
    return T.reshape(4, 4)


# ----- small-space identity checks -------------------------------------------------

def ybe_residual(l1, l2, params: ModelParams) -> float:
    I2 = np.eye(2)
    P23 = np.kron(I2, PERM)
    R12 = np.kron(r_matrix(l1 - l2, params), I2)
    R23 = np.kron(I2, r_matrix(l2, params))
    R13 = P23 @ np.kron(r_matrix(l1, params), I2) @ P23
    lhs = R12 @ R13 @ R23
    return relerr(lhs, R23 @ R13 @ R12)


def reflection_residual(l1, l2, params: ModelParams) -> float:
    I2 = np.eye(2)
    K1 = np.kron(k_matrix(l1, params), I2)
    K2 = np.kron(I2, k_matrix(l2, params))
    Rm, Rp = r_matrix(l1 - l2, params), r_matrix(l1 + l2, params)
    lhs = Rm @ K1 @ Rp @ K2
    return relerr(lhs, K2 @ Rp @ K1 @ Rm)


def dual_reflection_residual(l1, l2, params: ModelParams) -> float:
    I2 = np.eye(2)
    g = params.gamma
    K1 = np.kron(k_dual(l1, params).T, I2)
    K2 = np.kron(I2, k_dual(l2, params).T)
    Rm, Rp = r_matrix(-l1 + l2, params), r_matrix(-l1 - l2 - 2 * g, params)
    lhs = Rm @ K1 @ Rp @ K2
    return relerr(lhs, K2 @ Rp @ K1 @ Rm)


def unitarity_residual(lam, params: ModelParams) -> float:
    g = params.gamma
    prod = r_matrix(lam, params) @ r_matrix(-lam, params)
    return relerr(prod, np.sinh(lam + g) * np.sinh(-lam + g) * np.eye(4))


def crossing_unitarity(lam, params: ModelParams):
    """Return (constant, residual) for R^t1(lam) R^t1(-lam-2gamma) = constant * id."""
    g = params.gamma
    M = partial_transpose(r_matrix(lam, params), 1) @ \
        partial_transpose(r_matrix(-lam - 2 * g, params), 1)
    const = np.trace(M) / 4
    return const, relerr(M, const * np.eye(4))


# ----- monodromy construction ---------------------------------------------------------

def _site_tensor(R4: np.ndarray) -> np.ndarray:
    # rt[b, c, s, t] = <b s| R |c t>, aux indices first
    return R4.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3)


def _times_R(M: np.ndarray, R4: np.ndarray, j: int, L: int) -> np.ndarray:
    """M . R_{0j} for a block monodromy M of shape (2, 2, d, d)."""
    d = 2 ** L
    Mr = M.reshape(2, 2, d, 2 ** (j - 1), 2, 2 ** (L - j))
    out = np.einsum("abxisj,bcst->acxitj", Mr, _site_tensor(R4), optimize=True)
    return out.reshape(2, 2, d, d)


def _identity_blocks(L: int) -> np.ndarray:
    d = 2 ** L
    M = np.zeros((2, 2, d, d), dtype=complex)
    M[0, 0] = M[1, 1] = np.eye(d)
    return M


def _times_aux(M: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.einsum("abxy,bc->acxy", M, k)


def blocks_to_full(M: np.ndarray) -> np.ndarray:
    return np.block([[M[0, 0], M[0, 1]], [M[1, 0], M[1, 1]]])


@dataclass(frozen=True)
class MonodromyBlocks:
    lam: complex
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def full(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])


def double_row_array(lam, params: ModelParams) -> np.ndarray:
    L = params.L
    check_sites(L)
    M = _identity_blocks(L)
    for j in range(L, 0, -1):
        M = _times_R(M, r_matrix(lam - params.mu[j - 1], params), j, L)
    M = _times_aux(M, k_matrix(lam, params))
    for j in range(1, L + 1):
        M = _times_R(M, r_matrix(lam + params.mu[j - 1], params), j, L)
    return M


def double_row_monodromy(lam, params: ModelParams) -> MonodromyBlocks:
    M = double_row_array(lam, params)
    return MonodromyBlocks(complex(lam), M[0, 0], M[0, 1], M[1, 0], M[1, 1])


def double_row_reference(lam, params: ModelParams) -> np.ndarray:
    """The same product built from explicit Kronecker embeddings (slow, for tests)."""
    L = params.L
    n = L + 1

    def embed(ops):
        out = np.array([[1]], dtype=complex)
        for k in range(n):
            out = np.kron(out, ops.get(k, np.eye(2)))
        return out

    def R0j(x, j):
        rt = r_matrix(x, params).reshape(2, 2, 2, 2)
        M = np.zeros((2 ** n, 2 ** n), dtype=complex)
        for a in range(2):
            for b in range(2):
                E = np.zeros((2, 2))
                E[a, b] = 1
                M += embed({0: E, j: rt[a, :, b, :]})
        return M

    M = np.eye(2 ** n, dtype=complex)
    for j in range(L, 0, -1):
        M = M @ R0j(lam - params.mu[j - 1], j)
    M = M @ embed({0: k_matrix(lam, params)})
    for j in range(1, L + 1):
        M = M @ R0j(lam + params.mu[j - 1], j)
    return M


def single_row_monodromy(lam, params: ModelParams):
    """Blocks (A, B, C, D, Abar, Bbar, Cbar, Dbar) of the two single-row products.

    The unbarred blocks come from R_{0L}(lam-mu_L)...R_{01}(lam-mu_1); the
    barred ones from R_{01}(lam+mu_1)...R_{0L}(lam+mu_L), i.e. exactly the two
    halves sitting around K in the double-row product.
    """
    L = params.L
    check_sites(L)
    left = _identity_blocks(L)
    for j in range(L, 0, -1):
        left = _times_R(left, r_matrix(lam - params.mu[j - 1], params), j, L)
    right = _identity_blocks(L)
    for j in range(1, L + 1):
        right = _times_R(right, r_matrix(lam + params.mu[j - 1], params), j, L)
    return (left[0, 0], left[0, 1], left[1, 0], left[1, 1],
            right[0, 0], right[0, 1], right[1, 0], right[1, 1])


def bc_from_single_row(lam, params: ModelParams):
    """B and C of the double-row product rebuilt from single-row blocks."""
    A, B, C, D, Ab, Bb, Cb, Db = single_row_monodromy(lam, params)
    h = params.h
    kp, km = np.sinh(h + lam), np.sinh(h - lam)
    return kp * A @ Bb + km * B @ Db, kp * C @ Ab + km * D @ Cb


def d_tilde(lam, blocks: MonodromyBlocks, params: ModelParams) -> np.ndarray:
    g = params.gamma
    den = guard(np.sinh(2 * lam + g), "a(2 lambda)", params.delta_gen)
    return blocks.D - np.sinh(g) / den * blocks.A


def transfer_matrix(lam, params: ModelParams) -> np.ndarray:
    blk = double_row_monodromy(lam, params)
    hb, g = params.hbar, params.gamma
    return np.sinh(hb - lam - g) * blk.A + np.sinh(hb + lam + g) * blk.D


def transfer_matrix_trace(lam, params: ModelParams) -> np.ndarray:
    """Partial trace over the auxiliary space of Kbar_0 times the full product."""
    d = 2 ** params.L
    full = np.kron(k_dual(lam, params), np.eye(d)) @ blocks_to_full(double_row_array(lam, params))
    return np.einsum("axay->xy", full.reshape(2, d, 2, d))


def site_operator(ops: dict, L: int) -> np.ndarray:
    """Kronecker product with ops[k] on site k+1 (0-based keys) and identity elsewhere."""
    out = np.array([[1]], dtype=complex)
    for k in range(L):
        out = np.kron(out, ops.get(k, np.eye(2)))
    return out


def hamiltonian(params: ModelParams) -> np.ndarray:
    L, g, h, hb = params.L, params.gamma, params.h, params.hbar
    d = 2 ** L
    H = np.zeros((d, d), dtype=complex)
    for i in range(L - 1):
        for s, J in ((SX, 1.0), (SY, 1.0), (SZ, np.cosh(g))):
            H += J * site_operator({i: s, i + 1: s}, L)
    H += np.sinh(g) / np.tanh(h) * site_operator({0: SZ}, L)
    H -= np.sinh(g) / np.tanh(hb) * site_operator({L - 1: SZ}, L)
    return H


def hamiltonian_from_transfer(params: ModelParams, step: float = 1e-5) -> np.ndarray:
    """H rebuilt from a central difference of T at lambda = 0, mu = 0."""
    p = params.replace(mu=(0.0,) * params.L)
    L, g, h, hb = p.L, p.gamma, p.h, p.hbar
    dT = (transfer_matrix(step, p) - transfer_matrix(-step, p)) / (2 * step)
    norm = 2 * np.sinh(g) ** (2 * L) / np.tanh(g) * np.sinh(h) * np.sinh(hb)
    shift = L * np.cosh(g) + np.sinh(g) * np.tanh(g)
    return dT / norm - shift * np.eye(2 ** L)


def lambda_A(lam, params: ModelParams):
    g, h = params.gamma, params.h
    out = np.sinh(h + lam)
    for m in params.mu:
        out = out * np.sinh(lam - m + g) * np.sinh(lam + m + g)
    return out


def lambda_Dtilde(lam, params: ModelParams):
    g, h = params.gamma, params.h
    den = guard(np.sinh(2 * lam + g), "a(2 lambda)", params.delta_gen)
    out = -np.sinh(2 * lam) / den * np.sinh(lam - h + g)
    for m in params.mu:
        out = out * np.sinh(lam - m) * np.sinh(lam + m)
    return out


def magnon_number(L: int) -> np.ndarray:
    """Number of down spins for each computational basis index."""
    idx = np.arange(2 ** L)
    return np.array([bin(i).count("1") for i in idx])


def sector_leakage(op: np.ndarray, L: int, shift: int = 0) -> float:
    """Relative weight of op outside the blocks that change magnon number by shift."""
    m = magnon_number(L)
    mask = (m[:, None] - m[None, :]) == shift
    tot = np.linalg.norm(op)
    return float(np.linalg.norm(op[~mask]) / tot) if tot else 0.0
