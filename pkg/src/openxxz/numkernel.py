"""Model parameters, spectral sets and the scalar building blocks.

Everything here is plain double-precision complex arithmetic.  The three
weights of the six-vertex model are

    a(x) = sinh(x + gamma),   b(x) = sinh(x),   c = sinh(gamma)

and every formula in the package is assembled from them.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DELTA_GEN = 1e-3
DEFAULT_BOX = 2.0
DEFAULT_MAX_SITES = 8


class SingularDenominatorError(ZeroDivisionError):
    """A formula denominator came within the genericity margin of zero."""


class DimensionLimitError(ValueError):
    """The requested chain is too long for dense operators."""


class GenericityError(ValueError):
    """Parameters or spectral points violate the genericity predicate."""


def max_sites() -> int:
    """Largest L for dense construction; OPENXXZ_MAX_QUBITS overrides."""
    env = os.environ.get("OPENXXZ_MAX_QUBITS")
    if env:
        return int(env)
    return DEFAULT_MAX_SITES


def check_sites(L: int) -> None:
    lim = max_sites()
    if L > lim:
        raise DimensionLimitError(f"L={L} exceeds the dense limit of {lim} sites")


def ipi_distance(z) -> float:
    """Distance from z to the nearest zero of sinh, i.e. to i*pi*Z."""
    z = complex(z)
    im = (z.imag + np.pi / 2) % np.pi - np.pi / 2
    return abs(complex(z.real, im))


def _crandom(rng: np.random.Generator, box: float, size=None):
    re = rng.uniform(-box, box, size)
    im = rng.uniform(-box, box, size)
    return re + 1j * im


@dataclass(frozen=True)
class ModelParams:
    """Anisotropy, boundary fields, length and inhomogeneities of the chain."""

    gamma: complex
    h: complex
    hbar: complex
    L: int
    mu: tuple = ()
    delta_gen: float = DELTA_GEN

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))
        object.__setattr__(self, "h", complex(self.h))
        object.__setattr__(self, "hbar", complex(self.hbar))
        object.__setattr__(self, "mu", tuple(complex(m) for m in self.mu))
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L}")
        if len(self.mu) != self.L:
            raise ValueError(f"mu has {len(self.mu)} entries, expected L={self.L}")

    @classmethod
    def random(cls, L: int, rng=None, box: float = DEFAULT_BOX,
               delta_gen: float = DELTA_GEN) -> "ModelParams":
        """Uniform draw in the box |Re|, |Im| <= box (one attempt, no rejection)."""
        rng = np.random.default_rng(rng)
        g, h, hb = _crandom(rng, box, 3)
        mu = tuple(_crandom(rng, box, L))
        return cls(g, h, hb, L, mu, delta_gen)

    @classmethod
    def random_generic(cls, L: int, rng=None, box: float = DEFAULT_BOX,
                       delta_gen: float = DELTA_GEN, tries: int = 100) -> "ModelParams":
        rng = np.random.default_rng(rng)
        for _ in range(tries):
            p = cls.random(L, rng, box, delta_gen)
            if p.is_generic():
                return p
        raise GenericityError("no generic parameter draw found")

    def replace(self, **kw) -> "ModelParams":
        d = dict(gamma=self.gamma, h=self.h, hbar=self.hbar, L=self.L,
                 mu=self.mu, delta_gen=self.delta_gen)
        d.update(kw)
        if "mu" in kw and "L" not in kw:
            d["L"] = len(d["mu"])
        return ModelParams(**d)

    def flipped(self) -> "ModelParams":
        """Same chain with mu_j -> -mu_j."""
        return self.replace(mu=tuple(-m for m in self.mu))

    def shifted(self) -> "ModelParams":
        """Chain of length L-1 carrying mu_2..mu_L."""
        if self.L < 2:
            raise ValueError("cannot drop a site from a one-site chain")
        return self.replace(mu=self.mu[1:])

    @property
    def q(self) -> complex:
        return np.exp(self.gamma)

    @property
    def t(self) -> complex:
        return np.exp(self.h)

    @property
    def y(self) -> np.ndarray:
        return np.exp(2 * np.asarray(self.mu))

    def genericity_violations(self) -> list:
        """Names of the combinations that sit within delta_gen of i*pi*Z."""
        d, g, mu = self.delta_gen, self.gamma, self.mu
        bad = []
        if ipi_distance(g) < d:
            bad.append("gamma")
        for i, mi in enumerate(mu):
            for lab, z in (("2mu", 2 * mi), ("2mu+g", 2 * mi + g), ("2mu-g", 2 * mi - g),
                           ("2mu+2g", 2 * mi + 2 * g), ("2mu-2g", 2 * mi - 2 * g)):
                if ipi_distance(z) < d:
                    bad.append(f"{lab}[{i}]")
            for j in range(i + 1, len(mu)):
                mj = mu[j]
                for lab, z in (("mu-mu", mi - mj), ("mu+mu", mi + mj),
                               ("mu-mu+g", mi - mj + g), ("mu-mu-g", mi - mj - g),
                               ("mu+mu+g", mi + mj + g), ("mu+mu-g", mi + mj - g)):
                    if ipi_distance(z) < d:
                        bad.append(f"{lab}[{i},{j}]")
            for lab, z in (("h+mu", self.h + mi), ("h-mu", self.h - mi)):
                if ipi_distance(z) < d:
                    bad.append(f"{lab}[{i}]")
        return bad

    def is_generic(self) -> bool:
        return not self.genericity_violations()

    def as_dict(self) -> dict:
        return dict(gamma=self.gamma, h=self.h, hbar=self.hbar, L=self.L,
                    mu=list(self.mu), delta_gen=self.delta_gen)


@dataclass(frozen=True)
class SpectralSets:
    """Dual (X, from C operators) and direct (Y, from B operators) points."""

    X: tuple
    Y: tuple

    def __post_init__(self):
        object.__setattr__(self, "X", tuple(complex(x) for x in self.X))
        object.__setattr__(self, "Y", tuple(complex(y) for y in self.Y))
        if len(self.X) != len(self.Y):
            raise ValueError(f"|X|={len(self.X)} differs from |Y|={len(self.Y)}")

    @property
    def n(self) -> int:
        return len(self.X)

    @classmethod
    def random(cls, n: int, rng=None, box: float = DEFAULT_BOX,
               params: ModelParams | None = None, tries: int = 200) -> "SpectralSets":
        rng = np.random.default_rng(rng)
        for _ in range(tries):
            s = cls(tuple(_crandom(rng, box, n)), tuple(_crandom(rng, box, n)))
            if params is None or s.is_generic(params):
                return s
        raise GenericityError("no generic spectral draw found")

    def genericity_violations(self, params: ModelParams) -> list:
        d, g = params.delta_gen, params.gamma
        bad = []
        for name, Z in (("X", self.X), ("Y", self.Y)):
            for i, z in enumerate(Z):
                if ipi_distance(2 * z + g) < d:
                    bad.append(f"a(2{name}[{i}])")
                for k, m in enumerate(params.mu):
                    for lab, w in (("-mu", z - m), ("+mu", z + m),
                                   ("-mu+g", z - m + g), ("+mu+g", z + m + g)):
                        if ipi_distance(w) < d:
                            bad.append(f"{name}[{i}]{lab}[{k}]")
                for j in range(i + 1, len(Z)):
                    for lab, w in (("diff", z - Z[j]), ("sum+g", z + Z[j] + g),
                                   ("diff+g", z - Z[j] + g), ("diff-g", z - Z[j] - g),
                                   ("sum", z + Z[j])):
                        if ipi_distance(w) < d:
                            bad.append(f"{name}[{i},{j}]{lab}")
        for i, x in enumerate(self.X):
            for j, y in enumerate(self.Y):
                if ipi_distance(x - y) < d or ipi_distance(x + y + g) < d:
                    bad.append(f"X[{i}]~Y[{j}]")
        return bad

    def is_generic(self, params: ModelParams) -> bool:
        return not self.genericity_violations(params)

    def as_dict(self) -> dict:
        return dict(X=list(self.X), Y=list(self.Y))


def fn_a(lam, params: ModelParams):
    return np.sinh(lam + params.gamma)


def fn_b(lam):
    return np.sinh(lam)


def fn_c(params: ModelParams) -> complex:
    return np.sinh(params.gamma)


def guard(den, what: str, delta: float = DELTA_GEN, scale: float = 1.0):
    """Return den unchanged, or raise if it is too close to zero."""
    if np.any(np.abs(den) < delta * scale):
        raise SingularDenominatorError(f"denominator {what} is within {delta:g} of zero")
    return den


def theta(lam, omega, params: ModelParams):
    den = np.sinh(lam - omega + params.gamma)
    guard(den, "sinh(lambda - omega + gamma)", params.delta_gen)
    return np.sinh(lam + omega) / den


def delta_sum(m: int, sign: int, params: ModelParams) -> complex:
    """Partial geometric sum of q^(+-2l) for l = 0..m."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    q2 = params.q ** (2 * sign)
    return complex(sum(q2 ** l for l in range(m + 1)))


def relerr(x, y) -> float:
    """|x - y| / |y| for scalars, Frobenius version for arrays."""
    x, y = np.asarray(x), np.asarray(y)
    den = np.linalg.norm(y)
    if den == 0:
        return float(np.linalg.norm(x))
    return float(np.linalg.norm(x - y) / den)


def drop(seq: Sequence, i: int) -> list:
    """Copy of seq without position i."""
    return list(seq[:i]) + list(seq[i + 1:])
