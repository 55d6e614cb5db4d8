"""Absolutely continuous non-Haar laws used to exercise the limit behavior.

* :class:`PerturbedHaarLaw`: density 1 + a ReTr(g)/N against Haar,
  conjugate invariant, sampled by rejection.
* :class:`MixtureU2Law`: the U(2) two-branch mixture X D1 + (1-X) a D2 a*,
  supported on T union aTa* (not absolutely continuous on the group, yet
  its torus marginal is), plus its explicit limit X Y + (1-X) a Y a*.
* :class:`TorusLaw`: embed(t) with t drawn from a torus density (again
  singular on the group, absolutely continuous on the torus).
* :class:`PointMassLaw`: an atom, the standing negative control.

``symbolic_eigen_density`` expands the exact torus-marginal density of the
uniform random preimage of a perturbed-Haar law on U(N), N <= 4: the
squared-Vandermonde eigenvalue density times 1 + (a/N) sum_j cos(theta_j),
organized as exact lattice coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import TAU
from .groups import (
    Family,
    GroupDescriptor,
    GroupElement,
    embed_batch,
    haar_batch,
    unitary,
)
from .torus import AngleSample, FourierDensity

_REJECTION_ROUNDS = 64

# the fixed U(2) mixture matrices: a rotation by pi/4 and the coordinate swap
MIXTURE_A = np.array([[np.sqrt(2) / 2, -np.sqrt(2) / 2],
                      [np.sqrt(2) / 2, np.sqrt(2) / 2]], dtype=np.complex128)
MIXTURE_P = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


def default_mixture_marginal() -> FourierDensity:
    """Product density on T^2 with 1-D marginal (1 + cos theta)/(2 pi).

    Degree 1, so torus-level stationarity is reached exactly at m >= 2 -
    sharp test material for the mixture limit.
    """
    coeffs = {}
    for p1 in (-1, 0, 1):
        for p2 in (-1, 0, 1):
            coeffs[(p1, p2)] = 0.5 ** (abs(p1) + abs(p2))
    return FourierDensity(2, coeffs)


@dataclass(frozen=True)
class HaarLaw:
    """Haar measure itself (the absolutely continuous baseline)."""

    descriptor: GroupDescriptor

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return haar_batch(self.descriptor, rng, size)


@dataclass(frozen=True)
class PerturbedHaarLaw:
    """Density 1 + strength * ReTr(g)/N against Haar; |strength| <= 1.

    Dividing by N keeps |density - 1| <= |strength| uniformly in N, and
    the rejection acceptance rate at exactly 1/(1 + |strength|).
    """

    descriptor: GroupDescriptor
    strength: float

    def __post_init__(self):
        if abs(self.strength) > 1.0:
            raise ValueError("|strength| must be at most 1")

    def density(self, mats: np.ndarray) -> np.ndarray:
        mats = np.asarray(mats)
        if mats.ndim == 2:
            mats = mats[None]
        tr = np.einsum("sii->s", mats)
        return 1.0 + self.strength * tr.real / self.descriptor.matrix_size

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        n = self.descriptor.matrix_size
        bound = 1.0 + abs(self.strength)
        out = np.empty((size, n, n), dtype=np.float64 if self.descriptor.is_real else np.complex128)
        got = 0
        for _ in range(_REJECTION_ROUNDS):
            if got >= size:
                break
            todo = size - got
            draw = int(todo * bound * 1.2) + 64
            mats = haar_batch(self.descriptor, rng, draw)
            keep = rng.uniform(0.0, bound, size=draw) < self.density(mats)
            kept = mats[keep]
            take = min(todo, kept.shape[0])
            out[got:got + take] = kept[:take]
            got += take
        if got < size:
            raise RuntimeError("rejection sampler failed to fill the batch")
        return out


def sample_perturbed_haar(law: PerturbedHaarLaw, rng: np.random.Generator) -> GroupElement:
    """One draw: propose Haar, accept with probability density/(1+|a|)."""
    return GroupElement(law.sample_batch(rng, 1)[0], law.descriptor)


@dataclass(frozen=True)
class MixtureU2Law:
    """U = X D1 + (1 - X) a D2 a* with X fair and D1, D2 torus draws."""

    d1: FourierDensity = field(default_factory=default_mixture_marginal)
    d2: FourierDensity = field(default_factory=default_mixture_marginal)
    descriptor: GroupDescriptor = field(default_factory=lambda: unitary(2))

    def __post_init__(self):
        if self.d1.rank != 2 or self.d2.rank != 2:
            raise ValueError("mixture marginals must be rank-2 densities")
        if self.descriptor.family is not Family.UNITARY or self.descriptor.matrix_size != 2:
            raise ValueError("the mixture law lives on U(2)")

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.integers(0, 2, size=size).astype(bool)
        t1 = self.d1.sample(rng, size).rows
        t2 = self.d2.sample(rng, size).rows
        diag1 = embed_batch(self.descriptor, t1)
        diag2 = embed_batch(self.descriptor, t2)
        conj2 = MIXTURE_A @ diag2 @ MIXTURE_A.conj().T
        return np.where(x[:, None, None], diag1, conj2)

    def sample_limit_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.integers(0, 2, size=size).astype(bool)
        y = rng.uniform(0.0, TAU, size=(size, 2))
        diag = embed_batch(self.descriptor, y)
        return np.where(x[:, None, None], diag, MIXTURE_A @ diag @ MIXTURE_A.conj().T)


def sample_mixture_u2(law: MixtureU2Law, rng: np.random.Generator) -> GroupElement:
    """One mixture draw: fair X, then a D1 diagonal or a-conjugated D2."""
    return GroupElement(law.sample_batch(rng, 1)[0], law.descriptor)


def sample_mixture_limit(law: MixtureU2Law, rng: np.random.Generator) -> GroupElement:
    """One draw of the explicit limit X Y + (1 - X) a Y a*, Y uniform."""
    return GroupElement(law.sample_limit_batch(rng, 1)[0], law.descriptor)


@dataclass(frozen=True)
class TorusLaw:
    """embed(t) with t drawn from a fixed torus density."""

    descriptor: GroupDescriptor
    density: FourierDensity

    def __post_init__(self):
        if self.density.rank != self.descriptor.torus_rank:
            raise ValueError("density rank must equal the torus rank")

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        t = self.density.sample(rng, size).rows
        return embed_batch(self.descriptor, t)


@dataclass(frozen=True)
class PointMassLaw:
    """A point mass at a fixed element (negative control: powers of an
    atom stay atoms, so no convergence can occur)."""

    element: GroupElement

    @property
    def descriptor(self) -> GroupDescriptor:
        return self.element.descriptor

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.broadcast_to(self.element.matrix,
                               (size,) + self.element.matrix.shape).copy()


# ---------------------------------------------------------------------------
# exact symbolic eigenvalue densities
# ---------------------------------------------------------------------------


def _convolve(a: dict, b: dict) -> dict:
    out: dict[tuple, complex] = {}
    for p, ca in a.items():
        for q, cb in b.items():
            key = tuple(x + y for x, y in zip(p, q))
            out[key] = out.get(key, 0.0) + ca * cb
    return {p: c for p, c in out.items() if abs(c) > 1e-15}


def symbolic_eigen_density(law) -> FourierDensity:
    """Exact Fourier coefficients of the uniform-preimage torus marginal.

    Supported for Haar and perturbed-Haar laws on U(N), N <= 4 (the
    expansion grows as 3^(N(N-1)/2)), and for torus laws, whose marginal
    is the symmetrization of the defining density.  The U(N) eigenvalue
    density of Haar is the squared Vandermonde prod_{j<k} |z_j - z_k|^2,
    whose factors contribute {0: 2, e_j - e_k: -1, e_k - e_j: -1}; the
    perturbation multiplies by 1 + (a/N) sum cos(theta_j).  The constant
    term of the bare product is exactly N!, which normalizes a_0 to 1.
    """
    if isinstance(law, TorusLaw):
        if law.descriptor.family is not Family.UNITARY:
            raise ValueError("symbolic marginals for torus laws are U(N)-only")
        return _symmetrize(law.density)
    if isinstance(law, HaarLaw):
        desc, strength = law.descriptor, 0.0
    elif isinstance(law, PerturbedHaarLaw):
        desc, strength = law.descriptor, law.strength
    else:
        raise ValueError(f"no symbolic eigenvalue density for {type(law).__name__}")
    if desc.family is not Family.UNITARY:
        raise ValueError("symbolic eigenvalue densities are implemented for U(N) only")
    n = desc.matrix_size
    if n > 4:
        raise ValueError("symbolic expansion kept to N <= 4")
    zero = (0,) * n
    weyl = {zero: 1.0 + 0.0j}
    for j in range(n):
        for k in range(j + 1, n):
            plus = tuple(1 if i == j else (-1 if i == k else 0) for i in range(n))
            minus = tuple(-x for x in plus)
            weyl = _convolve(weyl, {zero: 2.0, plus: -1.0, minus: -1.0})
    assert abs(weyl[zero] - math.factorial(n)) < 1e-9
    if strength != 0.0:
        pert = {zero: 1.0 + 0.0j}
        half = strength / (2.0 * n)
        for j in range(n):
            e = tuple(1 if i == j else 0 for i in range(n))
            pert[e] = half
            pert[tuple(-x for x in e)] = half
        weyl = _convolve(weyl, pert)
    norm = weyl[zero].real
    return FourierDensity(n, {p: c / norm for p, c in weyl.items()})


def _symmetrize(d: FourierDensity) -> FourierDensity:
    n = d.rank
    perms = list(itertools.permutations(range(n)))
    out: dict[tuple, complex] = {}
    for p, a in d.coefficients.items():
        share = a / len(perms)
        for sigma in perms:
            key = tuple(p[sigma[i]] for i in range(n))
            out[key] = out.get(key, 0.0) + share
    return FourierDensity(n, out)
