"""Conjugacy decompositions: the psi map, random preimages, Weyl actions.

Every regular group element u factors as u = V t V^{-1} with t a torus
element and V a flag representative; the pair (V, t) is a *preimage* of u
under psi(V, t) = V t V^{-1}.  The finite Weyl group acts freely on the
preimages of a regular element:

    w . (V, t) = (V W^{-1}, W t W^{-1}),    W a representative of w,

so a preimage is canonical only after a chamber convention.  Two
constructions are provided: the deterministic *sorted* preimage (angles
strictly increasing; for SO, all angles in (0, pi)) and the *uniform*
preimage (a uniformly random Weyl translate, drawn independently of u).

Determinism of the sorted preimage is pinned by scaling each eigenvector
so that its largest-modulus entry is real positive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._kernels import TAU, wrap_angles
from .groups import (
    Family,
    GroupDescriptor,
    GroupElement,
    TorusPoint,
    embed_batch,
)

TAU_GAP = 1e-8       # minimum eigenangle separation for a regular element
_RECON_TOL = 1e-8    # psi(V, t) must reproduce u within this max-norm


class DegenerateSpectrumError(ValueError):
    """Eigenvalues too close for a well-defined preimage; caller may resample."""


# ---------------------------------------------------------------------------
# Weyl elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylElement:
    """One element of N(T)/T, acting on torus coordinates.

    ``perm`` uses the gather convention: new angle j is old angle perm[j].
    For the SO family ``signs[j] = -1`` additionally flips new angle j to
    2*pi - theta; for U/SU ``signs`` is None.
    """

    perm: tuple
    signs: tuple | None = None

    def __post_init__(self):
        n = len(self.perm)
        if sorted(self.perm) != list(range(n)):
            raise ValueError("perm must be a permutation of 0..n-1")
        if self.signs is not None:
            if len(self.signs) != n or any(s not in (-1, 1) for s in self.signs):
                raise ValueError("signs must be a +/-1 vector matching perm")

    def apply_angles(self, angles: np.ndarray) -> np.ndarray:
        """The raw signed permutation; ``angles`` must match ``perm`` in length.

        For U and SO these are the torus coordinates themselves.  For SU
        the permutation moves all N eigenvalue angles; use
        :meth:`apply_torus` on the n = N-1 torus coordinates.
        """
        a = np.asarray(angles, dtype=np.float64)[list(self.perm)]
        if self.signs is not None:
            a = a * np.asarray(self.signs, dtype=np.float64)
        return wrap_angles(a)

    def apply_torus(self, desc: GroupDescriptor, angles: np.ndarray) -> np.ndarray:
        """Action on torus coordinates, completing the dependent SU angle."""
        a = np.asarray(angles, dtype=np.float64)
        if desc.family is Family.SPECIAL_UNITARY:
            full = np.concatenate([a, wrap_angles(-a.sum())[None]])
            return self.apply_angles(full)[:desc.torus_rank]
        return self.apply_angles(a)

    def compose(self, other: "WeylElement") -> "WeylElement":
        """self after other: (self.compose(other)).apply = self.apply(other.apply)."""
        perm = tuple(other.perm[j] for j in self.perm)
        if self.signs is None:
            return WeylElement(perm)
        signs = tuple(self.signs[j] * other.signs[self.perm[j]] for j in range(len(perm)))
        return WeylElement(perm, signs)

    def inverse(self) -> "WeylElement":
        inv = tuple(int(j) for j in np.argsort(self.perm))
        if self.signs is None:
            return WeylElement(inv)
        signs = tuple(self.signs[inv[j]] for j in range(len(inv)))
        return WeylElement(inv, signs)

    def matrix(self, desc: GroupDescriptor) -> np.ndarray:
        """A representative W with W embed(t) W^{-1} = embed(self.apply(t)).

        U(N): the permutation matrix.  SU(N): one column is sign-adjusted
        so det = 1 (conjugation on diagonals is unchanged).  SO(2k+1):
        a block permutation with a reflection per sign flip; the trailing
        entry absorbs the determinant.
        """
        n = desc.matrix_size
        if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
            w = np.zeros((n, n))
            for j, src in enumerate(self.perm):
                block = np.eye(2) if self.signs[j] == 1 else np.diag([1.0, -1.0])
                w[2 * j:2 * j + 2, 2 * src:2 * src + 2] = block
            w[n - 1, n - 1] = float(np.prod(self.signs))
            return w
        w = np.zeros((n, n), dtype=np.complex128)
        w[np.arange(n), list(self.perm)] = 1.0
        if desc.family is Family.SPECIAL_UNITARY:
            w[:, self.perm[0]] *= np.linalg.det(w).conjugate()
        return w

    @classmethod
    def identity(cls, desc: GroupDescriptor) -> "WeylElement":
        if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
            k = desc.torus_rank
            return cls(tuple(range(k)), (1,) * k)
        return cls(tuple(range(desc.matrix_size)))


def _weyl_size(desc: GroupDescriptor) -> int:
    return desc.torus_rank if desc.family is Family.SPECIAL_ORTHOGONAL_ODD else desc.matrix_size


def enumerate_weyl(desc: GroupDescriptor):
    """All ``desc.weyl_order`` Weyl elements."""
    n = _weyl_size(desc)
    perms = itertools.permutations(range(n))
    if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
        return [WeylElement(p, s) for p in perms
                for s in itertools.product((1, -1), repeat=n)]
    return [WeylElement(p) for p in perms]


def random_weyl(desc: GroupDescriptor, rng: np.random.Generator) -> WeylElement:
    """A uniformly distributed Weyl element."""
    n = _weyl_size(desc)
    perm = tuple(int(j) for j in rng.permutation(n))
    if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
        signs = tuple(int(s) for s in rng.choice((1, -1), size=n))
        return WeylElement(perm, signs)
    return WeylElement(perm)


# ---------------------------------------------------------------------------
# psi and preimages
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preimage:
    """A flag representative and torus point with psi(flag, torus) = u."""

    flag: GroupElement
    torus: TorusPoint

    @property
    def descriptor(self) -> GroupDescriptor:
        return self.flag.descriptor


def psi_batch(flags: np.ndarray, rows: np.ndarray, desc: GroupDescriptor) -> np.ndarray:
    """V embed(t) V^{-1} for stacked flags (S, N, N) and angle rows (S, n)."""
    e = embed_batch(desc, rows)
    return flags @ e @ flags.conj().swapaxes(-1, -2)


def psi(v: GroupElement, t: TorusPoint) -> GroupElement:
    """Conjugate the torus element with coordinates ``t`` by ``v``."""
    out = psi_batch(v.matrix[None, :, :], np.asarray(t.angles)[None, :], v.descriptor)[0]
    return GroupElement(out, v.descriptor)


def _polish_unitary(vecs: np.ndarray) -> np.ndarray:
    """One Newton step toward the polar factor; assumes vecs is already
    unitary to ~sqrt(eps), which batched eigendecompositions of normal
    matrices with separated spectra deliver."""
    gram = vecs.conj().swapaxes(-1, -2) @ vecs
    n = gram.shape[-1]
    return vecs @ (1.5 * np.eye(n, dtype=vecs.dtype) - 0.5 * gram)


def _canonical_phases(vecs: np.ndarray) -> np.ndarray:
    """Scale each column so its largest-modulus entry is real positive."""
    idx = np.argmax(np.abs(vecs), axis=-2)
    cols = np.take_along_axis(vecs, idx[:, None, :], axis=-2)[:, 0, :]
    phase = cols / np.abs(cols)
    return vecs * phase.conjugate()[:, None, :]


def _min_circular_gap(sorted_angles: np.ndarray) -> np.ndarray:
    gaps = np.diff(sorted_angles, axis=-1)
    wrap = TAU - (sorted_angles[..., -1] - sorted_angles[..., 0])
    return np.minimum(gaps.min(axis=-1), wrap)


def _unitary_preimages(mats: np.ndarray, desc: GroupDescriptor):
    """Sorted-chamber flags and torus rows for a (S, N, N) unitary stack."""
    vals, vecs = np.linalg.eig(mats)
    angles = wrap_angles(np.angle(vals))
    order = np.argsort(angles, axis=-1)
    angles = np.take_along_axis(angles, order, axis=-1)
    bad = _min_circular_gap(angles) < TAU_GAP
    if np.any(bad):
        raise DegenerateSpectrumError(
            f"{int(bad.sum())} element(s) have eigenangle gaps below {TAU_GAP:.0e}")
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)
    vecs /= np.linalg.norm(vecs, axis=-2, keepdims=True)
    vecs = _canonical_phases(_polish_unitary(vecs))
    if desc.family is Family.SPECIAL_UNITARY:
        # rescale by a determinant root to stay inside SU(N); this moves
        # the representative within its coset only
        det = np.linalg.det(vecs)
        vecs = vecs * np.exp(-1j * np.angle(det) / desc.matrix_size)[:, None, None]
        torus = angles[:, :-1]
    else:
        torus = angles
    return vecs, torus


def _so_block_angle(block: np.ndarray) -> float:
    return float(np.arctan2(0.5 * (block[1, 0] - block[0, 1]), 0.5 * (block[0, 0] + block[1, 1])))


def _so_preimage_single(mat: np.ndarray, desc: GroupDescriptor):
    """Sorted-chamber flag and angles via the real Schur form.

    Schur of a special orthogonal matrix is block diagonal: 2x2 rotation
    blocks and a single +1 for regular elements.  Each block is normalized
    to angle in (0, pi) by a column swap when needed, blocks are sorted by
    angle, and the trailing eigenvector sign fixes det(V) = 1.
    """
    k = desc.torus_rank
    t, z = scipy.linalg.schur(mat)
    blocks = []   # (angle, first column index)
    fixed = []    # 1x1 block indices
    i = 0
    n = desc.matrix_size
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > TAU_GAP:
            theta = _so_block_angle(t[i:i + 2, i:i + 2])
            if theta < 0.0:
                z[:, [i, i + 1]] = z[:, [i + 1, i]]
                theta = -theta
            if theta < TAU_GAP or theta > np.pi - TAU_GAP:
                raise DegenerateSpectrumError("rotation angle too close to 0 or pi")
            blocks.append((theta, i))
            i += 2
        else:
            if t[i, i] < 0.0:
                raise DegenerateSpectrumError("eigenvalue -1 (angle pi) is degenerate")
            fixed.append(i)
            i += 1
    if len(blocks) != k or len(fixed) != 1:
        raise DegenerateSpectrumError("spectrum does not split into k rotations plus +1")
    blocks.sort(key=lambda b: b[0])
    angles = np.array([b[0] for b in blocks])
    if _min_circular_gap(np.sort(np.concatenate([angles, TAU - angles, [0.0]]))) < TAU_GAP:
        raise DegenerateSpectrumError("eigenangle gaps below tolerance")
    cols = [c for _, b in blocks for c in (b, b + 1)] + fixed
    v = z[:, cols]
    if np.linalg.det(v) < 0.0:
        v[:, -1] *= -1.0
    return v, angles


def _sorted_preimage_arrays(mats: np.ndarray, desc: GroupDescriptor):
    if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
        flags = np.empty_like(mats)
        torus = np.empty((mats.shape[0], desc.torus_rank))
        for s in range(mats.shape[0]):
            flags[s], torus[s] = _so_preimage_single(mats[s], desc)
        return flags, torus
    return _unitary_preimages(mats, desc)


def _permutation_signs(perms: np.ndarray) -> np.ndarray:
    """Vectorized parity (+1/-1) of each permutation row."""
    s, n = perms.shape
    inversions = np.zeros(s, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            inversions += perms[:, i] > perms[:, j]
    return np.where(inversions % 2 == 0, 1.0, -1.0)


def preimages_batch(mats: np.ndarray, desc: GroupDescriptor,
                    rng: np.random.Generator | None = None):
    """Flags (S, N, N) and torus rows (S, n) for a stack of regular elements.

    With ``rng`` the preimage is the uniform one (an independent uniformly
    random Weyl translate per row); without it, the sorted one.  The flag
    update V -> V W^{-1} is a column gather plus sign fixes, applied in
    bulk rather than per row.
    """
    flags, torus = _sorted_preimage_arrays(mats, desc)
    if rng is None:
        return flags, torus
    s = mats.shape[0]
    n = _weyl_size(desc)
    perms = rng.permuted(np.tile(np.arange(n), (s, 1)), axis=1)
    if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
        signs = rng.choice((1.0, -1.0), size=(s, n))
        new_torus = wrap_angles(np.take_along_axis(torus, perms, axis=1) * signs)
        cols = np.empty((s, desc.matrix_size), dtype=np.int64)
        cols[:, 0:2 * n:2] = 2 * perms
        cols[:, 1:2 * n:2] = 2 * perms + 1
        cols[:, -1] = desc.matrix_size - 1
        new_flags = np.take_along_axis(flags, cols[:, None, :], axis=2).copy()
        colsigns = np.ones((s, desc.matrix_size))
        colsigns[:, 1:2 * n:2] = signs          # reflection flips the 2nd column
        colsigns[:, -1] = np.prod(signs, axis=1)  # trailing column keeps det = 1
        return new_flags * colsigns[:, None, :], new_torus
    # U/SU: the Weyl permutation acts on the full eigenangle tuple
    full = np.empty((s, desc.matrix_size))
    full[:, :desc.torus_rank] = torus
    if desc.family is Family.SPECIAL_UNITARY:
        full[:, -1] = wrap_angles(-torus.sum(axis=1))
    permuted = np.take_along_axis(full, perms, axis=1)
    new_torus = permuted[:, :desc.torus_rank]
    new_flags = flags
    if desc.family is Family.SPECIAL_UNITARY:
        # the SU representative carries one sign-adjusted column (det fix)
        scale = np.ones((s, desc.matrix_size))
        scale[np.arange(s), perms[:, 0]] = _permutation_signs(perms)
        new_flags = new_flags * scale[:, None, :]
    new_flags = np.take_along_axis(new_flags, perms[:, None, :], axis=2)
    return np.ascontiguousarray(new_flags), new_torus


def _element_from_matrix(u: GroupElement) -> np.ndarray:
    m = u.matrix
    return m[None, :, :].astype(np.float64 if u.descriptor.is_real else np.complex128)


def _check_reconstruction(u: GroupElement, flags, torus):
    rec = psi_batch(flags, torus, u.descriptor)[0]
    err = float(np.max(np.abs(rec - u.matrix)))
    if err > _RECON_TOL:
        raise DegenerateSpectrumError(f"preimage reconstruction error {err:.3e}")


def preimage_sorted(u: GroupElement) -> Preimage:
    """The deterministic chamber preimage of a regular element.

    U/SU: the full eigenangle tuple strictly increasing (torus coordinates
    are its first n entries).  SO: all block angles in (0, pi), increasing.
    """
    flags, torus = _sorted_preimage_arrays(_element_from_matrix(u), u.descriptor)
    _check_reconstruction(u, flags, torus)
    return Preimage(GroupElement(flags[0], u.descriptor), TorusPoint(torus[0]))


def preimage_uniform(u: GroupElement, rng: np.random.Generator) -> Preimage:
    """A uniformly random preimage: the sorted one moved by a uniform Weyl
    element drawn independently of ``u``."""
    flags, torus = preimages_batch(_element_from_matrix(u), u.descriptor, rng)
    _check_reconstruction(u, flags, torus)
    return Preimage(GroupElement(flags[0], u.descriptor), TorusPoint(torus[0]))


def weyl_action(w: WeylElement, pre: Preimage) -> Preimage:
    """(V, t) -> (V W^{-1}, w . t); psi is preserved exactly."""
    desc = pre.descriptor
    wm = w.matrix(desc)
    flag = pre.flag.matrix @ wm.conj().T
    return Preimage(GroupElement(flag, desc), TorusPoint(w.apply_torus(desc, pre.torus.angles)))


def power_preimage(pre: Preimage, m: int) -> Preimage:
    """Same flag, torus angles multiplied by m: a preimage of psi(pre)**m."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    return Preimage(pre.flag, TorusPoint(wrap_angles(m * pre.torus.angles)))


def limit_law_sample(pre: Preimage, rng: np.random.Generator) -> GroupElement:
    """psi(flag, Y) with Y fresh uniform on the torus: one draw from the
    limiting law of high powers of the decomposed element."""
    y = rng.uniform(0.0, TAU, size=pre.descriptor.torus_rank)
    return psi(pre.flag, TorusPoint(y))


def limit_law_batch(flags: np.ndarray, desc: GroupDescriptor,
                    rng: np.random.Generator) -> np.ndarray:
    """Batched limit draws: fresh uniform torus rows conjugated by flags."""
    y = rng.uniform(0.0, TAU, size=(flags.shape[0], desc.torus_rank))
    return psi_batch(flags, y, desc)


def uniform_torus_rows(desc: GroupDescriptor, eigenangle_rows: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Uniform-preimage torus coordinates from eigenangle rows alone.

    This is the eigenvalue-level marginal of :func:`preimages_batch` with a
    uniform Weyl draw: no eigenvectors needed.  U(N): a uniformly permuted
    copy of the N angles; SU(N): same, dropping the last; SO(2k+1): the k
    angles in (0, pi) under a random signed permutation.  SO rows whose
    spectrum sits too close to the degenerate set (an angle within 1e-8 of
    0 or pi) are dropped rather than poisoning a statistical batch.
    """
    rows = np.asarray(eigenangle_rows, dtype=np.float64)
    s = rows.shape[0]
    if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
        k = desc.torus_rank
        mask = (rows > TAU_GAP) & (rows < np.pi - TAU_GAP)
        good = mask.sum(axis=1) == k
        if not np.any(good):
            raise DegenerateSpectrumError("no rows carry k angles strictly inside (0, pi)")
        reps = rows[good][mask[good]].reshape(-1, k)
        perms = rng.permuted(np.tile(np.arange(k), (reps.shape[0], 1)), axis=1)
        reps = np.take_along_axis(reps, perms, axis=1)
        signs = rng.choice((1.0, -1.0), size=reps.shape)
        return wrap_angles(reps * signs)
    n = desc.matrix_size
    perms = rng.permuted(np.tile(np.arange(n), (s, 1)), axis=1)
    shuffled = np.take_along_axis(rows, perms, axis=1)
    return np.ascontiguousarray(shuffled[:, :desc.torus_rank])


def same_flag_coset(a: GroupElement, b: GroupElement, tol: float = 1e-6) -> bool:
    """Whether two flag representatives name the same coset, i.e. whether
    a^{-1} b is a torus element."""
    desc = a.descriptor
    ratio = a.matrix.conj().T @ b.matrix
    e = embed_batch(desc, _torus_coordinates_of(ratio, desc)[None, :])[0]
    return bool(np.max(np.abs(ratio - e)) <= tol)


def matching_weyl_element(source: Preimage, target: Preimage,
                          tol: float = 1e-6) -> WeylElement | None:
    """Search the finite Weyl group for w with w . source = target.

    Matches torus angles (the action is free on regular points, so the
    angles determine w) and then verifies the flags agree as cosets, i.e.
    the transported flag differs from the target by a torus element.
    """
    desc = source.descriptor
    for w in enumerate_weyl(desc):
        moved = w.apply_torus(desc, source.torus.angles)
        delta = np.abs(moved - target.torus.angles)
        if np.max(np.minimum(delta, TAU - delta)) > tol:
            continue
        if same_flag_coset(weyl_action(w, source).flag, target.flag, tol):
            return w
    return None


def _torus_coordinates_of(mat: np.ndarray, desc: GroupDescriptor) -> np.ndarray:
    """Coordinates of the nearest torus element (used for coset comparison)."""
    if desc.family is Family.SPECIAL_ORTHOGONAL_ODD:
        return np.array([_so_block_angle(mat[2 * j:2 * j + 2, 2 * j:2 * j + 2]) % TAU
                         for j in range(desc.torus_rank)])
    return wrap_angles(np.angle(np.diagonal(mat)))[:desc.torus_rank]
