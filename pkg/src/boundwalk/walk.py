"""Coins and translation-invariant walk symbols.

A walk symbol is stored as a finite Laurent expansion

    W(p) = sum_n W_n exp(i n.p),

where ``n`` runs over a finite set of integer vectors.  The coefficient
``W_n`` moves amplitude from site ``x`` to site ``x + n``: in position
space ``(W psi)(x) = sum_n W_n psi(x - n)``, which corresponds to the
Fourier convention ``psi(p) = sum_x exp(i p.x) psi(x)``.  With this choice
the Hadamard shift ``diag(e^{ip}, e^{-ip})`` moves the first coin state
("up") one site to the right.

Internal two-particle coin states are ordered ``|alpha beta> -> 2*alpha + beta``
with ``up = 0`` and ``down = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import NotUnitaryError, WalkError

UNITARY_TOL = 1e-12

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def unitarity_residual(matrix) -> float:
    """Return ``max |U^dagger U - 1|`` (entrywise)."""
    u = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


@dataclass(frozen=True)
class UnitaryCoin:
    """A dense unitary on a coin space, checked at construction.

    ``tol`` is the unitarity certificate; construction raises
    :class:`NotUnitaryError` if ``max |U^dagger U - 1|`` exceeds it.
    """

    matrix: np.ndarray
    tol: float = UNITARY_TOL
    residual: float = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise WalkError(f"coin must be a non-empty square matrix, got shape {m.shape}")
        res = unitarity_residual(m)
        if not res <= self.tol:
            raise NotUnitaryError(f"coin is not unitary: residual {res:.3e} > {self.tol:.1e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "residual", res)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "UnitaryCoin") -> "UnitaryCoin":
        return UnitaryCoin(self.matrix @ other.matrix, tol=max(self.tol, other.tol))

    @classmethod
    def identity(cls, dim: int) -> "UnitaryCoin":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def phase(cls, gamma: complex, dim: int = 1) -> "UnitaryCoin":
        return cls(complex(gamma) * np.eye(dim, dtype=complex))


def hadamard_coin() -> UnitaryCoin:
    return UnitaryCoin(HADAMARD)


def rotation_coin(eps: float, axis: str = "x") -> UnitaryCoin:
    """``exp(i eps sigma_axis)`` for a Pauli axis in ``{'x', 'y', 'z'}``."""
    pauli = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}[axis]
    return UnitaryCoin(expm(1j * eps * pauli))


def haar_coin(dim: int, rng: np.random.Generator) -> UnitaryCoin:
    """Haar-random unitary via QR with phase fix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    return UnitaryCoin(q * (d / np.abs(d)))


def _key(n, s: int) -> tuple[int, ...]:
    if isinstance(n, (int, np.integer)):
        n = (int(n),)
    n = tuple(int(v) for v in n)
    if len(n) != s:
        raise WalkError(f"Laurent index {n} does not match lattice dimension {s}")
    return n


@dataclass(frozen=True)
class WalkSymbol:
    """Momentum-space symbol of a local, translation-invariant walk.

    Parameters
    ----------
    terms:
        Map from integer shift vectors (tuples of length ``lattice_dim``;
        plain ints are accepted for ``lattice_dim == 1``) to ``d x d``
        complex coefficient matrices.
    lattice_dim:
        Spatial dimension ``s``.
    check:
        Verify unitarity at construction.  Since ``W(p)^dagger W(p) - 1`` is
        a trigonometric polynomial of degree at most ``2r`` per axis, vanishing
        on a ``(4r + 1)^s`` grid proves unitarity for every ``p``.
    """

    terms: Mapping[tuple[int, ...], np.ndarray]
    lattice_dim: int = 1
    check: bool = True
    tol: float = UNITARY_TOL

    def __post_init__(self):
        s = int(self.lattice_dim)
        if s < 1:
            raise WalkError("lattice dimension must be positive")
        clean: dict[tuple[int, ...], np.ndarray] = {}
        dim = None
        for n, c in self.terms.items():
            c = np.array(c, dtype=complex)
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise WalkError(f"coefficient for {n} is not square")
            if dim is None:
                dim = c.shape[0]
            elif c.shape[0] != dim:
                raise WalkError("coefficients have inconsistent coin dimension")
            k = _key(n, s)
            clean[k] = clean[k] + c if k in clean else c
        clean = {k: v for k, v in clean.items() if np.any(v != 0)}
        if not clean:
            raise WalkError("a walk symbol needs at least one non-zero term")
        for v in clean.values():
            v.setflags(write=False)
        object.__setattr__(self, "terms", dict(sorted(clean.items())))
        object.__setattr__(self, "lattice_dim", s)
        if self.check:
            res = self.unitarity_residual()
            if not res <= self.tol:
                raise NotUnitaryError(f"walk symbol is not unitary: residual {res:.3e}")

    @property
    def dim(self) -> int:
        return next(iter(self.terms.values())).shape[0]

    @property
    def neighborhood_size(self) -> int:
        return max(max(abs(v) for v in n) for n in self.terms)

    @property
    def shifts(self) -> np.ndarray:
        return np.array(list(self.terms), dtype=int)

    def __call__(self, *p) -> np.ndarray:
        """Evaluate ``W(p)`` at one momentum vector."""
        if len(p) == 1 and np.ndim(p[0]) == 1:
            p = tuple(p[0])
        if len(p) != self.lattice_dim:
            raise WalkError(f"expected {self.lattice_dim} momenta, got {len(p)}")
        return self.evaluate(np.asarray(p, dtype=float)[None, :])[0]

    def evaluate(self, points) -> np.ndarray:
        """Evaluate on an array of momenta of shape ``(..., s)``.

        Returns an array of shape ``(..., d, d)``.
        """
        pts = np.asarray(points, dtype=float)
        if self.lattice_dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        shifts = self.shifts
        coeffs = np.stack(list(self.terms.values()))
        phases = np.exp(1j * (pts @ shifts.T))
        return np.tensordot(phases, coeffs, axes=(-1, 0))

    def grid(self, points_per_axis: int) -> np.ndarray:
        """Uniform periodic momentum grid of shape ``(n**s, s)``."""
        ax = 2.0 * np.pi * np.arange(points_per_axis) / points_per_axis - np.pi
        mesh = np.meshgrid(*([ax] * self.lattice_dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def unitarity_residual(self, points_per_axis: int | None = None) -> float:
        if points_per_axis is None:
            points_per_axis = 4 * self.neighborhood_size + 1
        w = self.evaluate(self.grid(points_per_axis))
        eye = np.eye(self.dim)
        return float(np.max(np.abs(np.conj(np.swapaxes(w, -1, -2)) @ w - eye)))

    def eigenphases(self, points_per_axis: int) -> np.ndarray:
        """Eigenphases on the uniform grid, shape ``(n**s, d)``."""
        return np.angle(np.linalg.eigvals(self.evaluate(self.grid(points_per_axis))))

    def __matmul__(self, other: "WalkSymbol") -> "WalkSymbol":
        if other.lattice_dim != self.lattice_dim or other.dim != self.dim:
            raise WalkError("cannot multiply symbols of different shape")
        out: dict[tuple[int, ...], np.ndarray] = {}
        for (a, ca), (b, cb) in product(self.terms.items(), other.terms.items()):
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, 0) + ca @ cb
        return WalkSymbol(out, self.lattice_dim, tol=max(self.tol, other.tol))

    @classmethod
    def constant(cls, coin, lattice_dim: int = 1) -> "WalkSymbol":
        m = coin.matrix if isinstance(coin, UnitaryCoin) else np.asarray(coin)
        return cls({(0,) * lattice_dim: m}, lattice_dim)


def hadamard_walk() -> WalkSymbol:
    """``W_H(p) = diag(e^{ip}, e^{-ip}) H``."""
    up = np.diag([1.0, 0.0]) @ HADAMARD
    down = np.diag([0.0, 1.0]) @ HADAMARD
    return WalkSymbol({(1,): up, (-1,): down})


def shift_coin_walk(coin: UnitaryCoin) -> WalkSymbol:
    """Hadamard-type walk ``S(p) C`` with an arbitrary 2x2 coin."""
    if coin.dim != 2:
        raise WalkError("shift-coin walk needs a 2x2 coin")
    return WalkSymbol({(1,): np.diag([1.0, 0.0]) @ coin.matrix,
                       (-1,): np.diag([0.0, 1.0]) @ coin.matrix})


def sigma_shift(axis: int, lattice_dim: int) -> WalkSymbol:
    """``[[0, e^{ip_axis}], [e^{-ip_axis}, 0]]``."""
    e = np.zeros(lattice_dim, dtype=int)
    e[axis] = 1
    return WalkSymbol({tuple(e): np.array([[0, 1], [0, 0]], dtype=complex),
                       tuple(-e): np.array([[0, 0], [1, 0]], dtype=complex)},
                      lattice_dim)


def coin_shift_walk(coins: Sequence[UnitaryCoin], s: int) -> WalkSymbol:
    """Alternating product ``C_0 sigma(p_1) C_1 ... sigma(p_s) C_s``."""
    if len(coins) != s + 1:
        raise WalkError(f"need {s + 1} coins for lattice dimension {s}, got {len(coins)}")
    coins = [c if isinstance(c, UnitaryCoin) else UnitaryCoin(c) for c in coins]
    for c in coins:
        if c.dim != 2:
            raise WalkError(f"coin-shift walks need 2x2 coins, got dimension {c.dim}")
    factors = [WalkSymbol.constant(coins[0], s)]
    for k in range(s):
        factors.append(sigma_shift(k, s))
        factors.append(WalkSymbol.constant(coins[k + 1], s))
    return reduce(lambda a, b: a @ b, factors)


def flat_walk(s: int, eps: float = 0.0, axis: str = "x") -> WalkSymbol:
    """Slow walk with eigenphases near ``{0, pi}`` for small ``eps``.

    The unperturbed coins are the identity at both ends and ``sigma_x``
    in between, so that at ``eps = 0`` the product collapses to
    ``sigma(p_1 + ... + p_s)`` whose eigenvalues are exactly ``+-1``.  Every
    coin is then multiplied by the rotation ``exp(i eps sigma_axis)``.
    """
    rot = rotation_coin(eps, axis)
    base = [UnitaryCoin.identity(2)] + [UnitaryCoin(PAULI_X)] * (s - 1) + [UnitaryCoin.identity(2)]
    return coin_shift_walk([b @ rot for b in base], s)


def two_particle_symbol(w: WalkSymbol, p: float, k: float) -> np.ndarray:
    """``W_1(p/2 + k) (x) W_1(p/2 - k)`` for a one-dimensional walk."""
    if w.lattice_dim != 1:
        raise WalkError("two_particle_symbol is defined for one-dimensional walks")
    return np.kron(w(p / 2 + k), w(p / 2 - k))


def relative_stride(w: WalkSymbol) -> int:
    """gcd of all relative-coordinate displacements ``n - m`` of the pair walk."""
    shifts = w.shifts
    diffs = (shifts[:, None, :] - shifts[None, :, :]).ravel()
    return int(reduce(math.gcd, (abs(int(v)) for v in diffs), 0)) or 1


def relative_symbol(w: WalkSymbol, p, gauge: str = "ring", reduced: bool = False) -> WalkSymbol:
    """Pair walk at fixed total momentum ``p`` acting on ``y = x1 - x2``.

    ``gauge="center"`` writes the pair state as
    ``exp(-i p.(x1 + x2)/2) phi(y)`` and gives exactly
    ``W_1(p/2 + k) (x) W_1(p/2 - k)``.  ``gauge="ring"`` uses
    ``exp(-i p.x2) phi(y)``; its symbol is the same family shifted in ``k``
    (identical spectrum and defect operator) and, unlike the centre gauge,
    it is periodic on a ring of ``M`` sites when ``p`` is a multiple of
    ``2 pi / M``.

    ``reduced=True`` divides every displacement by :func:`relative_stride`,
    i.e. works on the sublattice containing the collision site.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (w.lattice_dim,):
        raise WalkError("total momentum must have one component per lattice axis")
    stride = relative_stride(w) if reduced else 1
    out: dict[tuple[int, ...], np.ndarray] = {}
    for (n, cn), (m, cm) in product(w.terms.items(), w.terms.items()):
        n_, m_ = np.array(n), np.array(m)
        if gauge == "ring":
            phase = np.exp(1j * p @ m_)
        elif gauge == "center":
            phase = np.exp(0.5j * p @ (n_ + m_))
        else:
            raise WalkError(f"unknown gauge {gauge!r}")
        key = tuple(int(v) // stride for v in n_ - m_)
        out[key] = out.get(key, 0) + phase * np.kron(cn, cm)
    return WalkSymbol(out, w.lattice_dim, tol=1e-11)


def exchange_operator(d: int) -> np.ndarray:
    """Swap of tensor factors on ``C^d (x) C^d``."""
    f = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            f[b * d + a, a * d + b] = 1.0
    return f


def antisymmetric_projector(d: int) -> np.ndarray:
    return 0.5 * (np.eye(d * d) - exchange_operator(d))


def symmetric_projector(d: int) -> np.ndarray:
    return 0.5 * (np.eye(d * d) + exchange_operator(d))


SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
TRIPLET_ZERO = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)


def singlet_collision_coin(gamma: complex, d: int = 2) -> UnitaryCoin:
    """``1 + (gamma - 1) P_antisym``: the phase acts only on the antisymmetric
    (for ``d = 2`` the singlet) component of the collision coin space."""
    if not math.isclose(abs(gamma), 1.0, abs_tol=1e-12):
        raise WalkError(f"collision phase must have modulus one, got |gamma|={abs(gamma)}")
    return UnitaryCoin(np.eye(d * d) + (complex(gamma) - 1) * antisymmetric_projector(d))


def symmetric_basis(d: int = 2) -> np.ndarray:
    """Orthonormal basis of the symmetric subspace as columns.

    For ``d = 2`` the order is ``|up up>, (|up down> + |down up>)/sqrt2, |down down>``.
    """
    cols = []
    for a in range(d):
        for b in range(a, d):
            v = np.zeros(d * d, dtype=complex)
            v[a * d + b] += 1.0
            v[b * d + a] += 1.0
            cols.append(v / np.linalg.norm(v))
    return np.stack(cols, axis=1)


def symmetric_collision_coin(u_sym, d: int = 2) -> UnitaryCoin:
    """Collision coin acting as ``u_sym`` on the symmetric subspace and as the
    identity on the antisymmetric one."""
    u = np.asarray(u_sym.matrix if isinstance(u_sym, UnitaryCoin) else u_sym, dtype=complex)
    basis = symmetric_basis(d)
    if u.shape != (basis.shape[1],) * 2:
        raise WalkError(f"symmetric block must be {basis.shape[1]}x{basis.shape[1]}")
    UnitaryCoin(u)
    return UnitaryCoin(antisymmetric_projector(d) + basis @ u @ basis.conj().T)


def phase_of(g: float) -> complex:
    return complex(math.cos(g), math.sin(g))

