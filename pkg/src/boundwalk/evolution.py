"""Two-particle states and the interacting one-step operator.

The interacting step is ``W_G = (W_1 (x) W_1) ((1 - N) + G N)``: the collision
coin ``G`` acts on the joint coin space wherever ``x1 == x2`` and is followed
by the free two-particle step.  States are dense arrays of shape
``(M, M, d, d)`` indexed ``[x1, x2, alpha, beta]``; the step is applied as
blockwise coin multiplication plus array rolls and is never stored as a
dense matrix beyond small rings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import ClearanceError, WalkError
from .walk import SINGLET, UnitaryCoin, WalkSymbol, exchange_operator

DENSE_LIMIT = 16


@dataclass(frozen=True)
class Lattice:
    """Finite set of sites for one particle.

    ``ring`` lattices are periodic with ``size`` sites.  ``window`` lattices
    cover ``[-radius, radius]``; evolving on them requires that no amplitude
    can reach the edge.  Index ``i`` holds position ``i - origin``.
    """

    size: int
    periodic: bool

    def __post_init__(self):
        if self.size < 1:
            raise WalkError("lattice needs at least one site")

    @classmethod
    def ring(cls, size: int) -> "Lattice":
        return cls(int(size), True)

    @classmethod
    def window(cls, radius: int) -> "Lattice":
        if radius < 0:
            raise WalkError("window radius must be non-negative")
        return cls(2 * int(radius) + 1, False)

    @property
    def origin(self) -> int:
        return self.size // 2

    @property
    def radius(self) -> int:
        return self.size - 1 - self.origin

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.size) - self.origin

    @property
    def boundary(self) -> str:
        return "ring" if self.periodic else "absorbing-window"


@dataclass
class TwoParticleState:
    """Amplitudes ``psi[x1, x2, alpha, beta]`` on a finite lattice."""

    lattice: Lattice
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        m = self.lattice.size
        if a.ndim != 4 or a.shape[:2] != (m, m) or a.shape[2] != a.shape[3]:
            raise WalkError(f"amplitudes must have shape ({m}, {m}, d, d), got {a.shape}")
        self.amplitudes = a

    @classmethod
    def zeros(cls, lattice: Lattice, d: int = 2) -> "TwoParticleState":
        return cls(lattice, np.zeros((lattice.size, lattice.size, d, d), dtype=complex))

    @classmethod
    def localized(cls, lattice: Lattice, coin_state, x1: int = 0, x2: int = 0) -> "TwoParticleState":
        """Both particles at fixed sites with a joint coin state of length ``d**2``."""
        v = np.asarray(coin_state, dtype=complex)
        d = math.isqrt(v.size)
        if d * d != v.size:
            raise WalkError("joint coin state must have length d**2")
        st = cls.zeros(lattice, d)
        st.amplitudes[lattice.origin + x1, lattice.origin + x2] = v.reshape(d, d)
        return st

    @property
    def d(self) -> int:
        return self.amplitudes.shape[2]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def normalized(self) -> "TwoParticleState":
        n = self.norm()
        if n == 0:
            raise WalkError("cannot normalize the zero state")
        return replace(self, amplitudes=self.amplitudes / n)

    def exchanged(self) -> "TwoParticleState":
        """Swap the particles: ``psi(x1, a; x2, b) -> psi(x2, b; x1, a)``."""
        return replace(self, amplitudes=self.amplitudes.transpose(1, 0, 3, 2).copy())

    def fermi_part(self) -> "TwoParticleState":
        return replace(self, amplitudes=0.5 * (self.amplitudes - self.exchanged().amplitudes))

    def bose_part(self) -> "TwoParticleState":
        return replace(self, amplitudes=0.5 * (self.amplitudes + self.exchanged().amplitudes))

    def translated(self, shift: int = 1) -> "TwoParticleState":
        """Joint translation by ``shift`` sites (ring lattices only)."""
        if not self.lattice.periodic:
            raise WalkError("joint translation is only defined on a ring")
        return replace(self, amplitudes=np.roll(self.amplitudes, (shift, shift), axis=(0, 1)))

    def support_radius(self) -> int:
        occupied = np.nonzero(np.any(self.amplitudes != 0, axis=(2, 3)))
        if occupied[0].size == 0:
            return 0
        x = self.lattice.positions
        return int(max(np.abs(x[occupied[0]]).max(), np.abs(x[occupied[1]]).max()))

    def vector(self) -> np.ndarray:
        return self.amplitudes.ravel()


def singlet_state_at_origin(lattice: Lattice | None = None) -> TwoParticleState:
    """Both particles at the origin in ``(|up down> - |down up>)/sqrt(2)``."""
    return TwoParticleState.localized(lattice or Lattice.window(0), SINGLET)


def _apply_single(walk: WalkSymbol, a: np.ndarray, axis: int) -> np.ndarray:
    # axis 0 acts on (x1, alpha), axis 1 on (x2, beta)
    out = np.zeros_like(a)
    for (n,), c in walk.terms.items():
        if axis == 0:
            moved = np.einsum("ab,xybc->xyac", c, a)
        else:
            moved = np.einsum("ba,xyca->xycb", c, a)
        out += np.roll(moved, n, axis=axis)
    return out


@dataclass(frozen=True)
class StepOperator:
    """One interacting time step on a fixed lattice."""

    walk: WalkSymbol
    collision: UnitaryCoin
    lattice: Lattice
    _diag: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.walk.lattice_dim != 1:
            raise WalkError("two-particle evolution needs a one-dimensional walk")
        if self.collision.dim != self.walk.dim ** 2:
            raise WalkError(f"collision coin must have dimension {self.walk.dim ** 2}, "
                            f"got {self.collision.dim}")
        object.__setattr__(self, "_diag", np.arange(self.lattice.size))

    @property
    def speed(self) -> int:
        return self.walk.neighborhood_size

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        d = self.walk.dim
        a = np.array(amplitudes, dtype=complex, copy=True)
        i = self._diag
        coll = a[i, i].reshape(-1, d * d) @ self.collision.matrix.T
        a[i, i] = coll.reshape(-1, d, d)
        a = _apply_single(self.walk, a, 0)
        return _apply_single(self.walk, a, 1)

    def __call__(self, state: TwoParticleState) -> TwoParticleState:
        if state.lattice != self.lattice:
            raise WalkError("state and step live on different lattices")
        return replace(state, amplitudes=self.apply(state.amplitudes))

    def to_sparse(self) -> sp.csr_matrix:
        """Explicit matrix built from index arithmetic (reference for tests).

        Basis index is the row-major flattening of ``[x1, x2, alpha, beta]``.
        Wrap-around terms are kept, so on a window this is the ring of the
        same size.
        """
        m, d = self.lattice.size, self.walk.dim
        dd = d * d
        sites = np.arange(m)
        rows, cols, vals = [], [], []
        for (n1,), c1 in self.walk.terms.items():
            for (n2,), c2 in self.walk.terms.items():
                block = np.kron(c1, c2)
                x1, x2 = np.meshgrid(sites, sites, indexing="ij")
                src = (x1 * m + x2).ravel()
                dst = (((x1 + n1) % m) * m + (x2 + n2) % m).ravel()
                r, c = np.nonzero(block)
                for a, b in zip(r, c):
                    rows.append(dst * dd + a)
                    cols.append(src * dd + b)
                    vals.append(np.full(src.size, block[a, b]))
        free = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(m * m * dd,) * 2)
        on_diag = (np.arange(m)[:, None] == np.arange(m)[None, :]).ravel().astype(float)
        coll = (sp.kron(sp.diags(on_diag), sp.csr_matrix(self.collision.matrix))
                + sp.kron(sp.diags(1.0 - on_diag), sp.identity(dd)))
        return (free @ coll).tocsr()

    def to_dense(self) -> np.ndarray:
        if self.lattice.size > DENSE_LIMIT:
            raise WalkError(f"dense step matrices are limited to rings of {DENSE_LIMIT} sites")
        return self.to_sparse().toarray()


def build_interacting_step(w: WalkSymbol, gamma_coin: UnitaryCoin, lattice: Lattice) -> StepOperator:
    return StepOperator(w, gamma_coin, lattice)


def free_step(w: WalkSymbol, lattice: Lattice) -> StepOperator:
    return StepOperator(w, UnitaryCoin.identity(w.dim ** 2), lattice)


def evolve(state: TwoParticleState, step: StepOperator, t: int) -> TwoParticleState:
    """Apply ``step`` ``t`` times.

    On a window the support plus ``t`` times the walk's neighbourhood size
    must stay inside the window; otherwise :class:`ClearanceError` is raised
    before any work is done.
    """
    if t < 0:
        raise WalkError("number of steps must be non-negative")
    if state.lattice != step.lattice:
        raise WalkError("state and step live on different lattices")
    if not state.lattice.periodic:
        reach = state.support_radius() + t * step.speed
        if reach > state.lattice.radius:
            raise ClearanceError(f"window radius {state.lattice.radius} too small: "
                                 f"amplitude can reach |x| = {reach} after {t} steps")
    a = state.amplitudes
    for _ in range(t):
        a = step.apply(a)
    return replace(state, amplitudes=a)


def embed(state: TwoParticleState, lattice: Lattice) -> TwoParticleState:
    """Copy a state into a larger lattice, keeping the origin fixed."""
    if lattice.radius < state.support_radius():
        raise WalkError("target lattice does not contain the state's support")
    out = TwoParticleState.zeros(lattice, state.d)
    pos = state.lattice.positions
    keep = np.abs(pos) <= lattice.radius
    idx = pos[keep] + lattice.origin
    out.amplitudes[np.ix_(idx, idx)] = state.amplitudes[np.ix_(keep, keep)]
    return out


def joint_distribution(state: TwoParticleState) -> np.ndarray:
    """``P[x1, x2] = sum_{alpha, beta} |psi(x1, x2, alpha, beta)|^2``."""
    return np.sum(np.abs(state.amplitudes) ** 2, axis=(2, 3))


def marginal(prob: np.ndarray, particle: int = 0) -> np.ndarray:
    return prob.sum(axis=1 - particle)


def center_of_mass_distribution(prob: np.ndarray, positions: np.ndarray):
    """Distribution of ``(x1 + x2)/2``; returns ``(centers, probabilities)``."""
    s = positions[:, None] + positions[None, :]
    lo = s.min()
    weights = np.bincount((s - lo).ravel(), weights=prob.ravel())
    return (np.arange(weights.size) + lo) / 2.0, weights


def near_diagonal_probability(prob: np.ndarray, positions: np.ndarray, width: int = 5) -> float:
    """Probability of ``|x1 - x2| <= width``."""
    sep = np.abs(positions[:, None] - positions[None, :])
    return float(prob[sep <= width].sum())


def outer_peaks(values: np.ndarray, coords: np.ndarray, rel_height: float = 0.2):
    """Outermost local maxima on each side of zero whose height exceeds
    ``rel_height`` times the global maximum."""
    v = np.asarray(values, dtype=float)
    inner = (v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] >= rel_height * v.max())
    idx = np.nonzero(inner)[0] + 1
    left, right = coords[idx][coords[idx] < 0], coords[idx][coords[idx] > 0]
    return (float(left.min()) if left.size else None, float(right.max()) if right.size else None)


def exchange_eigenvalue(state: TwoParticleState) -> complex:
    """``<psi|F|psi> / <psi|psi>`` for the particle exchange ``F``."""
    v = state.vector()
    return complex(np.vdot(v, state.exchanged().vector()) / np.vdot(v, v))


def collision_exchange(d: int) -> np.ndarray:
    return exchange_operator(d)
