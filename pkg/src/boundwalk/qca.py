"""Lattice-gas automaton on a double chain of qubits.

Every cell ``x`` of a ring of ``M`` cells holds two qubits: a left-moving
and a right-moving occupation.  One step applies a number-conserving cell
coin at every cell and then moves the right chain one cell up and the left
chain one cell down.  With the identification right-mover = coin state
``up`` (index 0) and left-mover = ``down`` (index 1), the one-particle
sector is the single walker ``S(p) C`` and the two-particle sector is the
hard-core Bose pair whose collision acts as the phase ``gamma`` on
``(|up down> + |down up>)/sqrt2``.

States are sparse maps from occupation bitmasks to amplitudes.  Bit
``2x`` is the left-moving qubit of cell ``x`` and bit ``2x + 1`` the
right-moving one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import WalkError
from .evolution import Lattice, StepOperator, TwoParticleState, build_interacting_step
from .walk import UnitaryCoin, WalkSymbol, symmetric_basis, symmetric_collision_coin

DENSE_LIMIT = 12
UP, DOWN = 0, 1


def mode_bit(x: int, coin: int) -> int:
    """Bit position of the walker mode ``(x, coin)``."""
    return 2 * x + (1 if coin == UP else 0)


def bit_mode(bit: int) -> tuple[int, int]:
    return bit // 2, UP if bit % 2 else DOWN


def occupied_bits(key: int) -> list[int]:
    out, b = [], 0
    while key:
        if key & 1:
            out.append(b)
        key >>= 1
        b += 1
    return out


@dataclass(frozen=True)
class CellCoin:
    """Block-diagonal cell unitary.

    ``|00>`` is left alone, ``block`` (in the order up, down) acts on the
    one-particle states and ``|11>`` picks up ``gamma``.
    """

    block: UnitaryCoin
    gamma: complex

    def __post_init__(self):
        if self.block.dim != 2:
            raise WalkError("the one-particle block of a cell coin is 2x2")
        if not math.isclose(abs(self.gamma), 1.0, abs_tol=1e-12):
            raise WalkError(f"gamma must have modulus one, got {abs(self.gamma)}")
        object.__setattr__(self, "gamma", complex(self.gamma))

    @property
    def matrix(self) -> np.ndarray:
        """4x4 matrix on ``|left right>`` = ``|00>, |01>, |10>, |11>``."""
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = 1.0
        m[1:3, 1:3] = self.block.matrix  # |01> = right = up, |10> = left = down
        m[3, 3] = self.gamma
        return m


@dataclass(frozen=True)
class GasState:
    ring_size: int
    amplitudes: dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.ring_size < 2:
            raise WalkError("the gas needs at least two cells")
        top = 1 << (2 * self.ring_size)
        clean = {}
        for k, a in self.amplitudes.items():
            k = int(k)
            if not 0 <= k < top:
                raise WalkError(f"configuration {k} does not fit on {self.ring_size} cells")
            if a != 0:
                clean[k] = complex(a)
        object.__setattr__(self, "amplitudes", clean)

    @classmethod
    def vacuum(cls, ring_size: int) -> "GasState":
        return cls(ring_size, {0: 1.0})

    @classmethod
    def from_modes(cls, ring_size: int, terms) -> "GasState":
        """Build from ``{((x, coin), ...): amplitude}`` with distinct modes."""
        amps: dict[int, complex] = {}
        for modes, a in dict(terms).items():
            key = 0
            for x, c in modes:
                bit = 1 << mode_bit(int(x) % ring_size, c)
                if key & bit:
                    raise WalkError("a mode can hold at most one particle")
                key |= bit
            amps[key] = amps.get(key, 0) + a
        return cls(ring_size, amps)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def particle_numbers(self) -> dict[int, float]:
        """Probability of each total particle number."""
        out: dict[int, float] = {}
        for k, a in self.amplitudes.items():
            n = k.bit_count()
            out[n] = out.get(n, 0.0) + abs(a) ** 2
        return dict(sorted(out.items()))

    def vector(self) -> np.ndarray:
        """Dense ``4^M`` amplitude vector; refused above 12 cells."""
        if self.ring_size > DENSE_LIMIT:
            raise WalkError(f"dense gas vectors are limited to {DENSE_LIMIT} cells")
        v = np.zeros(1 << (2 * self.ring_size), dtype=complex)
        for k, a in self.amplitudes.items():
            v[k] = a
        return v

    def inner(self, other: "GasState") -> complex:
        return sum(np.conj(a) * other.amplitudes.get(k, 0) for k, a in self.amplitudes.items())

    def scaled(self, c: complex) -> "GasState":
        return GasState(self.ring_size, {k: c * a for k, a in self.amplitudes.items()})

    def distance(self, other: "GasState") -> float:
        keys = set(self.amplitudes) | set(other.amplitudes)
        return math.sqrt(sum(abs(self.amplitudes.get(k, 0) - other.amplitudes.get(k, 0)) ** 2 for k in keys))


def _apply_cell_coin(amps: dict[int, complex], x: int, u: np.ndarray) -> dict[int, complex]:
    left, right = 1 << (2 * x), 1 << (2 * x + 1)
    both = left | right
    out: dict[int, complex] = {}
    for k, a in amps.items():
        cell = k & both
        if cell == 0:
            out[k] = out.get(k, 0) + a
        elif cell == both:
            out[k] = out.get(k, 0) + u[3, 3] * a
        else:
            rest = k & ~both
            col = 1 if cell == right else 2
            for row, bit in ((1, right), (2, left)):
                c = u[row, col]
                if c != 0:
                    key = rest | bit
                    out[key] = out.get(key, 0) + c * a
    return out


def _shift(key: int, m: int) -> int:
    width = 2 * m
    full = (1 << width) - 1
    odd = int("10" * m, 2)
    right, left = key & odd, key & (full ^ odd)
    right = ((right << 2) | (right >> (width - 2))) & full
    left = ((left >> 2) | (left << (width - 2))) & full
    return right | left


def qca_step(state: GasState, coin: CellCoin) -> GasState:
    """One automaton step: cell coin everywhere, then both chains move."""
    u = coin.matrix
    amps = dict(state.amplitudes)
    for x in range(state.ring_size):
        amps = _apply_cell_coin(amps, x, u)
    return GasState(state.ring_size, {_shift(k, state.ring_size): a for k, a in amps.items()})


def qca_evolve(state: GasState, coin: CellCoin, t: int) -> GasState:
    if t < 0:
        raise WalkError("t must be non-negative")
    for _ in range(t):
        state = qca_step(state, coin)
    return state


def sector_projection(state: GasState, n: int) -> GasState:
    """Restriction to configurations with exactly ``n`` particles."""
    if not 0 <= n <= 2 * state.ring_size:
        raise WalkError(f"particle number must lie in [0, {2 * state.ring_size}]")
    return GasState(state.ring_size, {k: a for k, a in state.amplitudes.items() if k.bit_count() == n})


def sector_keys(ring_size: int, n: int) -> list[int]:
    return [sum(1 << b for b in bits) for bits in combinations(range(2 * ring_size), n)]


def random_sector_state(ring_size: int, n: int, rng: np.random.Generator) -> GasState:
    keys = sector_keys(ring_size, n)
    v = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    v /= np.linalg.norm(v)
    return GasState(ring_size, dict(zip(keys, v)))


# correspondence with walk-core ------------------------------------------------

def one_particle_amplitudes(state: GasState) -> np.ndarray:
    """``(M, 2)`` walker amplitudes of the one-particle sector."""
    out = np.zeros((state.ring_size, 2), dtype=complex)
    for k, a in state.amplitudes.items():
        if k.bit_count() == 1:
            x, c = bit_mode(k.bit_length() - 1)
            out[x, c] = a
    return out


def gas_from_walker(amplitudes) -> GasState:
    amps = np.asarray(amplitudes, dtype=complex)
    m = amps.shape[0]
    return GasState.from_modes(m, {((x, c),): amps[x, c] for x in range(m) for c in range(2) if amps[x, c] != 0})


def bose_pair_state(state: GasState, lattice: Lattice | None = None) -> TwoParticleState:
    """Two-particle sector as a symmetric walker pair on the ring.

    A configuration with modes ``u != v`` and amplitude ``a`` becomes
    ``Psi(u; v) = Psi(v; u) = a / sqrt2``.
    """
    m = state.ring_size
    lattice = lattice or Lattice.ring(m)
    if lattice.size != m or not lattice.periodic:
        raise WalkError("the pair must live on a ring with as many sites as the gas has cells")
    out = TwoParticleState.zeros(lattice)
    arr = out.amplitudes
    for k, a in state.amplitudes.items():
        if k.bit_count() != 2:
            continue
        (x, c), (y, e) = (bit_mode(b) for b in occupied_bits(k))
        arr[x, y, c, e] += a / math.sqrt(2)
        arr[y, x, e, c] += a / math.sqrt(2)
    return out


def gas_from_bose_pair(pair: TwoParticleState, atol: float = 1e-14) -> GasState:
    """Inverse of :func:`bose_pair_state`; the pair must be symmetric and
    free of doubly occupied modes."""
    arr = pair.amplitudes
    if np.max(np.abs(arr - pair.exchanged().amplitudes)) > atol:
        raise WalkError("pair state is not exchange symmetric")
    m = arr.shape[0]
    same = np.abs(arr[np.arange(m), np.arange(m)][:, [0, 1], [0, 1]])
    if same.size and same.max() > atol:
        raise WalkError("pair state has two particles in one mode")
    amps: dict[int, complex] = {}
    for x, y, c, e in zip(*np.nonzero(np.abs(arr) > 0)):
        u, v = mode_bit(x, c), mode_bit(y, e)
        if u < v:
            amps[(1 << u) | (1 << v)] = math.sqrt(2) * arr[x, y, c, e]
    return GasState(m, amps)


def bose_singlet_collision_coin(block: UnitaryCoin, gamma: complex) -> UnitaryCoin:
    """Collision coin ``G`` with ``(C (x) C) G`` equal to ``gamma`` on the
    symmetric singlet and the identity elsewhere.

    Applied before the free step, it reproduces the automaton's ``|11>``
    phase for two hard-core bosons in one cell.
    """
    c2 = np.kron(block.matrix, block.matrix)
    s = symmetric_basis(2)[:, 1]
    target = np.eye(4) + (complex(gamma) - 1) * np.outer(s, s.conj())
    return UnitaryCoin(c2.conj().T @ target)


def bose_collision_step(w: WalkSymbol, u_sym, lattice: Lattice) -> StepOperator:
    """Pair step whose collision coin acts as ``u_sym`` on the symmetric
    subspace (basis ``|up up>, sym, |down down>``) and trivially on the
    antisymmetric one."""
    return build_interacting_step(w, symmetric_collision_coin(u_sym), lattice)


def restrict_to_symmetric(matrix) -> np.ndarray:
    """3x3 block of an exchange-symmetric two-qubit operator."""
    b = symmetric_basis(2)
    return b.conj().T @ np.asarray(matrix) @ b
