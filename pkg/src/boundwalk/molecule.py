"""Closed-form bound pairs of the Hadamard walk with a singlet collision phase.

Two Hadamard walkers that pick up the phase ``gamma = exp(i g)`` whenever
they meet in the antisymmetric coin state form bound pairs.  At total
momentum ``p`` the pair eigenvalue ``z = exp(i omega)`` solves

    z = gamma / (2 gamma - 1) * (cos p +/- i sqrt(sin(p)^2 + 4 (1 - cos g)))

and is a true eigenvalue only when ``sin(omega) sin(g - omega) > 0``.
The "+" branch is the root with ``+i sqrt(...)``.

Relative positions are counted on the collision sublattice: the Hadamard
pair only ever changes ``x1 - x2`` by an even amount, so the relative
coordinate used throughout is ``j = (x1 - x2) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, DomainError, WalkError
from .spectral import DefectOperator, compute_R
from .walk import (SINGLET, UnitaryCoin, WalkSymbol, exchange_operator, hadamard_walk, phase_of,
                   relative_symbol, singlet_collision_coin)

TIE_TOL = 1e-12
TAIL_TOL = 1e-10
MAX_CUTOFF = 200_000

BRANCHES = (1, -1)


@dataclass(frozen=True)
class InteractionPhase:
    """Collision phase ``gamma = exp(i g)`` with ``g`` folded into ``(-pi, pi]``."""

    g: float

    def __post_init__(self):
        folded = -math.remainder(-float(self.g), 2 * math.pi)
        object.__setattr__(self, "g", math.pi if folded == -math.pi else folded)

    @property
    def gamma(self) -> complex:
        return phase_of(self.g)


@dataclass(frozen=True)
class DispersionPoint:
    p: float
    branch: int
    omega: float
    allowed: bool
    group_velocity: float

    @property
    def z(self) -> complex:
        return phase_of(self.omega)


def _check_branch(branch) -> int:
    if branch in ("+", 1, 1.0):
        return 1
    if branch in ("-", -1, -1.0):
        return -1
    raise WalkError(f"branch must be '+' or '-', got {branch!r}")


def eigenvalue(p: float, g: float, branch) -> complex:
    """Unit-modulus pair eigenvalue ``exp(i omega)`` on the given branch."""
    sign = _check_branch(branch)
    gamma = phase_of(g)
    root = math.sqrt(math.sin(p) ** 2 + 4.0 * (1.0 - math.cos(g)))
    return gamma / (2 * gamma - 1) * complex(math.cos(p), sign * root)


def is_allowed(omega: float, g: float) -> bool:
    """Pole-selection rule ``sin(omega) sin(g - omega) > 0``; ties are rejected."""
    return math.sin(omega) * math.sin(g - omega) > TIE_TOL


def _velocity(p: float, g: float, sign: int) -> float:
    den = math.sqrt(4.0 - 4.0 * math.cos(g) + math.sin(p) ** 2)
    return 0.0 if den == 0.0 else sign * math.sin(p) / den


def dispersion(p: float, g: float) -> tuple[DispersionPoint, DispersionPoint]:
    """Both branches ``(+, -)`` of the pair dispersion at ``(p, g)``.

    At ``g = 0`` both branches are returned with ``allowed=False``.
    """
    out = []
    for sign in BRANCHES:
        omega = float(np.angle(eigenvalue(p, g, sign)))
        out.append(DispersionPoint(float(p), sign, omega, is_allowed(omega, g), _velocity(p, g, sign)))
    return out[0], out[1]


def branch_point(p: float, g: float, branch) -> DispersionPoint:
    plus, minus = dispersion(p, g)
    return plus if _check_branch(branch) == 1 else minus


def group_velocity(p: float, g: float, branch, virtual: bool = False) -> float:
    """``d omega / d p`` on one branch, in sites per step.

    Raises :class:`ConstraintError` on a forbidden branch unless
    ``virtual=True``.
    """
    point = branch_point(p, g, branch)
    if not (point.allowed or virtual):
        raise ConstraintError(f"branch {branch} at p={p:.6g}, g={g:.6g} violates sin(w) sin(g - w) > 0")
    return point.group_velocity


@dataclass(frozen=True)
class MaxSpeed:
    """Fastest allowed bound pair at phase ``g``.

    ``unconstrained`` is the speed at ``p = pi/2``, the maximum of the
    velocity formula when the selection rule is ignored;
    ``unconstrained_allowed`` says whether either branch is allowed there.
    """

    g: float
    speed: float
    p: float | None
    unconstrained: float
    unconstrained_allowed: bool


def max_speed(g: float, grid_points: int = 10_000) -> MaxSpeed:
    """Maximum ``|d omega/dp|`` over allowed branches.

    When ``p = pi/2`` is allowed the closed form ``1/sqrt(5 - 4 cos g)`` is
    returned; otherwise the maximum over a uniform ``grid_points`` scan.
    """
    if g == 0:
        raise DomainError("max_speed needs g != 0; the free pair has no bound states")
    top = 1.0 / math.sqrt(5.0 - 4.0 * math.cos(g))
    top_ok = any(pt.allowed for pt in dispersion(math.pi / 2, g))
    if top_ok:
        return MaxSpeed(g, top, math.pi / 2, top, True)
    best, best_p = 0.0, None
    for p in np.linspace(-math.pi, math.pi, grid_points, endpoint=False):
        for pt in dispersion(float(p), g):
            if pt.allowed and abs(pt.group_velocity) > best:
                best, best_p = abs(pt.group_velocity), float(p)
    return MaxSpeed(g, best, best_p, top, False)


def molecule_coin(gamma: complex) -> UnitaryCoin:
    """2x2 coin ``C`` whose walk ``diag(e^{ip}, e^{-ip}) C`` has both pair
    dispersion branches as its eigenphases."""
    gamma = complex(gamma)
    if not math.isclose(abs(gamma), 1.0, abs_tol=1e-12):
        raise WalkError(f"gamma must have modulus one, got {abs(gamma)}")
    r2 = math.sqrt(2.0)
    m = np.array([[gamma, r2 * (gamma - 1)],
                  [r2 * (gamma - 1) * gamma, gamma]]) / (2 * gamma - 1)
    return UnitaryCoin(m)


def molecule_walk(gamma: complex) -> WalkSymbol:
    c = molecule_coin(gamma).matrix
    return WalkSymbol({1: np.diag([1.0, 0.0]) @ c, -1: np.diag([0.0, 1.0]) @ c})


def _pole(cos_eta: float, sin_eta: float, g: float) -> float:
    return -cos_eta - sin_eta / math.tan(g / 2)


def _capture(omega: float, sin_eta: float) -> float:
    return 1.0 / (1.0 + 2.0 * math.sin(omega) / sin_eta) if sin_eta != 0 else 0.0


def eta(p: float, omega: float, g: float) -> float:
    """Angle ``eta`` with ``cos eta = cos p - 2 cos omega``.

    The sign is the one giving ``|v1| <= 1`` and a capture probability in
    ``(0, 1]``.  If both signs qualify, ``sin eta`` takes the sign of
    ``sin omega``; if neither does (virtual branches), the root closest to
    ``angle(-exp(i omega) / gamma)`` is used.
    """
    c = math.cos(p) - 2.0 * math.cos(omega)
    if abs(c) > 1.0 + 1e-12:
        raise DomainError(f"|cos p - 2 cos omega| = {abs(c):.6g} exceeds one")
    ref = float(np.angle(-phase_of(omega) / phase_of(g)))
    if abs(math.cos(ref) - c) <= 1e-9:
        base = abs(ref)  # same root as acos(c), without its loss of precision near |c| = 1
    else:
        base = math.acos(max(-1.0, min(1.0, c)))
    qualifying = []
    for cand in (base, -base):
        s = math.sin(cand)
        if g == 0 or s == 0:
            continue
        pc = _capture(omega, s)
        if abs(_pole(c, s, g)) <= 1.0 and 0.0 < pc <= 1.0:
            qualifying.append(cand)
    if len(qualifying) == 1:
        return qualifying[0]
    if len(qualifying) == 2:
        return base if math.copysign(1.0, math.sin(omega)) > 0 else -base
    return min((base, -base), key=lambda e: abs(np.angle(np.exp(1j * (e - ref)))))


def pole_v1(p: float, g: float, branch) -> float:
    """Relative-coordinate decay factor ``v1 = -cos eta - cot(g/2) sin eta``.

    Amplitudes of the bound pair fall off as ``|v1|^|j|``.
    """
    if math.sin(g / 2) == 0.0:
        raise DomainError("v1 is undefined at g = 0 (no bound state)")
    pt = branch_point(p, g, branch)
    e = eta(p, pt.omega, g)
    return _pole(math.cos(e), math.sin(e), g)


def capture_closed_form(p: float, g: float, branch) -> float:
    """Singlet capture probability ``(1 + 2 sin omega / sin eta)^{-1}``."""
    pt = _allowed_point(p, g, branch)
    return _capture(pt.omega, math.sin(eta(p, pt.omega, g)))


def _allowed_point(p, g, branch) -> DispersionPoint:
    pt = branch_point(p, g, branch)
    if not pt.allowed:
        raise ConstraintError(
            f"branch {branch} at p={p:.6g}, g={g:.6g} is forbidden: sin(w) sin(g - w) = "
            f"{math.sin(pt.omega) * math.sin(g - pt.omega):.3e} is not positive")
    return pt


def pair_symbol(p: float) -> WalkSymbol:
    """Hadamard pair at total momentum ``p`` on the reduced relative coordinate."""
    return relative_symbol(hadamard_walk(), [p], gauge="center", reduced=True)


def _laurent(values: np.ndarray) -> dict[int, np.ndarray]:
    n = values.shape[0]
    coeff = np.fft.fft(values, axis=0) / n
    scale = max(1.0, float(np.max(np.abs(coeff))))
    out = {}
    for j in range(n):
        if np.max(np.abs(coeff[j])) > 1e-13 * scale:
            out[j if j < n // 2 else j - n] = coeff[j]
    return out


@dataclass(frozen=True)
class _Residue:
    """``(W(v) - z)^{-1} = B(v) / q(v)`` with polynomial ``q`` and ``B``."""

    q: np.ndarray  # ascending coefficients
    b: dict[int, np.ndarray]  # power -> matrix, ascending and non-negative

    def q_prime(self, v: complex) -> complex:
        dq = np.polynomial.polynomial.polyder(self.q)
        return complex(np.polynomial.polynomial.polyval(v, dq))

    def b_at(self, v: complex) -> np.ndarray:
        return sum(c * v ** j for j, c in self.b.items())

    def inner_roots(self) -> np.ndarray:
        q = np.trim_zeros(self.q, "b")
        roots = np.polynomial.polynomial.polyroots(q) if len(q) > 1 else np.array([])
        return roots[np.abs(roots) < 1.0]


def _residue_data(symbol: WalkSymbol, z: complex, samples: int = 32) -> _Residue:
    k = 2 * np.pi * np.arange(samples) / samples
    a = symbol.evaluate(k) - z * np.eye(symbol.dim)
    det = np.linalg.det(a)
    adj = det[:, None, None] * np.linalg.inv(a)
    det_c, adj_c = _laurent(det), _laurent(adj)
    lo = min(min(det_c), min(adj_c))
    hi = max(det_c) - lo
    q = np.zeros(hi + 1, dtype=complex)
    for j, c in det_c.items():
        q[j - lo] = c
    return _Residue(q, {j - lo: c for j, c in adj_c.items()})


@dataclass(frozen=True)
class BoundStateRecord:
    """Bound pair at total momentum ``p``.

    ``amplitudes[i]`` is the 4-component coin vector at relative position
    ``positions[i]`` (reduced coordinate ``j``).  The table is the
    projection of the collision-site singlet onto the bound state, so its
    squared norm equals ``p_cap``.
    """

    p: float
    g: float
    branch: int
    omega: float
    eta: float
    v1: float
    p_cap: float
    positions: np.ndarray
    amplitudes: np.ndarray

    @property
    def z(self) -> complex:
        return phase_of(self.omega)

    @property
    def cutoff(self) -> int:
        return int(self.positions[-1])

    def at(self, j: int) -> np.ndarray:
        return self.amplitudes[int(j) + self.cutoff]

    def support(self, threshold: float = 1e-14) -> np.ndarray:
        mask = np.linalg.norm(self.amplitudes, axis=1) > threshold
        return self.positions[mask]


def default_cutoff(v1: float, tail: float = TAIL_TOL) -> int:
    """Smallest ``X >= 1`` with ``|v1|^X <= tail``."""
    a = abs(v1)
    if a == 0.0:
        return 1
    if a >= 1.0:
        raise WalkError(f"|v1| = {a} does not decay")
    x = max(1, math.ceil(math.log(tail) / math.log(a)))
    if x > MAX_CUTOFF:
        raise WalkError(f"decay too slow: |v1| = {a} needs cutoff {x} > {MAX_CUTOFF}")
    return x


def unnormalized_amplitudes(p: float, g: float, branch, cutoff: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Eigenvector ``Psi`` with ``Psi_0`` equal to the singlet, by residues.

    For ``j < 0`` the only pole inside the unit disk is ``v1``, giving
    ``Psi_j = z v1^(|j|-1) B(v1) psi_G / q'(v1)`` with
    ``psi_G = (1 - gamma) singlet``; positive ``j`` follow from the
    antisymmetry ``Psi_j = -F Psi_{-j}``.  Returns positions, amplitudes
    and the pole found as a polynomial root.
    """
    pt = _allowed_point(p, g, branch)
    z, gamma = pt.z, phase_of(g)
    res = _residue_data(pair_symbol(p), z)
    roots = res.inner_roots()
    if roots.size != 1:
        raise WalkError(f"expected one pole inside the unit disk, found {roots.size}")
    v1 = complex(roots[0])
    psi_g = (1 - gamma) * SINGLET
    tail = z * (res.b_at(v1) @ psi_g) / res.q_prime(v1)
    flip = exchange_operator(2)
    positions = np.arange(-cutoff, cutoff + 1)
    amps = np.zeros((positions.size, 4), dtype=complex)
    amps[cutoff] = SINGLET
    powers = v1 ** np.arange(cutoff)
    left = powers[:, None] * tail[None, :]  # j = -1, -2, ...
    amps[cutoff - 1::-1] = left
    amps[cutoff + 1:] = -left @ flip.T
    return positions, amps, v1


def bound_state(p: float, g: float, branch, cutoff: int | None = None) -> BoundStateRecord:
    """Bound pair eigenvector on an allowed branch.

    Raises :class:`ConstraintError` on a forbidden branch.  The default
    cutoff is the smallest ``X`` with ``|v1|^X <= 1e-10``.  The pole found
    numerically is cross-checked against the closed form for ``v1``.
    """
    pt = _allowed_point(p, g, branch)
    e = eta(p, pt.omega, g)
    v1 = _pole(math.cos(e), math.sin(e), g)
    x = default_cutoff(v1) if cutoff is None else int(cutoff)
    if x < 1:
        raise WalkError("cutoff must be at least 1")
    positions, amps, root = unnormalized_amplitudes(p, g, branch, x)
    if abs(root - v1) > 1e-8:
        raise WalkError(f"pole mismatch: closed form {v1:.12g}, polynomial root {root:.12g}")
    pc = _capture(pt.omega, math.sin(e))
    return BoundStateRecord(float(p), float(g), pt.branch, pt.omega, e, v1, pc, positions, pc * amps)


def norm_squared(psi_gamma, z, symbol: WalkSymbol, grid_points: int = 256, tol: float = 1e-11,
                 max_points: int = 1 << 17) -> float:
    """``<psi_G| -z dR/dz |psi_G>``: squared norm of the eigenvector built
    from the collision-space source ``psi_G``.

    ``symbol`` is the relative walk at fixed total momentum.  ``dR/dz`` is
    the quadrature of the differentiated integrand; the grid is doubled
    until successive results agree to ``tol`` relative to ``|dR/dz|``.
    Slowly decaying eigenvectors (``z`` near a band edge) need fine grids.
    """
    psi = np.asarray(psi_gamma, dtype=complex)
    size = float(np.linalg.norm(psi))
    if size == 0.0:
        raise WalkError("psi_gamma must be non-zero")
    n = grid_points
    while True:
        r: DefectOperator = compute_R(z, symbol, n, subspace=psi / size, derivative=True)
        scale = max(1.0, abs(complex(r.derivative[0, 0])))
        if r.quadrature_residual <= tol * scale or 2 * n >= max_points:
            break
        n *= 2
    val = -complex(z) * size ** 2 * complex(r.derivative[0, 0])
    if not val.real > 0 or abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise WalkError(f"norm quadrature is not positive real: {val}")
    return float(val.real)


def norm_squared_closed_form(p: float, g: float, branch) -> float:
    """``1 + 2 sin omega / sin eta`` for the eigenvector with ``Psi_0 = singlet``."""
    return 1.0 / capture_closed_form(p, g, branch)


def capture_probability(phi, p: float, g: float, branch, method: str = "closed") -> float:
    """Probability that the collision-site state ``phi`` ends up in the bound
    pair at momentum ``p``: ``|<phi|singlet>|^2 / |Psi|^2``.

    ``method="quadrature"`` evaluates ``|Psi|^2`` with :func:`norm_squared`.
    """
    phi = np.asarray(phi, dtype=complex)
    pt = _allowed_point(p, g, branch)
    overlap = abs(np.vdot(phi, SINGLET)) ** 2
    if method == "closed":
        nrm = norm_squared_closed_form(p, g, branch)
    elif method == "quadrature":
        nrm = norm_squared((1 - phase_of(g)) * SINGLET, pt.z, pair_symbol(p))
    else:
        raise WalkError(f"unknown method {method!r}")
    return float(overlap / nrm)


def _capture_samples(g: float, grid_points: int):
    ps = -math.pi + 2 * math.pi * np.arange(grid_points) / grid_points
    weights, velocities = [], []
    for p in ps:
        for pt in dispersion(float(p), g):
            if pt.allowed:
                weights.append(_capture(pt.omega, math.sin(eta(float(p), pt.omega, g))))
                velocities.append(pt.group_velocity)
    return np.array(weights) / grid_points, np.array(velocities)


def integrated_capture(g: float, grid_points: int = 2048) -> float:
    """Momentum average of the singlet capture probability, summed over
    allowed branches (periodic trapezoid rule)."""
    if grid_points < 2048:
        raise WalkError("integrated_capture uses at least 2048 momenta")
    w, _ = _capture_samples(g, grid_points)
    return float(w.sum())


@dataclass(frozen=True)
class AsymptoticDistribution:
    """Histogram density of bound-pair velocities; ``mass`` is its integral."""

    g: float
    edges: np.ndarray
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def asymptotic_distribution(g: float, bins=201, grid_points: int = 2048) -> AsymptoticDistribution:
    """Long-time velocity distribution of the captured pair.

    The capture weight ``P_cap(p) dp / 2 pi`` of every allowed branch is
    pushed forward through ``v = d omega / dp`` and binned on ``[-1, 1]``.
    ``bins`` is a bin count or an array of edges.
    """
    w, v = _capture_samples(g, grid_points)
    edges = np.linspace(-1.0, 1.0, bins + 1) if np.isscalar(bins) else np.asarray(bins, dtype=float)
    hist, edges = np.histogram(v, bins=edges, weights=w)
    return AsymptoticDistribution(float(g), edges, hist / np.diff(edges))


def molecule_collision(g: float) -> UnitaryCoin:
    return singlet_collision_coin(phase_of(g))
