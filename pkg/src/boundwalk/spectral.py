"""Point defects in translation-invariant walks.

For a walk symbol ``W(k)`` and a spectral parameter ``z`` on the unit circle
outside the bands, the defect operator is the Brillouin-zone average

    R(z) = mean_k (W(k) - z)^{-1} W(k),

restricted to the defect subspace.  A collision coin ``G`` produces the
eigenvalue ``z`` exactly when ``G psi = (1 - R(z)^{-1}) psi``.

Quadrature is the uniform trapezoid rule on the periodic zone, which is
spectrally accurate for integrands analytic in ``k``; the error is estimated
by comparing ``n`` against ``2n`` points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EigenConditionError, SingularDefectError, SpectralProximityError, WalkError
from .walk import UnitaryCoin, WalkSymbol, relative_symbol

PROXIMITY = 1e-6
MAX_CONDITION = 1e12
LEMMA_TOL = 1e-9


@dataclass(frozen=True)
class DefectOperator:
    z: complex
    matrix: np.ndarray
    quadrature_residual: float
    grid_points: int
    derivative: np.ndarray | None = None
    subspace: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_z(z) -> complex:
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-12:
        raise WalkError(f"z must lie on the unit circle, |z| = {abs(z)}")
    return z


def _averages(symbol: WalkSymbol, z: complex, n: int, want_derivative: bool, min_distance: float):
    w = symbol.evaluate(symbol.grid(n))
    dist = np.min(np.abs(np.linalg.eigvals(w) - z))
    if dist < min_distance:
        raise SpectralProximityError(
            f"z = {z:.6g} is within {dist:.2e} of the band spectrum (limit {min_distance:.0e})")
    a = w - z * np.eye(symbol.dim)
    integrand = np.linalg.solve(a, w)
    r = integrand.mean(axis=0)
    dr = np.linalg.solve(a, integrand).mean(axis=0) if want_derivative else None
    return r, dr


def _project(m, basis):
    return m if basis is None or m is None else basis.conj().T @ m @ basis


def compute_R(z, symbol: WalkSymbol, grid_points: int = 256, subspace=None,
              derivative: bool = False, min_distance: float = PROXIMITY) -> DefectOperator:
    """Defect operator ``R(z)`` by trapezoidal quadrature.

    Parameters
    ----------
    z : complex
        Point on the unit circle, away from the bands of ``symbol``.
    symbol : WalkSymbol
        The free walk (any lattice dimension); ``grid_points`` is per axis.
    subspace : array, optional
        Isometry whose columns span the defect subspace; ``R`` is returned as
        ``V^dagger R V``.  Defaults to the full coin space at the origin.
    derivative : bool
        Also return ``dR/dz = mean (W - z)^{-2} W`` (differentiated integrand).

    The returned operator uses ``2 * grid_points``; ``quadrature_residual``
    is the max-entry difference to the ``grid_points`` result.
    """
    z = _check_z(z)
    basis = None if subspace is None else np.asarray(subspace, dtype=complex)
    if basis is not None and basis.ndim == 1:
        basis = basis[:, None]
    coarse, dcoarse = _averages(symbol, z, grid_points, derivative, min_distance)
    fine, dfine = _averages(symbol, z, 2 * grid_points, derivative, min_distance)
    coarse, fine = _project(coarse, basis), _project(fine, basis)
    residual = float(np.max(np.abs(fine - coarse)))
    if derivative:
        dcoarse, dfine = _project(dcoarse, basis), _project(dfine, basis)
        residual = max(residual, float(np.max(np.abs(dfine - dcoarse))))
    return DefectOperator(z, fine, residual, 2 * grid_points, dfine, basis)


def refined_R(z, symbol: WalkSymbol, tol: float = 1e-12, start: int = 64,
              max_points: int = 1 << 15, **kwargs) -> DefectOperator:
    """Double the grid until the quadrature residual drops below ``tol``."""
    n = start
    while True:
        r = compute_R(z, symbol, n, **kwargs)
        if r.quadrature_residual <= tol or 2 * n >= max_points:
            return r
        n *= 2


def _condition(m) -> float:
    return float(np.linalg.cond(m))


def defect_coin_for(z, r: DefectOperator) -> UnitaryCoin:
    """Collision coin ``1 - R(z)^{-1}`` that makes ``z`` an eigenvalue."""
    cond = _condition(r.matrix)
    if not cond <= MAX_CONDITION:
        raise SingularDefectError(f"R(z) is numerically singular (condition number {cond:.3e})", cond)
    m = np.eye(r.dim) - np.linalg.solve(r.matrix, np.eye(r.dim))
    return UnitaryCoin(m, tol=LEMMA_TOL)


def embed_coin(coin: UnitaryCoin, basis) -> UnitaryCoin:
    """Extend a coin on a subspace to the full space by the identity."""
    v = np.asarray(basis, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    full = np.eye(v.shape[0], dtype=complex) + v @ (coin.matrix - np.eye(coin.dim)) @ v.conj().T
    return UnitaryCoin(full, tol=max(coin.tol, 1e-12))


@dataclass(frozen=True)
class LemmaReport:
    hermitian_residual: float
    unitarity_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.hermitian_residual <= self.threshold and self.unitarity_residual <= self.threshold


def check_unitarity_lemma(r) -> LemmaReport:
    """Residuals of ``R + R^dagger = 1`` and of the unitarity of ``1 - R^{-1}``.

    Accepts a :class:`DefectOperator` or a bare square matrix.
    """
    if isinstance(r, DefectOperator):
        m, qres = r.matrix, r.quadrature_residual
    else:
        m, qres = np.asarray(r, dtype=complex), 0.0
    eye = np.eye(m.shape[0])
    herm = float(np.max(np.abs(m + m.conj().T - eye)))
    u = eye - np.linalg.inv(m)
    unit = float(np.max(np.abs(u.conj().T @ u - eye)))
    return LemmaReport(herm, unit, max(LEMMA_TOL, qres))


def defect_ring_matrix(symbol: WalkSymbol, collision, ring_size: int, sparse: bool = False):
    """The walk ``symbol`` on the torus ``Z_M^s`` with ``collision`` at the origin.

    Basis index is ``site * d + coin`` with sites flattened row-major and
    the origin at index 0.  The collision coin is applied before the walk.
    """
    m, s, d = int(ring_size), symbol.lattice_dim, symbol.dim
    coin = collision.matrix if isinstance(collision, UnitaryCoin) else np.asarray(collision)
    if coin.shape != (d, d):
        raise WalkError(f"defect coin must be {d}x{d}")
    nsites = m ** s
    coords = np.stack(np.unravel_index(np.arange(nsites), (m,) * s), axis=-1)
    walk = sp.csr_matrix((nsites * d,) * 2, dtype=complex)
    for n, c in symbol.terms.items():
        target = np.ravel_multi_index(tuple(((coords + np.array(n)) % m).T), (m,) * s)
        perm = sp.csr_matrix((np.ones(nsites), (target, np.arange(nsites))), shape=(nsites,) * 2)
        walk = walk + sp.kron(perm, sp.csr_matrix(c))
    defect = sp.identity(nsites * d, dtype=complex, format="lil")
    defect[:d, :d] = coin
    out = (walk @ defect.tocsr()).tocsr()
    return out if sparse else out.toarray()


def circular_distance(a, b):
    """Elementwise distance between angles on the circle."""
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


def distance_to_set(phases, reference) -> np.ndarray:
    """Circular distance from each phase to the nearest reference phase."""
    ref = np.sort(np.mod(np.asarray(reference, dtype=float).ravel(), 2 * np.pi))
    x = np.mod(np.atleast_1d(np.asarray(phases, dtype=float)), 2 * np.pi)
    i = np.searchsorted(ref, x)
    lo = ref[(i - 1) % ref.size]
    hi = ref[i % ref.size]
    return np.minimum(circular_distance(x, lo), circular_distance(x, hi))


@dataclass(frozen=True)
class SpectrumRow:
    p: float
    phases: np.ndarray
    in_gap: np.ndarray

    @property
    def gap_phases(self) -> np.ndarray:
        return self.phases[self.in_gap]


@dataclass(frozen=True)
class SpectrumTable:
    ring_size: int
    collision: np.ndarray
    tolerance: float
    rows: list[SpectrumRow]

    def gap_count(self) -> int:
        return int(sum(r.in_gap.sum() for r in self.rows))

    def row_at(self, p: float, atol: float = 1e-12) -> SpectrumRow:
        for r in self.rows:
            if abs(np.angle(np.exp(1j * (r.p - p)))) <= atol:
                return r
        raise KeyError(p)


def ring_momenta(m: int) -> np.ndarray:
    """``2 pi n / M`` for ``n`` chosen so the values lie in ``(-pi, pi]``."""
    n = np.arange(-((m - 1) // 2), m // 2 + 1)
    return 2 * np.pi * n / m


def gap_tolerance(m: int) -> float:
    return 10.0 / m + 1e-6


def ring_spectrum(m: int, w: WalkSymbol, collision: UnitaryCoin, band_points: int | None = None) -> SpectrumTable:
    """Eigenphases of the pair walk on a ring of ``M`` sites, per total momentum.

    For each ``p = 2 pi n / M`` the ``M d^2``-dimensional block acting on the
    relative coordinate is diagonalized.  An eigenphase is classified as
    in-gap when its circular distance to the free bands at that ``p``
    (sampled on ``band_points`` relative momenta) exceeds ``10/M + 1e-6``.
    """
    if m < 4:
        raise WalkError("ring_spectrum needs at least 4 sites")
    band_points = band_points or max(2048, 32 * m)
    tol = gap_tolerance(m)
    rows = []
    for p in ring_momenta(m):
        rel = relative_symbol(w, [p], gauge="ring")
        block = defect_ring_matrix(rel, collision, m)
        phases = np.sort(np.angle(np.linalg.eigvals(block)))
        bands = rel.eigenphases(band_points)
        rows.append(SpectrumRow(float(p), phases, distance_to_set(phases, bands) > tol))
    return SpectrumTable(m, np.asarray(collision.matrix), tol, rows)


@dataclass(frozen=True)
class GapArc:
    """Open arc from ``start`` counter-clockwise to ``start + width``."""

    start: float
    width: float

    @property
    def end(self) -> float:
        return float(np.angle(np.exp(1j * (self.start + self.width))))

    def contains(self, phase: float) -> bool:
        return 0.0 < np.mod(phase - self.start, 2 * np.pi) < self.width

    @property
    def midpoint(self) -> float:
        return float(np.angle(np.exp(1j * (self.start + self.width / 2))))


def band_gap(symbol: WalkSymbol, grid_points: int = 512) -> list[GapArc]:
    """Arcs of the unit circle certainly free of spectrum of ``symbol``.

    Eigenphases are sampled on a uniform grid.  Between grid points the
    matrix moves by at most ``delta`` in operator norm (largest change
    between grid neighbours along any axis), so by Bauer-Fike every
    eigenvalue stays within ``s * delta`` of a sampled one.  Sample-free arcs
    are shrunk by that margin on each side; arcs thinner than the grid
    resolution are therefore not reported.
    """
    s = symbol.lattice_dim
    pts = symbol.grid(grid_points)
    w = symbol.evaluate(pts).reshape((grid_points,) * s + (symbol.dim,) * 2)
    delta = 0.0
    for ax in range(s):
        diff = np.roll(w, -1, axis=ax) - w
        delta = max(delta, float(np.max(np.linalg.norm(diff.reshape(-1, symbol.dim, symbol.dim), ord=2, axis=(1, 2)))))
    margin = 2 * np.arcsin(min(1.0, s * delta / 2))
    phases = np.sort(np.mod(np.angle(np.linalg.eigvals(w.reshape(-1, symbol.dim, symbol.dim))).ravel(), 2 * np.pi))
    gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * np.pi]]))
    arcs = []
    for start, width in zip(phases, gaps):
        if width > 2 * margin:
            arcs.append(GapArc(float(np.angle(np.exp(1j * (start + margin)))), float(width - 2 * margin)))
    return arcs


@dataclass(frozen=True)
class DefectEigenvector:
    z: complex
    positions: np.ndarray
    amplitudes: np.ndarray  # shape (len(positions), d)

    def at(self, x: int) -> np.ndarray:
        return self.amplitudes[int(x) - int(self.positions[0])]


def eigencondition_residual(psi, z, symbol: WalkSymbol, collision: UnitaryCoin, grid_points: int = 2048) -> float:
    psi = np.asarray(psi, dtype=complex)
    r = compute_R(z, symbol, grid_points)
    lhs = r.matrix @ (np.eye(symbol.dim) - collision.matrix) @ psi
    return float(np.linalg.norm(lhs - psi) / np.linalg.norm(psi))


def eigenvector_from_defect(psi, z, symbol: WalkSymbol, collision: UnitaryCoin, cutoff: int,
                            grid_points: int = 4096) -> DefectEigenvector:
    """Position amplitudes of ``Psi(k) = (W(k) - z)^{-1} W(k) (1 - G) psi``.

    The inverse Fourier transform is evaluated with an FFT on ``grid_points``
    momenta; ``psi`` must satisfy the eigenvalue condition to ``1e-8``.
    """
    if symbol.lattice_dim != 1:
        raise WalkError("eigenvector_from_defect handles one-dimensional walks")
    z = _check_z(z)
    psi = np.asarray(psi, dtype=complex)
    res = eigencondition_residual(psi, z, symbol, collision, max(256, grid_points // 2))
    if res > 1e-8:
        raise EigenConditionError(f"psi violates R(z)(1 - G) psi = psi (relative residual {res:.2e})")
    n = max(grid_points, 4 * cutoff + 4)
    k = 2 * np.pi * np.arange(n) / n
    w = symbol.evaluate(k)
    src = w @ ((np.eye(symbol.dim) - collision.matrix) @ psi)
    psik = np.linalg.solve(w - z * np.eye(symbol.dim), src[..., None])[..., 0]
    coeff = np.fft.fft(psik, axis=0) / n
    xs = np.arange(-cutoff, cutoff + 1)
    return DefectEigenvector(z, xs, coeff[xs % n])


def defect_walk_residual(symbol: WalkSymbol, collision: UnitaryCoin, z, positions, amplitudes,
                         ring_size: int | None = None) -> float:
    """``|W_G Psi - z Psi| / |Psi|`` with ``Psi`` placed on a ring.

    Position ``x`` goes to ring index ``x mod M``; the default ring is just
    large enough to hold the amplitudes, so the residual includes the
    truncation error at the cutoff.
    """
    positions = np.asarray(positions, dtype=int)
    amps = np.asarray(amplitudes, dtype=complex)
    m = ring_size or int(positions.max() - positions.min() + 1)
    d = symbol.dim
    vec = np.zeros((m, d), dtype=complex)
    np.add.at(vec, positions % m, amps)
    mat = defect_ring_matrix(symbol, collision, m, sparse=True)
    v = vec.ravel()
    return float(np.linalg.norm(mat @ v - complex(z) * v) / np.linalg.norm(v))
