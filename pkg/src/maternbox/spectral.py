"""Eigenpairs of (I - kappa^-2 Lap) on a box and the truncated covariance.

The covariance of the SPDE solution on the extended box admits the modal
expansion  C(x, y) = eta^2 * sum_k lambda_k^(-alpha) w_k(x) w_k(y)  over the
eigenpairs of the shifted Laplacian with the chosen boundary conditions.
This module builds those eigenpairs for Dirichlet, Neumann, periodic and
Robin conditions, sums the expansion with a certified truncation-tail bound,
and exposes the per-mode system used by the sampler.

Periodic complex exponentials are realized as real cosine/sine pairs with
matching normalization, so all arithmetic stays real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .matern import MaternParams
from .specfun import ConvergenceError

__all__ = [
    "BoundarySpec",
    "BoxDomain",
    "RobinEigen1D",
    "TruncationSpec",
    "cov_spectral",
    "cov_spectral_gram",
    "eigenpair",
    "mode_system",
    "robin_eigen_1d",
    "spectral_tail_bound",
]

# surface measure of the unit sphere in R^m, m = 1, 2, 3
_SPHERE_SURFACE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


@dataclass(frozen=True)
class BoxDomain:
    """Window geometry: domain of interest D inside the extended box.

    Coordinates are chosen so D starts at delta/2 on every axis; the box is
    the product of (0, L_i).  ``ell`` is the sup-norm diameter of D; in the
    cubic default every L_i equals delta + ell.
    """

    delta: float
    ell: float
    lengths: tuple
    d: int

    def __post_init__(self):
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise ValueError(f"ell must be > 0, got {self.ell!r}")
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d!r}")
        lengths = tuple(float(v) for v in self.lengths)
        if len(lengths) != self.d:
            raise ValueError("lengths must have one entry per axis")
        for L in lengths:
            if not (L > 0 and math.isfinite(L)):
                raise ValueError(f"box lengths must be positive, got {L!r}")
            if L + 1e-12 < self.delta + self.ell:
                raise ValueError(
                    f"axis length {L} cannot hold the domain plus margin "
                    f"{self.delta + self.ell}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "ell", float(self.ell))

    @classmethod
    def cubic(cls, delta: float, ell: float, d: int) -> "BoxDomain":
        return cls(delta=float(delta), ell=float(ell),
                   lengths=(float(delta) + float(ell),) * int(d), d=int(d))

    @property
    def length_max(self) -> float:
        return max(self.lengths)

    @property
    def length_min(self) -> float:
        return min(self.lengths)


_BC_KINDS = ("dirichlet", "neumann", "periodic", "robin")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary condition on the extended box; Robin carries a coefficient."""

    kind: str
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in _BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}, "
                             f"expected one of {_BC_KINDS}")
        if self.kind == "robin":
            if self.beta is None or not (self.beta > 0 and math.isfinite(self.beta)):
                raise ValueError("robin boundary requires a coefficient beta > 0")
        elif self.beta is not None:
            raise ValueError(f"beta is only meaningful for robin, got kind={self.kind!r}")

    @classmethod
    def dirichlet(cls) -> "BoundarySpec":
        return cls("dirichlet")

    @classmethod
    def neumann(cls) -> "BoundarySpec":
        return cls("neumann")

    @classmethod
    def periodic(cls) -> "BoundarySpec":
        return cls("periodic")

    @classmethod
    def robin(cls, beta: float) -> "BoundarySpec":
        return cls("robin", float(beta))


@dataclass(frozen=True)
class TruncationSpec:
    """Per-axis spectral index cap; the resolution rule is ceil(L/h) + 1."""

    kmax: int

    def __post_init__(self):
        if not isinstance(self.kmax, (int, np.integer)) or self.kmax < 0:
            raise ValueError(f"kmax must be a nonnegative integer, got {self.kmax!r}")
        object.__setattr__(self, "kmax", int(self.kmax))

    @classmethod
    def from_resolution(cls, h: float, L: float) -> "TruncationSpec":
        if not (h > 0 and L > 0):
            raise ValueError("resolution rule needs h > 0 and L > 0")
        return cls(kmax=int(math.ceil(L / h)) + 1)


@dataclass(frozen=True)
class RobinEigen1D:
    """First eigenpairs of -u'' on (0, ell_axis) with u'.n + h u = 0.

    ``alphas`` are the ascending dimensionless roots (frequency times
    interval length); root n lives strictly inside ((n-1) pi, n pi).
    ``norms`` are the squared L2 norms of the unnormalized eigenfunctions
    u_n(x) = cos(w_n x) + (h / w_n) sin(w_n x), w_n = alphas[n] / ell_axis.
    """

    h: float
    ell_axis: float
    alphas: np.ndarray
    norms: np.ndarray

    @property
    def omegas(self) -> np.ndarray:
        return self.alphas / self.ell_axis

    def eigenvalue_residual(self, alphas=None) -> np.ndarray:
        """Normalized residual of the frequency equation at the roots."""
        a = self.alphas if alphas is None else np.asarray(alphas, dtype=float)
        c = self.h * self.ell_axis
        return ((a * a - c * c) * np.sin(a) - 2.0 * c * a * np.cos(a)) / (a * a + c * c)

    def evaluate(self, x) -> np.ndarray:
        """Unnormalized eigenfunction values, shape (count, len(x))."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        w = self.omegas[:, None]
        return np.cos(w * xa[None, :]) + (self.h / w) * np.sin(w * xa[None, :])


def robin_eigen_1d(h: float, ell_axis: float, count: int) -> RobinEigen1D:
    """Solve the 1-d Robin eigenvalue problem for the first ``count`` modes.

    The frequency equation (a^2 - c^2) sin a = 2 c a cos a, c = h*ell, is
    derived from u'(0) = h u(0), u'(ell) = -h u(ell); each root is bisected
    inside its guaranteed bracket ((n-1) pi, n pi) and polished by one
    secant step.  Norms come from the closed form
    ||u_n||^2 = ell/2 (1 + (h/w)^2) + h/w^2, validated elsewhere against
    quadrature.
    """
    h, ell_axis = float(h), float(ell_axis)
    if not (h > 0 and ell_axis > 0):
        raise ValueError("robin_eigen_1d needs h > 0 and ell_axis > 0")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    c = h * ell_axis

    def resid(a):
        return ((a * a - c * c) * np.sin(a) - 2.0 * c * a * np.cos(a)) / (a * a + c * c)

    n = np.arange(1, count + 1, dtype=float)
    lo = (n - 1.0) * math.pi
    hi = n * math.pi
    lo[0] = min(1e-9, 0.1 * math.sqrt(2.0 * c / (1.0 + c)))
    flo = resid(lo)
    fhi = resid(hi)
    if np.any(np.sign(flo) == np.sign(fhi)):
        i = int(np.argmax(np.sign(flo) == np.sign(fhi)))
        raise ConvergenceError(
            f"no sign change in Robin bracket (({i} pi, {i + 1} pi)) "
            f"for h*ell = {c}")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        fm = resid(mid)
        move_lo = np.sign(fm) == np.sign(flo)
        lo = np.where(move_lo, mid, lo)
        flo = np.where(move_lo, fm, flo)
        hi = np.where(move_lo, hi, mid)
        fhi = np.where(move_lo, fhi, fm)
        if np.max(hi - lo) <= 1e-15 * np.min(hi):
            break
    denom = fhi - flo
    secant = np.where(denom != 0.0, lo - flo * (hi - lo) / np.where(denom == 0, 1.0, denom),
                      0.5 * (lo + hi))
    alphas = np.where((secant > lo) & (secant < hi), secant, 0.5 * (lo + hi))
    omegas = alphas / ell_axis
    norms = ell_axis / 2.0 * (1.0 + (h / omegas) ** 2) + h / omegas ** 2
    return RobinEigen1D(h=h, ell_axis=ell_axis, alphas=alphas, norms=norms)


@lru_cache(maxsize=64)
def _robin_cached(h: float, ell_axis: float, count: int) -> RobinEigen1D:
    return robin_eigen_1d(h, ell_axis, count)


def _axis_mu_values(bc: BoundarySpec, L: float, kmax: int, coords: np.ndarray):
    """Per-axis squared frequencies and orthonormal mode values at coords.

    Mode order along one axis: Dirichlet k = 1..kmax; Neumann k = 0..kmax;
    periodic [const, cos_1, sin_1, ..., cos_kmax, sin_kmax]; Robin
    n = 1..kmax+1.
    """
    x = np.asarray(coords, dtype=float)
    if bc.kind == "dirichlet":
        k = np.arange(1, kmax + 1, dtype=float)
        mu = (math.pi * k / L) ** 2
        vals = math.sqrt(2.0 / L) * np.sin(np.pi * np.outer(k, x) / L)
        return mu, vals
    if bc.kind == "neumann":
        k = np.arange(0, kmax + 1, dtype=float)
        mu = (math.pi * k / L) ** 2
        amp = np.where(k == 0, math.sqrt(1.0 / L), math.sqrt(2.0 / L))
        vals = amp[:, None] * np.cos(np.pi * np.outer(k, x) / L)
        return mu, vals
    if bc.kind == "periodic":
        k = np.arange(1, kmax + 1, dtype=float)
        mu_half = (2.0 * math.pi * k / L) ** 2
        mu = np.empty(2 * kmax + 1)
        mu[0] = 0.0
        mu[1::2] = mu_half
        mu[2::2] = mu_half
        vals = np.empty((2 * kmax + 1, x.size))
        vals[0] = math.sqrt(1.0 / L)
        ang = 2.0 * np.pi * np.outer(k, x) / L
        amp = math.sqrt(2.0 / L)
        vals[1::2] = amp * np.cos(ang)
        vals[2::2] = amp * np.sin(ang)
        return mu, vals
    if bc.kind == "robin":
        eig = _robin_cached(bc.beta, L, kmax + 1)
        mu = eig.omegas ** 2
        vals = eig.evaluate(x) / np.sqrt(eig.norms)[:, None]
        return mu, vals
    raise ValueError(f"unsupported boundary kind {bc.kind!r}")


def eigenpair(bc: BoundarySpec, k, box: BoxDomain, kappa: float):
    """Eigenvalue of (I - kappa^-2 Lap) and its orthonormal eigenfunction.

    ``k`` is a per-axis multi-index: positive integers for Dirichlet and
    Robin, nonnegative for Neumann.  For periodic conditions the complex
    exponential pair is realized as real modes: index j >= 0 selects the
    cosine mode of frequency j (j = 0 the constant), j < 0 the sine mode of
    frequency |j|.
    """
    kt = tuple(int(v) for v in np.atleast_1d(k))
    if len(kt) != box.d:
        raise ValueError(f"multi-index must have {box.d} entries, got {kt}")
    mu_total = 0.0
    axis_fns = []
    for ki, L in zip(kt, box.lengths):
        if bc.kind == "dirichlet":
            if ki < 1:
                raise ValueError(f"dirichlet index must be >= 1, got {ki}")
            mu_total += (math.pi * ki / L) ** 2
            axis_fns.append(lambda t, ki=ki, L=L:
                            math.sqrt(2.0 / L) * np.sin(np.pi * ki * t / L))
        elif bc.kind == "neumann":
            if ki < 0:
                raise ValueError(f"neumann index must be >= 0, got {ki}")
            amp = math.sqrt((1.0 if ki == 0 else 2.0) / L)
            mu_total += (math.pi * ki / L) ** 2
            axis_fns.append(lambda t, ki=ki, L=L, amp=amp:
                            amp * np.cos(np.pi * ki * t / L))
        elif bc.kind == "periodic":
            j = abs(ki)
            amp = math.sqrt((1.0 if j == 0 else 2.0) / L)
            mu_total += (2.0 * math.pi * j / L) ** 2
            if ki >= 0:
                axis_fns.append(lambda t, j=j, L=L, amp=amp:
                                amp * np.cos(2.0 * np.pi * j * t / L))
            else:
                axis_fns.append(lambda t, j=j, L=L, amp=amp:
                                amp * np.sin(2.0 * np.pi * j * t / L))
        elif bc.kind == "robin":
            if ki < 1:
                raise ValueError(f"robin index must be >= 1, got {ki}")
            eig = _robin_cached(bc.beta, L, ki)
            w = eig.omegas[ki - 1]
            nrm = math.sqrt(eig.norms[ki - 1])
            mu_total += w ** 2
            axis_fns.append(lambda t, w=w, h=bc.beta, nrm=nrm:
                            (np.cos(w * t) + (h / w) * np.sin(w * t)) / nrm)
        else:
            raise ValueError(f"unsupported boundary kind {bc.kind!r}")
    lam = 1.0 + mu_total / float(kappa) ** 2

    def w_fn(point):
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape[-1] != box.d and box.d == 1:
            p = p.reshape(-1, 1)
        p = np.atleast_2d(p)
        out = np.ones(p.shape[0])
        for i, fn in enumerate(axis_fns):
            out = out * fn(p[:, i])
        return out if out.size > 1 else float(out[0])

    return lam, w_fn


def spectral_tail_bound(params: MaternParams, bc: BoundarySpec, box: BoxDomain,
                        kmax: int) -> float:
    """Certified bound on the modal mass discarded beyond the index cap.

    Uses |w_k(x) w_k(y)| <= prod_i (2/L_i) and an integral majorant of the
    lattice sum of lambda^(-alpha) over the discarded indices; the majorant
    is valid because the summand decreases radially and each discarded index
    owns a unit cell no closer to the origin than radius kmax.
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    d = box.d
    amp = 1.0
    for L in box.lengths:
        amp *= 2.0 / L
    freq = 2.0 * math.pi if bc.kind == "periodic" else math.pi
    mult = 2.0 ** d if bc.kind == "periodic" else 1.0
    b = freq / (params.kappa * box.length_max)
    alpha = params.alpha
    K = max(kmax, 1)
    total = 0.0
    for j in range(1, d + 1):
        total += (math.comb(d, j) * _SPHERE_SURFACE[j] / 2.0 ** j
                  * (1.0 + (b * K) ** 2) ** (-alpha) * K ** j / (2.0 * alpha - j))
    if kmax == 0:
        # the cells of the first shell are not covered by the radial
        # integral from K = 1; add them explicitly (lambda >= 1 + b^2)
        total += (3 ** d - 1) * (1.0 + b * b) ** (-alpha)
    return params.eta2 * amp * mult * total


def _check_points(points, box: BoxDomain) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if box.d == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != box.d:
        raise ValueError(f"points must have shape (n, {box.d}), got {pts.shape}")
    for i, L in enumerate(box.lengths):
        if np.any(pts[:, i] < -1e-12) or np.any(pts[:, i] > L + 1e-12):
            raise ValueError(f"points must lie in the closed box, axis {i} "
                             f"range [0, {L}]")
    return pts


def cov_spectral_gram(params: MaternParams, bc: BoundarySpec, box: BoxDomain,
                      points, trunc: TruncationSpec):
    """Truncated spectral covariance between all point pairs.

    Returns (gram, tail_bound): the symmetric n x n matrix of covariance
    values and the certified bound on what the index cap discarded (a single
    number valid uniformly over the box).
    """
    pts = _check_points(points, box)
    n = pts.shape[0]
    kmax = trunc.kmax
    kappa2 = params.kappa ** 2
    alpha = params.alpha
    axes = [_axis_mu_values(bc, box.lengths[i], kmax, pts[:, i])
            for i in range(box.d)]
    if box.d == 1:
        mu, V = axes[0]
        w = params.eta2 * (1.0 + mu / kappa2) ** (-alpha)
        gram = V.T @ (w[:, None] * V)
    elif box.d == 2:
        mu1, V1 = axes[0]
        mu2, V2 = axes[1]
        lam = 1.0 + (mu1[:, None] + mu2[None, :]) / kappa2
        W = params.eta2 * lam ** (-alpha)
        iu = np.triu_indices(n)
        G1 = V1[:, iu[0]] * V1[:, iu[1]]
        G2 = V2[:, iu[0]] * V2[:, iu[1]]
        vals = np.einsum("ip,ip->p", G1, W @ G2)
        gram = np.empty((n, n))
        gram[iu] = vals
        gram.T[iu] = vals
    else:
        mu1, V1 = axes[0]
        mu2, V2 = axes[1]
        mu3, V3 = axes[2]
        iu = np.triu_indices(n)
        G1 = V1[:, iu[0]] * V1[:, iu[1]]
        G2 = V2[:, iu[0]] * V2[:, iu[1]]
        G3 = V3[:, iu[0]] * V3[:, iu[1]]
        vals = np.zeros(iu[0].size)
        base = mu1[:, None] + mu2[None, :]
        for c in range(mu3.size):
            W = params.eta2 * (1.0 + (base + mu3[c]) / kappa2) ** (-alpha)
            vals += np.einsum("ip,ip->p", G1, W @ G2) * G3[c]
        gram = np.empty((n, n))
        gram[iu] = vals
        gram.T[iu] = vals
    tail = spectral_tail_bound(params, bc, box, kmax)
    return gram, tail


def cov_spectral(params: MaternParams, bc: BoundarySpec, box: BoxDomain,
                 x, y, trunc: TruncationSpec) -> float:
    """Truncated spectral covariance between two points of the closed box."""
    pts = np.vstack([np.atleast_1d(np.asarray(x, dtype=float)),
                     np.atleast_1d(np.asarray(y, dtype=float))])
    gram, _ = cov_spectral_gram(params, bc, box, pts, trunc)
    return float(gram[0, 1])


def mode_system(params: MaternParams, bc: BoundarySpec, box: BoxDomain,
                points, trunc: TruncationSpec):
    """Explicit tensor-product mode system at the given points.

    Returns (lam, W): eigenvalues lam (m,) of (I - kappa^-2 Lap) and the
    matrix W (m, n) of orthonormal eigenfunction values, modes enumerated
    lexicographically with axis 0 slowest (per-axis order as documented in
    the axis builder).  Intended for sampling; memory grows like the product
    of per-axis mode counts.
    """
    pts = _check_points(points, box)
    kmax = trunc.kmax
    axes = [_axis_mu_values(bc, box.lengths[i], kmax, pts[:, i])
            for i in range(box.d)]
    sizes = [a[0].size for a in axes]
    m_total = int(np.prod(sizes))
    if m_total * pts.shape[0] > 2 * 10 ** 8:
        raise ValueError(f"mode system too large: {m_total} modes at "
                         f"{pts.shape[0]} points")
    mu_total = np.zeros(1)
    W = np.ones((1, pts.shape[0]))
    for mu, V in axes:
        mu_total = (mu_total[:, None] + mu[None, :]).reshape(-1)
        W = (W[:, None, :] * V[None, :, :]).reshape(-1, pts.shape[0])
    lam = 1.0 + mu_total / params.kappa ** 2
    return lam, W
