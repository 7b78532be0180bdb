"""Box eigenpairs, Robin roots, and the truncated modal covariance."""

import math

import numpy as np
import pytest

from maternbox.matern import derive_params, matern_cov
from maternbox.spectral import (
    BoundarySpec,
    BoxDomain,
    RobinEigen1D,
    TruncationSpec,
    cov_spectral,
    cov_spectral_gram,
    eigenpair,
    robin_eigen_1d,
    spectral_tail_bound,
)


def test_box_domain_construction():
    box = BoxDomain.cubic(0.2, 1.0, 2)
    assert box.lengths == (1.2, 1.2)
    assert box.length_max == 1.2
    rect = BoxDomain(delta=0.1, ell=1.0, lengths=(1.1, 2.5), d=2)
    assert rect.length_min == 1.1
    with pytest.raises(ValueError):
        BoxDomain(delta=0.2, ell=1.0, lengths=(1.0,), d=1)  # too short
    with pytest.raises(ValueError):
        BoxDomain(delta=-0.1, ell=1.0, lengths=(1.0,), d=1)
    with pytest.raises(ValueError):
        BoxDomain(delta=0.0, ell=1.0, lengths=(1.0, 1.0), d=1)


def test_boundary_spec_validation():
    assert BoundarySpec.dirichlet().kind == "dirichlet"
    assert BoundarySpec.robin(3.0).beta == 3.0
    with pytest.raises(ValueError):
        BoundarySpec("robin")
    with pytest.raises(ValueError):
        BoundarySpec("neumann", beta=1.0)
    with pytest.raises(ValueError):
        BoundarySpec("absorbing")


def test_truncation_rule():
    t = TruncationSpec.from_resolution(1e-3, 1.2)
    assert t.kmax == math.ceil(1.2 / 1e-3) + 1
    with pytest.raises(ValueError):
        TruncationSpec(-1)
    with pytest.raises(ValueError):
        TruncationSpec.from_resolution(0.0, 1.0)


def test_eigenpair_examples():
    box = BoxDomain.cubic(0.0, 1.0, 1)
    lam, w = eigenpair(BoundarySpec.dirichlet(), (1,), box, kappa=10.0)
    assert lam == pytest.approx(1.0 + (math.pi / 10.0) ** 2, rel=1e-15)
    assert lam == pytest.approx(1.0986960440108936, rel=1e-12)

    lam0, w0 = eigenpair(BoundarySpec.neumann(), (0,), box, kappa=10.0)
    assert lam0 == 1.0
    xs = np.linspace(0.0, 1.0, 7)
    assert np.allclose([w0([x]) for x in xs], 1.0)

    box2 = BoxDomain.cubic(0.0, 1.0, 2)
    lam2, _ = eigenpair(BoundarySpec.neumann(), (0, 0), box2, kappa=10.0)
    assert lam2 == 1.0
    with pytest.raises(ValueError):
        eigenpair(BoundarySpec.dirichlet(), (0,), box, 10.0)
    with pytest.raises(ValueError):
        eigenpair(BoundarySpec.robin(2.0), (0,), box, 10.0)


@pytest.mark.parametrize("bc,indices", [
    (BoundarySpec.dirichlet(), [(1,), (2,), (3,), (6,)]),
    (BoundarySpec.neumann(), [(0,), (1,), (2,), (5,)]),
    (BoundarySpec.periodic(), [(0,), (1,), (-1,), (2,), (-3,)]),
    (BoundarySpec.robin(7.0), [(1,), (2,), (3,), (4,)]),
])
def test_eigenfunctions_orthonormal_1d(bc, indices):
    box = BoxDomain.cubic(0.3, 1.0, 1)
    nodes, weights = np.polynomial.legendre.leggauss(260)
    L = box.lengths[0]
    xs = 0.5 * L * (nodes + 1.0)
    ws = 0.5 * L * weights
    fns = [eigenpair(bc, k, box, kappa=5.0)[1] for k in indices]
    vals = np.array([[float(f([x])) for x in xs] for f in fns])
    gram = (vals * ws[None, :]) @ vals.T
    assert np.max(np.abs(gram - np.eye(len(indices)))) < 1e-10


def test_eigenfunctions_orthonormal_2d():
    box = BoxDomain.cubic(0.1, 1.0, 2)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    L = box.lengths[0]
    xs = 0.5 * L * (nodes + 1.0)
    ws = 0.5 * L * weights
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    W2 = np.outer(ws, ws).ravel()
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    bc = BoundarySpec.neumann()
    ks = [(0, 0), (1, 0), (1, 2), (3, 3)]
    fns = [eigenpair(bc, k, box, kappa=5.0)[1] for k in ks]
    vals = np.array([f(pts) for f in fns])
    gram = (vals * W2[None, :]) @ vals.T
    assert np.max(np.abs(gram - np.eye(len(ks)))) < 1e-10


def test_robin_roots_bracketing_and_residuals():
    for c_over_l, ell in ((7.0, 1.2), (0.3, 0.8), (40.0, 2.0)):
        eig = robin_eigen_1d(c_over_l, ell, 60)
        n = np.arange(1, 61)
        assert np.all(eig.alphas > (n - 1) * math.pi)
        assert np.all(eig.alphas < n * math.pi)
        assert np.max(np.abs(eig.eigenvalue_residual())) <= 1e-12
        # no skipped eigenvalues: a fine sign scan finds exactly one root per bracket
        c = c_over_l * ell
        for i in (0, 1, 7, 42):
            a = np.linspace((n[i] - 1) * math.pi + 1e-9, n[i] * math.pi - 1e-9, 4001)
            f = (a * a - c * c) * np.sin(a) - 2 * c * a * np.cos(a)
            crossings = np.sum(np.sign(f[1:]) != np.sign(f[:-1]))
            assert crossings == 1


def test_robin_limits():
    # stiff limit: clamped endpoints
    eig = robin_eigen_1d(1e6, 1.0, 3)
    assert abs(eig.alphas[0] - math.pi) <= 1e-3
    # soft limit: first root collapses like sqrt(2 h ell)
    eig = robin_eigen_1d(1e-6, 1.0, 3)
    assert eig.alphas[0] ** 2 == pytest.approx(2e-6, rel=0.05)
    # bisection oracle for the same root
    c = 1e-6

    def f(a):
        return (a * a - c * c) * math.sin(a) - 2 * c * a * math.cos(a)

    lo, hi = 1e-9, math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.copysign(1.0, f(mid)) == math.copysign(1.0, f(lo)):
            lo = mid
        else:
            hi = mid
    assert eig.alphas[0] == pytest.approx(0.5 * (lo + hi), rel=1e-9)


def test_robin_norms_match_quadrature():
    eig = robin_eigen_1d(5.0, 1.3, 12)
    nodes, weights = np.polynomial.legendre.leggauss(400)
    xs = 0.5 * 1.3 * (nodes + 1.0)
    ws = 0.5 * 1.3 * weights
    vals = eig.evaluate(xs)
    quad_norms = (vals * vals) @ ws
    assert np.max(np.abs(quad_norms / eig.norms - 1.0)) < 1e-10
    # corrected reference-convention norm differs by the (w/h)^2 parameterization factor
    alt = (eig.alphas ** 2 + 2 * 5.0 * 1.3 + (5.0 * 1.3) ** 2) / (2 * 5.0 ** 2 * 1.3)
    assert np.allclose(eig.norms * (eig.omegas / 5.0) ** 2, alt, rtol=1e-12)


def test_robin_count_validation():
    with pytest.raises(ValueError):
        robin_eigen_1d(1.0, 1.0, 0)
    with pytest.raises(ValueError):
        robin_eigen_1d(-1.0, 1.0, 5)


def test_dirichlet_vanishes_on_boundary():
    p = derive_params(1.0, 0.1, 1.0, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    t = TruncationSpec(500)
    # sin(0) is exactly zero; sin(pi k) at the far face is float noise
    assert cov_spectral(p, BoundarySpec.dirichlet(), box, [0.0], [0.5], t) == 0.0
    far = cov_spectral(p, BoundarySpec.dirichlet(), box, [box.lengths[0]], [0.5], t)
    assert abs(far) <= 1e-12


def test_periodic_translation_invariance():
    p = derive_params(1.0, 0.1, 1.0, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    t = TruncationSpec(800)
    bc = BoundarySpec.periodic()
    shift = 0.3 * box.lengths[0]
    a = cov_spectral(p, bc, box, [0.1], [0.5], t)
    b = cov_spectral(p, bc, box, [0.1 + shift], [0.5 + shift], t)
    assert abs(a - b) <= 1e-12


def test_spectral_symmetry_and_determinism():
    p = derive_params(1.5, 0.2, 0.8, 2)
    box = BoxDomain.cubic(0.1, 1.0, 2)
    t = TruncationSpec(60)
    bc = BoundarySpec.neumann()
    a = cov_spectral(p, bc, box, [0.2, 0.3], [0.7, 0.9], t)
    b = cov_spectral(p, bc, box, [0.7, 0.9], [0.2, 0.3], t)
    assert a == b
    assert a == cov_spectral(p, bc, box, [0.2, 0.3], [0.7, 0.9], t)


def test_neumann_matches_folded_oracle():
    from maternbox.folded import cov_folded_neumann

    p = derive_params(1.0, 0.1, 1.0, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    spec = cov_spectral(p, BoundarySpec.neumann(), box, [0.1], [0.6],
                        TruncationSpec(20000))
    fold = cov_folded_neumann(p, box, [0.1], [0.6])
    assert abs(spec - fold.value) <= 1e-6


def test_gram_positive_semidefinite():
    p = derive_params(1.0, 0.1, 0.5, 2)
    box = BoxDomain.cubic(0.1, 1.0, 2)
    rng = np.random.default_rng(9)
    pts = rng.uniform(0.0, box.lengths[0], size=(18, 2))
    for bc in (BoundarySpec.dirichlet(), BoundarySpec.periodic(),
               BoundarySpec.robin(p.kappa)):
        gram, _ = cov_spectral_gram(p, bc, box, pts, TruncationSpec(40))
        assert np.min(np.linalg.eigvalsh(gram)) >= -1e-8 * p.sigma2


def test_tail_bound_certifies_truncation():
    p = derive_params(1.0, 0.1, 0.5, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    pts = np.linspace(0.1, 1.1, 5)[:, None]
    ref, _ = cov_spectral_gram(p, BoundarySpec.neumann(), box, pts,
                               TruncationSpec(400000))
    for kmax in (50, 200, 1000, 5000):
        gram, tail = cov_spectral_gram(p, BoundarySpec.neumann(), box, pts,
                                       TruncationSpec(kmax))
        actual = float(np.max(np.abs(gram - ref)))
        assert actual <= tail
        # the certificate should not be absurdly loose either
        assert tail <= 500.0 * max(actual, 1e-12)


def test_tail_bound_decreases_in_resolved_regime():
    # once the cap is past the spectral knee (b * kmax >= 1) the certificate
    # must shrink as more modes are kept
    p = derive_params(1.0, 0.1, 1.0, 2)
    box = BoxDomain.cubic(0.2, 1.0, 2)
    for bc in (BoundarySpec.neumann(), BoundarySpec.periodic(),
               BoundarySpec.robin(p.kappa)):
        tails = [spectral_tail_bound(p, bc, box, k) for k in (8, 32, 128, 512)]
        assert all(a > b for a, b in zip(tails, tails[1:]))
        assert all(t > 0 for t in tails)


def test_robin_exact_for_exponential_kernel():
    # with beta = kappa the modal route reproduces the kernel up to truncation
    p = derive_params(1.0, 0.1, 0.5, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    bc = BoundarySpec.robin(p.kappa)
    trunc = TruncationSpec(30000)
    pts = np.linspace(0.1, 1.1, 6)[:, None]
    gram, tail = cov_spectral_gram(p, bc, box, pts, trunc)
    for i in range(6):
        for j in range(6):
            err = abs(gram[i, j] - matern_cov(p, pts[i], pts[j]))
            assert err <= tail
    # off-diagonal entries converge far below the uniform tail
    assert abs(gram[0, 3] - matern_cov(p, pts[0], pts[3])) <= 1e-8


def test_points_outside_box_rejected():
    p = derive_params(1.0, 0.1, 1.0, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    with pytest.raises(ValueError):
        cov_spectral(p, BoundarySpec.neumann(), box, [-0.5], [0.5],
                     TruncationSpec(10))


def test_robin_interpolates_between_neumann_and_dirichlet():
    # the Robin coefficient sweeps the covariance from the Neumann limit
    # (beta -> 0) to the Dirichlet limit (beta -> inf)
    p = derive_params(1.0, 0.1, 1.0, 1)
    box = BoxDomain.cubic(0.2, 1.0, 1)
    pts = np.linspace(0.1, 1.1, 6)[:, None]
    tr = TruncationSpec(4000)
    g_n, _ = cov_spectral_gram(p, BoundarySpec.neumann(), box, pts, tr)
    g_d, _ = cov_spectral_gram(p, BoundarySpec.dirichlet(), box, pts, tr)
    g_soft, _ = cov_spectral_gram(p, BoundarySpec.robin(1e-6), box, pts, tr)
    g_stiff, _ = cov_spectral_gram(p, BoundarySpec.robin(1e7), box, pts, tr)
    assert np.max(np.abs(g_soft - g_n)) <= 1e-6
    assert np.max(np.abs(g_stiff - g_d)) <= 1e-5


def test_spectral_equals_folded_d3():
    from maternbox.folded import cov_folded_gram

    p = derive_params(1.0, 0.2, 0.5, 3)
    box = BoxDomain.cubic(0.2, 1.0, 3)
    ax = np.linspace(0.1, 1.1, 2)
    pts = np.stack([a.ravel() for a in np.meshgrid(ax, ax, ax, indexing="ij")],
                   axis=-1)
    spec, stail = cov_spectral_gram(p, BoundarySpec.neumann(), box, pts,
                                    TruncationSpec(60))
    fold, ftail = cov_folded_gram(p, box, "neumann", pts)
    assert np.max(np.abs(spec - fold)) <= stail + ftail


def test_spectral_equals_folded_rectangular_box():
    from maternbox.folded import cov_folded_gram

    p = derive_params(1.0, 0.1, 1.0, 2)
    rect = BoxDomain(delta=0.2, ell=1.0, lengths=(1.2, 1.8), d=2)
    ax = np.linspace(0.1, 1.1, 3)
    pts = np.stack([a.ravel() for a in np.meshgrid(ax, ax, indexing="ij")],
                   axis=-1)
    for kind in ("dirichlet", "neumann", "periodic"):
        spec, stail = cov_spectral_gram(p, BoundarySpec(kind), rect, pts,
                                        TruncationSpec(900))
        fold, ftail = cov_folded_gram(p, rect, kind, pts)
        assert np.max(np.abs(spec - fold)) <= 1e-6 + stail + ftail, kind
