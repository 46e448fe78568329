import json

import numpy as np
import pytest

from torusred.fourier import (
    EpsJet,
    FourierMap,
    SmoothMap,
    TorusGrid,
    compose_map,
    d_omega,
    dealias_grid,
    jet_compose,
    matmul,
    multiply,
    weighted_norm,
)


def random_real_map(rng, m, p, K, n_harmonics=6):
    """Random real-valued map with a handful of harmonics inside radius K."""
    f = FourierMap.zero(m, (p,), K)
    for _ in range(n_harmonics):
        k = tuple(int(x) for x in rng.integers(-2, 3, size=m))
        if np.linalg.norm(k) > K:
            continue
        c = rng.normal(size=p) + 1j * rng.normal(size=p)
        f = f + FourierMap.harmonic(m, k, c, K=K)
    return f


# ----------------------------------------------------------------------
# d_omega


def test_d_omega_single_harmonic():
    f = FourierMap(2, 2.0, {(1, 0): np.asarray(1.0 + 0j)}, (), real=False)
    df = d_omega(f, [2.0, 1.0])
    assert df.coeffs[(1, 0)] == pytest.approx(2j)
    assert df.m == f.m and df.K == f.K


def test_d_omega_constant_is_zero():
    f = FourierMap.constant(3, [1.0, -2.0, 0.5])
    df = d_omega(f, [1.0, 2.0, 3.0])
    assert df.norm() == 0.0


def test_d_omega_matches_finite_difference():
    # Oracle: centered finite difference of t -> f(phi + t*omega).
    rng = np.random.default_rng(7)
    f = random_real_map(rng, 2, 3, K=4)
    omega = np.array([1.3, -0.7])
    df = d_omega(f, omega)
    h = 1e-5
    for phi in rng.uniform(0, 2 * np.pi, size=(20, 2)):
        fd = (f.eval(phi + h * omega) - f.eval(phi - h * omega)) / (2 * h)
        assert np.allclose(df.eval(phi), fd, atol=1e-6)


def test_d_omega_dimension_mismatch():
    f = FourierMap.constant(2, [1.0])
    with pytest.raises(ValueError):
        d_omega(f, [1.0, 2.0, 3.0])


def test_d_omega_is_a_derivation():
    # d(fg) = df*g + f*dg, checked within a radius that holds the product.
    rng = np.random.default_rng(3)
    f = random_real_map(rng, 2, 1, K=2).component(0)
    g = random_real_map(rng, 2, 1, K=2).component(0)
    omega = [0.9, 1.7]
    K = 8.0
    lhs = d_omega(multiply(f, g, K=K), omega)
    rhs = multiply(d_omega(f, omega), g, K=K) + multiply(f, d_omega(g, omega), K=K)
    assert (lhs - rhs).norm() <= 1e-10 * max(1.0, lhs.norm())


# ----------------------------------------------------------------------
# products


def test_multiply_product_to_sum():
    # cos(phi1) * cos(phi1) = 1/2 + cos(2*phi1)/2
    c = FourierMap.harmonic(1, (1,), np.asarray(0.5 + 0j))
    prod = multiply(c, c, K=2.0)
    assert prod.coeffs[(0,)] == pytest.approx(0.5)
    assert prod.coeffs[(2,)] == pytest.approx(0.25)
    assert prod.coeffs[(-2,)] == pytest.approx(0.25)


def test_multiply_identity():
    rng = np.random.default_rng(11)
    f = random_real_map(rng, 2, 2, K=3)
    one = FourierMap.constant(2, np.asarray(1.0 + 0j), real=True)
    g = multiply(one, f)
    assert (g - f).norm() <= 1e-15


def test_multiply_matches_grid_product():
    # Oracle: pointwise multiplication on a grid, then re-projection.
    rng = np.random.default_rng(5)
    f = random_real_map(rng, 2, 1, K=3).component(0)
    g = random_real_map(rng, 2, 2, K=3)
    K = 8.0
    prod = multiply(f, g, K=K)
    grid = dealias_grid(2, K)
    vals = grid.sample(f)[..., None] * grid.sample(g)
    expected = grid.project(vals, K, prune=0.0)
    diff = (prod - expected).norm()
    assert diff <= 1e-10
    assert prod.discarded_mass == 0.0


def test_multiply_reality_closure_is_exact():
    rng = np.random.default_rng(9)
    f = random_real_map(rng, 2, 1, K=3).component(0)
    g = random_real_map(rng, 2, 2, K=3)
    prod = multiply(f, g, K=4.0)
    for k, c in prod.coeffs.items():
        mk = tuple(-x for x in k)
        assert np.array_equal(prod.coeffs[mk], np.conj(c))


def test_matmul_matrix_vector():
    A = FourierMap.constant(1, np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex))
    x = FourierMap.harmonic(1, (1,), np.array([0.5, -0.5j]))
    y = matmul(A, x)
    expected = FourierMap.harmonic(1, (1,), np.array([-0.5j, -0.5]))
    assert (y - expected).norm() <= 1e-15


# ----------------------------------------------------------------------
# composition


def test_compose_complex_square():
    # F(z) = z^2 acting on e(phi) = exp(i phi) gives exp(2 i phi) exactly.
    e = FourierMap.harmonic(1, (1,), np.array([0.5, -0.5j]), K=2.0)

    def square(x):
        z = x[..., 0] + 1j * x[..., 1]
        w = z * z
        return np.stack([w.real, w.imag], axis=-1)

    out = compose_map(square, e)
    expected = FourierMap.harmonic(1, (2,), np.array([0.5, -0.5j]), K=2.0)
    assert (out - expected).norm() <= 1e-13


def test_compose_identity():
    rng = np.random.default_rng(13)
    e = random_real_map(rng, 2, 3, K=3)
    out = compose_map(lambda x: x, e)
    assert (out - e).norm() <= 1e-12 * max(1.0, e.norm())


def test_compose_stuart_landau_circle():
    # The cubic oscillator field on its circular orbit R*exp(i phi) returns
    # the tangent field i*omega*R*exp(i phi) with omega = beta - alpha*delta/gamma.
    alpha, beta, gamma, delta = 1.0, 1.0, -1.0, 1.0
    R = np.sqrt(-alpha / gamma)
    omega = beta - alpha * delta / gamma

    def field(x):
        z = x[..., 0] + 1j * x[..., 1]
        w = (alpha + 1j * beta) * z + (gamma + 1j * delta) * np.abs(z) ** 2 * z
        return np.stack([w.real, w.imag], axis=-1)

    e = FourierMap.harmonic(1, (1,), np.array([R / 2, -1j * R / 2]), K=4.0)
    out = compose_map(field, e)
    expected = FourierMap.harmonic(1, (1,), 1j * omega * np.array([R / 2, -1j * R / 2]), K=4.0)
    assert (out - expected).norm() <= 1e-12


def test_compose_rejects_nonfinite():
    e = FourierMap.harmonic(1, (1,), np.array([0.5, -0.5j]), K=2.0)

    def bad(x):
        out = np.array(x)
        out[..., 0] = np.where(np.abs(x[..., 0]) > 0.99, np.inf, x[..., 0])
        return out

    with pytest.raises(Exception):
        compose_map(bad, e)


# ----------------------------------------------------------------------
# jets


def linear_smooth_map(A):
    A = np.asarray(A, dtype=float)
    return SmoothMap(
        fun=lambda x: x @ A.T,
        derivs=(lambda x, v: v @ A.T,),
    )


def test_jet_compose_linear():
    # For linear F0, term 1 of F(e(eps)) is F0*e1 + F1(e0).
    rng = np.random.default_rng(2)
    A = rng.normal(size=(3, 3))
    F0 = linear_smooth_map(A)
    B = rng.normal(size=(3, 3))
    F1 = linear_smooth_map(B)
    e0 = random_real_map(rng, 2, 3, K=2)
    e1 = random_real_map(rng, 2, 3, K=2)
    jet = jet_compose([F0, F1], EpsJet([e0, e1]), order=1, K=5.0)
    grid = dealias_grid(2, 5.0)
    expected = grid.project(grid.sample(e1) @ A.T + grid.sample(e0) @ B.T, 5.0, prune=0.0)
    assert (jet.terms[1] - expected).norm() <= 1e-11


def test_jet_compose_quadratic_second_order_term():
    # With F0(x) quadratic and a jet stopping at order 1, the order-2 term
    # is exactly (1/2) F0''(e0)(e1, e1).
    def fun(x):
        return np.stack([x[..., 0] ** 2, x[..., 0] * x[..., 1]], axis=-1)

    def d1(x, v):
        return np.stack(
            [2 * x[..., 0] * v[..., 0], x[..., 0] * v[..., 1] + x[..., 1] * v[..., 0]],
            axis=-1,
        )

    def d2(x, u, v):
        return np.stack(
            [2 * u[..., 0] * v[..., 0], u[..., 0] * v[..., 1] + u[..., 1] * v[..., 0]],
            axis=-1,
        )

    F0 = SmoothMap(fun, derivs=(d1, d2))
    rng = np.random.default_rng(21)
    e0 = random_real_map(rng, 1, 2, K=1)
    e1 = random_real_map(rng, 1, 2, K=1)
    jet = jet_compose([F0], EpsJet([e0, e1]), order=2, K=4.0)
    grid = dealias_grid(1, 4.0)
    expected = grid.project(0.5 * d2(None, grid.sample(e1), grid.sample(e1)), 4.0, prune=0.0)
    assert (jet.terms[2] - expected).norm() <= 1e-12


def cubic_polynomial_map(rng, p):
    """Random map whose components are cubic polynomials of the input."""
    c1 = rng.uniform(-0.5, 0.5, size=(p, p))
    c2 = rng.uniform(-0.5, 0.5, size=(p, p, p))
    c3 = rng.uniform(-0.5, 0.5, size=(p, p, p, p))
    # Symmetrise so the derivatives below are honest symmetric forms.
    c2 = 0.5 * (c2 + c2.transpose(0, 2, 1))
    perms = [(0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 1, 3), (0, 2, 3, 1), (0, 3, 1, 2), (0, 3, 2, 1)]
    c3 = sum(c3.transpose(p) for p in perms) / 6.0

    def fun(x):
        return (
            np.einsum("ab,...b->...a", c1, x)
            + np.einsum("abc,...b,...c->...a", c2, x, x)
            + np.einsum("abcd,...b,...c,...d->...a", c3, x, x, x)
        )

    def d1(x, v):
        return (
            np.einsum("ab,...b->...a", c1, v)
            + 2 * np.einsum("abc,...b,...c->...a", c2, x, v)
            + 3 * np.einsum("abcd,...b,...c,...d->...a", c3, x, x, v)
        )

    def d2(x, u, v):
        return 2 * np.einsum("abc,...b,...c->...a", c2, u, v) + 6 * np.einsum(
            "abcd,...b,...c,...d->...a", c3, x, u, v
        )

    def d3(x, u, v, w):
        return 6 * np.einsum("abcd,...b,...c,...d->...a", c3, u, v, w)

    return SmoothMap(fun, derivs=(d1, d2, d3))


@pytest.mark.parametrize("trial", range(4))
def test_jet_compose_matches_eps_finite_difference(trial):
    # Oracle: j-th centered finite difference in eps of the grid-sampled
    # composition, divided by j factorial.
    rng = np.random.default_rng(100 + trial)
    F_list = [cubic_polynomial_map(rng, 2) for _ in range(3)]
    e0 = random_real_map(rng, 1, 2, K=2, n_harmonics=3).scale(0.4)
    e1 = random_real_map(rng, 1, 2, K=2, n_harmonics=3).scale(0.4)
    e2 = random_real_map(rng, 1, 2, K=2, n_harmonics=3).scale(0.4)
    jet = EpsJet([e0, e1, e2])
    K = 8.0
    out = jet_compose(F_list, jet, order=2, K=K)
    grid = dealias_grid(1, K)
    samples = [grid.sample(t) for t in jet.terms]

    def full_eval(eps):
        x = samples[0] + eps * samples[1] + eps ** 2 * samples[2]
        acc = np.zeros_like(x)
        for i, Fi in enumerate(F_list):
            acc = acc + eps ** i * Fi.fun(x)
        return acc

    h = 1e-4
    fd1 = (full_eval(h) - full_eval(-h)) / (2 * h)
    fd2 = (full_eval(h) - 2 * full_eval(0.0) + full_eval(-h)) / h ** 2 / 2.0
    got1 = grid.sample(out.terms[1])
    got2 = grid.sample(out.terms[2])
    assert np.max(np.abs(got1 - fd1)) <= 1e-5
    assert np.max(np.abs(got2 - fd2)) <= 1e-5


def test_jet_compose_order_zero_is_compose():
    rng = np.random.default_rng(17)
    F0 = cubic_polynomial_map(rng, 2)
    e0 = random_real_map(rng, 2, 2, K=2)
    jet = jet_compose([F0], EpsJet([e0]), order=0, K=6.0)
    direct = compose_map(F0, e0, K=6.0)
    assert (jet.terms[0] - direct).norm() <= 1e-12


def test_jet_compose_insufficient_derivatives():
    F0 = SmoothMap(lambda x: x ** 2, derivs=())
    e0 = FourierMap.harmonic(1, (1,), np.array([0.5 + 0j]))
    e1 = FourierMap.harmonic(1, (1,), np.array([0.25 + 0j]))
    with pytest.raises(Exception):
        jet_compose([F0], EpsJet([e0, e1]), order=1, K=3.0)


# ----------------------------------------------------------------------
# norms


def test_weighted_norm_zero_map():
    f = FourierMap.zero(2, (3,), 4.0)
    assert weighted_norm(f, lambda r: 1.0 + r) == 0.0


def test_weighted_norm_single_harmonic():
    f = FourierMap(2, 1.0, {(1, 0): np.asarray(1.0 + 0j)}, (), real=False)
    assert weighted_norm(f, lambda r: 2.0) == pytest.approx(2.0)


def test_weighted_norm_sobolev_weight_at_zero_order():
    rng = np.random.default_rng(23)
    f = random_real_map(rng, 2, 2, K=3)
    plain = f.norm()
    sob = weighted_norm(f, lambda r: (1.0 + r ** 2) ** 0.0)
    assert sob == pytest.approx(plain, rel=1e-14)


# ----------------------------------------------------------------------
# grids and serialisation


def test_grid_round_trip():
    rng = np.random.default_rng(29)
    f = random_real_map(rng, 3, 2, K=3)
    grid = TorusGrid(3, (9, 9, 9))
    vals = grid.sample(f)
    back = grid.project(vals, 3.0)
    vals2 = grid.sample(back)
    assert np.max(np.abs(vals - vals2)) <= 1e-12 * max(1.0, np.max(np.abs(vals)))


def test_reality_enforced_bitwise_on_construction():
    rng = np.random.default_rng(31)
    raw = {(1, 0): rng.normal(size=2) + 1j * rng.normal(size=2)}
    f = FourierMap(2, 2.0, raw, (2,), real=True)
    assert np.array_equal(f.coeffs[(-1, 0)], np.conj(f.coeffs[(1, 0)]))


def test_jacobian_single_harmonic():
    f = FourierMap(2, 2.0, {(1, -1): np.array([2.0 + 0j])}, (1,), real=False)
    J = f.jacobian()
    assert J.value_shape == (1, 2)
    assert J.coeffs[(1, -1)][0, 0] == pytest.approx(2j)
    assert J.coeffs[(1, -1)][0, 1] == pytest.approx(-2j)


def test_json_round_trip():
    rng = np.random.default_rng(37)
    f = random_real_map(rng, 2, 3, K=3)
    doc = json.loads(json.dumps(f.to_json_dict()))
    g = FourierMap.from_json_dict(doc)
    assert (f - g).norm() <= 1e-15
    ks = [tuple(entry["k"]) for entry in doc["coeffs"]]
    assert ks == sorted(ks)
