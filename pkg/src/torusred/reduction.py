"""Iterative high-order phase reduction.

Order by order, the conjugacy defect of the current expansion is
computed as a forcing term, split by the bundle projection into a
tangential and a normal part, and removed by solving the two
homological equations: divisors ``i <omega, k>`` on the tangential
side (with resonant terms passed to the reduced phase field, which
puts it in normal form), and the matrices ``i <omega, k> - L`` on the
normal side.  The corrections assemble into the next term of the torus
embedding.
"""

from __future__ import annotations

import math

import numpy as np

from .bundle import validate_bundle
from .errors import (
    ConfigError,
    HyperbolicityError,
    NumericalError,
    SmallDivisorError,
    TransversalityError,
    TruncationSaturationError,
)
from .fourier import EpsJet, FourierMap, d_omega, dealias_grid, jet_compose, matmul

__all__ = [
    "HomologicalRHS",
    "ReductionResult",
    "order_forcing",
    "split_forcing",
    "solve_tangential",
    "solve_normal",
    "phase_reduce",
    "phase_difference_field",
    "chain_slow_law",
    "conjugacy_residual",
]


class HomologicalRHS:
    """Tangential and normal right-hand sides of one reduction order."""

    def __init__(self, U, V):
        self.U = U
        self.V = V


class ReductionResult:
    """Expansion terms of the embedding and the reduced phase field.

    Lists are indexed by order minus one: ``phase_terms[0]`` is the
    first-order part of the reduced field.  ``embedding_terms[j-1]``
    decomposes exactly as ``e0' tangent_terms[j-1] + N fibre_terms[j-1]``.
    """

    def __init__(self, order, bundle, phase_terms, embedding_terms, tangent_terms,
                 fibre_terms, forcing_terms, K, K_nf, tol_res, residuals,
                 normal_form=True):
        self.order = int(order)
        self.bundle = bundle
        self.phase_terms = list(phase_terms)
        self.embedding_terms = list(embedding_terms)
        self.tangent_terms = list(tangent_terms)
        self.fibre_terms = list(fibre_terms)
        self.forcing_terms = list(forcing_terms)
        self.K = float(K)
        self.K_nf = float(K_nf)
        self.tol_res = float(tol_res)
        self.residuals = list(residuals)
        self.normal_form = bool(normal_form)

    @property
    def omega(self):
        return self.bundle.omega

    def embedding_jet(self):
        return EpsJet([self.bundle.e0] + self.embedding_terms)

    def phase_jet(self):
        const = FourierMap.constant(self.bundle.m, self.omega.astype(complex))
        return EpsJet([const] + self.phase_terms)

    def to_json_dict(self):
        return {
            "order": self.order,
            "K": self.K,
            "K_nf": self.K_nf,
            "tol_res": self.tol_res,
            "normal_form": self.normal_form,
            "omega": self.omega.tolist(),
            "phase_terms": [f.to_json_dict() for f in self.phase_terms],
            "embedding_terms": [e.to_json_dict() for e in self.embedding_terms],
            "tangent_terms": [g.to_json_dict() for g in self.tangent_terms],
            "fibre_terms": [h.to_json_dict() for h in self.fibre_terms],
            "residuals": self.residuals,
        }


def _apply_matrix(mat, f):
    """Constant matrix acting on a vector-valued map, coefficient-wise."""
    mat = np.asarray(mat)
    out = {k: mat @ c for k, c in f.coeffs.items()}
    return FourierMap(f.m, f.K, out, (mat.shape[0],), real=f.real)


def order_forcing(j, model, e_terms, f_terms, K, grid=None):
    """Inhomogeneous forcing of reduction order ``j``.

    Collects the order-j Taylor coefficient of the field composed with
    the expansion so far, minus the order-j part of ``e' f`` formed
    from the known lower-order terms.  Order 1 is simply the coupling
    field evaluated on the unperturbed torus.
    """
    if len(e_terms) != j or len(f_terms) != j - 1:
        raise ValueError(f"need exactly the terms below order {j}")
    if grid is None:
        grid = dealias_grid(e_terms[0].m, K)
    jet = EpsJet(list(e_terms))
    Fe = jet_compose(model.F_list, jet, order=j, K=K, grid=grid)
    G = Fe.terms[j]
    for r in range(1, j):
        G = G - matmul(e_terms[r].jacobian(), f_terms[j - r - 1], K=K)
    return G


def split_forcing(G, bundle, grid=None, cond_threshold=1e10, recon_tol=1e-9):
    """Split a forcing term along the tangent and fibre directions.

    Pointwise on a grid, ``U = (e0')^+ pi G`` and ``V = N^+ (1 - pi) G``
    with Moore-Penrose pseudo-inverses of the injective frames; the
    reconstruction ``e0' U + N V = G`` is verified before returning.
    """
    if grid is None:
        grid = dealias_grid(G.m, G.K)
    E = grid.sample(bundle.e0.jacobian())
    Nv = grid.sample(bundle.N)
    Pv = grid.sample(bundle.pi)
    Gv = grid.sample(G)

    for name, mat in (("e0'", E), ("N", Nv)):
        conds = np.linalg.cond(mat.reshape((-1,) + mat.shape[-2:]))
        worst = float(np.max(conds))
        if not np.isfinite(worst) or worst > cond_threshold:
            raise TransversalityError(f"pseudo-inverse of {name} is ill-conditioned", worst)

    def pinv_apply(A, y):
        gram = np.swapaxes(A, -1, -2) @ A
        return np.linalg.solve(gram, np.swapaxes(A, -1, -2) @ y[..., None])[..., 0]

    PG = (Pv @ Gv[..., None])[..., 0]
    U_vals = pinv_apply(E, PG)
    V_vals = pinv_apply(Nv, Gv - PG)

    recon = (E @ U_vals[..., None])[..., 0] + (Nv @ V_vals[..., None])[..., 0]
    scale = max(float(np.max(np.abs(Gv))), 1e-300)
    err = float(np.max(np.abs(recon - Gv))) / scale
    if err > recon_tol:
        raise NumericalError(f"tangent/fibre split does not reconstruct the forcing ({err:.3e})")

    U = grid.project(U_vals, G.K)
    V = grid.project(V_vals, G.K)
    return HomologicalRHS(U, V)


def solve_tangential(U, omega, K_nf, tol_res, small_divisor_floor=1e-6, g_choice=None):
    """Solve ``d_omega g + f = U`` coefficient-wise, in normal form.

    Resonant coefficients (``|<omega, k>| <= tol_res``) pass to the
    phase field ``f``; nonresonant ones inside the normal-form radius
    are absorbed into ``g`` by dividing by ``i <omega, k>``; the
    nonresonant tail beyond ``K_nf`` stays in ``f``.  Divisors between
    ``tol_res`` and the safety floor abort the run.  A caller-supplied
    ``g_choice`` overrides the default and fixes ``f = U - d_omega g``.
    """
    w = np.asarray(omega, dtype=float).reshape(-1)
    if g_choice is not None:
        f = U - d_omega(g_choice, w)
        return f, g_choice
    f_coeffs, g_coeffs = {}, {}
    for k in sorted(U.coeffs):
        c = U.coeffs[k]
        s = float(np.dot(w, k))
        if abs(s) <= tol_res:
            f_coeffs[k] = c
        elif abs(s) < small_divisor_floor:
            raise SmallDivisorError(k, s, small_divisor_floor)
        elif math.sqrt(sum(x * x for x in k)) <= K_nf + 1e-12:
            g_coeffs[k] = c / (1j * s)
        else:
            f_coeffs[k] = c
    f = FourierMap(U.m, U.K, f_coeffs, U.value_shape, real=U.real)
    g = FourierMap(U.m, U.K, g_coeffs, U.value_shape, real=U.real)
    return f, g


def solve_normal(V, omega, L, residual_tol=1e-10):
    """Solve ``(d_omega - L) h = V`` coefficient-wise.

    Hyperbolicity of ``L`` makes every matrix ``i <omega, k> - L``
    invertible, so the solution is unique; realness of ``L`` gives the
    conjugate-pair symmetry of the result.
    """
    L = np.asarray(L, dtype=float)
    gap = float(np.min(np.abs(np.linalg.eigvals(L).real)))
    if gap <= 1e-9:
        raise HyperbolicityError(f"Floquet matrix not hyperbolic (gap {gap:.3e})")
    w = np.asarray(omega, dtype=float).reshape(-1)
    r = L.shape[0]
    eye = np.eye(r)
    out = {}
    worst = 0.0
    scale = max(1.0, V.norm())
    for k in sorted(V.coeffs):
        c = V.coeffs[k]
        s = float(np.dot(w, k))
        A = 1j * s * eye - L
        h = np.linalg.solve(A, c)
        worst = max(worst, float(np.max(np.abs(A @ h - c))))
        out[k] = h
    if worst > residual_tol * scale:
        raise NumericalError(f"normal homological solve residual {worst:.3e}")
    return FourierMap(V.m, V.K, out, V.value_shape, real=V.real)


def _check_saturation(label, fmap, K, saturation_tol):
    shell = fmap.shell_mass(K - 1.0)
    if shell > saturation_tol * max(fmap.norm(), 1e-16):
        raise TruncationSaturationError(label, K, shell)


def phase_reduce(model, bundle, order, K=None, K_nf=None, tol_res=None,
                 small_divisor_floor=1e-6, g_rule=None, grid=None,
                 saturation_tol=1e-9, residual_tol=1e-8, validate=True):
    """Compute the reduction to the requested order in the coupling.

    Parameters
    ----------
    model : OscillatorModel
        Supplies the uncoupled field, the coupling terms and their
        derivatives up to the requested order.
    bundle : TorusBundle
        Fast fibre data of the unperturbed torus; checked against the
        model's uncoupled field before the iteration starts.
    order : int
        Number of expansion orders to solve.
    K : float
        Truncation radius of every computed series; defaults to the
        bundle's radius.  Any series with mass on the outermost shell
        aborts the run with a "raise K" diagnostic.
    K_nf : float
        Normal-form radius: nonresonant phase-field coefficients with
        ``|k| <= K_nf`` are removed.  Defaults to the truncation radius.
    tol_res : float
        Resonance detection threshold on ``|<omega, k>|``; defaults to
        ``1e-9 * |omega|``.
    g_rule : callable, optional
        ``g_rule(j, U_j)`` returning the tangential component to use at
        order ``j`` (or None to keep the default); exposes the gauge
        freedom in the embedding.  Results produced with a custom rule
        are not guaranteed to be in normal form.

    Returns
    -------
    ReductionResult
    """
    if K is None:
        K = bundle.e0.K
    K = float(K)
    if K_nf is None:
        K_nf = K
    if K_nf > K:
        raise ConfigError(f"truncation radius K={K} must be at least K_nf={K_nf}")
    w = bundle.omega
    if tol_res is None:
        tol_res = 1e-9 * float(np.linalg.norm(w))
    if grid is None:
        grid = dealias_grid(bundle.m, max(K, bundle.K))
    if validate:
        validate_bundle(bundle, F0=model.F0, grid=grid)

    E_map = bundle.e0.jacobian()
    e_terms = [bundle.e0]
    f_terms, g_terms, h_terms, G_terms = [], [], [], []
    residuals = []
    custom_gauge = False

    for j in range(1, order + 1):
        G = order_forcing(j, model, e_terms, f_terms, K, grid=grid)
        _check_saturation(f"G_{j}", G, K, saturation_tol)
        rhs = split_forcing(G, bundle, grid=grid)
        _check_saturation(f"U_{j}", rhs.U, K, saturation_tol)
        _check_saturation(f"V_{j}", rhs.V, K, saturation_tol)
        g_choice = g_rule(j, rhs.U) if g_rule is not None else None
        if g_choice is not None:
            custom_gauge = True
        f_j, g_j = solve_tangential(rhs.U, w, K_nf, tol_res,
                                    small_divisor_floor=small_divisor_floor,
                                    g_choice=g_choice)
        h_j = solve_normal(rhs.V, w, bundle.L)
        e_j = matmul(E_map, g_j, K=K) + matmul(bundle.N, h_j, K=K)

        # Linearised-operator identity: applying the expansion operator to
        # (e_j, f_j) has to reproduce the forcing on the grid.
        lhs = matmul(E_map, d_omega(g_j, w) + f_j, K=K) + matmul(
            bundle.N, d_omega(h_j, w) - _apply_matrix(bundle.L, h_j), K=K
        )
        Gv = grid.sample(G)
        scale = max(float(np.max(np.abs(Gv))), 1e-300)
        lin_res = float(np.max(np.abs(grid.sample(lhs) - Gv))) / scale
        if lin_res > residual_tol:
            raise NumericalError(
                f"order-{j} homological solution fails the linearised equation "
                f"(relative residual {lin_res:.3e})"
            )

        for label, fm in ((f"f_{j}", f_j), (f"g_{j}", g_j),
                          (f"h_{j}", h_j), (f"e_{j}", e_j)):
            _check_saturation(label, fm, K, saturation_tol)

        residuals.append({
            "order": j,
            "forcing_norm": G.norm(),
            "linear_residual_rel": lin_res,
            "shell_mass_e": e_j.shell_mass(K - 1.0),
        })
        G_terms.append(G)
        f_terms.append(f_j)
        g_terms.append(g_j)
        h_terms.append(h_j)
        e_terms.append(e_j)

    return ReductionResult(
        order, bundle,
        phase_terms=f_terms, embedding_terms=e_terms[1:],
        tangent_terms=g_terms, fibre_terms=h_terms, forcing_terms=G_terms,
        K=K, K_nf=K_nf, tol_res=tol_res, residuals=residuals,
        normal_form=not custom_gauge,
    )


def phase_difference_field(result, i, j):
    """Per-order difference of two components of the reduced phase field.

    Term 0 is the constant frequency difference; term ``l`` is the
    order-l phase field of oscillator ``i`` minus that of oscillator
    ``j``.  For a resonant pair the difference evolves slowly and the
    leading nonzero order carries the synchronisation law.
    """
    m = result.bundle.m
    if not (0 <= i < m and 0 <= j < m):
        raise IndexError(f"oscillator indices out of range for m={m}")
    w = result.omega
    terms = [FourierMap.constant(m, complex(w[i] - w[j]))]
    for f in result.phase_terms:
        terms.append(f.component(i) - f.component(j))
    return EpsJet(terms)


def chain_slow_law(result, i=0, j=2):
    """Constants (A, B) of the second-order law for a resonant pair.

    Reads the order-2 coefficients of the phase difference field
    assuming the form ``-A sin(Phi) - B cos(Phi) + B`` in the
    combination angle ``Phi = phi_i - phi_j``.  Returns ``A``, the
    value of ``B`` read off the harmonic, and the constant coefficient
    (which equals ``B`` when the law has the expected shape).
    """
    if result.order < 2:
        raise ValueError("the slow law lives at order 2")
    diff = phase_difference_field(result, i, j)
    term2 = diff.terms[2]
    m = result.bundle.m
    key = tuple(1 if idx == i else (-1 if idx == j else 0) for idx in range(m))
    c = complex(np.asarray(term2.coeffs.get(key, 0.0 + 0.0j)))
    c0 = complex(np.asarray(term2.coeffs.get((0,) * m, 0.0 + 0.0j)))
    A = 2.0 * c.imag
    B_harmonic = -2.0 * c.real
    return A, B_harmonic, c0.real


def conjugacy_residual(model, result, eps, grid=None):
    """Sup-norm defect of the assembled expansion at coupling ``eps``.

    Evaluates ``e' f - F(e)`` pointwise on a grid, with the expansion
    summed at the given coupling strength; for an order-J reduction the
    defect shrinks like ``eps^(J+1)``.
    """
    bundle = result.bundle
    if grid is None:
        grid = dealias_grid(bundle.m, max(result.K, bundle.K))
    e = bundle.e0
    for l, term in enumerate(result.embedding_terms, start=1):
        e = e + term.scale(eps ** l)
    f_vals = grid.sample(FourierMap.constant(bundle.m, bundle.omega.astype(complex)))
    for l, term in enumerate(result.phase_terms, start=1):
        f_vals = f_vals + eps ** l * grid.sample(term)
    E = grid.sample(e.jacobian())
    lhs = (E @ f_vals[..., None])[..., 0]
    rhs = model.rhs(grid.sample(e), eps)
    return float(np.max(np.abs(lhs - rhs)))
