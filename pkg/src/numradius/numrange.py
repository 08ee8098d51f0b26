"""Numerical radius, attaining states, numerical indices and the skew subspace."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from . import spaces as sp
from ._optim import complex_view, real_view, run_starts, spawn_rngs
from .bracket import Bracket
from .errors import DimensionMismatch, UnsupportedSpace
from .operators import DEFAULT_STARTS, DEFAULT_STEPS, Operator, map_norm, operator_norm

METHODS = ("vertex_exact", "hilbert_spectral", "field_of_values_sweep", "multistart")
SWEEP_ANGLES = 720
SWEEP_TOL = 1e-10
INCIDENCE_TOL = 1e-12


@dataclass
class RadiusResult:
    value: Bracket
    witnesses: list = field(default_factory=list)
    method: str = ""

    def to_dict(self):
        return {
            "value": self.value.to_dict(),
            "method": self.method,
            "witnesses": [dict(s.to_dict(), attained=_scalar_json(val)) for s, val in self.witnesses],
        }


@dataclass
class Attainment:
    states: list
    zero_radius: bool
    value: Bracket


@dataclass
class IndexResult:
    value: Bracket
    witness: Operator | None
    candidates: int

    def to_dict(self):
        return {"value": self.value.to_dict(), "candidates": self.candidates,
                "witness": None if self.witness is None else self.witness.to_dict()}


@dataclass
class SkewBasis:
    basis: list
    constraint_rank: int
    space: sp.Space

    @property
    def dim(self):
        return len(self.basis)


def _scalar_json(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _state(space, x, f, tol=1e-9):
    return sp.validate_state(space, x, f, tol=tol)


# -- numerical radius -------------------------------------------------------

def default_method(space):
    if sp.is_polyhedral(space) or sp.is_linf(space) or sp.is_l1(space):
        return "vertex_exact"
    if sp.is_hilbert(space):
        return "field_of_values_sweep" if space.is_complex else "hilbert_spectral"
    return "multistart"


def numerical_radius(T, method=None, starts=DEFAULT_STARTS, steps=DEFAULT_STEPS, seed=0, workers=1):
    """``v(T) = sup{|x*(T x)| : (x, x*) ∈ Π(X)}`` as a bracket with witnesses."""
    method = method or default_method(T.space)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    key = ("radius", method, starts, steps, seed)
    return T.cached(key, lambda: _radius(T, method, starts, steps, seed, workers))


def _radius(T, method, starts, steps, seed, workers):
    space = T.space
    if method == "vertex_exact":
        if sp.is_linf(space):
            return _radius_linf(T)
        if sp.is_l1(space):
            return _radius_l1(T)
        return _radius_vertices(T)
    if method == "hilbert_spectral":
        if not (sp.is_hilbert(space) and not space.is_complex):
            raise UnsupportedSpace("hilbert_spectral needs a real ℓ_2 space")
        return _radius_real_hilbert(T)
    if method == "field_of_values_sweep":
        if not sp.is_hilbert(space):
            raise UnsupportedSpace("field_of_values_sweep needs an ℓ_2 space")
        return _radius_sweep(T)
    if space.kind == "dual" and not sp.is_polyhedral(space):
        # Π(X*) = {(x*, x) : (x, x*) ∈ Π(X)} in finite dimensions
        base = numerical_radius(Operator(T.entries.T, space.base), None, starts, steps, seed, workers)
        wit = [(_state(space, s.xstar, s.x, tol=max(s.tol, 1e-8)), val) for s, val in base.witnesses]
        return RadiusResult(Bracket(base.value.lo, base.value.hi, "transpose:" + base.value.method,
                                    base.value.certified), wit, "multistart")
    return _radius_multistart(T, starts, steps, seed, workers)


def _vertex_pairs(space):
    V = sp.primal_vertices(space)
    W = sp.dual_vertices(space)
    I, J = np.nonzero(np.abs(W @ V.T - 1.0) <= INCIDENCE_TOL)
    return V, W, J, I  # pair k is (V[J[k]], W[I[k]])


def _radius_vertices(T, tol=1e-12):
    V, W, J, I = _vertex_pairs(T.space)
    vals = np.einsum("kd,de,ke->k", W[I], T.entries, V[J])
    top = float(np.abs(vals).max())
    hit = np.flatnonzero(np.abs(vals) >= top - tol)
    wit = sorted(((V[J[k]], W[I[k]], vals[k]) for k in hit), key=lambda t: (sp.lex_key(t[0]), sp.lex_key(t[1])))
    return RadiusResult(Bracket.point(top, "vertex_exact"),
                        [(sp.StatePair(v, w, 0.0), float(val)) for v, w, val in wit], "vertex_exact")


def _radius_linf(T):
    A = T.entries
    rows = np.abs(A).sum(axis=1)
    i = int(np.argmax(rows))
    x = np.where(A[i] != 0, np.conj(np.sign(A[i])), 1.0).astype(T.space.dtype)
    f = np.zeros(T.dim, dtype=T.space.dtype)
    f[i] = 1.0 / x[i]
    s = _state(T.space, x, f)
    return RadiusResult(Bracket.point(rows[i], "vertex_exact"), [(s, s.value(T))], "vertex_exact")


def _radius_l1(T):
    A = T.entries
    cols = np.abs(A).sum(axis=0)
    j = int(np.argmax(cols))
    x = np.zeros(T.dim, dtype=T.space.dtype)
    x[j] = 1.0
    om = np.sign(A[j, j]) if A[j, j] != 0 else 1.0
    f = np.where(A[:, j] != 0, om * np.conj(np.sign(A[:, j])), 1.0).astype(T.space.dtype)
    f[j] = 1.0
    s = _state(T.space, x, f)
    return RadiusResult(Bracket.point(cols[j], "vertex_exact"), [(s, s.value(T))], "vertex_exact")


def _radius_real_hilbert(T):
    H = (T.entries + T.entries.T) / 2
    w, U = np.linalg.eigh(H)
    k = int(np.argmax(np.abs(w)))
    x = U[:, k]
    s = _state(T.space, x, x)
    return RadiusResult(Bracket.point(abs(w[k]), "hilbert_spectral"), [(s, s.value(T))], "hilbert_spectral")


def _top_eig(A, th):
    B = np.exp(1j * th) * A
    w, U = np.linalg.eigh((B + B.conj().T) / 2)
    return w[-1], U[:, -1]


def _radius_sweep(T, n_angles=SWEEP_ANGLES, tol=SWEEP_TOL):
    """max over θ of λ_max(Re(e^{iθ} T)): angle grid, then golden section."""
    A = T.entries.astype(complex)
    grid = np.linspace(0.0, 2 * math.pi, n_angles, endpoint=False)
    vals = np.array([_top_eig(A, t)[0] for t in grid])
    i = int(np.argmax(vals))
    h = grid[1] - grid[0]
    a, b = grid[i] - h, grid[i] + h
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = _top_eig(A, c)[0], _top_eig(A, d)[0]
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = _top_eig(A, c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = _top_eig(A, d)[0]
    cand = [(vals[i], grid[i]), (fc, c), (fd, d)]
    lam, th = max(cand)
    x = _top_eig(A, th)[1]
    x = x / np.linalg.norm(x)
    xs = np.conj(x) if T.space.is_complex else x.real
    if not T.space.is_complex:
        x = x.real if np.allclose(x.imag, 0) else x
    s = _state(T.space, x, xs, tol=1e-8)
    val = s.value(T)
    lo = abs(val)
    return RadiusResult(Bracket(min(lo, lam), max(lo, lam), "field_of_values_sweep", certified=False),
                        [(s, val)], "field_of_values_sweep")


def _radius_multistart(T, starts, steps, seed, workers):
    space = T.space
    A = T.entries
    d = space.dim
    cplx = space.is_complex

    def to_x(u):
        x = complex_view(u) if cplx else u
        n = sp.norm_of(space, x)
        return x / n if n > 0 else None

    def best_state(x):
        best = (-1.0, None, None)
        for f in sp.norming_extremes(space, x, tol=1e-12):
            val = f @ (A @ x)
            if abs(val) > best[0]:
                best = (abs(val), f, val)
        return best

    def obj(u):
        x = to_x(u)
        if x is None:
            return 0.0
        f = min(sp.norming_extremes(space, x, tol=1e-12), key=sp.lex_key)
        return -abs(f @ (A @ x))

    def one(rng, i):
        if i < d:
            x0 = np.eye(d, dtype=space.dtype)[i]
        else:
            x0 = rng.standard_normal(d) + (1j * rng.standard_normal(d) if cplx else 0)
        u0 = real_view(x0) if cplx else x0
        res = minimize(obj, u0, method="L-BFGS-B", options={"maxiter": steps})
        out = []
        for u in (u0, res.x):
            x = to_x(u)
            if x is not None:
                out.append((best_state(x), x))
        return max(out, key=lambda t: t[0][0])

    results = run_starts(one, seed, starts, workers)
    (val, f, raw), x = max(results, key=lambda t: t[0][0])
    s = _state(space, x, f, tol=1e-8)
    hi = operator_norm(T, seed=seed).hi
    return RadiusResult(Bracket(val, max(val, hi), "multistart+norm_bound"), [(s, raw)], "multistart")


# -- attaining states -------------------------------------------------------

def attaining_states(T, tol=1e-9, **kw):
    """States at which ``|x*(T x)|`` reaches ``v(T)`` (all vertex pairs when exact)."""
    res = numerical_radius(T, **kw)
    v = res.value
    if v.hi <= tol:
        return Attainment([], True, v)
    if res.method == "vertex_exact" and sp.is_polyhedral(T.space):
        states = [s for s, val in res.witnesses if abs(val) >= v.hi - tol]
        if tol > 1e-12:
            V, W, J, I = _vertex_pairs(T.space)
            vals = np.einsum("kd,de,ke->k", W[I], T.entries, V[J])
            hit = np.flatnonzero(np.abs(vals) >= v.hi - tol)
            states = [sp.StatePair(V[J[k]], W[I[k]], 0.0) for k in hit]
    elif res.method == "hilbert_spectral":
        H = (T.entries + T.entries.T) / 2
        w, U = np.linalg.eigh(H)
        states = []
        for k in np.flatnonzero(np.abs(np.abs(w) - v.hi) <= tol):
            for sgn in (1.0, -1.0):
                x = sgn * U[:, k]
                states.append(sp.StatePair(x, x, 1e-9))
    else:
        states = [s for s, val in res.witnesses if abs(val) >= v.hi - tol]
    states.sort(key=lambda s: (sp.lex_key(s.x), sp.lex_key(s.xstar)))
    return Attainment(states, False, v)


# -- numerical index --------------------------------------------------------

def structured_candidates(space):
    """Permutations, shifts, skew generators and friends used to seed index searches."""
    d = space.dim
    out = [np.eye(d)]
    perms = itertools.permutations(range(d)) if d <= 4 else (np.roll(range(d), k) for k in range(1, d))
    for p in perms:
        P = np.eye(d)[list(p)]
        if not np.array_equal(P, np.eye(d)):
            out.append(P)
    N = np.diag(np.ones(d - 1), 1) if d > 1 else np.zeros((1, 1))
    out += [N, N.T]
    for i, j in itertools.combinations(range(d), 2):
        E = np.zeros((d, d))
        E[i, j], E[j, i] = 1.0, -1.0
        out.append(E)
        F = np.zeros((d, d))
        F[i, i], F[j, j] = 1.0, -1.0
        out.append(F)
    if space.is_complex:
        out += [1j * M for M in out[1:]]
    return [M for M in out if np.any(M)]


def _exact_ratio_space(space):
    # cheap exact radius and norm; the angle sweep is too slow to sit inside a simplex search
    return default_method(space) in ("vertex_exact", "hilbert_spectral")


def _ratio(T, seed=0):
    v = numerical_radius(T, seed=seed).value
    n = operator_norm(T, seed=seed)
    return v, n


def numerical_index(space, budget=64, seed=0, workers=1, tol=1e-9, refine=True):
    """Bracket on ``n(X) = inf{v(T) : ‖T‖ = 1}``.

    The upper end is certified by the best candidate.  The lower end is 1
    (flagged empirical) when no sampled operator had ``v(T) < (1-tol)‖T‖``;
    otherwise it is the known field-dependent floor (``1/e`` complex, 0 real).
    """
    cands = [Operator(M, space) for M in structured_candidates(space)]
    d = space.dim
    for rng in spawn_rngs(seed, budget):
        M = rng.standard_normal((d, d))
        if space.is_complex:
            M = M + 1j * rng.standard_normal((d, d))
        cands.append(Operator(M, space))

    def score(i):
        v, n = _ratio(cands[i], seed)
        return v.hi / n.lo, v.lo / n.hi

    scores = [score(i) for i in range(len(cands))]
    best_i = int(np.argmin([s[0] for s in scores]))
    best_hi, best_T = scores[best_i][0], cands[best_i]
    min_lo = min(s[1] for s in scores)

    if refine and _exact_ratio_space(space) and best_hi > tol:
        order = np.argsort([s[0] for s in scores])[:3]
        for i in order:
            T0 = cands[i]
            cplx = space.is_complex
            u0 = real_view(T0.entries.ravel()) if cplx else T0.entries.ravel()

            def f(u):
                M = (complex_view(u) if cplx else u).reshape(d, d)
                if not np.any(M):
                    return 1.0
                v, n = _ratio(Operator(M, space))
                return v.hi / n.lo

            res = minimize(f, u0, method="Nelder-Mead",
                           options={"maxiter": 400 * len(u0), "xatol": 1e-10, "fatol": 1e-12})
            M = (complex_view(res.x) if cplx else res.x).reshape(d, d)
            if np.any(M):
                T1 = Operator(M, space)
                v, n = _ratio(T1)
                r_hi = v.hi / n.lo
                min_lo = min(min_lo, v.lo / n.hi)
                if r_hi < best_hi:
                    best_hi, best_T = r_hi, T1

    if min_lo >= 1 - tol:
        lo, cert = 1.0, False
    elif space.is_complex:
        lo, cert = 1.0 / math.e, True
    else:
        lo, cert = 0.0, True
    lo = min(lo, best_hi)
    return IndexResult(Bracket(lo, best_hi, "candidates+refine" if refine else "candidates", cert),
                       best_T, len(cands))


# -- skew-hermitian subspace ------------------------------------------------

def skew_hermitian_basis(space):
    """Basis of ``Z(X) = {T : v(T) = 0}``."""
    d = space.dim
    if space.is_complex:
        return SkewBasis([], d * d, space)
    if sp.is_polyhedral(space):
        V, W, J, I = _vertex_pairs(space)
        A = np.einsum("ki,kj->kij", W[I], V[J]).reshape(len(I), d * d)
        N = null_space(A, rcond=1e-10)
        rank = d * d - N.shape[1]
        basis = [Operator(_clean(N[:, k].reshape(d, d)), space) for k in range(N.shape[1])]
        return SkewBasis(basis, rank, space)
    if sp.is_hilbert(space):
        basis = []
        for i, j in itertools.combinations(range(d), 2):
            E = np.zeros((d, d))
            E[i, j], E[j, i] = 1.0, -1.0
            basis.append(Operator(E, space))
        return SkewBasis(basis, d * (d + 1) // 2, space)
    raise UnsupportedSpace(f"skew-hermitian subspace not available for {space}")


def _clean(M):
    M = np.where(np.abs(M) < 1e-14, 0.0, M)
    k = np.flatnonzero(np.abs(M.ravel()) > 1e-12)
    if len(k):
        M = M / M.ravel()[k[0]] * abs(M.ravel()[k[0]])
    return M


def distance_to_skew(T, Z, restarts=4, seed=0):
    """Bracket on ``‖T + Z(X)‖ = inf_{G ∈ Z} ‖T - G‖``; the lower end is ``v(T)``."""
    if Z.space != T.space:
        raise DimensionMismatch("skew basis and operator live on different spaces")
    vT = numerical_radius(T).value
    if not Z.basis:
        n = operator_norm(T)
        return Bracket(n.lo, n.hi, "no_skew_part:" + n.method, n.certified)
    if sp.is_polyhedral(T.space):
        return _distance_lp(T, Z, vT)
    Gs = np.array([G.entries for G in Z.basis])
    k = len(Gs)
    # Frobenius projection as the first start
    c0 = np.linalg.lstsq(Gs.reshape(k, -1).T, T.entries.ravel(), rcond=None)[0]

    def f(c):
        return map_norm(T.entries - np.tensordot(c, Gs, 1), T.space, T.space).hi

    best = f(c0)
    if best <= vT.lo * (1 + 1e-12):
        # the lower bound v(T) is attained, nothing left to search
        return Bracket(min(vT.lo, best), best, "projection")
    starts = [c0] + [c0 + r.standard_normal(k) for r in spawn_rngs(seed, restarts)]
    for c in starts:
        res = minimize(f, c, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
        best = min(best, float(res.fun))
    return Bracket(min(vT.lo, best), best, "subgradient+restarts")


def _distance_lp(T, Z, vT):
    V, W = sp.primal_vertices(T.space), sp.dual_vertices(T.space)
    k = len(Z.basis)
    tv = (W @ T.entries @ V.T).ravel()
    gv = np.array([(W @ G.entries @ V.T).ravel() for G in Z.basis]).T
    # |tv - gv c| <= t for every (w, v);  variables (c, t)
    A = np.vstack([np.hstack([-gv, -np.ones((len(tv), 1))]), np.hstack([gv, -np.ones((len(tv), 1))])])
    b = np.concatenate([-tv, tv])
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A, b_ub=b, bounds=[(None, None)] * k + [(0, None)], method="highs")
    hi = float(np.abs(tv - gv @ res.x[:k]).max())
    lo = max(vT.lo, float(res.ineqlin.marginals @ b))
    return Bracket(min(lo, hi), hi, "linear_program")


def second_numerical_index(space, budget=64, seed=0, workers=1, tol=1e-9):
    """Bracket on ``n'(X) = inf{v(T) / ‖T + Z(X)‖ : T ∉ Z(X)}``."""
    Z = skew_hermitian_basis(space)
    if not Z.basis:
        return numerical_index(space, budget=budget, seed=seed, workers=workers, tol=tol)
    d = space.dim
    cands = [Operator(M, space) for M in structured_candidates(space)]
    for rng in spawn_rngs(seed, budget):
        cands.append(Operator(rng.standard_normal((d, d)), space))
    best_hi, best_T, min_lo, used = math.inf, None, math.inf, 0
    for T in cands:
        dist = distance_to_skew(T, Z, seed=seed)
        if dist.hi <= tol:
            continue
        v = numerical_radius(T).value
        used += 1
        r_hi = v.hi / dist.lo if dist.lo > 0 else math.inf
        min_lo = min(min_lo, v.lo / dist.hi)
        if r_hi < best_hi:
            best_hi, best_T = r_hi, T
    lo = min(min_lo, best_hi)
    return IndexResult(Bracket(lo, best_hi, "candidates", certified=False), best_T, used)
