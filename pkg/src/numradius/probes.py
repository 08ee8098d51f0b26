"""Modulus probes for the local attainment properties, plus the two counterexamples.

All probes are deterministic in ``(config, seed)``.  Reports carry brackets
and witnesses; no estimate is returned as a bare number.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import spaces as sp
from ._optim import spawn_rngs
from .bracket import Bracket
from .correctors import hilbert_threshold, linf_threshold
from .errors import (
    PreconditionFailed,
    UnsupportedSpace,
    VerificationError,
    ZeroRadius,
)
from .numrange import _vertex_pairs, numerical_radius
from .operators import Operator, map_norm, operator_norm

PHASE_GRID = 64


@dataclass
class ProbeReport:
    kind: str
    config: dict
    estimates: dict
    trials: int
    witnesses: list = field(default_factory=list)
    wall_time: float = 0.0
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def to_dict(self, include_timing=True):
        d = {
            "kind": self.kind,
            "config": self.config,
            "estimates": {k: v.to_dict() for k, v in self.estimates.items()},
            "trials": self.trials,
            "checks": self.checks,
            "witnesses": self.witnesses,
            "rows": self.rows,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d


def _unit_scale(T):
    """``T / v(T)`` (exact radius spaces only)."""
    v = numerical_radius(T).value
    if v.hi <= 1e-14:
        raise ZeroRadius("numerical radius is zero")
    return T / v.hi


# -- attainment distance ----------------------------------------------------

@dataclass
class DistanceResult:
    value: Bracket
    corrected: Operator | None
    sigma: complex
    method: str


def attainment_distance(T, state, budget=8, seed=0, candidates=()):
    """``min{‖S - T‖ : v(S) ≤ 1, |x*(S x)| = 1}`` as a bracket.

    The modulus constraint is split into convex slices ``x*(S x) = σ``:
    ``σ = ±1`` over the reals, a phase grid with local refinement over the
    complex field.
    """
    space = T.space
    if not space.is_complex and sp.is_polyhedral(space):
        return _best([_dist_lp(T, state, s) for s in (1.0, -1.0)])
    if sp.is_hilbert(space) and not space.is_complex:
        return _best([_dist_hilbert_real(T, state, s) for s in (1.0, -1.0)])
    if space.is_complex and (sp.is_hilbert(space) or sp.is_linf(space) or sp.is_l1(space)):
        return _phase_search(lambda s: _dist_conic_complex(T, state, s))
    if not space.is_complex:
        return _dist_cutting_plane(T, state, budget, seed, candidates)
    raise UnsupportedSpace(f"attainment distance not implemented for {space}")


def _best(results):
    best = min(results, key=lambda r: r.value.hi)
    lo = min(r.value.lo for r in results)
    cert = all(r.value.certified for r in results)
    return DistanceResult(Bracket(min(lo, best.value.hi), best.value.hi, best.value.method, cert),
                          best.corrected, best.sigma, best.method)


def _dist_lp(T, state, sigma):
    space = T.space
    d = space.dim
    V, W, J, I = _vertex_pairs(space)
    A_obj = np.einsum("ai,bj->abij", W, V).reshape(len(W) * len(V), d * d)
    b_obj = (W @ T.entries @ V.T).ravel()
    A_pair = np.einsum("ki,kj->kij", W[I], V[J]).reshape(len(I), d * d)
    m = len(A_obj)
    A_ub = np.vstack([np.hstack([A_obj, -np.ones((m, 1))]),
                      np.hstack([A_pair, np.zeros((len(I), 1))]),
                      np.hstack([-A_pair, np.zeros((len(I), 1))])])
    b_ub = np.concatenate([b_obj, np.ones(2 * len(I))])
    A_eq = np.append(np.outer(state.xstar, state.x).ravel(), 0.0)[None]
    c = np.zeros(d * d + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[sigma], bounds=[(None, None)] * (d * d + 1),
                  method="highs")
    if res.status != 0:
        raise RuntimeError(f"attainment LP failed: {res.message}")
    S = res.x[:-1].reshape(d, d)
    hi = float(np.abs(W @ (S - T.entries) @ V.T).max())
    dual = float(res.ineqlin.marginals @ b_ub + res.eqlin.marginals @ [sigma])
    return DistanceResult(Bracket(min(dual, hi), hi, "linear_program"), Operator(S, space), sigma, "linear_program")


def _solve(prob):
    """Solve with Clarabel; returns False when the solution is only approximately optimal."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver="CLARABEL")
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"conic solve failed with status {prob.status}")
    return prob.status == "optimal"


def _dist_hilbert_real(T, state, sigma):
    import cvxpy as cp

    d = T.dim
    S = cp.Variable((d, d))
    H = (S + S.T) / 2
    x = state.x
    prob = cp.Problem(cp.Minimize(cp.sigma_max(S - T.entries)),
                      [H << np.eye(d), H >> -np.eye(d), x @ S @ x == sigma])
    _solve(prob)
    Sv = S.value
    viol = max(0.0, np.abs(np.linalg.eigvalsh((Sv + Sv.T) / 2)).max() - 1)
    hi = float(np.linalg.norm(Sv - T.entries, 2)) + viol
    lo = max(0.0, float(prob.value) - 1e-7)
    return DistanceResult(Bracket(min(lo, hi), hi, "semidefinite", certified=False),
                          Operator(Sv, T.space), sigma, "semidefinite")


def _dist_conic_complex(T, state, sigma):
    import cvxpy as cp

    space = T.space
    d = T.dim
    A = T.entries
    S = cp.Variable((d, d), complex=True)
    x, f = state.x, state.xstar
    cons = [f @ S @ x == sigma]
    if sp.is_hilbert(space):
        Z = cp.Variable((d, d), hermitian=True)
        I = np.eye(d)
        cons.append(cp.bmat([[I + Z, S], [S.H, I - Z]]) >> 0)
        obj = cp.sigma_max(S - A)
        method = "ando_lmi"
    elif sp.is_linf(space):
        cons += [cp.norm(S[i, :], 1) <= 1 for i in range(d)]
        obj = cp.max(cp.hstack([cp.norm(S[i, :] - A[i], 1) for i in range(d)]))
        method = "row_socp"
    else:
        cons += [cp.norm(S[:, j], 1) <= 1 for j in range(d)]
        obj = cp.max(cp.hstack([cp.norm(S[:, j] - A[:, j], 1) for j in range(d)]))
        method = "column_socp"
    prob = cp.Problem(cp.Minimize(obj), cons)
    _solve(prob)
    Sv = np.asarray(S.value)
    St = Operator(Sv, space)
    viol = max(0.0, numerical_radius(St).value.hi - 1)
    hi = float(operator_norm(St - T).hi) + viol
    lo = max(0.0, float(prob.value) - 1e-7)
    return DistanceResult(Bracket(min(lo, hi), hi, method, certified=False), St, sigma, method)


def _phase_search(solve, n=PHASE_GRID, rounds=12):
    grid = 2 * math.pi * np.arange(n) / n
    results = {float(t): solve(np.exp(1j * t)) for t in grid}
    t0 = min(results, key=lambda t: results[t].value.hi)
    h = 2 * math.pi / n
    a, b = t0 - h, t0 + h
    g = (math.sqrt(5) - 1) / 2
    for _ in range(rounds):
        c, e = b - g * (b - a), a + g * (b - a)
        rc, re = solve(np.exp(1j * c)), solve(np.exp(1j * e))
        results[c], results[e] = rc, re
        if rc.value.hi <= re.value.hi:
            b = e
        else:
            a = c
    best = _best(list(results.values()))
    # the phase grid leaves the lower end empirical
    return DistanceResult(Bracket(best.value.lo, best.value.hi, "phase_grid+" + best.value.method, False),
                          best.corrected, best.sigma, best.method)


def _dist_cutting_plane(T, state, budget, seed, extra=()):
    """Relaxation over sampled states (lower end) and explicit candidates (upper end).

    A candidate counts only if it attains at the state and its operator norm
    is certified at most 1, which bounds ``v`` by 1.
    """
    import cvxpy as cp

    space = T.space
    d = T.dim
    A = T.entries
    x0, f0 = state.x, state.xstar
    rngs = spawn_rngs(seed, 4 * budget + 2)
    probes = [x0] + [np.eye(d)[i] / sp.norm_of(space, np.eye(d)[i]) for i in range(d)]
    probes += [sp.random_unit(space, r) for r in rngs[:2 * budget]]
    states = [(x0, f0)] + [(s.x, s.xstar) for s in (sp.random_state(space, r.integers(2**32)) for r in
                                                    rngs[2 * budget:4 * budget])]
    for i in range(d):
        e = np.eye(d)[i] / sp.norm_of(space, np.eye(d)[i])
        states.append((e, sp.duality_support(space, e)))

    best_lo, exact = math.inf, True
    best_hi, best_S, best_sig = math.inf, None, None
    for sigma in (1.0, -1.0):
        S = cp.Variable((d, d))
        t = cp.Variable()
        cons = [f0 @ S @ x0 == sigma]
        cons += [cp.abs(f @ S @ x) <= 1 for x, f in states]
        cons += [_cp_norm(space, (S - A) @ u) <= t for u in probes]
        prob = cp.Problem(cp.Minimize(t), cons)
        exact &= _solve(prob)
        best_lo = min(best_lo, max(0.0, float(prob.value) - 1e-7))
        cands = [Operator(sigma * np.outer(x0, f0), space)]
        cands += [sigma * C for C in extra]
        if abs(f0 @ A @ x0 - sigma) <= 1e-12:
            cands.append(T)
        for C in cands:
            if abs(f0 @ C.entries @ x0 - sigma) > 1e-12:
                continue
            nC = operator_norm(C, starts=8, steps=100, seed=seed)
            if nC.hi <= 1 + 1e-8:
                dist = operator_norm(C - T, starts=8, steps=100, seed=seed).hi
                if dist < best_hi:
                    best_hi, best_S, best_sig = dist, C, sigma
    return DistanceResult(Bracket(min(best_lo, best_hi), best_hi, "relaxation+candidates", exact), best_S,
                          best_sig, "relaxation+candidates")


def _cp_norm(space, e):
    import cvxpy as cp

    k = space.kind
    if k == "lp":
        return cp.norm(e, "inf" if math.isinf(space.p) else space.p)
    if k == "znorm":
        return cp.norm(e, "inf") + cp.norm(cp.multiply(sp.z_weights(space.dim), e), 2)
    if k == "sum_inf":
        dl = space.left.dim
        return cp.maximum(_cp_norm(space.left, e[:dl]), _cp_norm(space.right, e[dl:]))
    if k == "polyhedral":
        return cp.max(cp.abs(space.W @ e))
    raise UnsupportedSpace(f"no conic model for the norm of {space}")


# -- η_pp probe --------------------------------------------------------------

def _exact_space(space):
    return (not space.is_complex and sp.is_polyhedral(space)) or sp.is_hilbert(space) or (
        space.is_complex and (sp.is_linf(space) or sp.is_l1(space)))


def constructive_lower(space, state, eps):
    """Admissible gap guaranteed by an explicit corrector, or ``None``."""
    if sp.is_linf(space):
        return linf_threshold(state, eps, field=space.field)
    if sp.is_hilbert(space) and not space.is_complex:
        return hilbert_threshold(eps)
    return None


def eta_pp_probe(space, state, eps, budget=8, seed=0, lambdas=None):
    """Adversarial upper bound on ``η(eps, (x, x*))`` for the local point property.

    Operators are drawn along paths ``R + λ x*⊗x`` rescaled to ``v = 1``;
    each trial records the gap ``1 - |x*(T x)|`` and a certified lower bound
    on the correction distance.  The estimate is the smallest gap whose
    operator provably needs a correction of size at least ``eps``.
    """
    t0 = time.perf_counter()
    if not _exact_space(space):
        raise UnsupportedSpace(f"eta_pp_probe needs an exactly computable radius, got {space}")
    st = sp.validate_state(space, state.x, state.xstar, tol=state.tol)
    lambdas = list(lambdas) if lambdas is not None else [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    P = Operator.rank_one(st.xstar, st.x, space)
    d = space.dim
    rows, wit = [], []
    eta_hi, eta_cert = 1.0, True
    for k, rng in enumerate(spawn_rngs(seed, budget)):
        R = rng.standard_normal((d, d))
        if space.is_complex:
            R = R + 1j * rng.standard_normal((d, d))
        R = Operator(R, space)
        for lam in lambdas:
            M = R + lam * P
            if numerical_radius(M).value.hi <= 1e-12:
                continue
            T = _unit_scale(M)
            gap = float(1 - abs(st.value(T)))
            dres = attainment_distance(T, st, seed=seed)
            bad = dres.value.lo >= eps
            rows.append({"trial": k, "lambda": lam, "gap": gap, "dist_lo": dres.value.lo,
                         "dist_hi": dres.value.hi, "needs_eps": bad})
            if bad and gap < eta_hi:
                eta_hi, eta_cert = gap, dres.value.certified
                wit = [{"trial": k, "lambda": lam, "gap": gap, "operator": T.to_dict(),
                        "distance": dres.value.to_dict()}]
    lower = constructive_lower(space, st, eps)
    est = {"eta": Bracket(min(lower or 0.0, eta_hi), eta_hi, "adversarial_paths", eta_cert)}
    if lower is not None:
        est["constructive_lower"] = Bracket.point(lower, "corrector_threshold")
    cfg = {"space": sp.space_to_json(space), "state": st.to_dict(), "eps": eps, "budget": budget, "seed": seed,
           "lambdas": lambdas}
    return ProbeReport("eta_pp", cfg, est, len(rows), wit, time.perf_counter() - t0, rows)


# -- η_oo probe --------------------------------------------------------------

def _bicliques(adj):
    """Maximal bicliques of a boolean ``(n_left, n_right)`` adjacency matrix."""
    nl, nr = adj.shape
    seen = set()
    out = []
    frontier = []
    for i in range(nl):
        R = adj[i]
        if R.any():
            frontier.append(R)
    for j in range(nr):
        L = adj[:, j]
        if L.any():
            frontier.append(adj[L].all(axis=0))
    closed = []
    while frontier:
        R = frontier.pop()
        if not R.any():
            continue
        L = adj[:, R].all(axis=1)
        R = adj[L].all(axis=0) if L.any() else R
        key = (L.tobytes(), R.tobytes())
        if key in seen or not L.any():
            continue
        seen.add(key)
        closed.append((L, R))
        for _, R2 in list(closed):
            frontier.append(R & R2)
    for L, R in closed:
        out.append((np.flatnonzero(L), np.flatnonzero(R)))
    return out


def attaining_pieces(T, tol=1e-9):
    """Attaining set of ``T`` on a real polyhedral space as products of hulls.

    Each piece is ``(Vp, Wd)``: every state in ``conv(Vp) × conv(Wd)`` attains,
    and every attaining state lies in some piece.
    """
    V, W, J, I = _vertex_pairs(T.space)
    v = numerical_radius(T).value.hi
    vals = np.einsum("kd,de,ke->k", W[I], T.entries, V[J])
    pieces = []
    for sigma in (1.0, -1.0):
        adj = np.zeros((len(V), len(W)), dtype=bool)
        hit = np.abs(vals - sigma * v) <= tol
        adj[J[hit], I[hit]] = True
        for a, b in _bicliques(adj):
            pieces.append((V[a], W[b], sigma))
    return pieces


def _dist_to_hull(space, y, P):
    """``min ‖y - Σ λ_k P_k‖`` over the simplex, for a real polyhedral ``space``."""
    if len(P) == 1:
        return float(sp.norm_of(space, y - P[0]))
    G = sp.dual_vertices(space)
    k = len(P)
    # variables (λ, t): |g·(y - Pᵀλ)| ≤ t for every norming vertex g
    GP = G @ P.T
    gy = G @ y
    A_ub = np.vstack([np.hstack([-GP, -np.ones((len(G), 1))]), np.hstack([GP, -np.ones((len(G), 1))])])
    b_ub = np.concatenate([-gy, gy])
    A_eq = np.append(np.ones(k), 0.0)[None]
    c = np.zeros(k + 1)
    c[-1] = 1
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=[(0, None)] * k + [(None, None)],
                  method="highs")
    return float(np.abs(G @ (y - P.T @ res.x[:k])).max())


def _state_distance_poly(space, x, f, pieces):
    dsp = sp.dual(space)
    best = math.inf
    for Vp, Wd, _ in pieces:
        a = _dist_to_hull(space, x, Vp)
        if a >= best:
            continue
        b = _dist_to_hull(dsp, f, Wd)
        best = min(best, max(a, b))
    return best


def _random_poly_state(space, V, W, inc, rng):
    j = rng.integers(len(W))
    face = np.flatnonzero(inc[j])
    k = rng.integers(1, len(face) + 1)
    S = rng.choice(face, size=k, replace=False)
    common = np.flatnonzero(inc[:, S].all(axis=1))
    k2 = rng.integers(1, len(common) + 1)
    S2 = rng.choice(common, size=k2, replace=False)
    lam = rng.dirichlet(np.ones(len(S)))
    mu = rng.dirichlet(np.ones(len(S2)))
    return lam @ V[S], mu @ W[S2], S, S2


def _hilbert_attaining(T, tol=1e-8):
    """Orthonormal bases of the subspaces whose unit vectors attain ``v(T)``."""
    A = T.entries
    if not T.space.is_complex:
        H = (A + A.T) / 2
        w, U = np.linalg.eigh(H)
        v = np.abs(w).max()
        return [U[:, np.abs(w - s * v) <= tol] for s in (1.0, -1.0) if np.any(np.abs(w - s * v) <= tol)], v
    v = numerical_radius(T).value.hi
    out = []
    grid = 2 * math.pi * np.arange(SWEEP) / SWEEP
    for th in grid:
        B = np.exp(1j * th) * A
        w, U = np.linalg.eigh((B + B.conj().T) / 2)
        if w[-1] >= v - 1e-6:
            out.append((th, w[-1]))
    bases = []
    for th, _ in out:
        # polish the angle locally; keep eigenspaces that really attain
        ths = th + np.linspace(-math.pi / SWEEP, math.pi / SWEEP, 41)
        vals = [np.linalg.eigvalsh((np.exp(1j * t) * A + np.conj(np.exp(1j * t) * A).T) / 2)[-1] for t in ths]
        t = ths[int(np.argmax(vals))]
        B = np.exp(1j * t) * A
        w, U = np.linalg.eigh((B + B.conj().T) / 2)
        if w[-1] >= v - tol:
            bases.append(U[:, w >= v - tol])
    return bases, v


SWEEP = 720


def eta_oo_probe(space, T, eps, budget=256, seed=0):
    """Sampled estimate of ``η(eps, T)`` for the local operator property.

    The estimate is the smallest gap ``1 - |x*(T x)|`` over sampled states
    lying at state-distance at least ``eps`` from the attaining set (1 when
    no such state turns up).
    """
    t0 = time.perf_counter()
    if T.space != space:
        raise PreconditionFailed("operator and space disagree")
    v = numerical_radius(T).value
    if v.hi <= 1e-12:
        raise ZeroRadius("numerical radius is zero")
    if abs(v.hi - 1) > 1e-9 or v.width > 1e-9:
        raise PreconditionFailed(f"eta_oo_probe needs v(T) = 1, got {v}")
    rngs = spawn_rngs(seed, budget)
    samples = []
    if not space.is_complex and sp.is_polyhedral(space):
        pieces = attaining_pieces(T)
        V, W, J, I = _vertex_pairs(space)
        if space.dim > 1:
            inc = np.abs(W @ V.T - 1) <= 1e-12
            for j in range(len(W)):
                face = np.flatnonzero(inc[j])
                samples.append((V[face].mean(axis=0), W[j]))
            samples += [(V[J[k]], W[I[k]]) for k in range(len(I))]
            samples += [_random_poly_state(space, V, W, inc, r)[:2] for r in rngs]

        def dist(x, f):
            return _state_distance_poly(space, x, f, pieces)
        method = "polyhedral_pieces"
    elif sp.is_hilbert(space):
        bases, _ = _hilbert_attaining(T)
        cplx = space.is_complex

        def dist(x, f):
            return min(math.sqrt(max(0.0, 2 - 2 * np.linalg.norm(B.conj().T @ x))) for B in bases)

        for r in rngs:
            x = sp.random_unit(space, r)
            # geodesics from an attaining vector out to a random unit vector
            B = bases[r.integers(len(bases))]
            y = B @ (r.standard_normal(B.shape[1]) + (1j * r.standard_normal(B.shape[1]) if cplx else 0))
            y = y / np.linalg.norm(y)
            for s in np.linspace(0, 1, 9)[1:]:
                z = (1 - s) * y + s * x
                if np.linalg.norm(z) > 1e-12:
                    z = z / np.linalg.norm(z)
                    samples.append((z, np.conj(z) if cplx else z))
            # nearest attaining vector, then bisect the chord to distance eps
            Px = B @ (B.conj().T @ x)
            if np.linalg.norm(Px) > 1e-12 and dist(x, None) >= eps:
                y = Px / np.linalg.norm(Px)
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    m = (lo + hi) / 2
                    z = (1 - m) * y + m * x
                    z = z / np.linalg.norm(z)
                    lo, hi = (lo, m) if dist(z, None) >= eps else (m, hi)
                z = (1 - hi) * y + hi * x
                z = z / np.linalg.norm(z)
                samples.append((z, np.conj(z) if cplx else z))
        method = "eigenspace_projection"
    else:
        raise UnsupportedSpace(f"eta_oo_probe not implemented for {space}")

    A = T.entries
    rows = []
    best = (1.0, None)
    for i, (x, f) in enumerate(samples):
        gap = float(1 - abs(f @ A @ x))
        dd = dist(x, f)
        rows.append({"sample": i, "gap": gap, "distance": dd, "far": dd >= eps})
        if dd >= eps and gap < best[0]:
            best = (gap, (x, f))
    # refine the worst far sample along segments toward good samples
    if best[1] is not None:
        good = [s for s, r in zip(samples, rows) if not r["far"]]
        x, f = best[1]
        for gx, gf in good[: min(len(good), 64)]:
            for s in np.linspace(0, 1, 17)[1:-1]:
                xs, fs = (1 - s) * x + s * gx, (1 - s) * f + s * gf
                try:
                    sp.validate_state(space, xs, fs, tol=1e-9)
                except Exception:
                    continue
                gap = float(1 - abs(fs @ A @ xs))
                if gap < best[0] and dist(xs, fs) >= eps:
                    best = (gap, (xs, fs))
    wit = []
    if best[1] is not None:
        wit = [{"x": sp.vector_to_json(best[1][0]), "xstar": sp.vector_to_json(best[1][1]), "gap": best[0]}]
    est = {"eta": Bracket(0.0, best[0], "sampled_far_states", certified=True)}
    cfg = {"space": sp.space_to_json(space), "operator": T.to_dict(), "eps": eps, "budget": budget, "seed": seed}
    return ProbeReport("eta_oo", cfg, est, len(rows), wit, time.perf_counter() - t0, rows,
                       {"method": method})


# -- SSD modulus probe -------------------------------------------------------

def face_distance(space, f, x, D=None):
    """Dual-norm distance from ``f`` to the face ``D(x)`` of norming functionals."""
    a = np.abs(x)
    if sp.is_linf(space) and not space.is_complex:
        A = a >= 1 - 1e-12
        s = np.sign(x)
        g = s * f
        return float(np.abs(f[~A]).sum() + np.maximum(-g[A], 0).sum() + abs(np.maximum(g[A], 0).sum() - 1))
    if sp.is_l1(space) and not space.is_complex:
        on = a > 1e-12
        parts = [np.abs(f[on] - np.sign(x[on]))]
        if (~on).any():
            parts.append(np.maximum(np.abs(f[~on]) - 1, 0))
        return float(np.concatenate(parts).max())
    D = np.array(sp.norming_extremes(space, x, tol=1e-12)) if D is None else D
    return _dist_to_hull(sp.dual(space), f, D)


def _dual_edges(space, W, V):
    inc = np.abs(W @ V.T - 1) <= 1e-12
    d = space.dim
    if d == 1:
        return [(0, 1)] if len(W) == 2 else []
    edges = []
    for i, j in itertools.combinations(range(len(W)), 2):
        common = inc[i] & inc[j]
        if common.sum() < d - 1:
            continue
        if np.linalg.matrix_rank(V[common]) == d - 1:
            edges.append((i, j))
    return edges


def ssd_modulus_probe(space, x, eps, budget=256, seed=0):
    """Largest ``η`` with ``Re x*(x) > 1 - η ⇒ dist(x*, D(x)) < eps`` over the dual ball.

    Exact on real polyhedral spaces (bad dual vertices plus first crossings
    along dual edges); sampled otherwise, giving an upper bound.
    """
    t0 = time.perf_counter()
    x = sp.as_vector(space, x)
    if abs(sp.norm_of(space, x) - 1) > 1e-9:
        raise PreconditionFailed("ssd_modulus_probe needs a unit vector")
    rows, wit = [], []
    if not space.is_complex and sp.is_polyhedral(space):
        W = sp.dual_vertices(space)
        V = sp.primal_vertices(space)
        Dm = W[W @ x >= 1 - 1e-12]
        fd = lambda f: face_distance(space, f, x, Dm)  # noqa: E731
        ell = 1 - W @ x
        dists = np.array([fd(w) for w in W])
        best = math.inf
        for k in np.flatnonzero(dists >= eps):
            if ell[k] < best:
                best, wit = float(ell[k]), [{"functional": sp.vector_to_json(W[k]), "type": "vertex"}]
        for i, j in _dual_edges(space, W, V):
            if ell[i] > ell[j]:
                i, j = j, i
            if dists[i] >= eps or dists[j] < eps:
                continue
            lo, hi = 0.0, 1.0
            for _ in range(60):
                m = (lo + hi) / 2
                if fd((1 - m) * W[i] + m * W[j]) >= eps:
                    hi = m
                else:
                    lo = m
            val = float((1 - hi) * ell[i] + hi * ell[j])
            rows.append({"edge": [int(i), int(j)], "crossing": hi, "gap": val})
            if val < best:
                best = val
                wit = [{"functional": sp.vector_to_json((1 - hi) * W[i] + hi * W[j]), "type": "edge"}]
        best = min(best, 2.0)
        est = {"eta": Bracket.point(best, "face_geometry")}
        trials = len(rows)
    else:
        best = 2.0
        xs = min(sp.norming_extremes(space, x, tol=1e-12), key=sp.lex_key)
        for r in spawn_rngs(seed, budget):
            g = r.standard_normal(space.dim)
            if space.is_complex:
                g = g + 1j * r.standard_normal(space.dim)
            # move from x* along g to distance eps, then project back to the dual sphere
            for scale in (1.0, 0.5, 0.25):
                f = xs + scale * g
                nf = sp.dual_norm_of(space, f)
                f = f / max(nf, 1.0)
                lo, hi = 0.0, 1.0
                if face_distance(space, f, x) < eps:
                    continue
                for _ in range(50):
                    m = (lo + hi) / 2
                    h = (1 - m) * xs + m * f
                    if face_distance(space, h, x) >= eps:
                        hi = m
                    else:
                        lo = m
                h = (1 - hi) * xs + hi * f
                gap = float(1 - np.real(h @ x))
                rows.append({"gap": gap})
                if gap < best:
                    best, wit = gap, [{"functional": sp.vector_to_json(h)}]
        est = {"eta": Bracket(0.0, best, "sampled", certified=True)}
        trials = len(rows)
    cfg = {"space": sp.space_to_json(space), "x": sp.vector_to_json(x), "eps": eps, "budget": budget,
           "seed": seed}
    return ProbeReport("ssd_modulus", cfg, est, trials, wit, time.perf_counter() - t0, rows)


# -- counterexamples ---------------------------------------------------------

def _fr_bicliques(V, W, val, target):
    adj = np.array([[sum(wi * vi for wi, vi in zip(w, v)) == 1 and val(v, w) == target for w in W] for v in V])
    return _bicliques(adj)


def counterexample_2dim(n):
    """Exact checks for ``T_n = diag(1 - 1/n, 1)`` on real ℓ_∞²."""
    t0 = time.perf_counter()
    if int(n) != n or n < 2:
        raise PreconditionFailed("counterexample_2dim needs an integer n ≥ 2")
    n = int(n)
    beta = 1 - Fraction(1, n)
    Tn = [[beta, Fraction(0)], [Fraction(0), Fraction(1)]]
    V = [(Fraction(a), Fraction(b)) for a in (1, -1) for b in (1, -1)]
    W = [(Fraction(1), Fraction(0)), (Fraction(-1), Fraction(0)), (Fraction(0), Fraction(1)), (Fraction(0), Fraction(-1))]

    def apply(v):
        return tuple(sum(Tn[i][j] * v[j] for j in range(2)) for i in range(2))

    def val(v, w):
        Tv = apply(v)
        return w[0] * Tv[0] + w[1] * Tv[1]

    pairs = [(v, w) for v in V for w in W if w[0] * v[0] + w[1] * v[1] == 1]
    radius = max(abs(val(v, w)) for v, w in pairs)
    e1 = (Fraction(1), Fraction(0))
    at_e1 = abs(apply(e1)[0])
    pieces = []
    for target in (radius, -radius):
        for a, b in _fr_bicliques(V, W, val, target):
            pieces.append(([V[i] for i in a], [W[j] for j in b]))
    second_coord_ok = all(len({v[1] for v in Vp}) == 1 and abs(Vp[0][1]) == 1 for Vp, _ in pieces)
    # on a piece the second coordinate is the constant ±1, so ‖e_1 - y‖_∞ ≥ |y(2)| = 1
    min_dist = min(max(abs(Vp[0][1]), Fraction(0)) for Vp, _ in pieces)
    checks = {
        "v(T_n) = 1": radius == 1,
        "|e1*(T_n e1)| = 1 - 1/n": at_e1 == beta,
        "attaining states have |e2*(y)| = 1": second_coord_ok,
        "‖e1 - y‖ ≥ 1 on the attaining set": min_dist >= 1,
    }
    failed = [k for k, ok in checks.items() if not ok]
    if failed:
        raise VerificationError("counterexample identities failed: " + "; ".join(failed))
    est = {
        "radius": Bracket.point(float(radius), "exact_rational"),
        "value_at_e1": Bracket.point(float(beta), "exact_rational"),
        "min_distance": Bracket.point(float(min_dist), "exact_rational"),
    }
    rows = [{"piece": k, "primal": [[str(c) for c in v] for v in Vp], "dual": [[str(c) for c in w] for w in Wd]}
            for k, (Vp, Wd) in enumerate(pieces)]
    cfg = {"n": n, "beta": str(beta)}
    return ProbeReport("counterexample_2dim", cfg, est, len(pieces), [], time.perf_counter() - t0, rows,
                       {k: bool(v) for k, v in checks.items()})


@dataclass
class ZInstance:
    space: sp.Space
    z0: np.ndarray
    z0star: np.ndarray
    x0: np.ndarray
    x0star: np.ndarray
    T: Operator
    N: int
    m_list: list
    norm: Bracket
    checks: dict

    @property
    def state(self):
        return sp.validate_state(self.space, self.x0, self.x0star, tol=1e-8)

    def repair_candidates(self, steps=40):
        """Attaining operators of norm at most 1 built from the construction.

        The first column of the ``ℓ_∞ → Z`` block becomes the full ``z0``, and
        the ``1/2`` diagonal entries are shrunk by bisection until the exact
        norm drops to 1.
        """
        k = len(self.z0)
        Zs = self.space.right

        def block(t):
            B = np.zeros((k, k))
            B[:, 0] = self.z0
            for m in self.m_list:
                B[m - 1, m - 1] = t / 2
            return B

        lo, hi = 0.0, 1.0
        if map_norm(block(1.0), sp.linf(k), Zs).hi <= 1:
            lo = 1.0
        else:
            for _ in range(steps):
                mid = (lo + hi) / 2
                lo, hi = (mid, hi) if map_norm(block(mid), sp.linf(k), Zs).hi <= 1 else (lo, mid)
        out = []
        for t in sorted({0.0, lo}):
            A = np.zeros((2 * k, 2 * k))
            A[k:, :k] = block(t)
            out.append(Operator(A, self.space))
        return out


def build_znorm_instance(n, theta=0.9, delta=5e-2, seed=None):
    """Truncated copy of the ``c_0 ⊕_∞ Z`` construction with ``k = n`` coordinates per block.

    ``N`` is the first index with tail deficit ``1 - z0*(z0(1..N), 0, …) < delta``.
    The construction is deterministic; ``seed`` is accepted for interface
    uniformity and ignored.  Coordinates are 1-based in messages, 0-based in arrays.
    """
    k = int(n)
    if not 0 < theta < 1:
        raise PreconditionFailed("theta must lie in (0, 1)")
    Zs = sp.znorm(k)
    space = sp.sum_inf(sp.linf(k), Zs)
    z0 = theta ** np.arange(1, k + 1)
    z0 = z0 / sp.norm_of(Zs, z0)
    w2 = sp.z_weights(k) ** 2
    q = math.sqrt((w2 * z0 * z0).sum())
    z0s = w2 * z0 / q
    z0s[0] += 1.0
    tails = np.array([1 - (z0s[:N] @ z0[:N]) for N in range(1, k + 1)])
    feasible = np.flatnonzero(tails < delta)
    if not feasible.size:
        raise PreconditionFailed(f"infeasible: no N ≤ {k} brings the tail below delta = {delta}")
    N = int(feasible[0]) + 1
    ms, prev = [], N
    for j in range(1, k - N + 1):
        rhs = z0[N + j - 1] ** 2 / 2.0 ** (N + j)
        m = next((m for m in range(prev + 1, k + 1) if 2.0 ** (-(m + 2)) <= rhs), None)
        if m is None:
            break
        ms.append(m)
        prev = m
    if len(ms) < 2:
        raise PreconditionFailed(f"infeasible (n={n}, theta={theta}): only {len(ms)} admissible m_j after N={N}")
    Tt = np.zeros((k, k))
    Tt[:N, 0] = z0[:N]
    for m in ms:
        Tt[m - 1, m - 1] = 0.5
    A = np.zeros((2 * k, 2 * k))
    A[k:, :k] = Tt
    T = Operator(A, space)
    x0 = np.concatenate([np.eye(k)[0], z0])
    x0s = np.concatenate([np.zeros(k), z0s])
    nT = map_norm(Tt, sp.linf(k), Zs)
    trunc = np.where(np.arange(k) < N, z0, 0.0)
    checks = {
        "z0(1) >= 1/2": bool(z0[0] >= 0.5),
        "‖T‖ <= 1 + 1e-9": bool(nT.hi <= 1 + 1e-9),
        "diagonal at m_j = 1/2": all(Tt[m - 1, m - 1] == 0.5 for m in ms),
        "x0*(T x0) = z0*(truncated z0)": bool(abs(x0s @ A @ x0 - z0s @ trunc) <= 1e-12),
    }
    failed = [c for c, ok in checks.items() if not ok]
    if failed:
        raise VerificationError("Z-norm instance checks failed: " + "; ".join(failed))
    return ZInstance(space, z0, z0s, x0, x0s, T, N, ms, nT, checks)


def znorm_degradation_probe(dims, eps=0.25, budget=4, seed=0, theta=0.9, delta=5e-2):
    """Table of correction distances ``d(n)`` for truncated Z-norm instances."""
    t0 = time.perf_counter()
    rows, est, wit = [], {}, []
    for n in dims:
        inst = build_znorm_instance(n, theta, delta)
        st = inst.state
        gap = float(1 - abs(st.value(inst.T)))
        d = attainment_distance(inst.T, st, budget=budget, seed=seed, candidates=inst.repair_candidates())
        est[f"d({n})"] = d.value
        rows.append({"n": n, "N": inst.N, "m_list": inst.m_list, "gap": gap, "d_lo": d.value.lo,
                     "d_hi": d.value.hi, "width": d.value.width, "below_eps": d.value.hi < eps})
        wit.append({"n": n, "z0": sp.vector_to_json(inst.z0), "m_list": inst.m_list, "N": inst.N})
    cfg = {"dims": list(dims), "eps": eps, "budget": budget, "seed": seed, "theta": theta, "delta": delta}
    return ProbeReport("znorm_degradation", cfg, est, len(rows), wit, time.perf_counter() - t0, rows)
