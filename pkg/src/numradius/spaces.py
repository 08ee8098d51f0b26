"""Finite-dimensional normed spaces, their duals, and states.

Vectors and functionals are plain 1-D numpy arrays whose length equals the
space dimension.  A functional ``f`` acts on a vector ``x`` through the
bilinear pairing ``f @ x`` (no conjugation, also over the complex field);
the dual norm takes care of moduli.

Supported kinds:

``lp``
    ``ℓ_p^n`` for ``1 <= p <= inf``.
``polyhedral``
    Real norm ``max_k |w_k(x)|`` given by a symmetric list of dual vertices.
``znorm``
    ``‖x‖_∞ + (Σ_i |x(i)|² / 2^i)^{1/2}`` (indices start at 1).
``sum_inf``
    ``left ⊕_∞ right``; the norm is the max of the component norms.
``dual``
    The dual of another space (needed to host adjoints).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import linprog

from .bracket import Bracket
from .errors import (
    CapExceeded,
    DimensionMismatch,
    NotAState,
    NotCertified,
    NotPolyhedral,
    PreconditionFailed,
    UnsupportedSpace,
)

DEFAULT_STATE_TOL = 1e-9
#: cap on the dimension of ℓ_1 / ℓ_∞ blocks whose vertices get enumerated
LP_VERTEX_CAP = 8
#: cap on the dimension of general polyhedral balls
POLY_VERTEX_CAP = 4

KINDS = ("lp", "polyhedral", "znorm", "sum_inf", "dual")


@dataclass(frozen=True)
class Space:
    kind: str
    dim: int
    field: str = "real"
    p: float | None = None
    dual_vertex_rows: tuple | None = dc_field(default=None, repr=False)
    left: Space | None = None
    right: Space | None = None
    base: Space | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.field not in ("real", "complex"):
            raise ValueError(f"unknown scalar field {self.field!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")

    @property
    def is_complex(self):
        return self.field == "complex"

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    @property
    def W(self):
        """Dual-vertex matrix of a polyhedral space (rows are functionals)."""
        return np.array(self.dual_vertex_rows, dtype=float) + 0.0

    def __str__(self):
        f = "C" if self.is_complex else "R"
        if self.kind == "lp":
            p = "inf" if math.isinf(self.p) else f"{self.p:g}"
            return f"l_{p}^{self.dim}({f})"
        if self.kind == "sum_inf":
            return f"({self.left} +inf {self.right})"
        if self.kind == "dual":
            return f"dual({self.base})"
        return f"{self.kind}^{self.dim}({f})"


# -- constructors -----------------------------------------------------------

def lp(p, dim, field="real"):
    p = float(p)
    if not p >= 1:
        raise ValueError("p must lie in [1, inf]")
    return Space("lp", int(dim), field, p=p)


def linf(dim, field="real"):
    return lp(math.inf, dim, field)


def l1(dim, field="real"):
    return lp(1.0, dim, field)


def l2(dim, field="real"):
    return lp(2.0, dim, field)


def polyhedral(dual_vertices):
    """Real polyhedral norm ``x ↦ max_k |w_k · x|``.

    The list is symmetrised (``-w`` is added for every ``w``) and
    deduplicated; it must span the dual space.
    """
    W = np.atleast_2d(np.asarray(dual_vertices, dtype=float))
    if np.iscomplexobj(W):
        raise UnsupportedSpace("polyhedral norms are real")
    d = W.shape[1]
    if np.linalg.matrix_rank(W) < d:
        raise ValueError("dual vertices must span the dual space")
    rows = {}
    for w in np.vstack([W, -W]):
        rows.setdefault(tuple(np.round(w, 12) + 0.0), w)
    keep = [r for r in rows.values()]
    # drop rows that are not extreme (dominated inside the hull of the rest)
    W = np.array(sorted(keep, key=lex_key))
    extreme = [w for i, w in enumerate(W) if not _in_hull(w, np.delete(W, i, axis=0))]
    return Space("polyhedral", d, "real", dual_vertex_rows=tuple(tuple(float(c) + 0.0 for c in w) for w in extreme))


def znorm(dim, field="real"):
    return Space("znorm", int(dim), field)


def sum_inf(left, right):
    if left.field != right.field:
        raise ValueError("components of a direct sum must share the scalar field")
    return Space("sum_inf", left.dim + right.dim, left.field, left=left, right=right)


def dual(space):
    """Dual space under the bilinear pairing; ``dual(dual(X)) is X``."""
    if space.kind == "dual":
        return space.base
    if space.kind == "lp":
        p = space.p
        if p == 1:
            q = math.inf
        elif math.isinf(p):
            q = 1.0
        else:
            q = p / (p - 1.0)
        return Space("lp", space.dim, space.field, p=q)
    return Space("dual", space.dim, space.field, base=space)


def _in_hull(w, others):
    if len(others) == 0:
        return False
    n = len(others)
    res = linprog(np.zeros(n), A_eq=np.vstack([others.T, np.ones(n)]), b_eq=np.append(w, 1.0),
                  bounds=[(0, None)] * n, method="highs")
    return res.status == 0


# -- helpers ----------------------------------------------------------------

def lex_key(v):
    """Ordering used for every deterministic tie-break.

    Coordinates are compared in order, larger modulus first, then positive
    real part, then positive imaginary part.  Under this key ``e_1`` comes
    before ``e_2`` and ``+e_i`` before ``-e_i``.
    """
    v = np.asarray(v).ravel()
    out = []
    for c in v:
        c = complex(c)
        out.extend((-round(abs(c), 12), -round(c.real, 12), -round(c.imag, 12)))
    return tuple(out)


def as_vector(space, v, name="vector"):
    v = np.asarray(v)
    if v.shape[-1:] != (space.dim,):
        raise DimensionMismatch(f"{name} has shape {v.shape}, space {space} has dim {space.dim}")
    if np.iscomplexobj(v) and not space.is_complex:
        if np.any(np.abs(v.imag) > 0):
            raise DimensionMismatch(f"complex {name} in real space {space}")
        v = v.real
    return v.astype(space.dtype, copy=False)


def pairing(f, x):
    return np.asarray(f) @ np.asarray(x)


def z_weights(dim):
    """Square roots of the Z-norm weights, ``2^{-i/2}`` for ``i = 1..dim``."""
    return 2.0 ** (-0.5 * np.arange(1, dim + 1))


def is_polyhedral(space):
    """True when the unit ball has finitely many extreme points."""
    if space.is_complex:
        return False
    if space.kind == "lp":
        return space.p == 1 or math.isinf(space.p)
    if space.kind == "polyhedral":
        return True
    if space.kind == "sum_inf":
        return is_polyhedral(space.left) and is_polyhedral(space.right)
    if space.kind == "dual":
        return is_polyhedral(space.base)
    return False


def is_linf(space):
    return space.kind == "lp" and math.isinf(space.p)


def is_l1(space):
    return space.kind == "lp" and space.p == 1


def is_hilbert(space):
    return space.kind == "lp" and space.p == 2


# -- norms ------------------------------------------------------------------

def norm_of(space, v):
    """Norm of ``v`` (vectorised over leading axes)."""
    v = as_vector(space, v)
    k = space.kind
    if k == "lp":
        a = np.abs(v)
        if math.isinf(space.p):
            return a.max(axis=-1)
        if space.p == 1:
            return a.sum(axis=-1)
        if space.p == 2:
            return np.sqrt((a * a).sum(axis=-1))
        return (a ** space.p).sum(axis=-1) ** (1.0 / space.p)
    if k == "polyhedral":
        return np.abs(v @ space.W.T).max(axis=-1)
    if k == "znorm":
        a = np.abs(v)
        return a.max(axis=-1) + np.sqrt(((a * z_weights(space.dim)) ** 2).sum(axis=-1))
    if k == "sum_inf":
        dl = space.left.dim
        return np.maximum(norm_of(space.left, v[..., :dl]), norm_of(space.right, v[..., dl:]))
    return dual_norm_of(space.base, v)


def dual_norm_bracket(space, f):
    """Bracket on the dual norm of ``f``; a point bracket when exact."""
    f = as_vector(space, f, "functional")
    k = space.kind
    if k == "lp" or k == "dual":
        return Bracket.point(norm_of(dual(space), f), "closed_form")
    if k == "polyhedral":
        return Bracket.point(_polyhedral_gauge(space, f), "linear_program")
    if k == "sum_inf":
        dl = space.left.dim
        a = dual_norm_bracket(space.left, f[:dl])
        b = dual_norm_bracket(space.right, f[dl:])
        return Bracket(a.lo + b.lo, a.hi + b.hi, "sum_of_components", a.certified and b.certified)
    return _znorm_dual_bracket(space, f)


def dual_norm_of(space, f, rtol=1e-8):
    """Dual norm of ``f``; raises :class:`NotCertified` if only a wide bracket is available."""
    if np.ndim(f) > 1:
        return np.array([dual_norm_of(space, g, rtol) for g in f])
    b = dual_norm_bracket(space, f)
    if b.width > rtol * (1.0 + b.hi):
        raise NotCertified("dual norm not certified", b)
    return b.mid


def _polyhedral_gauge(space, f):
    # min Σ|λ_k|  s.t.  Σ λ_k w_k = f   (gauge of the polar of the primal ball)
    # the gauge is homogeneous; solve at unit scale so solver tolerances stay relative
    f = np.asarray(f, float)
    scale = float(np.abs(f).max())
    if scale == 0.0:
        return 0.0
    W = space.W
    n = len(W)
    A = np.hstack([W.T, -W.T])
    res = linprog(np.ones(2 * n), A_eq=A, b_eq=f / scale, bounds=[(0, None)] * (2 * n), method="highs")
    if res.status != 0:
        raise RuntimeError(f"polyhedral gauge LP failed: {res.message}")
    return float(res.fun) * scale


def _znorm_dual_bracket(space, f):
    """Both endpoints are evaluated at feasible points, so the bracket is certified."""
    import cvxpy as cp

    d = space.dim
    w8 = z_weights(d)
    if not np.any(f):
        return Bracket.point(0.0, "conic_duality")
    cplx = space.is_complex
    x = cp.Variable(d, complex=cplx)
    obj = cp.real(f @ x) if cplx else f @ x
    cp.Problem(cp.Maximize(obj), [cp.norm(x, "inf") + cp.norm(cp.multiply(w8, x), 2) <= 1]).solve(
        solver="CLARABEL")
    b = cp.Variable(d, complex=cplx)
    cp.Problem(cp.Minimize(cp.maximum(cp.norm(f - cp.multiply(w8, b), 1), cp.norm(b, 2)))).solve(
        solver="CLARABEL")
    xv = np.asarray(x.value)
    lo = abs(f @ xv) / norm_of(space, xv) if np.any(xv) else 0.0
    bv = np.asarray(b.value)
    hi = max(np.abs(f - w8 * bv).sum(), np.linalg.norm(bv))
    lo = min(lo, hi)
    return Bracket(float(lo), float(hi), "conic_duality")


def sup_linf_ratio(space):
    """Upper bound on ``‖x‖_∞ / ‖x‖`` over nonzero ``x``."""
    k = space.kind
    if k in ("lp", "znorm"):
        return 1.0
    if k == "polyhedral":
        return float(np.abs(primal_vertices(space)).max())
    if k == "sum_inf":
        return max(sup_linf_ratio(space.left), sup_linf_ratio(space.right))
    # |f_i| = |f(e_i)| ≤ ‖f‖ ‖e_i‖
    return float(max(norm_of(space.base, np.eye(space.dim, dtype=space.dtype))))


def sup_norm_over_linf(space):
    """Upper bound on ``‖x‖ / ‖x‖_∞`` (by the triangle inequality)."""
    return float(norm_of(space, np.eye(space.dim, dtype=space.dtype)).sum())


# -- vertices ---------------------------------------------------------------

def primal_vertices(space, cap=None):
    """Extreme points of the closed unit ball, in :func:`lex_key` order."""
    if not is_polyhedral(space):
        raise NotPolyhedral(f"{space} has infinitely many extreme points")
    k = space.kind
    if k == "lp":
        _check_cap(space, LP_VERTEX_CAP if cap is None else cap)
        if math.isinf(space.p):
            V = np.array(list(itertools.product((1.0, -1.0), repeat=space.dim)))
        else:
            V = np.vstack([np.eye(space.dim), -np.eye(space.dim)])
    elif k == "polyhedral":
        _check_cap(space, POLY_VERTEX_CAP if cap is None else cap)
        V = _polyhedral_vertices(space.W)
    elif k == "sum_inf":
        A = primal_vertices(space.left, cap)
        B = primal_vertices(space.right, cap)
        V = np.array([np.concatenate([a, b]) for a in A for b in B])
    else:
        V = dual_vertices(space.base, cap)
    return _sorted(V)


def dual_vertices(space, cap=None):
    """Extreme points of the dual unit ball, in :func:`lex_key` order."""
    if not is_polyhedral(space):
        raise NotPolyhedral(f"dual ball of {space} has infinitely many extreme points")
    k = space.kind
    if k == "lp":
        return primal_vertices(dual(space), cap)
    if k == "polyhedral":
        _check_cap(space, POLY_VERTEX_CAP if cap is None else cap)
        return _sorted(space.W)
    if k == "sum_inf":
        A = dual_vertices(space.left, cap)
        B = dual_vertices(space.right, cap)
        za, zb = np.zeros(space.left.dim), np.zeros(space.right.dim)
        return _sorted(np.array([np.concatenate([a, zb]) for a in A] + [np.concatenate([za, b]) for b in B]))
    return primal_vertices(space.base, cap)


def _check_cap(space, cap):
    if space.dim > cap:
        raise CapExceeded(f"{space}: dimension {space.dim} exceeds vertex cap {cap}")


def _sorted(V):
    V = np.asarray(V, dtype=float) + 0.0
    return np.array(sorted(V, key=lex_key))


def _polyhedral_vertices(W, tol=1e-9):
    d = W.shape[1]
    # one representative per ±pair; vertices solve w_S x = s for sign patterns s
    reps = []
    for w in W:
        if not any(np.allclose(w, -r) for r in reps):
            reps.append(w)
    reps = np.array(reps)
    found = {}
    for S in itertools.combinations(range(len(reps)), d):
        M = reps[list(S)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        for s in itertools.product((1.0, -1.0), repeat=d):
            x = np.linalg.solve(M, np.array(s))
            if np.abs(W @ x).max() <= 1 + tol:
                found.setdefault(tuple(np.round(x, 9) + 0.0), x)
    return np.array(list(found.values()))


# -- norming functionals ----------------------------------------------------

def norming_extremes(space, x, tol=1e-10):
    """Extreme points of the face ``{x* : ‖x*‖ = 1, x*(x) = 1}`` for a unit ``x``.

    Exact for every kind except complex ℓ_1 at vectors with zero entries,
    where only the real-sign extremes are returned.
    """
    x = as_vector(space, x)
    k = space.kind
    d = space.dim
    if k == "lp":
        a = np.abs(x)
        if math.isinf(space.p):
            out = []
            for i in np.flatnonzero(a >= a.max() - tol):
                f = np.zeros(d, dtype=space.dtype)
                f[i] = np.conj(x[i]) / a[i]
                out.append(f)
            return out
        if space.p == 1:
            base = np.where(a > tol, np.conj(x) / np.where(a > tol, a, 1.0), 0.0).astype(space.dtype)
            free = np.flatnonzero(a <= tol)
            out = []
            for s in itertools.product((1.0, -1.0), repeat=len(free)):
                f = base.copy()
                f[free] = s
                out.append(f)
            return out
        nrm = norm_of(space, x)
        f = np.conj(np.sign(x)) * a ** (space.p - 1) / nrm ** (space.p - 1)
        return [f.astype(space.dtype)]
    if k == "polyhedral":
        W = space.W
        return [w for w in _sorted(W[W @ x >= norm_of(space, x) - tol])]
    if k == "znorm":
        a = np.abs(x)
        w2 = z_weights(d) ** 2
        smooth = w2 * np.conj(x) / math.sqrt((w2 * a * a).sum())
        out = []
        for i in np.flatnonzero(a >= a.max() - tol):
            f = smooth.astype(space.dtype)
            f[i] += np.conj(x[i]) / a[i]
            out.append(f)
        return out
    if k == "sum_inf":
        dl = space.left.dim
        nl, nr = norm_of(space.left, x[:dl]), norm_of(space.right, x[dl:])
        top = max(nl, nr)
        out = []
        if nl >= top - tol:
            for f in norming_extremes(space.left, x[:dl] / nl, tol):
                out.append(np.concatenate([f, np.zeros(space.right.dim, dtype=space.dtype)]))
        if nr >= top - tol:
            for f in norming_extremes(space.right, x[dl:] / nr, tol):
                out.append(np.concatenate([np.zeros(dl, dtype=space.dtype), f]))
        return out
    return _norming_vectors(space.base, x, tol)


def _norming_vectors(base, f, tol):
    """Unit vectors ``v`` of ``base`` with ``f(v) = ‖f‖* = 1``."""
    k = base.kind
    if is_polyhedral(base):
        V = primal_vertices(base)
        return [v for v in V[V @ f >= 1 - tol]]
    if k == "sum_inf":
        dl = base.left.dim
        parts = []
        for sub, g in ((base.left, f[:dl]), (base.right, f[dl:])):
            s = dual_norm_of(sub, g)
            parts.append(_norming_vectors(sub, g / s, tol) if s > tol else [np.zeros(sub.dim, base.dtype)])
        return [np.concatenate([u, v]) for u in parts[0] for v in parts[1]]
    if k == "znorm":
        import cvxpy as cp

        v = cp.Variable(base.dim, complex=base.is_complex)
        obj = cp.real(f @ v) if base.is_complex else f @ v
        cp.Problem(cp.Maximize(obj), [cp.norm(v, "inf") + cp.norm(cp.multiply(z_weights(base.dim), v), 2) <= 1]
                   ).solve(solver="CLARABEL")
        v = np.asarray(v.value)
        v = v / norm_of(base, v)
        val = f @ v
        return [v * (abs(val) / val)]
    # polyhedral-free lp/dual bases are handled through dual() before reaching here
    return norming_extremes(dual(base), f, tol)


def duality_support(space, x, tol=DEFAULT_STATE_TOL):
    """A norming functional for the unit vector ``x``.

    Unique for smooth norms; otherwise the first extreme point of the dual
    face in :func:`lex_key` order.
    """
    x = as_vector(space, x)
    nx = float(norm_of(space, x))
    if abs(nx - 1.0) > tol:
        raise PreconditionFailed(f"duality_support needs a unit vector, got norm {nx!r}")
    ext = norming_extremes(space, x, tol=max(tol, 1e-12))
    return min(ext, key=lex_key)


# -- states -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StatePair:
    """A state ``(x, x*)`` with ``‖x‖ = ‖x*‖ = x*(x) = 1`` up to ``tol``."""

    x: np.ndarray
    xstar: np.ndarray
    tol: float = DEFAULT_STATE_TOL

    def value(self, T):
        """``x*(T x)`` for an operator or matrix ``T``."""
        A = getattr(T, "entries", T)
        return self.xstar @ (A @ self.x)

    def to_dict(self):
        return {"x": vector_to_json(self.x), "xstar": vector_to_json(self.xstar), "tol": self.tol}


def validate_state(space, x, xstar, tol=DEFAULT_STATE_TOL):
    x = as_vector(space, x)
    xstar = as_vector(space, xstar, "functional")
    nx = float(norm_of(space, x))
    if abs(nx - 1) > tol:
        raise NotAState("norm", f"(‖x‖ = {nx!r})")
    nf = dual_norm_bracket(space, xstar)
    if nf.lo > 1 + tol or nf.hi < 1 - tol:
        raise NotAState("dual_norm", f"(‖x*‖ in [{nf.lo!r}, {nf.hi!r}])")
    val = xstar @ x
    if abs(val - 1) > tol:
        raise NotAState("pairing", f"(x*(x) = {val!r})")
    if is_linf(space):
        # mass of x* off {|x(i)| = 1} is controlled by the slack of the equalities
        a = np.abs(x)
        off = a < 1 - tol
        if np.any(np.abs(xstar[off]) * (1 - a[off]) > 2 * tol):
            raise NotAState("support", "(x* charges a coordinate with |x(i)| < 1)")
    return StatePair(x, xstar, tol)


def random_unit(space, rng):
    d = space.dim
    v = rng.standard_normal(d)
    if space.is_complex:
        v = v + 1j * rng.standard_normal(d)
    return v / norm_of(space, v)


def random_state(space, seed):
    """A random state, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    x = random_unit(space, rng)
    ext = norming_extremes(space, x, tol=1e-12)
    if len(ext) == 1:
        f = ext[0]
    else:
        lam = rng.dirichlet(np.ones(len(ext)))
        f = np.tensordot(lam, np.array(ext), axes=1)
    return validate_state(space, x, f, tol=1e-12)


# -- JSON -------------------------------------------------------------------

def space_to_json(space):
    d = {"kind": space.kind, "dim": space.dim, "field": space.field}
    if space.kind == "lp":
        d["p"] = "inf" if math.isinf(space.p) else space.p
    elif space.kind == "polyhedral":
        d["dual_vertices"] = [list(r) for r in space.dual_vertex_rows]
    elif space.kind == "sum_inf":
        d["left"] = space_to_json(space.left)
        d["right"] = space_to_json(space.right)
    elif space.kind == "dual":
        d["base"] = space_to_json(space.base)
    return d


def space_from_json(d):
    kind = d["kind"]
    field = d.get("field", "real")
    if kind == "lp":
        p = d["p"]
        space = lp(math.inf if p in ("inf", "Infinity") else float(p), d["dim"], field)
    elif kind == "polyhedral":
        space = polyhedral(d["dual_vertices"])
    elif kind == "znorm":
        space = znorm(d["dim"], field)
    elif kind == "sum_inf":
        space = sum_inf(space_from_json(d["left"]), space_from_json(d["right"]))
    elif kind == "dual":
        space = dual(space_from_json(d["base"]))
    else:
        raise ValueError(f"unknown space kind {kind!r}")
    if "dim" in d and d["dim"] != space.dim:
        raise DimensionMismatch(f"declared dim {d['dim']} but descriptor has dim {space.dim}")
    return space


def vector_to_json(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return [[float(c.real), float(c.imag)] for c in v.ravel()]
    return [float(c) for c in v.ravel()]


def vector_from_json(data, space=None):
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 2 and (space is None or space.is_complex):
        arr = arr[:, 0] + 1j * arr[:, 1]
    return as_vector(space, arr) if space is not None else arr
