"""Operators on a finite-dimensional space, their norms and adjoints."""

from __future__ import annotations

import itertools
import math
import threading

import numpy as np
from scipy.optimize import minimize

from . import spaces as sp
from ._optim import complex_view, real_view, run_starts
from .bracket import Bracket
from .errors import DimensionMismatch, UnsupportedSpace

#: default multistart budget for norms without a closed form
DEFAULT_STARTS = 64
DEFAULT_STEPS = 500
#: largest number of active columns for exact sign enumeration on ℓ_∞ domains
SIGN_ENUM_CAP = 16


class Operator:
    """Dense square matrix acting on ``space`` by ``x ↦ entries @ x``.

    Entries are read-only.  Norm and radius certificates are cached in a
    private dict; concurrent writers can only store identical values.
    """

    __slots__ = ("entries", "space", "_cache", "_lock")
    __array_priority__ = 100

    def __init__(self, entries, space):
        A = np.array(entries)
        if A.shape != (space.dim, space.dim):
            raise DimensionMismatch(f"entries of shape {A.shape} on {space} of dim {space.dim}")
        if np.iscomplexobj(A) and not space.is_complex:
            if np.any(A.imag != 0):
                raise DimensionMismatch(f"complex entries on real space {space}")
            A = A.real
        A = np.array(A, dtype=space.dtype)
        A.setflags(write=False)
        self.entries = A
        self.space = space
        self._cache = {}
        self._lock = threading.Lock()

    @classmethod
    def identity(cls, space):
        return cls(np.eye(space.dim), space)

    @classmethod
    def zeros(cls, space):
        return cls(np.zeros((space.dim, space.dim)), space)

    @classmethod
    def rank_one(cls, f, v, space):
        """The operator ``x ↦ f(x) v`` (written ``f ⊗ v``)."""
        return cls(np.outer(np.asarray(v), np.asarray(f)), space)

    @property
    def dim(self):
        return self.space.dim

    def cached(self, key, compute):
        if key not in self._cache:
            val = compute()
            with self._lock:
                self._cache.setdefault(key, val)
        return self._cache[key]

    def _coerce(self, other):
        if isinstance(other, Operator):
            if other.space != self.space:
                raise DimensionMismatch(f"operators on {self.space} and {other.space}")
            return other.entries
        return np.asarray(other)

    def __call__(self, x):
        return apply(self, x)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.entries @ self._coerce(other), self.space)
        return apply(self, other)

    def __add__(self, other):
        return Operator(self.entries + self._coerce(other), self.space)

    __radd__ = __add__

    def __sub__(self, other):
        return Operator(self.entries - self._coerce(other), self.space)

    def __rsub__(self, other):
        return Operator(self._coerce(other) - self.entries, self.space)

    def __neg__(self):
        return Operator(-self.entries, self.space)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return Operator(c * self.entries, self.space)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Operator(self.entries / c, self.space)

    def __eq__(self, other):
        return (isinstance(other, Operator) and other.space == self.space
                and np.array_equal(other.entries, self.entries))

    __hash__ = None

    def __repr__(self):
        return f"Operator({self.entries.tolist()!r}, {self.space})"

    def to_dict(self):
        A = self.entries
        if np.iscomplexobj(A):
            rows = [[[float(c.real), float(c.imag)] for c in r] for r in A]
        else:
            rows = [[float(c) for c in r] for r in A]
        return {"space": sp.space_to_json(self.space), "entries": rows}

    @classmethod
    def from_dict(cls, d):
        space = sp.space_from_json(d["space"])
        A = np.asarray(d["entries"], dtype=float)
        if A.ndim == 3:
            A = A[..., 0] + 1j * A[..., 1]
        return cls(A, space)


def apply(T, x):
    return T.entries @ sp.as_vector(T.space, x)


def adjoint(T):
    """Transpose acting on the dual space, so that ``x*(T x) = (T* x*)(x)``."""
    return Operator(T.entries.T, sp.dual(T.space))


def hermitian_split(T):
    """``T = H + G`` with ``H`` hermitian and ``G`` skew-hermitian (ℓ_2 only).

    Over the reals ``⟨Gx, x⟩`` vanishes identically; over the complex field
    only its real part does.
    """
    if not sp.is_hilbert(T.space):
        raise UnsupportedSpace(f"hermitian_split needs an ℓ_2 space, got {T.space}")
    A = T.entries
    Ah = A.conj().T
    H = (A + Ah) / 2
    return Operator(H, T.space), Operator(A - H, T.space)


# -- operator norm ----------------------------------------------------------

def operator_norm(T, starts=DEFAULT_STARTS, steps=DEFAULT_STEPS, seed=0, workers=1):
    """Certified bracket on ``‖T‖``; a point when a closed form applies."""
    key = ("norm", starts, steps, seed)
    return T.cached(key, lambda: map_norm(T.entries, T.space, T.space, starts, steps, seed, workers))


def map_norm(M, domain, codomain, starts=DEFAULT_STARTS, steps=DEFAULT_STEPS, seed=0, workers=1):
    """Norm of the matrix ``M`` viewed as a map from ``domain`` to ``codomain``."""
    M = np.asarray(M)
    if not np.any(M):
        return Bracket.point(0.0, "zero")
    cplx = domain.is_complex

    if codomain.kind == "sum_inf":
        dl = codomain.left.dim
        a = map_norm(M[:dl], domain, codomain.left, starts, steps, seed, workers)
        b = map_norm(M[dl:], domain, codomain.right, starts, steps, seed, workers)
        return Bracket(max(a.lo, b.lo), max(a.hi, b.hi), f"max({a.method},{b.method})",
                       a.certified and b.certified)
    if domain.kind == "sum_inf":
        dl = domain.left.dim
        ML, MR = M[:, :dl], M[:, dl:]
        if not np.any(MR):
            return map_norm(ML, domain.left, codomain, starts, steps, seed, workers)
        if not np.any(ML):
            return map_norm(MR, domain.right, codomain, starts, steps, seed, workers)
        if not sp.is_polyhedral(domain):
            a = map_norm(ML, domain.left, codomain, starts, steps, seed, workers)
            b = map_norm(MR, domain.right, codomain, starts, steps, seed, workers)
            lo = max(a.lo, b.lo, _multistart_lower(M, domain, codomain, starts, steps, seed, workers))
            hi = a.hi + b.hi
            return Bracket(min(lo, hi), hi, "block_triangle", a.certified and b.certified)
    if domain.kind == "dual" and codomain.kind == "dual":
        # ‖M : X* → Y*‖ = ‖Mᵀ : Y → X‖ for the bilinear pairing
        return map_norm(M.T, codomain.base, domain.base, starts, steps, seed, workers)

    if sp.is_l1(domain):
        cols = _norm_bracket(codomain, M.T)
        return Bracket(float(cols[0].max()), float(cols[1].max()), "column_max")
    if sp.is_linf(domain) and not cplx:
        active = np.flatnonzero(np.any(M != 0, axis=0))
        if len(active) <= SIGN_ENUM_CAP:
            S = _sign_vectors(len(active))
            lo, hi = _norm_bracket(codomain, S @ M[:, active].T)
            return Bracket(float(lo.max()), float(hi.max()), "sign_enumeration")
    if sp.is_linf(domain) and sp.is_linf(codomain):
        return Bracket.point(np.abs(M).sum(axis=1).max(), "row_sum")
    if sp.is_hilbert(domain) and sp.is_hilbert(codomain):
        return Bracket.point(np.linalg.norm(M, 2), "singular_value")
    if sp.is_polyhedral(domain):
        lo, hi = _norm_bracket(codomain, sp.primal_vertices(domain) @ M.T)
        return Bracket(float(lo.max()), float(hi.max()), "vertex_max")

    if domain == codomain and np.array_equal(M, M[0, 0] * np.eye(len(M))):
        return Bracket.point(abs(M[0, 0]), "scalar")
    U, s, Vh = np.linalg.svd(M)
    if s[1:].max(initial=0.0) <= 1e-14 * s[0]:
        # rank one: M = s u vᴴ, i.e. x ↦ (conj(v) · x) s u
        f = Vh[0]
        fb = sp.dual_norm_bracket(domain, f)
        nu = float(sp.norm_of(codomain, s[0] * U[:, 0]))
        return Bracket(fb.lo * nu, fb.hi * nu, "rank_one", fb.certified)

    lo = _multistart_lower(M, domain, codomain, starts, steps, seed, workers)
    hi = _crude_upper(M, domain, codomain)
    method = "multistart+triangle"
    if domain.dim * (2 if cplx else 1) <= 5:
        bb = _branch_and_bound(M, domain, codomain, lo)
        if bb < hi:
            hi, method = bb, "multistart+branch_and_bound"
    return Bracket(min(lo, hi), hi, method)


def _sign_vectors(k):
    if k == 0:
        return np.zeros((1, 0))
    # one representative per ±pair
    S = np.array(list(itertools.product((1.0, -1.0), repeat=k - 1)))
    return np.hstack([np.ones((len(S), 1)), S]) if k > 1 else np.ones((1, 1))


def _norm_bracket(space, V):
    """Row-wise (lo, hi) norms; exact except for duals of conic norms."""
    if space.kind == "dual" and not sp.is_polyhedral(space) and not sp.is_hilbert(space.base):
        bs = [sp.dual_norm_bracket(space.base, v) for v in V]
        return np.array([b.lo for b in bs]), np.array([b.hi for b in bs])
    n = np.asarray(sp.norm_of(space, V), dtype=float)
    return n, n


def _multistart_lower(M, domain, codomain, starts, steps, seed, workers):
    d = domain.dim
    cplx = domain.is_complex

    def ratio(u):
        x = complex_view(u) if cplx else u
        nx = sp.norm_of(domain, x)
        if nx == 0:
            return 0.0
        return float(sp.norm_of(codomain, M @ x) / nx)

    def one(rng, i):
        if i < d:
            x0 = np.eye(d)[i].astype(domain.dtype)
        else:
            x0 = rng.standard_normal(d) + (1j * rng.standard_normal(d) if cplx else 0)
        u0 = real_view(x0) if cplx else x0
        res = minimize(lambda u: -ratio(u), u0, method="L-BFGS-B", options={"maxiter": steps})
        return max(ratio(u0), -float(res.fun))

    return max(run_starts(one, seed, starts, workers))


def _crude_upper(M, domain, codomain):
    cols = _norm_bracket(codomain, M.T)[1]
    return float(cols.sum() * sp.sup_linf_ratio(domain))


def _branch_and_bound(M, domain, codomain, lo, rtol=1e-7, max_cells=200_000, max_rounds=40):
    """Upper bound on ``sup ‖Mx‖/‖x‖`` over the faces ``x_k = 1`` of the ℓ_∞ cube.

    Up to a unimodular factor every nonzero vector lies on such a face, with
    the other coordinates in the unit square (real) or the unit disc,
    covered by a square (complex).  On a box of centre ``c`` and ∞-radius
    ``r`` in those parameters the ratio is at most
    ``(‖Mc‖ + L r) / (‖c‖ - C r)``.
    """
    d = domain.dim
    cplx = domain.is_complex
    grow = math.sqrt(2.0) if cplx else 1.0
    col = sp.norm_of(codomain, M.T)
    unit = sp.norm_of(domain, np.eye(d))
    best = lo
    hi_total = -np.inf
    for k in range(d):
        free = [j for j in range(d) if j != k]
        dirs = np.zeros((len(free) * (2 if cplx else 1), d), dtype=domain.dtype)
        for a, j in enumerate(free):
            dirs[a, j] = 1.0
            if cplx:
                dirs[len(free) + a, j] = 1j
        q = len(dirs)
        L = grow * col[free].sum()
        C = grow * unit[free].sum()
        m = 8
        axes = [np.linspace(-1 + 1 / m, 1 - 1 / m, m)] * q
        t = np.array(list(itertools.product(*axes))) if q else np.zeros((1, 0))
        r = 1.0 / m
        offs = np.array(list(itertools.product((-0.5, 0.5), repeat=q))) if q else None
        bound = None
        for _ in range(max_rounds):
            c = np.zeros(d, dtype=domain.dtype)
            c[k] = 1.0
            c = c + t @ dirs
            num = sp.norm_of(codomain, c @ M.T)
            den = sp.norm_of(domain, c)
            best = max(best, float((num / den).max()))
            slack = den - C * r
            bound = np.where(slack > 0, (num + L * r) / np.where(slack > 0, slack, 1.0), np.inf)
            keep = bound > best * (1 + rtol)
            if q == 0 or not keep.any():
                bound = np.array([best * (1 + rtol)])
                break
            if keep.sum() * len(offs) > max_cells:
                break
            t = (t[keep][:, None, :] + r * offs[None]).reshape(-1, q)
            r /= 2
        hi_total = max(hi_total, float(bound.max()))
    return max(hi_total, best)
