"""Constructive corrections of near-attaining functionals and operators.

Each corrector re-checks its own postconditions and raises
:class:`~numradius.errors.VerificationError` instead of returning output that
fails them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spaces as sp
from .errors import HypothesisFailed, NotCertified, PreconditionFailed, UnsupportedSpace, VerificationError, ZeroRadius
from .numrange import numerical_radius
from .operators import Operator, adjoint, hermitian_split, map_norm, operator_norm

ATTAIN_TOL = 1e-10


@dataclass
class CorrectionResult:
    corrected: object
    witness: sp.StatePair
    distance: float
    budget_report: dict = field(default_factory=dict)
    verified: bool = False

    def to_dict(self):
        c = self.corrected
        return {
            "corrected": c.to_dict() if isinstance(c, Operator) else sp.vector_to_json(c),
            "witness": self.witness.to_dict(),
            "distance": self.distance,
            "budget_report": self.budget_report,
            "verified": self.verified,
        }


def _check(cond, what):
    if not cond:
        raise VerificationError(f"postcondition failed: {what}")


def _phase(z):
    return z / abs(z) if z != 0 else 1.0


# -- normalisation ----------------------------------------------------------

def normalize_input(T, eta):
    """Rescale ``T`` to numerical radius one and halve the threshold.

    Requires ``‖T‖ ≤ 1``.  If ``|x*(Tx)| > 1 - eta/2`` then ``v(T) > 1 - eta/2``
    and the rescaled operator is within ``eta/2`` of ``T`` while still
    satisfying ``|x*(T x)| / v(T) > 1 - eta/2``.
    """
    n = operator_norm(T)
    if n.lo > 1 + 1e-12:
        raise PreconditionFailed(f"normalize_input needs ‖T‖ ≤ 1, got {n.lo!r}")
    v = numerical_radius(T).value
    if v.hi <= 1e-14:
        raise ZeroRadius("numerical radius is zero")
    if v.width > 1e-9 * v.hi:
        raise NotCertified("numerical radius needed as a point value", v)
    return T / v.mid, eta / 2


# -- functional corrections -------------------------------------------------

def rank_one_push(S, x1star, x0, x0star, tol=ATTAIN_TOL):
    """``z* = S* x1*``; a norm-one functional attaining its norm at ``x0``."""
    space = S.space
    nS = operator_norm(S)
    if nS.lo > 1 + tol:
        raise PreconditionFailed(f"rank_one_push needs ‖S‖ ≤ 1, got ‖S‖ ≥ {nS.lo!r}")
    sp.validate_state(space, x0, x1star, tol=1e-9)
    val = x1star @ (S.entries @ x0)
    if abs(abs(val) - 1) > tol:
        raise PreconditionFailed(f"rank_one_push needs |x1*(S x0)| = 1, got {abs(val)!r}")
    z = adjoint(S).entries @ np.asarray(x1star)
    dist = sp.dual_norm_of(space, z - x0star)
    bound = operator_norm(S - Operator.rank_one(x0star, x0, space)).hi
    nz = sp.dual_norm_of(space, z)
    zx = z @ x0
    _check(abs(nz - 1) <= 1e-9, "‖z*‖ = 1")
    _check(abs(abs(zx) - 1) <= tol, "|z*(x0)| = 1")
    _check(dist <= bound + 1e-9, "‖z* - x0*‖ ≤ ‖S - x0*⊗x0‖")
    w = sp.validate_state(space, x0, z * np.conj(_phase(zx)) if space.is_complex else z * np.sign(zx), tol=1e-9)
    return CorrectionResult(z, w, float(dist), {"bound": float(bound)}, True)


def ssd_threshold(x0, weights, eps, field="real", tol=1e-12):
    """Admissible ``η`` for :func:`ssd_functional_corrector` at ``x0``.

    With ``ρ = max{|x0(i)| : |x0(i)| < 1}`` the guarantee is
    ``η = α_min δ`` where ``δ = eps (1-ρ)/4`` (real) and
    ``δ = min(eps²/8, eps (1-ρ)/4)`` (complex).
    """
    a = np.abs(np.asarray(x0))
    off = a[a < 1 - tol]
    rho = float(off.max()) if off.size else 0.0
    delta = eps * (1 - rho) / 4
    if field == "complex":
        delta = min(delta, eps * eps / 8)
    return float(np.min(weights)) * delta


def ssd_functional_corrector(space, x0, weights, ystars, eps, tol=1e-12):
    """Move each ``y_j*`` onto the face of ``x0`` in ``ℓ_1 = (ℓ_∞)*``.

    Mass off ``A = {i : |x0(i)| = 1}`` is dropped and the remaining mass is
    aligned with the phases of ``x0`` and renormalised.
    """
    if not sp.is_linf(space):
        raise UnsupportedSpace(f"SSD corrector needs an ℓ_∞ space, got {space}")
    x0 = sp.as_vector(space, x0)
    if abs(np.abs(x0).max() - 1) > 1e-12:
        raise PreconditionFailed("ssd_functional_corrector needs ‖x0‖_∞ = 1")
    weights = np.asarray(weights, dtype=float)
    Y = np.array([sp.as_vector(space, y, "functional") for y in ystars])
    if len(weights) != len(Y) or np.any(weights <= 0) or abs(weights.sum() - 1) > 1e-12:
        raise PreconditionFailed("weights must be positive and sum to 1")
    if np.any(np.abs(Y).sum(axis=1) > 1 + 1e-12):
        raise PreconditionFailed("each ‖y_j*‖_1 must be at most 1")
    eta = ssd_threshold(x0, weights, eps, space.field, tol)
    val = float(np.real(weights @ (Y @ x0)))
    if not val > 1 - eta:
        raise HypothesisFailed(f"Re Σ α_j y_j*(x0) = {val!r} is not above 1 - η = {1 - eta!r}",
                               gap=1 - val, threshold=eta)
    a = np.abs(x0)
    A = a >= 1 - tol
    ph = np.conj(x0) / np.where(a > 0, a, 1.0)
    out = []
    for y in Y:
        m = np.abs(y) * A
        s = m.sum()
        z = np.where(A, ph * (m / s if s > 0 else A / A.sum()), 0.0).astype(space.dtype)
        _check(abs(z @ x0 - 1) <= 1e-10, "z*(x0) = 1")
        _check(abs(np.abs(z).sum() - 1) <= 1e-12, "‖z*‖_1 = 1")
        _check(np.abs(z - y).sum() < eps, "‖z* - y*‖_1 < eps")
        out.append(z)
    return out


# -- real Hilbert pipeline --------------------------------------------------

def _require_real_hilbert(space, what):
    if not (sp.is_hilbert(space) and not space.is_complex):
        raise UnsupportedSpace(f"{what} needs a real ℓ_2 space, got {space}")


def rotation_between(x, y, space=None):
    """Plane rotation of ``span{x, y}`` taking ``x`` to ``y`` (identity elsewhere)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    space = space or sp.l2(len(x))
    _require_real_hilbert(space, "rotation_between")
    x, y = sp.as_vector(space, x), sp.as_vector(space, y)
    if abs(np.linalg.norm(x) - 1) > 1e-12 or abs(np.linalg.norm(y) - 1) > 1e-12:
        raise PreconditionFailed("rotation_between needs unit vectors")
    d = len(x)
    c = float(np.clip(x @ y, -1.0, 1.0))
    w = y - c * x
    nw = np.linalg.norm(w)
    if nw <= 1e-15:
        if c > 0:
            return Operator.identity(space)
        if d == 1:
            return Operator(-np.eye(1), space)
        # antipodal: any unit w orthogonal to x
        k = int(np.argmin(np.abs(x)))
        w = np.eye(d)[k] - x[k] * x
        nw = np.linalg.norm(w)
    w = w / nw
    s = math.sqrt(max(0.0, 1 - c * c))
    U = np.eye(d) + (c - 1) * (np.outer(x, x) + np.outer(w, w)) + s * (np.outer(w, x) - np.outer(x, w))
    return Operator(U, space)


def bpb_nu_step(H, x, delta, mode="block"):
    """Move a near-attaining symmetric ``H`` to an exactly attaining ``S1``.

    Returns ``(state, S1, info)``.  In block mode ``y = x`` and
    ``S1 = ± x xᵀ ⊕ P⊥ H P⊥``; in eigen mode ``y`` is the normalised
    projection of ``x`` onto the top eigenspace and ``S1 = H``.
    """
    space = H.space
    _require_real_hilbert(space, "bpb_nu_step")
    A = H.entries
    if np.abs(A - A.T).max() > 1e-12:
        raise PreconditionFailed("bpb_nu_step needs a symmetric operator")
    w, Q = np.linalg.eigh(A)
    if abs(np.abs(w).max() - 1) > 1e-9:
        raise PreconditionFailed(f"bpb_nu_step needs v(H) = ‖H‖ = 1, got {np.abs(w).max()!r}")
    x = sp.as_vector(space, x)
    if abs(np.linalg.norm(x) - 1) > 1e-12:
        raise PreconditionFailed("bpb_nu_step needs a unit vector")
    a = float(x @ A @ x)
    sgn = 1.0 if a >= 0 else -1.0
    a, A, w = abs(a), sgn * A, np.sort(sgn * w)
    if not a > 1 - delta:
        raise HypothesisFailed(f"<Hx, x> = {sgn * a!r} is not within delta = {delta!r} of ±1",
                               gap=1 - a, threshold=delta)
    if mode == "block":
        b = A @ x - a * x
        S1 = A + (1 - a) * np.outer(x, x) - (np.outer(b, x) + np.outer(x, b))
        y = x
        info = {"mode": "block", "coupling": float(np.linalg.norm(b)), "y_shift": 0.0}
        bound = delta + 2 * math.sqrt(2 * delta)
    elif mode == "eigen":
        top = w >= 1 - 1e-12
        wa, Qa = np.linalg.eigh(A)
        P = Qa[:, wa >= 1 - 1e-12]
        px = P @ (P.T @ x)
        y = px / np.linalg.norm(px)
        gap = 1 - float(wa[wa < 1 - 1e-12].max()) if (~top).any() else 2.0
        S1 = A
        info = {"mode": "eigen", "spectral_gap": gap, "y_shift": float(np.linalg.norm(y - x)),
                "c1": math.sqrt(2 / gap)}
        _check(info["y_shift"] <= math.sqrt(2 * delta / gap) + 1e-12, "‖y - x‖ ≤ c1 √delta")
        bound = 0.0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    S1 = sgn * S1
    S1 = (S1 + S1.T) / 2
    dist = float(np.linalg.norm(S1 - H.entries, 2))
    _check(abs(np.abs(np.linalg.eigvalsh(S1)).max() - 1) <= 1e-9, "v(S1) = 1")
    _check(abs(abs(y @ S1 @ y) - 1) <= ATTAIN_TOL, "|<S1 y, y>| = 1")
    _check(dist <= bound + 1e-12 or mode == "eigen", "‖S1 - H‖ ≤ delta + 2√(2 delta)")
    info.update(distance=dist, bound=bound, sign=sgn)
    return sp.StatePair(y, y, 1e-12), Operator(S1, space), info


def hilbert_threshold(eps):
    """``η`` with ``η + 2√(2η) = eps/7`` (the block step then moves ``T`` by less than ``eps``)."""
    s = -math.sqrt(2) + math.sqrt(2 + eps / 7)
    return s * s


def hilbert_corrector(T, x, eps, mode="block"):
    """Correct ``T`` on real ℓ_2 so that it attains ``v = 1`` at ``(x, x)``.

    Splits ``T = H + G``, corrects ``H`` at ``x``, conjugates the result by
    the rotation taking ``x`` to the corrected point and adds ``G`` back.
    """
    space = T.space
    _require_real_hilbert(space, "hilbert_corrector")
    v = numerical_radius(T).value
    if abs(v.hi - 1) > 1e-9:
        raise PreconditionFailed(f"hilbert_corrector needs v(T) = 1, got {v.hi!r}")
    x = sp.as_vector(space, x)
    if abs(np.linalg.norm(x) - 1) > 1e-12:
        raise PreconditionFailed("hilbert_corrector needs a unit vector")
    eta = hilbert_threshold(eps)
    val = float(x @ T.entries @ x)
    if not abs(val) > 1 - eta:
        raise HypothesisFailed(f"|<Tx, x>| = {abs(val)!r} is not above 1 - η = {1 - eta!r}",
                               gap=1 - abs(val), threshold=eta)
    H, G = hermitian_split(T)
    state, S1, info = bpb_nu_step(H, x, eta, mode=mode)
    U = rotation_between(x, state.x, space)
    S2 = U.entries.T @ S1.entries @ U.entries
    S = Operator(S2 + G.entries, space)
    dist = float(np.linalg.norm(S.entries - T.entries, 2))
    vS = numerical_radius(S).value.hi
    att = float(x @ S.entries @ x)
    _check(abs(vS - 1) <= 1e-9, "v(S) = 1")
    _check(abs(abs(att) - 1) <= ATTAIN_TOL, "|<Sx, x>| = 1")
    _check(dist < eps, "‖S - T‖ < eps")
    _check(np.array_equal(S.entries - S2, G.entries) or np.abs(S.entries - S2 - G.entries).max() <= 1e-15,
           "S - S2 = G")
    report = dict(info, eta=eta, rotation_shift=float(np.linalg.norm(U.entries - np.eye(len(x)), 2)))
    return CorrectionResult(S, sp.StatePair(x, x, 1e-12), dist, report, True)


# -- ℓ_∞ operator corrector -------------------------------------------------

def linf_threshold(state, eps, xi=None, field="real"):
    """Admissible gap for :func:`linf_point_corrector` at ``state``."""
    xi = eps / 8 if xi is None else xi
    alpha = np.abs(state.xstar[np.abs(state.xstar) > 0])
    return ssd_threshold(state.x, alpha / alpha.sum(), xi, field)


def linf_point_corrector(T, state, eps, xi=None):
    """Correct ``T`` on ℓ_∞ⁿ so that it attains ``v = 1`` exactly at ``state``."""
    space = T.space
    if not sp.is_linf(space):
        raise UnsupportedSpace(f"linf_point_corrector needs an ℓ_∞ space, got {space}")
    xi = eps / 8 if xi is None else xi
    if not 0 < xi < eps / 4:
        raise PreconditionFailed("xi must lie in (0, eps/4)")
    st = sp.validate_state(space, state.x, state.xstar, tol=state.tol)
    x0, f0 = st.x, st.xstar
    A = T.entries
    vT = float(np.abs(A).sum(axis=1).max())
    if abs(vT - 1) > 1e-9:
        raise PreconditionFailed(f"linf_point_corrector needs v(T) = 1, got {vT!r}")
    idx = np.flatnonzero(np.abs(f0) > 0)
    alpha = f0[idx]
    wts = np.abs(alpha)
    if abs(wts.sum() - 1) > 1e-9:
        raise PreconditionFailed("x0* must have unit ℓ_1 mass on its support")
    val = f0 @ (A @ x0)
    eta = ssd_threshold(x0, wts / wts.sum(), xi, space.field)
    if not abs(val) > 1 - eta:
        raise HypothesisFailed(f"|x0*(T x0)| = {abs(val)!r} is not above 1 - η = {1 - eta!r}",
                               gap=1 - abs(val), threshold=eta)
    r = np.conj(_phase(val))
    u = alpha / wts  # unit phases of the α_i
    phis = (u * r)[:, None] * A[idx]  # y_i* ∘ T
    if not space.is_complex:
        phis = phis.real
    zs = ssd_functional_corrector(space, x0, wts / wts.sum(), phis, xi)
    k = 1 + eps / 4
    S = np.array(A, dtype=space.dtype)
    c = np.conj(u) * np.conj(r)  # coefficients of y_{n_i}
    for i, n_i, z in zip(range(len(idx)), idx, zs):
        S[n_i] = c[i] * k * z
    nS = float(np.abs(S).sum(axis=1).max())
    vS = numerical_radius(Operator(S, space)).value.hi
    att = abs(f0 @ (S @ x0))
    _check(max(abs(nS - k), abs(vS - k), abs(att - k)) <= 1e-9, "v(S) = ‖S‖ = |x0*(S x0)| = 1 + eps/4")
    untouched = np.setdiff1d(np.arange(T.dim), idx)
    _check(np.array_equal(S[untouched], A[untouched]), "rows outside supp x0* unchanged")
    Sf = Operator(S / k, space)
    dist = float(np.abs(Sf.entries - A).sum(axis=1).max())
    vf = float(np.abs(Sf.entries).sum(axis=1).max())
    attf = f0 @ (Sf.entries @ x0)
    _check(abs(vf - 1) <= 1e-9, "v(S/(1+eps/4)) = 1")
    _check(abs(abs(attf) - 1) <= ATTAIN_TOL, "|x0*(S x0)| = v(S)")
    _check(dist < eps, "‖S - T‖ < eps")
    report = {"eta": eta, "xi": xi, "support": idx.tolist(), "intermediate_norm": nS,
              "intermediate_radius": vS, "intermediate_value": float(att), "scale": k}
    return CorrectionResult(Sf, st, dist, report, True)
