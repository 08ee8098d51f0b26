"""Acceptance suite: one check per criterion, each reported as a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` (lines printed as they finish).
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from numradius import probes as pb
from numradius import spaces as sp
from numradius.correctors import hilbert_corrector, hilbert_threshold, linf_point_corrector, linf_threshold, rotation_between
from numradius.numrange import numerical_index, numerical_radius, second_numerical_index
from numradius.operators import Operator, adjoint, operator_norm

RESULTS: dict[int, tuple[bool, str]] = {}


def record(k, ok, detail):
    RESULTS[k] = (bool(ok), detail)
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}"
    if __name__ == "__main__":
        print(line, flush=True)
    assert ok, line


# -- 1 ----------------------------------------------------------------------

def _grid_states_linf(d, per_axis):
    """Points on every facet of the ℓ_∞ᵈ sphere, each with its facet functional."""
    t = np.linspace(-1, 1, per_axis)
    free = np.array(np.meshgrid(*([t] * (d - 1)), indexing="ij")).reshape(d - 1, -1).T
    xs, fs = [], []
    for i in range(d):
        for s in (1.0, -1.0):
            x = np.insert(free, i, s, axis=1)
            f = np.zeros((len(x), d))
            f[:, i] = s
            xs.append(x)
            fs.append(f)
    return np.vstack(xs), np.vstack(fs)


def _grid_states_l1(d, per_axis):
    """ℓ_1 states: vertex ±e_i paired with the facet grid of the dual cube."""
    F, _ = _grid_states_linf(d, per_axis)
    xs, fs = [], []
    for i in range(d):
        for s in (1.0, -1.0):
            keep = F[:, i] == s
            x = np.zeros((keep.sum(), d))
            x[:, i] = s
            xs.append(x)
            fs.append(F[keep])
    return np.vstack(xs), np.vstack(fs)


def _brute(A, X, F):
    return float(np.abs(np.einsum("kd,de,ke->k", F, A, X)).max())


def check_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    cases = [("linf2", sp.linf(2), _grid_states_linf(2, 2501)),
             ("l1_2", sp.l1(2), _grid_states_l1(2, 5001)),
             ("linf3", sp.linf(3), _grid_states_linf(3, 41))]
    worst = 0.0
    ok = True
    for name, X, (G, F) in cases:
        assert len(G) >= 10_000, name
        h = 2.0 / (round(math.sqrt(len(G))) if X.dim == 3 else len(G) / (2 * X.dim))
        for _ in range(100):
            A = rng.standard_normal((X.dim, X.dim))
            v = numerical_radius(Operator(A, X)).value.hi
            vb = _brute(A, G, F)
            res = h * np.abs(A).sum()
            worst = max(worst, abs(v - vb))
            ok &= (vb <= v + 1e-12) and (v - vb <= res)
    dt = time.perf_counter() - t0
    ok &= dt < 120
    record(1, ok, f"vertex-pair v matches ≥1e4-state brute force on 300 operators "
                  f"(max |Δ| = {worst:.2e}, {dt:.1f} s)")


# -- 2 ----------------------------------------------------------------------

def check_2():
    rng = np.random.default_rng(202)
    worst = 0.0
    for m in range(2, 6):
        X = sp.l2(m)
        for _ in range(100):
            A = rng.standard_normal((m, m))
            closed = float(np.abs(np.linalg.eigvalsh((A + A.T) / 2)).max())
            ms = numerical_radius(Operator(A, X), method="multistart", starts=16, steps=300, seed=0).value.lo
            worst = max(worst, abs(closed - ms))
    record(2, worst <= 1e-6, f"real ℓ_2ᵐ closed form vs multistart, m = 2..5, 400 operators (max |Δ| = {worst:.2e})")


# -- 3 ----------------------------------------------------------------------

def check_3():
    X = sp.l2(2, "complex")
    J = Operator(np.array([[0, 1], [0, 0]], dtype=complex), X)
    v = numerical_radius(J).value
    a = np.linspace(0, math.pi / 2, 401)
    ph = np.linspace(0, 2 * math.pi, 401)
    aa, pp = np.meshgrid(a, ph)
    brute = float(np.abs(np.cos(aa) * np.exp(1j * pp) * np.sin(aa)).max())  # |x^H J x| = |conj(x1) x2|
    ok = abs(v.hi - 0.5) <= 1e-6 and abs(v.lo - 0.5) <= 1e-6 and abs(brute - 0.5) <= 1e-4
    record(3, ok, f"complex Jordan block v = [{v.lo:.10f}, {v.hi:.10f}], brute force {brute:.8f}")


# -- 4 ----------------------------------------------------------------------

def check_4():
    n2 = numerical_index(sp.l2(2), budget=16, seed=0).value
    ninf = numerical_index(sp.linf(2), budget=64, seed=0).value
    rng = np.random.default_rng(404)
    worst = math.inf
    for X in (sp.l2(2, "complex"), sp.l2(3, "complex"), sp.linf(2, "complex"), sp.l1(3, "complex")):
        for _ in range(25):
            A = rng.standard_normal((X.dim, X.dim)) + 1j * rng.standard_normal((X.dim, X.dim))
            T = Operator(A, X)
            worst = min(worst, numerical_radius(T).value.lo / operator_norm(T).hi)
    ok = n2.hi == 0.0 and abs(ninf.lo - 1) <= 1e-3 and abs(ninf.hi - 1) <= 1e-3 and worst >= 1 / math.e - 1e-6
    record(4, ok, f"n(ℓ_2²) hi = {n2.hi}, n(ℓ_∞²) = [{ninf.lo}, {ninf.hi}], "
                  f"min complex v/‖T‖ = {worst:.4f} ≥ 1/e")


# -- 5 ----------------------------------------------------------------------

def check_5():
    ok, parts = True, []
    for m in (2, 3):
        b = second_numerical_index(sp.l2(m), budget=32, seed=0).value
        ok &= b.lo - 1e-12 <= 1 <= b.hi + 1e-12 and b.width <= 1e-2
        parts.append(f"n′(ℓ_2^{m}) = [{b.lo:.6f}, {b.hi:.6f}]")
    X = sp.l2(2, "complex")
    a = second_numerical_index(X, budget=32, seed=0).value
    b = numerical_index(X, budget=32, seed=0).value
    ok &= (a.lo, a.hi) == (b.lo, b.hi)
    parts.append(f"complex n′ = n = [{a.lo:.4f}, {a.hi:.4f}]")
    record(5, ok, "; ".join(parts))


# -- 6 ----------------------------------------------------------------------

def _admissible_hilbert(rng, m, eta):
    A = rng.standard_normal((m, m))
    T = A / np.abs(np.linalg.eigvalsh((A + A.T) / 2)).max()
    w, U = np.linalg.eigh((T + T.T) / 2)
    u = U[:, np.argmax(np.abs(w))]
    while True:
        g = rng.standard_normal(m)
        g -= (g @ u) * u
        x = u + rng.uniform(0, 1) * math.sqrt(eta) * g / np.linalg.norm(g)
        x /= np.linalg.norm(x)
        if abs(x @ T @ x) > 1 - eta:
            return Operator(T, sp.l2(m)), x


def check_6():
    eps = 0.1
    eta = hilbert_threshold(eps)
    rng = np.random.default_rng(606)
    ok, worst_d, worst_v, worst_a, worst_u = True, 0.0, 0.0, 0.0, 0.0
    for k in range(500):
        m = 2 + k % 4
        T, x = _admissible_hilbert(rng, m, eta)
        r = hilbert_corrector(T, x, eps)
        S = r.corrected.entries
        vS = float(np.abs(np.linalg.eigvalsh((S + S.T) / 2)).max())
        att = abs(x @ S @ x)
        worst_v = max(worst_v, abs(vS - 1))
        worst_a = max(worst_a, abs(att - 1))
        worst_d = max(worst_d, r.distance)
        y = sp.random_unit(sp.l2(m), rng)
        U = rotation_between(x, y).entries
        worst_u = max(worst_u, abs(np.linalg.norm(U - np.eye(m), 2) - np.linalg.norm(x - y)))
    ok = worst_v <= 1e-9 and worst_a <= 1e-10 and worst_d < eps and worst_u <= 1e-12
    record(6, ok, f"500 Hilbert corrections at eps = 0.1: max |v(S)-1| = {worst_v:.1e}, "
                  f"max ||<Sx,x>|-1| = {worst_a:.1e}, max dist = {worst_d:.4f}, rotation err = {worst_u:.1e}")


# -- 7 ----------------------------------------------------------------------

def _admissible_linf(rng, n, eps):
    """Random ``(T, state)`` on ℓ_∞ⁿ with ``v(T) = ‖T‖ = 1`` and gap below the threshold."""
    X = sp.linf(n)
    while True:
        x = rng.uniform(-1, 1, n)
        A = rng.choice(n, size=rng.integers(1, n + 1), replace=False)
        x[A] = rng.choice([-1.0, 1.0], size=len(A))
        f = np.zeros(n)
        f[A] = rng.dirichlet(np.ones(len(A))) * np.sign(x[A])
        st = sp.validate_state(X, x, f)
        eta = linf_threshold(st, eps)
        B = rng.standard_normal((n, n))
        B /= np.abs(B).sum(axis=1, keepdims=True) * rng.uniform(1, 2, (n, 1))
        for i in A:
            B[i] = np.sign(x[i]) * _row_attaining(x, rng, 1 - rng.uniform(0, eta / 2))
        B[A[0]] /= np.abs(B[A[0]]).sum()
        if abs(f @ B @ x) > 1 - eta:
            return Operator(B, X), st


def _row_attaining(x, rng, target):
    """A row ``r`` with ``‖r‖_1 = 1`` and ``r·x = target`` (or larger)."""
    s = np.where(x >= 0, 1.0, -1.0)
    r = s * rng.dirichlet(np.ones(len(x)))
    a = r @ x
    k = int(np.argmax(np.abs(x)))
    e = np.zeros(len(x))
    e[k] = s[k]
    lam = 0.0 if a >= target else (target - a) / (1 - a)
    return (1 - lam) * r + lam * e


def check_7():
    eps = 0.5
    rng = np.random.default_rng(707)
    worst_i, worst_d = 0.0, 0.0
    for k in range(200):
        n = 2 + k % 7
        T, st = _admissible_linf(rng, n, eps)
        r = linf_point_corrector(T, st, eps)
        b = r.budget_report
        kk = 1 + eps / 4
        worst_i = max(worst_i, abs(b["intermediate_norm"] - kk), abs(b["intermediate_radius"] - kk),
                      abs(b["intermediate_value"] - kk))
        S = r.corrected.entries
        worst_d = max(worst_d, float(np.abs(S - T.entries).sum(axis=1).max()))
    ok = worst_i <= 1e-9 and worst_d < eps
    record(7, ok, f"200 ℓ_∞ⁿ corrections (n = 2..8): intermediate identity err = {worst_i:.1e}, "
                  f"max dist = {worst_d:.4f} < {eps}")


# -- 8 ----------------------------------------------------------------------

def check_8():
    ok = True
    for n in (2, 10, 10**6):
        rep = pb.counterexample_2dim(n)
        ok &= len(rep.checks) == 4 and all(rep.checks.values())
    record(8, ok, "T_n counterexample: four exact identities hold for n = 2, 10, 10⁶")


# -- 9 ----------------------------------------------------------------------

def check_9():
    inst = pb.build_znorm_instance(16, 0.9)
    k = len(inst.z0)
    diag_ok = all(inst.T.entries[k + m - 1, m - 1] == 0.5 for m in inst.m_list)
    ok = inst.z0[0] >= 0.5 and inst.norm.hi <= 1 + 1e-9 and diag_ok and len(inst.m_list) >= 2
    record(9, ok, f"Z-norm instance n = 16: z0(1) = {inst.z0[0]:.4f}, ‖T‖ ≤ {inst.norm.hi:.6f}, "
                  f"m = {inst.m_list}, diagonal = 1/2")


# -- 10 ---------------------------------------------------------------------

def check_10():
    rng = np.random.default_rng(1010)
    hexagon = sp.polyhedral([[1, 0], [0, 1], [1, 1]])
    kinds = [sp.linf(2), sp.linf(3), sp.l1(3), sp.l2(3), sp.l2(2, "complex"), sp.linf(2, "complex"),
             sp.l1(2, "complex"), hexagon, sp.sum_inf(sp.linf(1), sp.l1(2)), sp.lp(3, 2)]
    worst = 0.0
    for k in range(100):
        X = kinds[k % len(kinds)]
        A = rng.standard_normal((X.dim, X.dim))
        if X.is_complex:
            A = A + 1j * rng.standard_normal((X.dim, X.dim))
        T = Operator(A, X)
        a, b = numerical_radius(T).value, numerical_radius(adjoint(T)).value
        # both brackets must overlap; exact methods make this a point comparison
        worst = max(worst, max(a.lo - b.hi, b.lo - a.hi, abs(a.mid - b.mid) if a.width + b.width < 1e-8 else 0))
    record(10, worst <= 1e-8, f"v(T) = v(T*) on 100 instances over {len(kinds)} space kinds (max gap = {worst:.1e})")


# -- 11 ---------------------------------------------------------------------

def check_11():
    rng = np.random.default_rng(1111)
    worst = math.inf
    for X in (sp.linf(2), sp.l1(2), sp.l2(3)):
        for _ in range(50):
            A = rng.standard_normal((X.dim, X.dim))
            T = Operator(A, X)
            T = T / numerical_radius(T).value.hi
            T = Operator(T.entries, X)
            eta = pb.eta_oo_probe(X, T, 0.5, budget=24, seed=0).estimates["eta"].hi
            worst = min(worst, eta)
    tn_ok = True
    for n in (2, 5, 10, 100):
        Tn = Operator(np.diag([1 - 1 / n, 1.0]), sp.linf(2))
        tn_ok &= pb.eta_oo_probe(sp.linf(2), Tn, 0.5, budget=24, seed=0).estimates["eta"].hi <= 1 / n
    record(11, worst > 0 and tn_ok, f"η̂ > 0 on 150 random operators (min {worst:.2e}); η̂(1/2, T_n) ≤ 1/n for n = 2, 5, 10, 100")


# -- 12 ---------------------------------------------------------------------

DETERMINISM_CONFIGS = [
    {"command": "v", "space": {"kind": "lp", "p": 3, "dim": 2}, "operator": [[1, 2], [0.5, -1]], "seed": 7},
    {"command": "opnorm", "space": {"kind": "znorm", "dim": 2}, "operator": [[1, 0.5], [0.2, -1]], "seed": 3},
    {"command": "index", "space": {"kind": "lp", "p": 2, "dim": 2, "field": "complex"}, "seed": 1, "budget": 8},
    {"command": "index2", "space": {"kind": "lp", "p": 2, "dim": 2}, "seed": 2, "budget": 8},
    {"command": "probe", "probe": "eta_pp", "space": {"kind": "lp", "p": "inf", "dim": 2},
     "state": {"x": [1, 0], "xstar": [1, 0]}, "eps": 0.5, "budget": 2, "seed": 5},
    {"command": "probe", "probe": "eta_oo", "space": {"kind": "lp", "p": 1, "dim": 2},
     "operator": [[0.5, 0.25], [-0.5, 0.75]], "eps": 0.5, "budget": 16, "seed": 9},
    {"command": "probe", "probe": "ssd_modulus", "space": {"kind": "lp", "p": 3, "dim": 2},
     "x": [1, 0], "eps": 0.3, "budget": 8, "seed": 4},
]


def _run_cli(cfg, tmp_path, tag, workers):
    path = tmp_path / f"{tag}.json"
    cfg_path = tmp_path / f"{tag}.cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    proc = subprocess.run([sys.executable, "-m", "numradius.cli", cfg["command"], "--config", str(cfg_path),
                           "--out", str(path), "--workers", str(workers), "--deterministic"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    text = path.read_text()
    body = json.loads(text)
    del body["meta"]["execution"]
    return json.dumps(body), body["meta"]["sha256"]


def check_12(tmp_path):
    ok = True
    for i, cfg in enumerate(DETERMINISM_CONFIGS):
        runs = [_run_cli(cfg, tmp_path, f"c{i}r{r}w{w}", w) for r, w in ((0, 1), (1, 1), (2, 3))]
        ok &= len({t for t, _ in runs}) == 1 and len({h for _, h in runs}) == 1
    record(12, ok, f"{len(DETERMINISM_CONFIGS)} stochastic configs: identical reports over repeated runs "
                   f"and worker counts 1 and 3")


# -- pytest entry points --------------------------------------------------------

@pytest.mark.parametrize("k", range(1, 12))
def test_criterion(k):
    globals()[f"check_{k}"]()


def test_criterion_12(tmp_path):
    check_12(tmp_path)


if __name__ == "__main__":
    import pathlib
    import tempfile

    fails = 0
    for k in range(1, 13):
        try:
            if k == 12:
                with tempfile.TemporaryDirectory() as d:
                    check_12(pathlib.Path(d))
            else:
                globals()[f"check_{k}"]()
        except AssertionError as e:
            fails += 1
            if k not in RESULTS:
                print(f"[FAIL] criterion {k:2d}: {e}", flush=True)
        except Exception as e:  # noqa: BLE001
            fails += 1
            print(f"[FAIL] criterion {k:2d}: {type(e).__name__}: {e}", flush=True)
    sys.exit(1 if fails else 0)
