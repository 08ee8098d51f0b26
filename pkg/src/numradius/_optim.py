"""Seeded multistart plumbing.

Every start receives its own generator spawned from the master seed before
any work is scheduled, so results depend only on ``(seed, n_starts)`` and
never on the worker count or completion order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def spawn_rngs(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def run_starts(fn, seed, n, workers=1):
    """Evaluate ``fn(rng, i)`` for ``i < n`` and return results in index order."""
    rngs = spawn_rngs(seed, n)
    if workers is None or workers <= 1 or n <= 1:
        return [fn(r, i) for i, r in enumerate(rngs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, r, i) for i, r in enumerate(rngs)]
        return [f.result() for f in futs]


def real_view(z):
    """Stack real and imaginary parts of a complex vector."""
    return np.concatenate([z.real, z.imag])


def complex_view(u):
    h = len(u) // 2
    return u[:h] + 1j * u[h:]
