"""Limited-memory BFGS with a strong-Wolfe line search.

Two-loop recursion for the search direction; bracketing + zoom line search
with safeguarded cubic interpolation.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad_inf: float
    n_iter: int
    n_eval: int
    converged: bool
    message: str


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic matching values and slopes at a and b, or None."""
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


class _LineFunction:
    def __init__(self, fg: FunGrad, x: np.ndarray, p: np.ndarray):
        self.fg, self.x, self.p = fg, x, p
        self.n_eval = 0
        self.cache: dict[float, tuple[float, float, np.ndarray]] = {}

    def __call__(self, t: float) -> tuple[float, float]:
        if t not in self.cache:
            f, g = self.fg(self.x + t * self.p)
            self.n_eval += 1
            self.cache[t] = (f, float(g @ self.p), g)
        f, d, _ = self.cache[t]
        return f, d

    def grad(self, t: float) -> np.ndarray:
        return self.cache[t][2]


def strong_wolfe(phi: _LineFunction, f0: float, d0: float, t1: float = 1.0,
                 c1: float = 1e-4, c2: float = 0.9, max_steps: int = 30) -> float | None:
    """Step length satisfying the strong Wolfe conditions, or None on failure."""
    t_prev, f_prev, d_prev = 0.0, f0, d0
    t = t1
    for i in range(max_steps):
        f, d = phi(t)
        if not math.isfinite(f):
            t = 0.5 * (t_prev + t)
            continue
        if f > f0 + c1 * t * d0 or (i > 0 and f >= f_prev):
            return _zoom(phi, f0, d0, t_prev, f_prev, d_prev, t, f, d, c1, c2)
        if abs(d) <= -c2 * d0:
            return t
        if d >= 0:
            return _zoom(phi, f0, d0, t, f, d, t_prev, f_prev, d_prev, c1, c2)
        t_prev, f_prev, d_prev = t, f, d
        t *= 2.0
    return None


def _zoom(phi, f0, d0, lo, f_lo, d_lo, hi, f_hi, d_hi, c1, c2, max_steps=40):
    for _ in range(max_steps):
        t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
        a, b = min(lo, hi), max(lo, hi)
        margin = 0.1 * (b - a)
        if t is None or not (a + margin <= t <= b - margin):
            t = 0.5 * (a + b)
        f, d = phi(t)
        if f > f0 + c1 * t * d0 or f >= f_lo:
            hi, f_hi, d_hi = t, f, d
        else:
            if abs(d) <= -c2 * d0:
                return t
            if d * (hi - lo) >= 0:
                hi, f_hi, d_hi = lo, f_lo, d_lo
            lo, f_lo, d_lo = t, f, d
        if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
            break
    # Interval collapsed: accept the best point if it decreased the objective.
    return lo if lo > 0 and f_lo < f0 else None


def lbfgs(fg: FunGrad, x0: np.ndarray, memory: int = 10, tol: float = 1e-6, max_iter: int = 1000) -> OptimizeResult:
    """Minimize a smooth function given ``fg(x) -> (f, grad)``.

    Stops when the gradient infinity-norm drops to ``tol`` or after
    ``max_iter`` iterations.
    """
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    n_eval = 1
    hist: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=memory)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    it = 0
    message = "max_iter reached"
    while gnorm > tol and it < max_iter:
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(hist):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if hist:
            s, y, _ = hist[-1]
            q *= (s @ y) / (y @ y)
        for (s, y, rho), a in zip(hist, reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        p = -q
        d0 = float(g @ p)
        if d0 >= 0:
            hist.clear()
            p = -g
            d0 = float(g @ p)
        t1 = 1.0 if hist else min(1.0, 1.0 / max(gnorm, 1e-12))
        phi = _LineFunction(fg, x, p)
        t = strong_wolfe(phi, f, d0, t1)
        n_eval += phi.n_eval
        if t is None:
            if hist:
                hist.clear()
                continue
            message = "line search failed"
            break
        x_new = x + t * p
        f_new, _ = phi(t)
        g_new = phi.grad(t)
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.sqrt((s @ s) * (y @ y))):
            hist.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        it += 1
    converged = gnorm <= tol
    if converged:
        message = "converged"
    return OptimizeResult(x, float(f), gnorm, it, n_eval, converged, message)
