"""Spread n views over the hemisphere by maximizing the minimum pairwise angle.

The solver runs projected gradient ascent on a soft minimum (log-sum-exp)
of all pairwise central angles, annealing the sharpness so early iterations
arrange points globally and late ones tighten the true minimum.  A
deterministic tangent-direction pattern search then polishes the result.
Restarts are seeded independently from (seed, restart index) and merged by
argmax with lowest-index tie-breaking, so serial and parallel execution of
the restarts produce bitwise-identical output.
"""

import numpy as np

from .errors import InvalidArgumentError
from .geometry import KIND_TAMMES, ViewSpace, units_to_view_space

DEFAULT_RESTARTS = 8
DEFAULT_ITERS = 600

_BETA_START = 6.0
_BETA_END = 400.0
_STEP_START = 0.12
_STEP_END = 1e-3


def _project_hemisphere(pts: np.ndarray) -> np.ndarray:
    """Clamp below-equator points to the equator and renormalize to unit length."""
    pts = pts.copy()
    pts[:, 2] = np.maximum(pts[:, 2], 0.0)
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    bad = norms[:, 0] < 1e-12
    if np.any(bad):
        pts[bad] = np.array([1.0, 0.0, 0.0])
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
    return pts / norms


def _min_angle(pts: np.ndarray) -> float:
    dots = np.clip(pts @ pts.T, -1.0, 1.0)
    np.fill_diagonal(dots, -1.0)
    return float(np.arccos(dots.max()))


def _random_hemisphere(rng, n: int) -> np.ndarray:
    pts = rng.standard_normal((n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts[:, 2] = np.abs(pts[:, 2])
    return pts


def _softmin_ascent(pts: np.ndarray, iters: int) -> np.ndarray:
    n = len(pts)
    betas = np.geomspace(_BETA_START, _BETA_END, iters)
    steps = np.geomspace(_STEP_START, _STEP_END, iters)
    eye = np.eye(n, dtype=bool)
    for beta, step in zip(betas, steps):
        dots = np.clip(pts @ pts.T, -1.0, 1.0)
        theta = np.arccos(dots)
        sin = np.sqrt(np.clip(1.0 - dots * dots, 1e-12, None))
        theta_off = np.where(eye, np.inf, theta)
        # Pair weights of the soft minimum, stabilized around the current min.
        w = np.exp(-beta * (theta_off - theta_off.min()))
        w[eye] = 0.0
        total = w.sum()
        if total <= 0.0:
            break
        w /= total
        # d(theta_ij)/d(x_i) = -x_j / sin(theta_ij); ascend the soft minimum.
        grad = -(w / sin) @ pts
        grad -= np.sum(grad * pts, axis=1, keepdims=True) * pts
        gmax = np.linalg.norm(grad, axis=1).max()
        if gmax < 1e-15:
            break
        pts = _project_hemisphere(pts + (step / gmax) * grad)
    return pts


_POLISH_DIRS = 8
_POLISH_STEPS = np.geomspace(0.08, 1e-5, 14)


def _tangent_frame(p: np.ndarray):
    ref = np.array([0.0, 0.0, 1.0]) if abs(p[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = np.cross(ref, p)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(p, t1)


def _polish(pts: np.ndarray) -> np.ndarray:
    """Pattern search over fixed tangent directions; accepts only strict gains."""
    n = len(pts)
    if n < 2:
        return pts
    angles = 2.0 * np.pi * np.arange(_POLISH_DIRS) / _POLISH_DIRS
    cosd, sind = np.cos(angles), np.sin(angles)
    best = _min_angle(pts)
    for step in _POLISH_STEPS:
        improved = True
        sweeps = 0
        while improved and sweeps < 40:
            improved = False
            sweeps += 1
            for i in range(n):
                t1, t2 = _tangent_frame(pts[i])
                dirs = np.outer(cosd, t1) + np.outer(sind, t2)
                cands = pts[i] + step * dirs
                cands = _project_hemisphere(cands)
                others = np.delete(pts, i, axis=0)
                dots = np.clip(cands @ others.T, -1.0, 1.0)
                cand_min = np.arccos(dots.max(axis=1))
                # Min angle among the untouched points bounds any gain.
                rest_dots = np.clip(others @ others.T, -1.0, 1.0)
                np.fill_diagonal(rest_dots, -1.0)
                rest_min = np.arccos(rest_dots.max()) if len(others) > 1 else np.inf
                k = int(np.argmax(cand_min))
                gain = min(cand_min[k], rest_min)
                if gain > best * (1.0 + 1e-10) + 1e-12:
                    pts[i] = cands[k]
                    best = gain
                    improved = True
    return pts


def _solve_restart(n: int, seed: int, restart: int, iters: int) -> np.ndarray:
    """One seeded restart; independent of every other restart's stream."""
    rng = np.random.default_rng([seed, restart])
    pts = _random_hemisphere(rng, n)
    pts = _softmin_ascent(pts, iters)
    return _polish(pts)


def tammes_hemisphere(
    n: int,
    radius: float = 0.3,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    center=(0.0, 0.0, 0.0),
) -> ViewSpace:
    """Best-of-restarts maximin view configuration on the hemisphere.

    Deterministic for a given (n, seed, restarts, iters).  The solve runs on
    the unit hemisphere and is scaled by ``radius`` afterwards, so angular
    structure is radius-independent.
    """
    if n < 1:
        raise InvalidArgumentError("tammes configuration needs n >= 1")
    if radius <= 0:
        raise InvalidArgumentError("tammes configuration needs radius > 0")
    if restarts < 1 or iters < 1:
        raise InvalidArgumentError("restarts and iters must be positive")
    if n == 1:
        units = np.array([[0.0, 0.0, 1.0]])
    else:
        best_units = None
        best_angle = -np.inf
        for restart in range(restarts):
            units = _solve_restart(n, seed, restart, iters)
            angle = _min_angle(units)
            # Strict comparison keeps the lowest restart index on ties, so a
            # parallel argmax-merge of restart results agrees bitwise.
            if angle > best_angle:
                best_angle = angle
                best_units = units
        units = best_units
    return units_to_view_space(units, radius, center, KIND_TAMMES)
