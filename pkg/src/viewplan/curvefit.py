"""Reconstruction-quality curves over view count, and their labeling rule.

Quality as a function of the number of training views is modeled as a
log-normal CDF in PSNR units:

    C(v) = offset + scale * Phi((ln v - mu) / sigma)

with Phi the standard normal CDF.  The required number of views for an
object is the smallest v whose marginal gain C(v+1) - C(v) drops below a
threshold alpha.  Fitting uses damped Gauss-Newton least squares with an
analytic Jacobian; v is an exact chosen integer, so only vertical (PSNR)
residuals are minimized.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from . import jsonio
from .errors import FitFailureError, FormatError, InvalidArgumentError

DEFAULT_ALPHA = 0.02
DEFAULT_V_MIN = 3
DEFAULT_V_MAX = 58
#: Sampling grid of view counts used for synthetic quality samples.
DEFAULT_SAMPLE_GRID = tuple(range(3, 51, 2))

SIGMA_BOUNDS = (1e-3, 10.0)
SCALE_BOUNDS = (1e-3, 100.0)

_MAX_ITERS = 500
_SSE_RTOL = 1e-10


@dataclass(frozen=True)
class PsnrSample:
    """One measured point: PSNR achieved with v training views."""

    v: int
    psnr: float

    def __post_init__(self):
        if self.v < 1:
            raise InvalidArgumentError(f"sample view count must be >= 1, got {self.v}")
        if not np.isfinite(self.psnr):
            raise InvalidArgumentError(f"sample psnr must be finite, got {self.psnr}")


@dataclass(frozen=True)
class FittedCurve:
    mu: float
    sigma: float
    scale: float
    offset: float
    residual_rms: float = 0.0
    degenerate: bool = False  # flat input data; parameters sit at clamps

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidArgumentError(f"curve sigma must be positive, got {self.sigma}")
        if self.scale <= 0:
            raise InvalidArgumentError(f"curve scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class ViewCountLabel:
    v_star: int
    alpha: float
    v_min: int
    v_max: int
    saturated: bool = False  # no view count in range met the threshold

    def __post_init__(self):
        if not (self.v_min <= self.v_star <= self.v_max):
            raise InvalidArgumentError(
                f"label {self.v_star} outside range [{self.v_min}, {self.v_max}]")


def curve_eval(curve: FittedCurve, v):
    """Evaluate the quality curve at view count(s) v (scalar or array)."""
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0.0):
        raise InvalidArgumentError("curve evaluation needs v > 0")
    out = curve.offset + curve.scale * ndtr((np.log(arr) - curve.mu) / curve.sigma)
    return float(out) if np.isscalar(v) or arr.shape == () else out


def _jacobian(curve: FittedCurve, v: np.ndarray) -> np.ndarray:
    z = (np.log(v) - curve.mu) / curve.sigma
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return np.column_stack([
        -curve.scale * phi / curve.sigma,      # d/d mu
        -curve.scale * phi * z / curve.sigma,  # d/d sigma
        ndtr(z),                               # d/d scale
        np.ones_like(v),                       # d/d offset
    ])


def _clamp_params(p: np.ndarray) -> np.ndarray:
    p = p.copy()
    p[1] = np.clip(p[1], *SIGMA_BOUNDS)
    p[2] = np.clip(p[2], *SCALE_BOUNDS)
    return p


def _initial_guess(v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Deterministic start derived from the data shape."""
    lo, hi = float(y.min()), float(y.max())
    offset0 = lo
    scale0 = max(hi - lo, SCALE_BOUNDS[0])
    target = 0.5 * (lo + hi)
    order = np.argsort(v, kind="stable")
    vs, ys = v[order], y[order]
    v_cross = None
    with np.errstate(over="ignore"):  # huge inputs fail later, in the fit loop
        for i in range(len(vs) - 1):
            y0, y1 = ys[i], ys[i + 1]
            if (y0 - target) * (y1 - target) <= 0.0 and y0 != y1:
                t = (target - y0) / (y1 - y0)
                v_cross = vs[i] + t * (vs[i + 1] - vs[i])
                break
    if v_cross is None or v_cross <= 0:
        # No midpoint crossing (flat or noisy data): nearest sample wins.
        v_cross = vs[int(np.argmin(np.abs(ys - target)))]
    return _clamp_params(np.array([np.log(v_cross), 0.5, scale0, offset0]))


def fit_curve(samples) -> FittedCurve:
    """Least-squares fit of (mu, sigma, scale, offset) to quality samples.

    Damped Gauss-Newton: each step solves the normal equations with a
    Levenberg-style diagonal boost, growing the damping until the step
    reduces the sum of squared residuals.  Raises FitFailureError carrying
    the last valid iterate if the residual goes non-finite.
    """
    samples = list(samples)
    if len(samples) < 5:
        raise InvalidArgumentError(f"curve fit needs >= 5 samples, got {len(samples)}")
    v = np.array([float(s.v) for s in samples])
    y = np.array([float(s.psnr) for s in samples])
    if len(np.unique(v)) < 4:
        raise InvalidArgumentError("curve fit needs >= 4 distinct view counts")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("curve fit needs finite psnr values")

    p = _initial_guess(v, y)
    degenerate = float(y.max() - y.min()) == 0.0

    def residuals(params):
        c = FittedCurve(mu=params[0], sigma=params[1], scale=params[2],
                        offset=params[3], degenerate=degenerate)
        return curve_eval(c, v) - y, c

    # Overflow in the squared residuals is expected for absurd inputs and
    # is reported through FitFailureError, not a numpy warning.
    with np.errstate(over="ignore"):
        r, curve = residuals(p)
        sse = float(r @ r)
        lam = 1e-3
        for _ in range(_MAX_ITERS):
            jac = _jacobian(curve, v)
            jtj = jac.T @ jac
            jtr = jac.T @ r
            step_ok = False
            for _ in range(50):
                damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
                try:
                    delta = np.linalg.solve(damped, -jtr)
                except np.linalg.LinAlgError:
                    lam *= 10.0
                    continue
                p_new = _clamp_params(p + delta)
                r_new, curve_new = residuals(p_new)
                sse_new = float(r_new @ r_new)
                if not np.isfinite(sse_new):
                    raise FitFailureError(
                        "curve fit diverged to non-finite residual",
                        last_iterate=curve)
                if sse_new <= sse:
                    step_ok = True
                    break
                lam *= 10.0
            if not step_ok:
                break  # damping exhausted at a local minimum
            rel_drop = (sse - sse_new) / sse if sse > 0 else 0.0
            p, r, curve, sse = p_new, r_new, curve_new, sse_new
            lam = max(lam / 3.0, 1e-12)
            if rel_drop < _SSE_RTOL:
                break
    rms = float(np.sqrt(sse / len(v)))
    return replace(curve, residual_rms=rms)


def required_views(curve: FittedCurve, alpha: float = DEFAULT_ALPHA,
                   v_min: int = DEFAULT_V_MIN, v_max: int = DEFAULT_V_MAX) -> ViewCountLabel:
    """Smallest view count whose marginal quality gain falls below alpha.

    Scans integer v over [v_min, v_max]; when every marginal gain in range
    is still >= alpha the label saturates at v_max and is flagged.
    """
    if alpha <= 0:
        raise InvalidArgumentError(f"alpha must be positive, got {alpha}")
    if not (1 <= v_min <= v_max):
        raise InvalidArgumentError(f"invalid label range [{v_min}, {v_max}]")
    grid = np.arange(v_min, v_max + 1, dtype=float)
    gains = curve_eval(curve, grid + 1.0) - curve_eval(curve, grid)
    below = np.nonzero(gains < alpha)[0]
    if len(below):
        return ViewCountLabel(v_star=int(grid[below[0]]), alpha=alpha,
                              v_min=v_min, v_max=v_max, saturated=False)
    return ViewCountLabel(v_star=v_max, alpha=alpha,
                          v_min=v_min, v_max=v_max, saturated=True)


def synth_curve(params: FittedCurve, noise_sigma: float = 0.0,
                grid=DEFAULT_SAMPLE_GRID, seed: int = 0):
    """Seeded synthetic samples on the given view-count grid."""
    grid = list(grid)
    if not grid:
        raise InvalidArgumentError("sample grid is empty")
    if noise_sigma < 0:
        raise InvalidArgumentError("noise sigma must be >= 0")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_sigma, size=len(grid)) if noise_sigma > 0 else np.zeros(len(grid))
    return [PsnrSample(v=int(v), psnr=float(curve_eval(params, float(v)) + e))
            for v, e in zip(grid, noise)]


def save_samples_csv(samples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["v", "psnr"])
        for s in samples:
            writer.writerow([s.v, jsonio.format_float(s.psnr)])


def load_samples_csv(path):
    samples = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty sample file")
        if [h.strip().lower() for h in header] != ["v", "psnr"]:
            raise FormatError(f"{path}: expected header 'v,psnr', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}: expected 2 columns", line=lineno)
            try:
                samples.append(PsnrSample(v=int(row[0]), psnr=float(row[1])))
            except ValueError as exc:
                raise FormatError(f"{path}: {exc}", line=lineno) from exc
    return samples


def fit_label_dict(curve: FittedCurve, label: ViewCountLabel) -> dict:
    return {
        "mu": float(curve.mu),
        "sigma": float(curve.sigma),
        "scale": float(curve.scale),
        "offset": float(curve.offset),
        "residual_rms": float(curve.residual_rms),
        "v_star": int(label.v_star),
        "alpha": float(label.alpha),
        "saturated": bool(label.saturated),
    }


def save_fit_label(curve: FittedCurve, label: ViewCountLabel, path) -> None:
    jsonio.dump_file(fit_label_dict(curve, label), path)


def load_fit_label(path):
    data = jsonio.load_file(path)
    for key in ("mu", "sigma", "scale", "offset", "residual_rms",
                "v_star", "alpha", "saturated"):
        if key not in data:
            raise FormatError(f"{path}: fit object missing {key!r}")
    curve = FittedCurve(mu=float(data["mu"]), sigma=float(data["sigma"]),
                        scale=float(data["scale"]), offset=float(data["offset"]),
                        residual_rms=float(data["residual_rms"]))
    return curve, int(data["v_star"]), float(data["alpha"]), bool(data["saturated"])
