"""Critically damped point-attractor gestures: forward model and windowed fit.

A gesture moves a feature from ``x0`` toward the target ``T`` with stiffness
``k`` starting at onset ``t_s``:

    r(t) = max(t - t_s, 0)
    x(t) = x0 + (T - x0) * (1 - (1 + sqrt(k) r) exp(-sqrt(k) r))

Fitting minimises a Gaussian-weighted MSE over a rectangular window centred
on the segment midpoint.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import EmptyWindow, NonFinite, TooFewSamples

N_PARAMS = 4
_LBFGS_OPTIONS = {"ftol": 1e-15, "gtol": 1e-12}


@dataclass(frozen=True)
class GestureParams:
    T: float
    k: float
    x0: float
    t_s: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"stiffness must be positive, got {self.k}")
        if not all(math.isfinite(v) for v in (self.T, self.k, self.x0, self.t_s)):
            raise ValueError("gesture parameters must be finite")


@dataclass(frozen=True)
class FitWindow:
    center: float
    half_width: float
    sigma: float

    def __post_init__(self):
        if not (self.half_width > 0 and self.sigma > 0):
            raise ValueError("half_width and sigma must be positive")

    def weights(self, times):
        """Gaussian weights, with samples outside the window set to 0."""
        d = np.asarray(times, dtype=float) - self.center
        g = np.exp(-0.5 * (d / self.sigma) ** 2)
        g[np.abs(d) > self.half_width] = 0.0
        return g


@dataclass(frozen=True)
class FitConfig:
    half_width_factor: float = 1.0  # window half-width, in segment durations
    sigma_factor: float = 0.5       # Gaussian sigma, in segment durations
    k_min: float = 1.0
    k_max: float = 1e6
    rates: tuple = (4.0, 8.0)       # starting sqrt(k) * duration values
    onsets: tuple = (0.0, -0.5)     # starting t_s - t_start, in segment durations
    maxiter: int = 1000
    min_frames: int = N_PARAMS

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "onsets", tuple(float(o) for o in self.onsets))
        if not self.rates or not self.onsets:
            raise ValueError("rates and onsets must be non-empty")
        if not 0 < self.k_min < self.k_max:
            raise ValueError("need 0 < k_min < k_max")

    def window(self, t_start, t_end):
        dur = t_end - t_start
        return FitWindow(0.5 * (t_start + t_end), self.half_width_factor * dur, self.sigma_factor * dur)


@dataclass(frozen=True)
class GestureFit:
    params: GestureParams
    weighted_mse: float
    converged: bool
    n_frames: int


def simulate(p: GestureParams, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    z = math.sqrt(p.k) * np.maximum(t - p.t_s, 0.0)
    return p.x0 + (p.T - p.x0) * (1.0 - (1.0 + z) * np.exp(-z))


def _in_window(times, values, w: FitWindow):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values differ in length")
    g = w.weights(times)
    keep = g > 0
    if not keep.any():
        raise EmptyWindow(f"no sample within {w.half_width} s of t={w.center}")
    return times[keep], values[keep], g[keep]


def objective(p: GestureParams, times, values, w: FitWindow) -> float:
    t, v, g = _in_window(times, values, w)
    res = simulate(p, t) - v
    return float(np.sum(g * res * res) / np.sum(g))


def objective_grad(p: GestureParams, times, values, w: FitWindow) -> np.ndarray:
    """Gradient of :func:`objective` w.r.t. (T, k, x0, t_s)."""
    t, v, g = _in_window(times, values, w)
    sk = math.sqrt(p.k)
    r = np.maximum(t - p.t_s, 0.0)
    z = sk * r
    e = np.exp(-z)
    s = 1.0 - (1.0 + z) * e
    res = p.x0 + (p.T - p.x0) * s - v
    c = 2.0 * g * res / np.sum(g)
    dsdz = z * e
    amp = p.T - p.x0
    return np.array([
        np.sum(c * s),
        np.sum(c * amp * dsdz * r) / (2.0 * sk),
        np.sum(c * (1.0 - s)),
        np.sum(c * amp * dsdz * np.where(r > 0, -sk, 0.0)),
    ])


def _step(tau, ts, rate):
    r = np.maximum(tau - ts, 0.0)
    z = rate * r
    e = np.exp(-z)
    return r, z, e, 1.0 - (1.0 + z) * e


def _linear_part(s, u, g):
    """Weighted least-squares (x0, T) for u ~ x0 + (T - x0) s."""
    sw = g @ s
    uw = g @ u
    det = g @ (s * s) - sw * sw
    if det <= 1e-14:
        return uw, uw
    b = (g @ (u * s) - sw * uw) / det
    a = uw - b * sw
    return a, a + b


def _profile_obj(phi, tau, u, g):
    # (T, x0) eliminated in closed form; phi = (tau_s, q)
    ts, q = phi
    rate = math.exp(q)
    r, z, e, s = _step(tau, ts, rate)
    x0, T = _linear_part(s, u, g)
    res = x0 + (T - x0) * s - u
    gr = g * res
    amp_d = (T - x0) * z * e
    grad = 2.0 * np.array([
        -rate * (gr @ np.where(r > 0, amp_d, 0.0)),
        gr @ (amp_d * z),
    ])
    return float(gr @ res), grad


def _scaled_obj(theta, tau, u, g):
    # theta = (T, x0, tau_s, q): values / scale, time / duration,
    # q = log(sqrt(k) * duration)
    T, x0, ts, q = theta
    rate = math.exp(q)
    r, z, e, s = _step(tau, ts, rate)
    res = x0 + (T - x0) * s - u
    gr = g * res
    amp_d = (T - x0) * z * e
    grad = 2.0 * np.array([
        gr @ s,
        gr @ (1.0 - s),
        -rate * (gr @ np.where(r > 0, amp_d, 0.0)),
        gr @ (amp_d * z),
    ])
    return float(gr @ res), grad


def fit_gesture(times, values, t_start: float, t_end: float, cfg: FitConfig = FitConfig()) -> GestureFit:
    """Fit (T, k, x0, t_s) to the samples around segment [t_start, t_end).

    The target and initial value enter the model linearly, so for each
    candidate (t_s, k) they are solved exactly; L-BFGS-B searches (t_s, k)
    from a fixed set of starts. If the best start puts T or x0 outside their
    bounds, a bounded search over all four parameters finishes the job.
    The result depends only on the inputs.
    """
    if not t_end > t_start:
        raise ValueError(f"empty segment [{t_start}, {t_end})")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
        raise NonFinite("trajectory contains NaN or inf")
    w = cfg.window(t_start, t_end)
    try:
        t, v, g = _in_window(times, values, w)
    except EmptyWindow as exc:
        raise TooFewSamples(str(exc)) from exc
    if len(t) < cfg.min_frames:
        raise TooFewSamples(f"{len(t)} samples in window, need {cfg.min_frames}")

    dur = t_end - t_start
    lo, hi = float(v.min()), float(v.max())
    rng = hi - lo
    scale = rng if rng > 0 else 1.0
    pad = rng if rng > 0 else 1.0
    # scaled problem: origin at (lo, centre), units (scale, dur)
    tau = (t - w.center) / dur
    u = (v - lo) / scale
    gn = g / g.sum()
    vb = (-pad / scale, (rng + pad) / scale)
    tb = ((t_start - w.half_width - w.center) / dur, (t_end - w.center) / dur)
    qb = (math.log(math.sqrt(cfg.k_min) * dur), math.log(math.sqrt(cfg.k_max) * dur))

    best = None
    for ts0 in cfg.onsets:
        for rate in cfg.rates:
            phi0 = (min(max(ts0 + (t_start - w.center) / dur, tb[0]), tb[1]),
                    min(max(math.log(rate), qb[0]), qb[1]))
            res = minimize(_profile_obj, phi0, args=(tau, u, gn), jac=True, method="L-BFGS-B",
                           bounds=[tb, qb], options={"maxiter": cfg.maxiter, **_LBFGS_OPTIONS})
            if best is None or res.fun < best.fun:
                best = res

    ts, q = best.x
    x0, T = _linear_part(_step(tau, ts, math.exp(q))[3], u, gn)
    converged = bool(best.success)
    if not (vb[0] <= T <= vb[1] and vb[0] <= x0 <= vb[1]):
        # closed-form target/initial value left their bounds: polish all four
        theta0 = np.clip([T, x0, ts, q], [vb[0], vb[0], tb[0], qb[0]], [vb[1], vb[1], tb[1], qb[1]])
        final = minimize(_scaled_obj, theta0, args=(tau, u, gn), jac=True, method="L-BFGS-B",
                         bounds=[vb, vb, tb, qb], options={"maxiter": cfg.maxiter, **_LBFGS_OPTIONS})
        T, x0, ts, q = final.x
        converged = bool(final.success)

    sk = math.exp(q) / dur
    params = GestureParams(
        T=float(lo + T * scale),
        k=float(min(max(sk * sk, cfg.k_min), cfg.k_max)),
        x0=float(lo + x0 * scale),
        t_s=float(w.center + ts * dur),
    )
    mse = objective(params, t, v, w)
    return GestureFit(params, mse, converged, int(len(t)))
