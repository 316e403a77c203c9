"""Least-squares extraction of device parameters from measured curves."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _parallel
from .errors import AnalysisError, ConfigError, RankDeficiencyError
from .purcell import lorentzian
from .quantities import MEV_TO_J, Q_E
from .ratemodel import photon_density_eq2

REL_STEP = 1e-6
XTOL = 1e-8
MAX_ITER = 200
RCOND = 1e-5


@dataclass(frozen=True)
class FitResult:
    """Outcome of a fit.

    ``optimality`` is the largest cosine between the residual vector and a
    Jacobian column at the reported optimum (0 for an exact fit).
    """

    params: dict
    stderr: dict
    rss: float
    iterations: int
    converged: bool
    optimality: float = float("nan")
    covariance: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        def clean(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "params": {k: clean(v) for k, v in self.params.items()},
            "stderr": {k: clean(v) for k, v in self.stderr.items()},
            "rss": clean(self.rss),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _names(names, n):
    return list(names) if names is not None else [f"p{i}" for i in range(n)]


def _jacobian(residual, p, r0, lower, upper):
    J = np.empty((r0.size, p.size))
    for j in range(p.size):
        h = REL_STEP * (abs(p[j]) if p[j] != 0 else 1.0)
        if p[j] + h > upper[j]:
            h = -h
        q = p.copy()
        q[j] += h
        J[:, j] = (residual(q) - r0) / h
    return J


def _check_rank(J):
    norms = np.linalg.norm(J, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(J)):
        raise RankDeficiencyError("a parameter has no influence on the model")
    s = np.linalg.svd(J / norms, compute_uv=False)
    if s[-1] < RCOND * s[0]:
        raise RankDeficiencyError(f"normal matrix is singular (relative singular value {s[-1] / s[0]:.2e})")


def optimality(J, r) -> float:
    """Largest |cos| between the residual and any Jacobian column."""
    rn = np.linalg.norm(r)
    if rn == 0:
        return 0.0
    return float(np.max(np.abs(J.T @ r) / (np.linalg.norm(J, axis=0) * rn)))


def least_squares(model, data, p0, bounds=None, names=None, weights=None) -> FitResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) fit of ``model(p)`` to ``data``.

    The first trial of every iteration uses the current damping (zero at
    start, i.e. a plain Gauss-Newton step); rejected trials raise the
    damping tenfold. Jacobians are forward differences with relative step
    1e-6. Iteration stops when the relative parameter step drops below 1e-8
    or after 200 iterations; the latter returns ``converged=False``.

    Parameters
    ----------
    model : callable
        Maps a parameter vector to predicted samples.
    data : array_like
    p0 : array_like
        Initial guess, finite and inside ``bounds``.
    bounds : (lower, upper), optional
    names : sequence of str, optional
    weights : array_like, optional
        Per-sample weights multiplying the squared residuals.

    Raises
    ------
    RankDeficiencyError
        If the Jacobian columns are (numerically) linearly dependent.
    """
    data = np.asarray(data, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    n = p.size
    if data.size < 2 * n:
        raise ConfigError(f"need at least {2 * n} data points for {n} parameters, got {data.size}")
    if not np.all(np.isfinite(p)):
        raise ConfigError("initial guess must be finite")
    if bounds is None:
        lower, upper = np.full(n, -np.inf), np.full(n, np.inf)
    else:
        lower = np.broadcast_to(np.asarray(bounds[0], dtype=float), (n,))
        upper = np.broadcast_to(np.asarray(bounds[1], dtype=float), (n,))
    if np.any(p < lower) or np.any(p > upper):
        raise ConfigError("initial guess outside bounds")
    sw = np.ones_like(data) if weights is None else np.sqrt(np.asarray(weights, dtype=float))

    def residual(q):
        return (np.asarray(model(q), dtype=float) - data) * sw

    r = residual(p)
    cost = float(r @ r)
    lam = 0.0
    converged = False
    iterations = 0
    J = None
    while iterations < MAX_ITER:
        iterations += 1
        J = _jacobian(residual, p, r, lower, upper)
        _check_rank(J)
        if cost == 0.0:
            converged = True
            break
        A = J.T @ J
        g = J.T @ r
        D = np.diag(np.diag(A))
        while True:
            step = np.linalg.solve(A + lam * D, -g)
            trial = np.clip(p + step, lower, upper)
            step = trial - p
            r_trial = residual(trial)
            c_trial = float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else math.inf
            # per-component, so small parameters are not masked by large ones
            rel = float(np.max(np.abs(step) / np.maximum(np.abs(p), 1e-300)))
            # a cost "increase" at round-off level is no reason to reject
            if c_trial <= cost * (1.0 + 1e-12):
                p, r, cost = trial, r_trial, c_trial
                lam = 0.0 if lam < 1e-9 else 0.1 * lam
                break
            if rel < XTOL:
                break
            lam = 1e-3 if lam == 0.0 else 10.0 * lam
        if rel < XTOL:
            converged = True
            break

    # covariance and optimality use the solver's own Jacobian at the final point
    J = _jacobian(residual, p, r, lower, upper)
    m = data.size
    A = J.T @ J
    cov = np.linalg.inv(A) * (cost / (m - n) if m > n else math.nan)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    keys = _names(names, n)
    return FitResult(
        params=dict(zip(keys, map(float, p))),
        stderr=dict(zip(keys, map(float, se))),
        rss=cost,
        iterations=iterations,
        converged=converged,
        optimality=optimality(J, r),
        covariance=cov,
    )


def least_squares_multistart(model, data, starts, **kwargs) -> FitResult:
    """Run :func:`least_squares` from several guesses; best converged RSS wins.

    Ties are broken by start order, so the reduction is deterministic.
    """
    results = _parallel.ordered_map(lambda p0: least_squares(model, data, p0, **kwargs), starts)
    pool = [r for r in results if r.converged] or results
    return min(pool, key=lambda r: r.rss)


def fit_cavity_lorentzian(energy, reflectivity) -> FitResult:
    """Fit ``R = 1 - depth * L(E - E_cav, E_cav/Q_cav)`` to a reflectivity dip.

    A spectrum without a dip is returned unconverged with its initial guess.
    """
    E = np.asarray(energy, dtype=float)
    R = np.asarray(reflectivity, dtype=float)
    names = ["E_cav_meV", "Q_cav", "depth"]
    k = int(np.argmin(R))
    depth0 = float(1.0 - R[k])
    # width from the dip area (pi/2 * depth * FWHM for a Lorentzian), which
    # noise cannot fragment the way half-max crossings can
    width0 = float(np.trapezoid(np.clip(1.0 - R, 0.0, None), E)) / (0.5 * math.pi * depth0) if depth0 > 0 else 0.0
    no_dip = FitResult(
        params={"E_cav_meV": float(E[k]), "Q_cav": math.nan, "depth": max(depth0, 0.0)},
        stderr=dict.fromkeys(names, math.nan), rss=float(np.sum((R - 1.0) ** 2)),
        iterations=0, converged=False,
    )
    if not (depth0 > 1e-9 and 0.0 < width0 < E[-1] - E[0]):
        return no_dip
    p0 = [float(E[k]), float(E[k] / width0), min(depth0, 1.0)]

    def model(p):
        return 1.0 - p[2] * lorentzian(E - p[0], p[0] / p[1])

    bounds = ([E[0], 1e-3, 0.0], [E[-1], np.inf, 1.0])
    try:
        res = least_squares(model, R, p0, bounds=bounds, names=names)
    except RankDeficiencyError:
        # collapses onto a single sample: there is no resolvable dip
        return no_dip
    # a dip narrower than the sampling or not significant is noise, not a cavity
    width = res.params["E_cav_meV"] / res.params["Q_cav"]
    if width < float(np.median(np.diff(E))) or not res.params["depth"] > 3.0 * res.stderr["depth"]:
        res = replace(res, converged=False)
    return res


def _weighted_line(x, y, w):
    W = w.sum()
    xm, ym = (w @ x) / W, (w @ y) / W
    Sxx = w @ (x - xm) ** 2
    slope = (w @ ((x - xm) * (y - ym))) / Sxx
    return slope, ym - slope * xm, xm, Sxx, W


def fit_stark(bias, peak, V0=4.5, weights=None) -> FitResult:
    """Closed-form weighted line ``E = E0 + kappa (V - V0)`` with ``V0`` fixed."""
    V = np.asarray(bias, dtype=float)
    E = np.asarray(peak, dtype=float)
    if V.size < 3:
        raise ConfigError("Stark fit needs at least 3 bias points")
    w = np.ones_like(V) if weights is None else np.asarray(weights, dtype=float)
    x = V - V0
    kappa, E0, xm, Sxx, W = _weighted_line(x, E, w)
    r = E - (E0 + kappa * x)
    rss = float(w @ (r * r))
    s2 = rss / (V.size - 2)
    se_k = math.sqrt(s2 / Sxx)
    se_E0 = math.sqrt(s2 * (1.0 / W + xm * xm / Sxx))
    J = np.column_stack([np.ones_like(x), x]) * np.sqrt(w)[:, None]
    return FitResult(
        params={"E0_meV": float(E0), "kappa_meV_per_V": float(kappa)},
        stderr={"E0_meV": se_E0, "kappa_meV_per_V": se_k},
        rss=rss, iterations=0, converged=True, optimality=optimality(J, r * np.sqrt(w)),
    )


def fit_qe_slope(current_mA, power_uW, photon_energy_meV, weights=None, min_points=3) -> FitResult:
    """Zero-intercept slope of emitted photon rate against injected electron rate."""
    I = np.asarray(current_mA, dtype=float) * 1e-3
    P = np.asarray(power_uW, dtype=float) * 1e-6
    if I.size < min_points:
        raise ConfigError(f"QE fit needs at least {min_points} points")
    x = I / Q_E
    y = P / (photon_energy_meV * MEV_TO_J)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    Sxx = w @ (x * x)
    eta = float((w @ (x * y)) / Sxx)
    r = y - eta * x
    rss = float(w @ (r * r))
    se = math.sqrt(rss / (x.size - 1) / Sxx) if x.size > 1 else math.nan
    return FitResult(
        params={"eta_QE": eta}, stderr={"eta_QE": se}, rss=rss, iterations=0, converged=True,
        optimality=optimality((x * np.sqrt(w))[:, None], r * np.sqrt(w)),
    )


def threshold_model(J, purcell_values, J_th):
    """Photon-density curve normalized to unit maximum; ``None`` past the pole."""
    if np.any(J * purcell_values >= J_th):
        return None
    S = photon_density_eq2(J, purcell_values, J_th)
    return S / S.max()


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fit_threshold(J, flux, purcell, n_coarse=200, span=100.0, rtol=1e-10) -> FitResult:
    """One-parameter fit of the bare-laser threshold to a normalized flux curve.

    Parameters
    ----------
    J : array_like
        Current densities [A/cm^2].
    flux : array_like
        Measured photon flux in any units; normalized to unit maximum here.
    purcell : float or callable
        Purcell factor, constant or as a function of J.

    The model is the sub-threshold photon density with ``J'_th = J_th/F_P(J)``
    normalized to unit maximum. Trial thresholds that put any data point at
    or beyond the pole score an infinite residual. A log-spaced coarse scan
    over ``[J_min, span * J_min]`` (``J_min`` = the smallest admissible
    threshold) is refined by golden-section search.
    """
    J = np.asarray(J, dtype=float)
    y = np.asarray(flux, dtype=float)
    if J.size < 3 or J.shape != y.shape:
        raise ConfigError("threshold fit needs >= 3 matching samples")
    if not y.max() > 0:
        raise AnalysisError("flux data has no positive sample")
    y = y / y.max()
    F = np.broadcast_to(np.asarray(purcell(J) if callable(purcell) else purcell, dtype=float), J.shape)
    if not np.all(F > 0):
        raise AnalysisError("Purcell factor must be positive at every data point")

    def rss(jth):
        pred = threshold_model(J, F, jth)
        if pred is None:
            return math.inf
        r = pred - y
        return float(r @ r)

    j_min = float(np.max(J * F))
    trials = j_min * np.geomspace(1.0 + 1e-6, span, n_coarse)
    costs = np.array([rss(t) for t in trials])
    k = int(np.argmin(costs))
    a = trials[max(k - 1, 0)]
    b = trials[min(k + 1, n_coarse - 1)]

    iterations = 0
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = rss(c), rss(d)
    while b - a > rtol * b:
        iterations += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = rss(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = rss(d)
    jth = c if fc <= fd else d
    cost = min(fc, fd)

    h = 1e-6 * jth
    deriv = (threshold_model(J, F, jth + h) - threshold_model(J, F, jth - h)) / (2 * h)
    r = threshold_model(J, F, jth) - y
    se = math.sqrt(cost / (J.size - 1) / float(deriv @ deriv))
    at_edge = k in (0, n_coarse - 1)
    return FitResult(
        params={"J_th_A_cm2": float(jth)}, stderr={"J_th_A_cm2": se}, rss=cost,
        iterations=iterations, converged=not at_edge, optimality=optimality(deriv[:, None], r),
    )
