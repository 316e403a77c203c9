"""Three-level cascade rate equations with Purcell-enhanced radiative terms.

State variables are volume densities in cm^-3 (upper level ``n3``, lower
level ``n2``, photons ``S``); time is in seconds and current density in
A/cm^2. The spontaneous-emission coupling factor is fixed to one: every
emitted photon, spontaneous or stimulated, lands in the single cavity mode.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AboveThresholdError, ConfigError, DomainError
from .quantities import MEV_TO_J, NM_TO_CM, Q_E, UM3_TO_CM3

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CascadeParams:
    """Transport and optical constants of one cascade period.

    Parameters
    ----------
    Lp_nm : float
        Period length [nm].
    tau3_ps, tau2_ps : float
        Non-radiative lifetimes of the upper and lower levels [ps]. ``tau3``
        includes the 3 -> 2 channel.
    tau32_ps : float
        Non-radiative 3 -> 2 time [ps].
    tau_sp_ns : float
        Free-space spontaneous lifetime [ns].
    sigma_V : float
        Modal gain rate coefficient [cm^3/s], ``sigma_V * S = 1/tau_st``.
    Gamma_tot : float
        Total photon loss rate [1/s].
    radiative_fraction : float
        Share of ``Gamma_tot`` that leaves the cavity as radiation.
    """

    Lp_nm: float = 50.0
    tau3_ps: float = 1.0
    tau2_ps: float = 0.2
    tau32_ps: float = 2.0
    tau_sp_ns: float = 50.0
    sigma_V: float = 1.0e-5
    Gamma_tot: float = 1.0e12
    radiative_fraction: float = 0.8

    def __post_init__(self):
        for name in ("Lp_nm", "tau3_ps", "tau2_ps", "tau32_ps", "tau_sp_ns", "sigma_V", "Gamma_tot"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if not 0.0 <= self.radiative_fraction <= 1.0:
            raise DomainError("radiative_fraction must lie in [0, 1]")
        if self.tau3_ps > self.tau32_ps:
            raise DomainError("tau3 must not exceed tau32 (tau3 includes the 3->2 channel)")

    @classmethod
    def calibrated(cls, Jth_A_cm2: float, **kwargs) -> CascadeParams:
        """Parameters whose ``sigma_V`` puts the bare-laser threshold at ``Jth_A_cm2``."""
        if not Jth_A_cm2 > 0:
            raise DomainError("threshold must be positive")
        probe = cls(**kwargs)
        t_eff = tau_eff(probe)
        if t_eff <= 0:
            raise DomainError("no population inversion: cannot calibrate sigma_V")
        sigma = probe.Gamma_tot * Q_E * probe.Lp_cm / (Jth_A_cm2 * t_eff)
        return cls(**{**kwargs, "sigma_V": sigma})

    @property
    def Lp_cm(self) -> float:
        return self.Lp_nm * NM_TO_CM

    @property
    def tau3(self) -> float:
        return self.tau3_ps * 1e-12

    @property
    def tau2(self) -> float:
        return self.tau2_ps * 1e-12

    @property
    def tau32(self) -> float:
        return self.tau32_ps * 1e-12

    @property
    def tau_sp(self) -> float:
        return self.tau_sp_ns * 1e-9

    @property
    def gamma_R(self) -> float:
        return self.radiative_fraction * self.Gamma_tot

    @property
    def gamma_NR(self) -> float:
        return self.Gamma_tot - self.gamma_R

    @property
    def photon_lifetime(self) -> float:
        return 1.0 / self.Gamma_tot

    def injection_rate(self, J):
        """Electrons injected per unit volume and time, J / (q L_p) [cm^-3 s^-1]."""
        return np.asarray(J, dtype=float) / (Q_E * self.Lp_cm)


def tau_eff(params: CascadeParams) -> float:
    """Inversion lifetime ``tau3 * (1 - tau2/tau32)`` [s]."""
    if params.tau2 >= params.tau32:
        warnings.warn("tau2 >= tau32: no population inversion, thresholds undefined", stacklevel=2)
    return params.tau3 * (1.0 - params.tau2 / params.tau32)


def derivatives(state, params: CascadeParams, purcell, J):
    """Right-hand side of the rate equations.

    ``state`` has shape ``(3, ...)`` holding ``(n3, n2, S)``; ``purcell`` and
    ``J`` broadcast against ``state[0]``.
    """
    n3, n2, S = state
    radiative = purcell * (n3 / params.tau_sp + (n3 - n2) * params.sigma_V * S)
    return np.array([
        params.injection_rate(J) - n3 / params.tau3 - radiative,
        n3 / params.tau32 - n2 / params.tau2 + radiative,
        -S * params.Gamma_tot + radiative,
    ])


def rk4_step(f, y, h):
    """One classical fourth-order Runge-Kutta step of the autonomous system ``f``."""
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution; ``above_threshold`` marks drives with ``J F_P >= J_th``.

    Above threshold the photon density saturates through gain clamping
    rather than diverging, so the flag, not an exception, reports it.
    """

    t: np.ndarray
    n3: np.ndarray
    n2: np.ndarray
    S: np.ndarray
    clamped_steps: int = 0
    above_threshold: object = False

    @property
    def final(self) -> np.ndarray:
        return np.array([self.n3[-1], self.n2[-1], self.S[-1]])


def max_time_step(params: CascadeParams) -> float:
    return 0.01 * min(params.tau2, params.tau3, 1.0 / params.Gamma_tot)


def _diverged(y, runaway) -> bool:
    return bool(np.any(~np.isfinite(y)) or np.any(y[2] > runaway))


def integrate_transient(state0, params: CascadeParams, purcell, J, t_end, dt, record_every=1):
    """Fixed-step RK4 integration of the rate equations from ``state0``.

    ``J`` and ``purcell`` may be arrays, in which case independent
    trajectories are advanced together; ``state0`` must then broadcast to
    ``(3, len(J))``.

    Raises
    ------
    ConfigError
        If ``dt`` exceeds one hundredth of the fastest time constant.
    AboveThresholdError
        If the photon density runs away (lasing, outside model validity).
    """
    if dt <= 0 or t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    if dt > max_time_step(params) * (1 + 1e-12):
        raise ConfigError(f"dt={dt:g} s exceeds 0.01 x fastest time constant ({max_time_step(params):g} s)")
    J = np.asarray(J, dtype=float)
    purcell = np.asarray(purcell, dtype=float)
    shape = np.broadcast(J, purcell).shape
    state0 = np.asarray(state0, dtype=float)
    if state0.shape == (3,):
        state0 = state0.reshape((3,) + (1,) * len(shape))
    y = np.broadcast_to(state0, (3,) + shape).copy()
    if np.any(y < 0):
        raise DomainError("initial state must be non-negative")

    spont_scale = purcell * params.injection_rate(J) * params.tau3 / (params.tau_sp * params.Gamma_tot)
    runaway = np.where(spont_scale > 0, 1e12 * spont_scale, np.inf)

    def f(state):
        return derivatives(state, params, purcell, J)

    n_steps = int(math.ceil(t_end / dt - 1e-9))
    times, samples = [0.0], [y.copy()]
    clamped = 0
    # overflow is caught explicitly by the divergence check
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            y = rk4_step(f, y, dt)
            if np.any(y < 0):
                flat = y.reshape(3, -1)
                scale = np.maximum(np.abs(flat).max(axis=1), 1e-300)
                if np.any(flat.min(axis=1) < -1e-12 * scale):
                    log.warning("RK4 step %d undershot below zero; clamping", k)
                clamped += 1
                np.maximum(y, 0.0, out=y)
            if k % 64 == 0 and _diverged(y, runaway):
                raise AboveThresholdError(f"photon density diverged at t={k * dt:g} s (above threshold)")
            if k % record_every == 0 or k == n_steps:
                times.append(k * dt)
                samples.append(y.copy())
    if _diverged(y, runaway):
        raise AboveThresholdError("photon density diverged (above threshold)")
    states = np.array(samples)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t_eff = tau_eff(params)
    above = J * purcell * params.sigma_V * t_eff >= params.Gamma_tot * Q_E * params.Lp_cm
    above = bool(above) if np.ndim(above) == 0 else above
    return Trajectory(np.array(times), states[:, 0], states[:, 1], states[:, 2], clamped, above)


def cold_cavity_populations(J, params: CascadeParams):
    """Upper-level density and inversion neglecting photon back-action."""
    J = np.asarray(J, dtype=float)
    if np.any(J < 0):
        raise DomainError("current density must be non-negative")
    inj = params.injection_rate(J)
    n3, dn = inj * params.tau3, inj * tau_eff(params)
    if n3.ndim == 0:
        return float(n3), float(dn)
    return n3, dn


@dataclass(frozen=True)
class SteadyStateResult:
    """Sub-threshold steady state.

    ``S`` is ``None`` (scalar input) or NaN (array input) where the loss
    balance has no positive solution, i.e. at or above threshold.
    """

    S: object
    n3: object
    dn: object
    J_th_eff: object
    valid: object


def threshold_current_density(params: CascadeParams) -> float:
    """Bare-laser threshold ``Gamma_tot q L_p / (sigma_V tau_eff)`` [A/cm^2]."""
    t_eff = tau_eff(params)
    if t_eff <= 0:
        raise DomainError("tau_eff <= 0: threshold undefined")
    return params.Gamma_tot * Q_E * params.Lp_cm / (params.sigma_V * t_eff)


def steady_state_photon_density(params: CascadeParams, purcell, J) -> SteadyStateResult:
    """Photon density from the steady-state photon balance with cold-cavity populations."""
    n3, dn = cold_cavity_populations(J, params)
    purcell_arr = np.asarray(purcell, dtype=float)
    n3_arr, dn_arr = np.asarray(n3), np.asarray(dn)
    denom = params.Gamma_tot - dn_arr * params.sigma_V * purcell_arr
    valid = denom > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.where(valid, purcell_arr * n3_arr / params.tau_sp / denom, np.nan)
        j_eff = threshold_current_density(params) / purcell_arr
    if np.ndim(S) == 0:
        ok = bool(valid)
        return SteadyStateResult(float(S) if ok else None, n3, dn, float(j_eff), ok)
    return SteadyStateResult(S, n3_arr, dn_arr, j_eff, valid)


def effective_threshold(J_th: float, purcell, J_max: float | None = None, n_scan: int = 4000):
    """Microcavity threshold ``J_th / F_P``.

    With a constant ``purcell`` this is a division. With a callable
    ``purcell(J)`` it is the smallest positive root of ``J * F_P(J) = J_th``
    on ``(0, J_max]``, bracketed on a uniform scan and refined by bisection.
    Returns ``None`` when no root exists in the interval.
    """
    if not callable(purcell):
        if purcell <= 0:
            return None
        return J_th / purcell
    if J_max is None:
        J_max = 4.0 * J_th
    grid = np.linspace(0.0, J_max, n_scan + 1)
    g = grid * np.asarray(purcell(grid), dtype=float) - J_th
    above = np.nonzero(g >= 0)[0]
    if above.size == 0:
        return None
    k = above[0]
    lo, hi = grid[k - 1], grid[k]

    def g1(x):
        return x * float(purcell(x)) - J_th

    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if g1(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def photon_density_eq2(J, purcell_values, J_th: float, prefactor: float = 1.0):
    """Sub-threshold photon density ``prefactor * J / (J_th/F_P - J)``.

    No validity check; points at or beyond the pole come out non-positive or
    infinite.
    """
    J = np.asarray(J, dtype=float)
    with np.errstate(divide="ignore"):
        return prefactor * J / (J_th / np.asarray(purcell_values, dtype=float) - J)


def eq2_prefactor(params: CascadeParams) -> float:
    """``(tau3/tau_sp) / (tau_eff sigma_V)`` [cm^-3]."""
    return params.tau3 / params.tau_sp / (tau_eff(params) * params.sigma_V)


def photon_density_curve(params: CascadeParams, purcell, J_grid):
    """Photon density S(J) [cm^-3] on ``J_grid`` with ``J'_th = J_th / F_P(J)`` pointwise.

    ``purcell`` is a constant or a callable of J.

    Raises
    ------
    AboveThresholdError
        If any grid point reaches its effective threshold.
    """
    J = np.asarray(J_grid, dtype=float)
    if np.any(J < 0):
        raise DomainError("current density must be non-negative")
    F = np.broadcast_to(np.asarray(purcell(J) if callable(purcell) else purcell, dtype=float), J.shape)
    J_th = threshold_current_density(params)
    bad = J * F >= J_th
    if np.any(bad):
        first = float(np.atleast_1d(J)[np.atleast_1d(bad)][0])
        raise AboveThresholdError(f"J={first:g} A/cm^2 is at or above the effective threshold")
    return photon_density_eq2(J, F, J_th, eq2_prefactor(params))


def emitted_power(S, photon_energy_meV, gamma_R, V_cav_um3, collection_efficiency=1.0):
    """Optical power [W] of one cavity, ``S * hbar*omega * gamma_R * V_cav``.

    ``collection_efficiency`` scales the result to the collected share.
    """
    if photon_energy_meV < 0 or gamma_R < 0 or V_cav_um3 < 0:
        raise DomainError("power inputs must be non-negative")
    if not 0.0 < collection_efficiency <= 1.0:
        raise DomainError("collection efficiency must lie in (0, 1]")
    S = np.asarray(S, dtype=float)
    out = collection_efficiency * S * photon_energy_meV * MEV_TO_J * gamma_R * V_cav_um3 * UM3_TO_CM3
    return float(out) if out.ndim == 0 else out


def quantum_efficiency(power_W, photon_energy_meV, current_A):
    """Emitted photons per injected electron."""
    if not current_A > 0:
        raise DomainError("current must be positive")
    if not photon_energy_meV > 0:
        raise DomainError("photon energy must be positive")
    photons = np.asarray(power_W, dtype=float) / (photon_energy_meV * MEV_TO_J)
    out = photons / (current_A / Q_E)
    return float(out) if np.ndim(out) == 0 else out
