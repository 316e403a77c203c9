"""Command-line interface.

Exit codes: 0 success, 1 invalid input (config, CSV, arguments), 2 numerical
failure (non-convergence, above-threshold evaluation, failed analysis).
Failures print one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import default_config, parse_config
from .errors import AnalysisError, ConfigError, DomainError, NumericalError
from .tables import ingest_csv, write_csv, write_json

log = logging.getLogger("patchlum")


class NotConverged(NumericalError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _config(args):
    return parse_config(args.config) if args.config else default_config()


def _meta(cfg, **extra):
    out = {"config_sha256": cfg.digest, "assumed": cfg.assumed}
    out.update(extra)
    return out


def _summary(cfg, command, body):
    return {
        "command": command,
        "version": __version__,
        **body,
        "config_sha256": cfg.digest,
        "config_source": cfg.source,
        "assumed": cfg.assumed,
        "provenance": cfg.provenance(),
    }


def _with_bias_map(cfg, args):
    if getattr(args, "iv", None):
        table = ingest_csv(args.iv, "iv")
        cfg.values["bias_map"] = {
            "bias_V": table["bias_V"].tolist(),
            "current_mA": table["current_mA"].tolist(),
        }
        cfg.assumed = [k for k in cfg.assumed if not k.startswith("bias_map.")]
    return cfg


def _plot(path, x, ys, xlabel, ylabel):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, y in ys.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(ys) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# simulate ---------------------------------------------------------------

def cmd_simulate_li(args, out):
    from .cavity import density_to_current
    from .ratemodel import (effective_threshold, emitted_power, photon_density_curve,
                            threshold_current_density)

    cfg = _with_bias_map(_config(args), args)
    cavity, params, purcell = cfg.cavity(), cfg.cascade(), cfg.drive_purcell()
    mode = cavity.mode()
    J = np.linspace(0.0, args.jmax * 1e3, args.npts)
    S = photon_density_curve(params, purcell, J)
    eta = cfg["cascade.collection_efficiency"]
    P = cavity.n_patches * emitted_power(S, mode.E_cav, params.gamma_R, mode.V_cav, eta)
    write_csv(out / "li_curve.csv", "li_curve", [J * 1e-3, S, P], _meta(cfg))

    J_th = threshold_current_density(params)
    root = effective_threshold(J_th, purcell, J_max=4.0 * J_th)
    try:
        J_align = purcell.alignment_density()
    except DomainError:
        J_align = None
    k = int(np.argmax(S))
    body = {
        "J_th_kA_cm2": J_th * 1e-3,
        "J_th_eff_kA_cm2": None if root is None else root * 1e-3,
        "J_th_eff_at_alignment_kA_cm2": J_th / purcell.coefficient * 1e-3,
        "purcell_coefficient": purcell.coefficient,
        "alignment_J_kA_cm2": None if J_align is None else J_align * 1e-3,
        "flux_peak_J_kA_cm2": float(J[k]) * 1e-3 if 0 < k < J.size - 1 else None,
        "sigma_V_cm3_s": params.sigma_V,
        "photon_energy_meV": mode.E_cav,
        "power_at_jmax_W": float(P[-1]),
        "current_at_jmax_mA": float(density_to_current(J[-1], cavity)) * 1e3,
        "n_patches": cavity.n_patches,
    }
    write_json(out / "li_summary.json", _summary(cfg, "simulate li", body))
    if args.plot:
        _plot(out / "li_curve.svg", J * 1e-3, {"P": P}, "J (kA/cm$^2$)", "P (W)")


def cmd_simulate_spectrum(args, out):
    from .spectra import energy_grid, filtered_spectrum, mesa_emission, narrowing_factor

    cfg = _config(args)
    emitter, mode = cfg.emitter(), cfg.cavity().mode()
    V = emitter.V0 if args.bias is None else args.bias
    grid = energy_grid(mode.E_cav, emitter.linewidth + mode.linewidth, n=args.npts)
    cav = filtered_spectrum(emitter, V, mode, grid)
    mesa = mesa_emission(emitter, V, grid)
    meta = _meta(cfg, bias_V=V)
    write_csv(out / "spectrum.csv", "spectrum", [cav.energy, cav.intensity], meta)
    write_csv(out / "spectrum_mesa.csv", "spectrum", [mesa.energy, mesa.intensity], meta)
    body = {
        "bias_V": V,
        "bias_extrapolated": emitter.is_extrapolated(V),
        "E_cav_meV": mode.E_cav,
        "cavity": {"peak_meV": cav.peak_energy, "fwhm_meV": cav.fwhm, "Q": cav.quality_factor},
        "mesa": {"peak_meV": mesa.peak_energy, "fwhm_meV": mesa.fwhm, "Q": mesa.quality_factor},
        "narrowing_factor": narrowing_factor(mesa, cav),
        "Q_cav": mode.Q_cav,
    }
    write_json(out / "spectrum_summary.json", _summary(cfg, "simulate spectrum", body))
    if args.plot:
        _plot(out / "spectrum.svg", grid, {"cavity": cav.intensity, "mesa": mesa.intensity},
              "E (meV)", "intensity")


def cmd_simulate_farfield(args, out):
    from .farfield import directivity, intensity_map, max_sidelobe_db

    cfg = _config(args)
    geom = cfg.geometry(args.nx, args.ny, args.coherence_scale)
    f = cfg.values["farfield"]
    z = args.z if args.z is not None else f["z_mm"]
    theta_pred = 0.886 * geom.wavelength / (max(geom.Nx, geom.Ny) * geom.pitch)
    width_pred = 2.0 * z * math.tan(0.5 * theta_pred)
    half = args.grid if args.grid is not None else (f["grid_mm"] or 2.5 * width_pred)
    step = args.step if args.step is not None else (f["step_mm"] or width_pred / 150.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fmap = intensity_map(geom, z, half, step)
    X, Y = np.meshgrid(fmap.x, fmap.y)
    meta = _meta(cfg, z_mm=z, coherence_scale=geom.coherence_scale)
    write_csv(out / "farfield_map.csv", "farfield_map", [X, Y, fmap.intensity], meta)
    body = {
        "z_mm": z,
        "Nx": geom.Nx, "Ny": geom.Ny, "pitch_um": geom.pitch, "wavelength_um": geom.wavelength,
        "dx_mm": fmap.dx, "dy_mm": fmap.dy,
        "theta_div_x_deg": fmap.theta_x, "theta_div_y_deg": fmap.theta_y,
        "theta_array_theory_deg": math.degrees(theta_pred),
        "directivity": directivity(geom),
        "max_sidelobe_dB": max_sidelobe_db(geom),
        "grid_half_extent_mm": half, "grid_step_mm": step,
        "metadata": fmap.metadata,
        "warnings": [str(w.message) for w in caught],
    }
    write_json(out / "farfield_summary.json", _summary(cfg, "simulate farfield", body))
    if args.plot:
        iy = fmap.intensity.shape[0] // 2
        _plot(out / "farfield_cut.svg", fmap.x, {"x cut": fmap.intensity[iy], "y cut": fmap.intensity[:, iy]},
              "position (mm)", "intensity")


def cmd_simulate_purcell(args, out):
    from .purcell import combined_q

    cfg = _with_bias_map(_config(args), args)
    purcell, emitter = cfg.drive_purcell(), cfg.emitter()
    mode = purcell.mode
    J = np.linspace(0.0, args.jmax * 1e3, args.npts)
    V = purcell.bias_at(J)
    F = purcell(J)
    path = out / "purcell_curve.csv"
    with path.open("w", encoding="utf-8") as fh:
        for key, value in _meta(cfg).items():
            fh.write(f"# {key}: {json.dumps(value, separators=(',', ':'))}\n")
        fh.write("J_kA_cm2,bias_V,detuning_meV,purcell\n")
        for row in zip(J * 1e-3, V, emitter.detuning(V, mode.E_cav), F):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    body = {
        "purcell_coefficient": purcell.coefficient,
        "combined_Q": combined_q(emitter.quality_factor(), mode.Q_cav),
        "total_linewidth_meV": purcell.linewidth,
        "E_cav_meV": mode.E_cav,
        "max_purcell_on_grid": float(F.max()),
        "argmax_J_kA_cm2": float(J[int(np.argmax(F))]) * 1e-3,
    }
    write_json(out / "purcell_summary.json", _summary(cfg, "simulate purcell", body))


# fit --------------------------------------------------------------------

def _write_fit(out, name, cfg, result, extra=None):
    payload = result.to_dict()
    payload["meta"] = {**_meta(cfg), **(extra or {})}
    write_json(out / name, payload)
    if not result.converged:
        raise NotConverged(f"{name}: fit did not converge")


def cmd_fit_lorentzian(args, out):
    from .fitting import fit_cavity_lorentzian

    cfg = _config(args)
    table = ingest_csv(args.data, "reflectivity")
    res = fit_cavity_lorentzian(table["energy_meV"], table["reflectivity"])
    print(f"E_cav = {res.params['E_cav_meV']:.4f} meV, Q_cav = {res.params['Q_cav']:.4f}")
    _write_fit(out, "fit_lorentzian.json", cfg, res, {"data": table.source})


def cmd_fit_stark(args, out):
    from .fitting import fit_stark

    cfg = _config(args)
    table = ingest_csv(args.data, "stark")
    V0 = cfg["emitter.V0_V"] if args.v0 is None else args.v0
    res = fit_stark(table["bias_V"], table["peak_meV"], V0=V0)
    print(f"E0 = {res.params['E0_meV']:.4f} meV at V0 = {V0} V, kappa = {res.params['kappa_meV_per_V']:.4f} meV/V")
    _write_fit(out, "fit_stark.json", cfg, res, {"data": table.source, "V0_V": V0})


def cmd_fit_threshold(args, out):
    from .fitting import fit_threshold

    cfg = _with_bias_map(_config(args), args)
    table = ingest_csv(args.data, "flux")
    J = table["J_kA_cm2"] * 1e3
    res = fit_threshold(J, table["flux_norm"], cfg.drive_purcell())
    jth = res.params["J_th_A_cm2"] * 1e-3
    print(f"J_th = {jth:.4f} kA/cm2")
    _write_fit(out, "fit_threshold.json", cfg, res, {"data": table.source, "J_th_kA_cm2": jth})


def cmd_fit_qe(args, out):
    from .fitting import fit_qe_slope

    cfg = _config(args)
    table = ingest_csv(args.data, "li")
    E = cfg["emitter.E0_meV"] if args.energy is None else args.energy
    res = fit_qe_slope(table["current_mA"], table["power_uW"], E)
    print(f"eta_QE = {res.params['eta_QE']:.6g}")
    _write_fit(out, "fit_qe.json", cfg, res, {"data": table.source, "photon_energy_meV": E})


def cmd_report_device(args, out):
    from .cavity import electrical_area, fill_factor, optical_area
    from .purcell import combined_q
    from .ratemodel import tau_eff, threshold_current_density

    cfg = _config(args)
    cavity, params, purcell, emitter = cfg.cavity(), cfg.cascade(), cfg.drive_purcell(), cfg.emitter()
    mode = cavity.mode()
    J_th = threshold_current_density(params)
    body = {
        "cavity": {
            "E_cav_meV": mode.E_cav, "wavelength_um": mode.wavelength, "Q_cav": mode.Q_cav,
            "linewidth_meV": mode.linewidth, "V_cav_um3": mode.V_cav,
            "electrical_area_um2": electrical_area(cavity), "optical_area_um2": optical_area(cavity),
            "fill_factor": fill_factor(cavity),
        },
        "emitter": {"E0_meV": emitter.E0, "linewidth_meV": emitter.linewidth, "Q_EL": emitter.quality_factor()},
        "purcell": {
            "combined_Q": combined_q(emitter.quality_factor(), mode.Q_cav),
            "total_linewidth_meV": purcell.linewidth,
            "coefficient": purcell.coefficient,
        },
        "cascade": {
            "tau_eff_s": tau_eff(params), "sigma_V_cm3_s": params.sigma_V,
            "gamma_R_per_s": params.gamma_R, "gamma_NR_per_s": params.gamma_NR,
            "J_th_kA_cm2": J_th * 1e-3,
            "J_th_eff_at_alignment_kA_cm2": J_th / purcell.coefficient * 1e-3,
        },
    }
    write_json(out / "device_report.json", _summary(cfg, "report device", body))
    print(json.dumps(body["purcell"]))


# parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="patchlum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)

    def add(sub, name, func, data=False, help=None):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="device configuration JSON (defaults if omitted)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--plot", action="store_true", help="also write SVG quick-looks")
        if data:
            p.add_argument("--data", required=True, help="input CSV")
        p.set_defaults(func=func)
        return p

    sim = groups.add_parser("simulate").add_subparsers(dest="what", required=True)
    p = add(sim, "li", cmd_simulate_li, help="photon density and power vs current density")
    p.add_argument("--jmax", type=float, default=20.0, help="max current density [kA/cm2]")
    p.add_argument("--npts", type=int, default=201)
    p.add_argument("--iv", help="bias/current CSV overriding the config table")
    p = add(sim, "spectrum", cmd_simulate_spectrum, help="mesa and cavity-filtered EL spectra")
    p.add_argument("--bias", type=float, help="bias [V] (default: reference bias)")
    p.add_argument("--npts", type=int, default=8001)
    p = add(sim, "farfield", cmd_simulate_farfield, help="detector-plane intensity map")
    p.add_argument("--z", type=float, help="detector distance [mm]")
    p.add_argument("--grid", type=float, help="half extent of the plane grid [mm]")
    p.add_argument("--step", type=float, help="grid step [mm]")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--coherence-scale", type=float, dest="coherence_scale")
    p = add(sim, "purcell", cmd_simulate_purcell, help="Purcell factor vs current density")
    p.add_argument("--jmax", type=float, default=20.0)
    p.add_argument("--npts", type=int, default=401)
    p.add_argument("--iv", help="bias/current CSV overriding the config table")

    fit = groups.add_parser("fit").add_subparsers(dest="what", required=True)
    add(fit, "lorentzian", cmd_fit_lorentzian, data=True, help="cavity Q from a reflectivity dip")
    p = add(fit, "stark", cmd_fit_stark, data=True, help="Stark slope from EL peak vs bias")
    p.add_argument("--v0", type=float, help="reference bias [V] (default: config V0_V)")
    p = add(fit, "threshold", cmd_fit_threshold, data=True, help="laser threshold from normalized flux")
    p.add_argument("--iv", help="bias/current CSV overriding the config table")
    p = add(fit, "qe", cmd_fit_qe, data=True, help="quantum efficiency from power vs current")
    p.add_argument("--energy", type=float, help="photon energy [meV] (default: config E0_meV)")

    rep = groups.add_parser("report").add_subparsers(dest="what", required=True)
    add(rep, "device", cmd_report_device, help="derived device quantities")
    return parser


def _fail(kind, exc) -> None:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        _fail("validation", exc)
        return 1
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        args.func(args, out)
    except (ConfigError, DomainError, OSError) as exc:
        _fail("validation", exc)
        return 1
    except (NumericalError, AnalysisError) as exc:
        _fail("numerical", exc)
        return 2
    return 0


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
