"""Regenerate the shipped example inputs under ``src/patchlum/data``.

Deterministic: every dataset uses its own fixed seed.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from patchlum.config import load_config
from patchlum.fitting import threshold_model
from patchlum.purcell import lorentzian
from patchlum.quantities import HC_MEV_UM
from patchlum.tables import write_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "patchlum" / "data"

PAPER_DEVICE = {
    "cavity": {
        "s_um": 1.4, "H_um": 0.75, "p_um": 7.0, "Nx": 10, "Ny": 10,
        "n_mode": HC_MEV_UM / 130.0 / 2.8, "Q_cav": 14.4,
    },
    "emitter": {"E0_meV": 130.0, "V0_V": 4.5, "Q_EL": 9.0},
    "cascade": {"Gamma_tot_per_s": 1.0e12, "radiative_fraction": 0.8, "Jth_kA_cm2": 25.0},
    "farfield": {"z_mm": 50.0},
    "notes": {
        "cavity.n_mode": "chosen so that lambda_cav = 2 s n puts the cavity at 130 meV, "
        "aligned with the emitter at V0; lambda_cav/n = 2.8 um either way",
    },
}


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "paper_device.json").write_text(json.dumps(PAPER_DEVICE, indent=2) + "\n", encoding="utf-8")
    cfg = load_config(PAPER_DEVICE)

    # normalized photon flux vs drive, 2% multiplicative noise
    rng = np.random.default_rng(5)
    J = np.linspace(0.5, 20.0, 60)
    flux = threshold_model(J * 1e3, cfg.drive_purcell()(J * 1e3), 25e3)
    flux = flux * (1.0 + 0.02 * rng.standard_normal(J.size))
    write_csv(DATA / "flux.csv", "flux", [J, flux])

    # reflectivity dip, Q = 14, 0.5% additive noise
    rng = np.random.default_rng(1)
    E = np.linspace(90.0, 170.0, 161)
    E_cav, Q = 130.0, 14.0
    R = 1.0 - 0.6 * lorentzian(E - E_cav, E_cav / Q) + 0.005 * rng.standard_normal(E.size)
    write_csv(DATA / "reflectivity.csv", "reflectivity", [E, R])

    # EL peak vs bias, 15 meV/V slope, 0.3 meV scatter
    rng = np.random.default_rng(2)
    V = np.linspace(3.5, 7.0, 8)
    peak = 130.0 + 15.0 * (V - 4.5) + 0.3 * rng.standard_normal(V.size)
    write_csv(DATA / "stark.csv", "stark", [V, peak])

    # power vs current: 2.9 uW at 80 mA
    rng = np.random.default_rng(3)
    I = np.linspace(10.0, 80.0, 15)
    P = 2.9 / 80.0 * I * (1.0 + 0.01 * rng.standard_normal(I.size))
    write_csv(DATA / "li.csv", "li", [I, P])

    b = cfg.values["bias_map"]
    write_csv(DATA / "iv.csv", "iv", [b["bias_V"], b["current_mA"]])


if __name__ == "__main__":
    main()
