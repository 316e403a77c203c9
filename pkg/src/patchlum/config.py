"""Device configuration document: schema, defaults, validation, provenance.

A configuration is one JSON object with the sections ``cavity``,
``emitter``, ``cascade``, ``farfield`` and ``bias_map`` plus an optional
free-text ``notes`` mapping. Every key left out is filled from the defaults
below and reported as *assumed* in all outputs.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DomainError

# (default, provenance note)
DEFAULTS = {
    "cavity": {
        "s_um": (1.4, "reported: patch size close to 1.4 um"),
        "H_um": (0.75, "reported: H = 0.75 um"),
        "p_um": (7.0, "reported: p = 7 um"),
        "Nx": (10, "reported: 10x10 array of the spectral and power measurements"),
        "Ny": (10, "reported: 10x10 array of the spectral and power measurements"),
        "n_mode": (10.0 / 2.8, "derived: s = 1.4 um resonant at 10 um"),
        "Q_cav": (14.4, "reported: Q_cav used in the Purcell estimate"),
    },
    "emitter": {
        "E0_meV": (130.0, "reported: EL transition near 130 meV"),
        "V0_V": (4.5, "reported: line aligned with the cavity at 4.5 V"),
        "kappa_meV_per_V": (15.0, "assumed: Stark slope not tabulated"),
        "Q_EL": (9.0, "reported: mesa Q_EL = 9"),
        "tau_sp_ns": (50.0, "assumed: free-space spontaneous lifetime"),
    },
    "cascade": {
        "Lp_nm": (50.0, "assumed: cascade period length"),
        "tau3_ps": (1.0, "assumed: upper-level lifetime"),
        "tau2_ps": (0.2, "assumed: lower-level lifetime"),
        "tau32_ps": (2.0, "assumed: 3->2 non-radiative time"),
        "Gamma_tot_per_s": (1.0e12, "reported: photon lifetime 1 ps"),
        "radiative_fraction": (0.8, "reported: about 80% of losses radiative"),
        "Jth_kA_cm2": (25.0, "reported: fitted laser threshold ~25 kA/cm2"),
        "collection_efficiency": (1.0, "assumed: surface-emitting array collects everything"),
    },
    "farfield": {
        "z_mm": (50.0, "reported: detector at 50 mm"),
        "grid_mm": (None, "assumed: half extent sized to 2.5 predicted beam widths"),
        "step_mm": (None, "assumed: step of 1/150 predicted beam width"),
        "element_pattern": ("cosine", "assumed: cos(theta) patch element"),
        "coherence_scale": (1.0, "assumed: physical array aperture"),
    },
    "bias_map": {
        "bias_V": ((0.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0), "assumed: no I-V given"),
        "current_mA": ((0.0, 0.0, 1.0, 4.0, 10.0, 18.0, 28.0, 50.0, 80.0), "assumed: no I-V given"),
    },
}

OPTIONAL_KEYS = {"cascade": {"sigma_V_cm3_s"}}

_POSITIVE = {
    "cavity.s_um", "cavity.H_um", "cavity.p_um", "cavity.Q_cav",
    "emitter.E0_meV", "emitter.Q_EL", "emitter.tau_sp_ns",
    "cascade.Lp_nm", "cascade.tau3_ps", "cascade.tau2_ps", "cascade.tau32_ps",
    "cascade.Gamma_tot_per_s", "cascade.Jth_kA_cm2", "cascade.sigma_V_cm3_s",
    "farfield.z_mm", "farfield.grid_mm", "farfield.step_mm", "farfield.coherence_scale",
}


def _fail(key, constraint, value):
    raise ConfigError(f"{key}: {constraint} (got {value!r})")


def _check_number(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(key, "must be a number", value)
    if not math.isfinite(value):
        _fail(key, "must be finite", value)
    if key in _POSITIVE and value <= 0:
        _fail(key, "must be > 0", value)


def _validate_value(key, value):
    if value is None:
        return
    if key in ("cavity.Nx", "cavity.Ny"):
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            _fail(key, "must be an integer >= 1", value)
    elif key == "cavity.n_mode":
        _check_number(key, value)
        if value <= 1:
            _fail(key, "must be > 1", value)
    elif key == "cascade.radiative_fraction":
        _check_number(key, value)
        if not 0 <= value <= 1:
            _fail(key, "must lie in [0, 1]", value)
    elif key == "cascade.collection_efficiency":
        _check_number(key, value)
        if not 0 < value <= 1:
            _fail(key, "must lie in (0, 1]", value)
    elif key == "farfield.element_pattern":
        if value not in ("cosine", "isotropic"):
            _fail(key, "must be 'cosine' or 'isotropic'", value)
    elif key.startswith("bias_map."):
        if not isinstance(value, (list, tuple)) or len(value) < 2:
            _fail(key, "must be a list of >= 2 numbers", value)
        for v in value:
            _check_number(key, v)
    else:
        _check_number(key, value)


@dataclass
class DeviceConfig:
    """Validated configuration with defaults applied."""

    values: dict
    assumed: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    digest: str = ""
    source: str | None = None

    def __getitem__(self, dotted):
        section, key = dotted.split(".")
        return self.values[section][key]

    def provenance(self) -> dict:
        """Provenance notes of every defaulted key, plus user notes."""
        out = {k: DEFAULTS[k.split(".")[0]][k.split(".")[1]][1] for k in self.assumed}
        out.update(self.notes)
        return out

    def meta(self) -> dict:
        return {"config_sha256": self.digest, "assumed": list(self.assumed)}

    # domain objects -----------------------------------------------------

    def cavity(self):
        from .cavity import PatchCavity

        c = self.values["cavity"]
        return PatchCavity(c["s_um"], c["H_um"], c["p_um"], c["Nx"], c["Ny"], c["n_mode"], c["Q_cav"])

    def emitter(self):
        from .emitter import StarkEmitter

        e = self.values["emitter"]
        b = self.values["bias_map"]["bias_V"]
        return StarkEmitter.from_quality_factor(
            e["E0_meV"], e["Q_EL"], V0=e["V0_V"], kappa=e["kappa_meV_per_V"],
            tau_sp=e["tau_sp_ns"] * 1e-9, bias_range=(min(b), max(b)),
        )

    def cascade(self):
        from .ratemodel import CascadeParams

        c = self.values["cascade"]
        kwargs = dict(
            Lp_nm=c["Lp_nm"], tau3_ps=c["tau3_ps"], tau2_ps=c["tau2_ps"], tau32_ps=c["tau32_ps"],
            tau_sp_ns=self.values["emitter"]["tau_sp_ns"], Gamma_tot=c["Gamma_tot_per_s"],
            radiative_fraction=c["radiative_fraction"],
        )
        if c.get("sigma_V_cm3_s") is not None:
            return CascadeParams(sigma_V=c["sigma_V_cm3_s"], **kwargs)
        return CascadeParams.calibrated(c["Jth_kA_cm2"] * 1e3, **kwargs)

    def bias_map(self):
        from .emitter import BiasCurrentMap

        b = self.values["bias_map"]
        return BiasCurrentMap(tuple(b["bias_V"]), tuple(b["current_mA"]))

    def drive_purcell(self):
        from .purcell import DrivePurcell

        return DrivePurcell(self.emitter(), self.cavity(), self.bias_map())

    def geometry(self, Nx=None, Ny=None, coherence_scale=None):
        from .farfield import ArrayGeometry

        c, f = self.values["cavity"], self.values["farfield"]
        return ArrayGeometry(
            Nx or c["Nx"], Ny or c["Ny"], c["p_um"], self.cavity().mode().wavelength,
            element=f["element_pattern"],
            coherence_scale=f["coherence_scale"] if coherence_scale is None else coherence_scale,
        )


def _digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def load_config(doc: dict, digest: str | None = None, source: str | None = None) -> DeviceConfig:
    """Validate a parsed document and apply defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = [k for k in doc if k not in DEFAULTS and k != "notes"]
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    values, assumed = {}, []
    for section, fields_ in DEFAULTS.items():
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"{section}: must be an object")
        allowed = set(fields_) | OPTIONAL_KEYS.get(section, set())
        bad = [f"{section}.{k}" for k in given if k not in allowed]
        if bad:
            raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(bad))}")
        values[section] = {}
        for key, (default, _) in fields_.items():
            if key in given:
                _validate_value(f"{section}.{key}", given[key])
                values[section][key] = copy.deepcopy(given[key])
            else:
                values[section][key] = copy.deepcopy(default)
                assumed.append(f"{section}.{key}")
        for key in OPTIONAL_KEYS.get(section, ()):
            if key in given:
                _validate_value(f"{section}.{key}", given[key])
                values[section][key] = given[key]
    if "sigma_V_cm3_s" in values["cascade"]:
        if "cascade.Jth_kA_cm2" not in assumed:
            raise ConfigError("cascade: give either Jth_kA_cm2 or sigma_V_cm3_s, not both")
        assumed.remove("cascade.Jth_kA_cm2")
    notes = doc.get("notes", {})
    if not isinstance(notes, dict) or not all(isinstance(v, str) for v in notes.values()):
        raise ConfigError("notes: must map keys to strings")

    if digest is None:
        digest = _digest(json.dumps(doc, sort_keys=True).encode())
    cfg = DeviceConfig(values, assumed, dict(notes), digest, source)
    # cross-field invariants owned by the domain classes
    for name, build in (("cavity", cfg.cavity), ("emitter", cfg.emitter),
                        ("cascade", cfg.cascade), ("bias_map", cfg.bias_map)):
        try:
            build()
        except DomainError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
    return cfg


def parse_config(path) -> DeviceConfig:
    """Read, validate and default a JSON configuration file.

    The digest is the SHA-256 of the file bytes.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    return load_config(doc, digest=_digest(raw), source=str(path))


def default_config() -> DeviceConfig:
    return load_config({})
