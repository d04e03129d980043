"""Flat dotted-key run configuration.

Format: one `section.key = value` per line, `#` comments, blank lines
ignored.  Unknown keys are hard errors; every value is validated on load.
The config fingerprint (sha256 of the canonical key=value listing) is
embedded in every output file for provenance.
"""

import hashlib
import math
from dataclasses import dataclass

from .errors import ConfigError

ALL_SUITES = ("kernel", "coefficients", "convolution", "inequalities",
              "energy", "smoothing")


@dataclass
class RunConfig:
    grid_R: float = 8.0
    grid_N: int = 32
    gamma: float = -1.0
    mu_normalized: bool = True
    quad_radial_order: int = 32
    quad_angular_order: int = 64
    quad_rtol: float = 1e-6
    f0_kind: str = "random"            # random | gaussian | zero
    f0_bandlimit: int = 10
    f0_envelope_width: float = 1.25
    f0_spectral_decay: float = 2.0
    f0_scale: float = 1.0
    f0_orthogonalize: bool = True
    source_profile: str = "gaussian"   # gaussian | packet | blend | zero
    source_width: float = 1.5
    source_wavenumber: float = 1.3
    source_blend_ratio: float = 1.0
    source_amplitude: float = 1.0
    source_orthogonalize: bool = True
    source_tau_kind: str = "exp"       # exp | poly | cos
    source_tau_rate: float = 1.0
    source_tau_omega: float = 1.0
    source_tau_coeffs: tuple = (1.0,)
    time_T: float = 2.0
    time_safety: float = 0.4
    time_snapshot_times: tuple = (0.5, 1.0, 2.0)
    ladder_kmax: int = 6
    ladder_eval_times: tuple = (0.5, 1.0, 2.0)
    verify_ensemble_size: int = 64
    verify_seed: int = 42
    verify_suites: tuple = ALL_SUITES
    io_cache_dir: str = ".landau-cache"
    io_out_dir: str = "out"


_SCHEMA = {
    "grid.R": ("grid_R", float),
    "grid.N": ("grid_N", int),
    "gamma": ("gamma", float),
    "mu_normalized": ("mu_normalized", bool),
    "quadrature.radial_order": ("quad_radial_order", int),
    "quadrature.angular_order": ("quad_angular_order", int),
    "quadrature.rtol": ("quad_rtol", float),
    "f0.kind": ("f0_kind", str),
    "f0.bandlimit": ("f0_bandlimit", int),
    "f0.envelope_width": ("f0_envelope_width", float),
    "f0.spectral_decay": ("f0_spectral_decay", float),
    "f0.scale": ("f0_scale", float),
    "f0.orthogonalize": ("f0_orthogonalize", bool),
    "source.profile": ("source_profile", str),
    "source.width": ("source_width", float),
    "source.wavenumber": ("source_wavenumber", float),
    "source.blend_ratio": ("source_blend_ratio", float),
    "source.amplitude": ("source_amplitude", float),
    "source.orthogonalize": ("source_orthogonalize", bool),
    "source.tau_kind": ("source_tau_kind", str),
    "source.tau_rate": ("source_tau_rate", float),
    "source.tau_omega": ("source_tau_omega", float),
    "source.tau_coeffs": ("source_tau_coeffs", "float_list"),
    "time.T": ("time_T", float),
    "time.safety": ("time_safety", float),
    "time.snapshot_times": ("time_snapshot_times", "float_list"),
    "ladder.kmax": ("ladder_kmax", int),
    "ladder.eval_times": ("ladder_eval_times", "float_list"),
    "verify.ensemble_size": ("verify_ensemble_size", int),
    "verify.seed": ("verify_seed", int),
    "verify.suites": ("verify_suites", "str_list"),
    "io.cache_dir": ("io_cache_dir", str),
    "io.out_dir": ("io_out_dir", str),
}


def _parse_value(raw, kind, key, line_no):
    raw = raw.strip()
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is bool:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind is str:
            return raw
        if kind == "float_list":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind == "str_list":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}", line=line_no)
    raise AssertionError(f"unhandled kind {kind}")


def parse_config_text(text):
    cfg = RunConfig()
    seen = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key = value, got {body!r}", line=line_no)
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=line_no)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line=line_no)
        seen.add(key)
        attr, kind = _SCHEMA[key]
        setattr(cfg, attr, _parse_value(raw, kind, key, line_no))
    validate_config(cfg)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    return parse_config_text(text)


def validate_config(cfg):
    if not -3.0 < cfg.gamma < 0.0:
        raise ConfigError(
            f"gamma = {cfg.gamma} outside the soft potential range (-3, 0)")
    if cfg.grid_N < 16 or cfg.grid_N % 2 != 0:
        raise ConfigError(f"grid.N must be even and >= 16, got {cfg.grid_N}")
    if not cfg.grid_R > 0:
        raise ConfigError(f"grid.R must be positive, got {cfg.grid_R}")
    if cfg.quad_radial_order < 32:
        raise ConfigError("quadrature.radial_order must be >= 32")
    if cfg.quad_angular_order < 26:
        raise ConfigError("quadrature.angular_order must be >= 26")
    if not cfg.quad_rtol > 0:
        raise ConfigError("quadrature.rtol must be positive")
    if not cfg.time_T > 0:
        raise ConfigError(f"time.T must be positive, got {cfg.time_T}")
    if not 0 < cfg.time_safety <= 1:
        raise ConfigError("time.safety must be in (0, 1]")
    if cfg.ladder_kmax > 10 or cfg.ladder_kmax < 1:
        raise ConfigError(f"ladder.kmax must be in [1, 10], got {cfg.ladder_kmax}")
    if not cfg.ladder_eval_times:
        raise ConfigError("ladder.eval_times must name at least one time")
    for t in cfg.ladder_eval_times:
        if not 0.0 < t <= cfg.time_T:
            raise ConfigError(
                f"ladder.eval_times must lie in (0, T]; got {t} with T = {cfg.time_T}")
    for t in cfg.time_snapshot_times:
        if not 0.0 < t <= cfg.time_T:
            raise ConfigError(
                f"time.snapshot_times must lie in (0, T]; got {t}")
    if not 0 < cfg.f0_bandlimit < cfg.grid_N // 2:
        raise ConfigError(
            f"f0.bandlimit must be in (0, N/2), got {cfg.f0_bandlimit}")
    if cfg.f0_kind not in ("random", "gaussian", "zero"):
        raise ConfigError(f"unknown f0.kind {cfg.f0_kind!r}")
    if not cfg.f0_scale > 0:
        raise ConfigError("f0.scale must be positive")
    if cfg.source_profile not in ("gaussian", "packet", "blend", "zero"):
        raise ConfigError(f"unknown source.profile {cfg.source_profile!r}")
    if cfg.source_tau_kind not in ("exp", "poly", "cos"):
        raise ConfigError(f"unknown source.tau_kind {cfg.source_tau_kind!r}")
    if cfg.verify_ensemble_size < 64:
        raise ConfigError("verify.ensemble_size must be >= 64")
    for s in cfg.verify_suites:
        if s not in ALL_SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {ALL_SUITES}")
    if not math.isfinite(cfg.f0_envelope_width) or cfg.f0_envelope_width <= 0:
        raise ConfigError("f0.envelope_width must be positive")
    return cfg


def canonical_text(cfg):
    lines = []
    for key in sorted(_SCHEMA):
        attr, kind = _SCHEMA[key]
        val = getattr(cfg, attr)
        if isinstance(val, tuple):
            rendered = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in val)
        elif isinstance(val, bool):
            rendered = "true" if val else "false"
        elif isinstance(val, float):
            rendered = repr(val)
        else:
            rendered = str(val)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def fingerprint(cfg):
    return hashlib.sha256(canonical_text(cfg).encode()).hexdigest()[:16]
