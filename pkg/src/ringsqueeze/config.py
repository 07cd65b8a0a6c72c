"""Run configuration: strict INI parsing with reference-design defaults.

A run is described by a flat INI document with the sections ``[ring]``,
``[bands.P]``, ``[bands.S]``, ``[bands.C]``, ``[pump]``, ``[grid]``,
``[integrator]`` and ``[output]``. Every key is optional; missing keys fall
back to the reference design point (64 um ring, 30 mW CW drive, 0.5 ns
pulse). Unknown sections or keys are rejected rather than ignored, so a typo
cannot silently run the default instead of the requested value. Each
resolved value is tracked with its origin (file, CLI override, or default)
so the output manifest can echo the complete effective configuration.
"""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping

logger = logging.getLogger(__name__)

MODES = ("full", "first", "both", "fock")

# Spelled-out aliases accepted in config files and on the command line.
_MODE_ALIASES = {
    "full": "full",
    "first": "first",
    "first-order": "first",
    "both": "both",
    "fock": "fock",
    "fock-oracle": "fock",
}

DEFAULT_SWEEP_PJ = (1.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0)

_TERA = 1.0e12
_NANO = 1.0e-9
_PICO = 1.0e-12
_MICRO = 1.0e-6
_MILLI = 1.0e-3


class ConfigError(ValueError):
    """Configuration rejected, with the offending field and line when known."""

    def __init__(self, message: str, section: str | None = None,
                 key: str | None = None, line: int | None = None):
        self.section = section
        self.key = key
        self.line = line
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if section is not None and key is not None:
            parts.append(f"[{section}] {key}")
        elif section is not None:
            parts.append(f"[{section}]")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True)
class BandParams:
    """One resonance band as given in the file: frequency in Hz, SI throughout."""

    frequency: float
    group_velocity: float
    q_intrinsic: float
    q_loaded: float

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency


@dataclass(frozen=True)
class ConfigEntry:
    """One resolved key: the value as written in file units, and its origin."""

    section: str
    key: str
    value: object
    source: str  # "file" | "default" | "cli"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description in SI units.

    ``entries`` lists every effective key exactly once, in file units, each
    tagged with where its value came from; the runner copies it verbatim
    into the manifest.
    """

    radius: float                     # [m]
    gamma_nl: float                   # [1/(W m)]
    bands: Mapping[str, BandParams]   # keys "P", "S", "C"
    cw_power: float                   # [W]
    pulse_energies: tuple[float, ...] # [J], ascending
    pulse_duration: float             # [s]
    n_s: int
    n_p: int
    s_span_linewidths: float
    p_span_pulse_widths: float
    step_divisor: float
    window_start: float | None        # [s], None = automatic
    window_end: float | None          # [s], None = automatic
    sample_stride: int
    tail_tolerance: float
    max_extensions: int
    mode: str                         # one of MODES
    out_dir: str
    seed: int
    schmidt_weighting: str            # "photon" | "amplitude"
    g2_points: int
    g2_span_dwells: float
    render: bool
    entries: tuple[ConfigEntry, ...]

    @property
    def is_sweep(self) -> bool:
        return len(self.pulse_energies) > 1


def _positive(raw: str) -> float:
    value = float(raw)
    if value <= 0.0:
        raise ValueError("must be strictly positive")
    return value


def _nonnegative(raw: str) -> float:
    value = float(raw)
    if value < 0.0:
        raise ValueError("must be non-negative")
    return value


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value <= 0:
        raise ValueError("must be a positive integer")
    return value


def _odd_grid_size(raw: str) -> int:
    value = int(raw)
    if value < 3 or value % 2 == 0:
        raise ValueError("grid sizes must be odd and >= 3 (a center point is required)")
    return value


def _nonnegative_int(raw: str) -> int:
    value = int(raw)
    if value < 0:
        raise ValueError("must be a non-negative integer")
    return value


def _boolean(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _mode(raw: str) -> str:
    lowered = raw.strip().lower()
    if lowered not in _MODE_ALIASES:
        raise ValueError(
            f"unknown mode {raw!r}, expected one of {sorted(set(_MODE_ALIASES))}")
    return _MODE_ALIASES[lowered]


def _weighting(raw: str) -> str:
    lowered = raw.strip().lower()
    if lowered not in ("photon", "amplitude"):
        raise ValueError(f"unknown weighting {raw!r}, expected photon or amplitude")
    return lowered


def _text(raw: str) -> str:
    return raw.strip()


def parse_sweep(raw: str) -> tuple[float, ...]:
    """Parse a pulse-energy sweep list in pJ.

    Accepts the keyword ``default`` (the standard eight energies), a comma
    list such as ``1, 5, 10``, or an inclusive arithmetic range
    ``start:stop:step`` such as ``20:100:20``. Values must be positive and
    strictly ascending.
    """
    text = raw.strip()
    if not text:
        raise ValueError("empty sweep list")
    if text.lower() == "default":
        return DEFAULT_SWEEP_PJ
    if ":" in text:
        fields = text.split(":")
        if len(fields) != 3:
            raise ValueError("range must have the form start:stop:step")
        start, stop, step = (float(field) for field in fields)
        if step <= 0.0 or stop < start:
            raise ValueError("range requires stop >= start and step > 0")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = tuple(start + i * step for i in range(count))
    else:
        values = tuple(float(field) for field in text.split(","))
    if not values:
        raise ValueError("empty sweep list")
    for value in values:
        if value <= 0.0:
            raise ValueError("sweep energies must be positive")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep energies must be strictly ascending")
    return values


_Parser = Callable[[str], object]

# Schema: section -> key -> (parser, default). A default of _REQUIRED_NONE
# means the key is optional with no default entry when absent.
_NO_DEFAULT = object()

_BAND_SCHEMA: dict[str, tuple[_Parser, object]] = {
    "frequency_thz": (_positive, 193.0),
    "group_velocity_m_per_s": (_positive, 1.5e8),
    "q_intrinsic": (_positive, 2.0e6),
    # q_loaded default differs per band; filled in below.
}

_SCHEMA: dict[str, dict[str, tuple[_Parser, object]]] = {
    "ring": {
        "radius_um": (_positive, 64.0),
        "gamma_nl_per_w_m": (_nonnegative, 1.0),
    },
    "bands.P": dict(_BAND_SCHEMA, q_loaded=(_positive, 4.0e4)),
    "bands.S": dict(_BAND_SCHEMA, q_loaded=(_positive, 2.0e5)),
    "bands.C": dict(_BAND_SCHEMA, q_loaded=(_positive, 1.0e6)),
    "pump": {
        "cw_power_mw": (_nonnegative, 30.0),
        "pulse_energy_pj": (_nonnegative, 100.0),
        "sweep_pj": (parse_sweep, _NO_DEFAULT),
        "duration_ns": (_positive, 0.5),
    },
    "grid": {
        "n_s": (_odd_grid_size, 101),
        "n_p": (_odd_grid_size, 101),
        "s_span_linewidths": (_positive, 6.0),
        "p_span_pulse_widths": (_positive, 6.0),
    },
    "integrator": {
        "step_divisor": (_positive, 200.0),
        "window_start_ns": (float, _NO_DEFAULT),
        "window_end_ns": (float, _NO_DEFAULT),
        "sample_stride": (_positive_int, 100),
        "tail_tolerance": (_positive, 1.0e-4),
        "max_extensions": (_nonnegative_int, 4),
    },
    "output": {
        "mode": (_mode, "both"),
        "directory": (_text, "out"),
        "seed": (_nonnegative_int, 0),
        "schmidt_weighting": (_weighting, "photon"),
        "g2_points": (_positive_int, 161),
        "g2_span_dwells": (_positive, 4.0),
        "render": (_boolean, True),
    },
}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Best-effort map from (section, key) to 1-based line number."""
    lines: dict[tuple[str, str], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            lines.setdefault((section, ""), number)
            continue
        if section is None:
            continue
        for delim in ("=", ":"):
            head, sep, _ = stripped.partition(delim)
            if sep:
                lines.setdefault((section, head.strip().lower()), number)
                break
    return lines


def parse_config(text: str) -> RunConfig:
    """Parse and validate an INI run description.

    Raises
    ------
    ConfigError
        On syntax errors, unknown sections or keys, empty values, type or
        range violations, and inconsistent combinations. The error carries
        the section, key, and line number when they are known.
    """
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=", ":"), comment_prefixes=("#", ";"),
        strict=True, empty_lines_in_values=False)
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", exc.section, exc.option,
                          exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError("duplicate section", exc.section,
                          line=exc.lineno) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", line=exc.lineno) from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    lines = _key_lines(text)
    values: dict[tuple[str, str], object] = {}
    present: set[tuple[str, str]] = set()

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section (expected one of {sorted(_SCHEMA)})",
                section, line=lines.get((section, "")))
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key (expected one of {sorted(_SCHEMA[section])})",
                    section, key, lines.get((section, key)))
            if raw is None or not raw.strip():
                raise ConfigError("missing value", section, key,
                                  lines.get((section, key)))
            converter = _SCHEMA[section][key][0]
            try:
                values[(section, key)] = converter(raw)
            except ValueError as exc:
                raise ConfigError(str(exc), section, key,
                                  lines.get((section, key))) from exc
            present.add((section, key))

    # Mutually exclusive energy specifications.
    if ("pump", "pulse_energy_pj") in present and ("pump", "sweep_pj") in present:
        raise ConfigError(
            "pulse_energy_pj and sweep_pj are mutually exclusive",
            "pump", "sweep_pj", lines.get(("pump", "sweep_pj")))

    entries: list[ConfigEntry] = []
    defaulted: list[str] = []

    def resolve(section: str, key: str):
        spec = _SCHEMA[section][key]
        if (section, key) in present:
            entries.append(ConfigEntry(section, key, values[(section, key)], "file"))
            return values[(section, key)]
        default = spec[1]
        if default is _NO_DEFAULT:
            return None
        entries.append(ConfigEntry(section, key, default, "default"))
        defaulted.append(f"[{section}] {key}")
        return default

    radius_um = resolve("ring", "radius_um")
    gamma_nl = resolve("ring", "gamma_nl_per_w_m")

    bands: dict[str, BandParams] = {}
    for label in ("P", "S", "C"):
        section = f"bands.{label}"
        freq_thz = resolve(section, "frequency_thz")
        velocity = resolve(section, "group_velocity_m_per_s")
        q_int = resolve(section, "q_intrinsic")
        q_load = resolve(section, "q_loaded")
        if q_load >= q_int:
            raise ConfigError(
                f"q_loaded = {q_load:g} must be strictly below q_intrinsic = "
                f"{q_int:g} (the bus-channel decay rate would not be positive)",
                section, "q_loaded", lines.get((section, "q_loaded")))
        bands[label] = BandParams(freq_thz * _TERA, velocity, q_int, q_load)

    cw_power_mw = resolve("pump", "cw_power_mw")
    if ("pump", "sweep_pj") in present:
        sweep_pj = values[("pump", "sweep_pj")]
        entries.append(ConfigEntry("pump", "sweep_pj", list(sweep_pj), "file"))
        energies = tuple(e * _PICO for e in sweep_pj)
    else:
        energies = (resolve("pump", "pulse_energy_pj") * _PICO,)
    duration_ns = resolve("pump", "duration_ns")

    n_s = resolve("grid", "n_s")
    n_p = resolve("grid", "n_p")
    s_span = resolve("grid", "s_span_linewidths")
    p_span = resolve("grid", "p_span_pulse_widths")

    step_divisor = resolve("integrator", "step_divisor")
    window_start_ns = resolve("integrator", "window_start_ns")
    window_end_ns = resolve("integrator", "window_end_ns")
    sample_stride = resolve("integrator", "sample_stride")
    tail_tolerance = resolve("integrator", "tail_tolerance")
    max_extensions = resolve("integrator", "max_extensions")
    if (window_start_ns is not None and window_end_ns is not None
            and window_end_ns <= window_start_ns):
        raise ConfigError("window_end_ns must exceed window_start_ns",
                          "integrator", "window_end_ns",
                          lines.get(("integrator", "window_end_ns")))

    mode = resolve("output", "mode")
    out_dir = resolve("output", "directory")
    seed = resolve("output", "seed")
    weighting = resolve("output", "schmidt_weighting")
    g2_points = resolve("output", "g2_points")
    g2_span = resolve("output", "g2_span_dwells")
    render = resolve("output", "render")

    if defaulted:
        logger.info("config: %d keys filled from defaults", len(defaulted))
        logger.debug("defaulted keys: %s", ", ".join(defaulted))

    return RunConfig(
        radius=radius_um * _MICRO,
        gamma_nl=gamma_nl,
        bands=bands,
        cw_power=cw_power_mw * _MILLI,
        pulse_energies=energies,
        pulse_duration=duration_ns * _NANO,
        n_s=n_s,
        n_p=n_p,
        s_span_linewidths=s_span,
        p_span_pulse_widths=p_span,
        step_divisor=step_divisor,
        window_start=None if window_start_ns is None else window_start_ns * _NANO,
        window_end=None if window_end_ns is None else window_end_ns * _NANO,
        sample_stride=sample_stride,
        tail_tolerance=tail_tolerance,
        max_extensions=max_extensions,
        mode=mode,
        out_dir=out_dir,
        seed=seed,
        schmidt_weighting=weighting,
        g2_points=g2_points,
        g2_span_dwells=g2_span,
        render=render,
        entries=tuple(entries),
    )


def load_config(path: str) -> RunConfig:
    """Read and parse a config file; wraps I/O errors in ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return parse_config(text)


def _entry_override(entries: tuple[ConfigEntry, ...], section: str, key: str,
                    value: object) -> tuple[ConfigEntry, ...]:
    kept = tuple(e for e in entries if not (e.section == section and e.key == key))
    return kept + (ConfigEntry(section, key, value, "cli"),)


def apply_cli_overrides(config: RunConfig, mode: str | None = None,
                        sweep: str | None = None,
                        out_dir: str | None = None) -> RunConfig:
    """Fold command-line overrides into a parsed config.

    CLI values win over both file values and defaults, and are tagged
    ``cli`` in the entry ledger so the manifest shows their origin.
    """
    entries = config.entries
    updates: dict[str, object] = {}
    if mode is not None:
        canonical = _mode(mode)
        updates["mode"] = canonical
        entries = _entry_override(entries, "output", "mode", canonical)
    if sweep is not None:
        energies_pj = parse_sweep(sweep)
        updates["pulse_energies"] = tuple(e * _PICO for e in energies_pj)
        entries = tuple(e for e in entries
                        if not (e.section == "pump"
                                and e.key in ("pulse_energy_pj", "sweep_pj")))
        if len(energies_pj) == 1:
            entries += (ConfigEntry("pump", "pulse_energy_pj",
                                    energies_pj[0], "cli"),)
        else:
            entries += (ConfigEntry("pump", "sweep_pj",
                                    list(energies_pj), "cli"),)
    if out_dir is not None:
        updates["out_dir"] = out_dir
        entries = _entry_override(entries, "output", "directory", out_dir)
    if not updates:
        return config
    return replace(config, entries=entries, **updates)
