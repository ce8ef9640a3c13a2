"""Line-oriented ``key = value`` experiment plans."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .decay import InitialDataSpec
from .vonmises import MarchConfig


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _window(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2 or not 0.0 < parts[0] < parts[1]:
        raise ValueError("expected 'lo,hi' with 0 < lo < hi")
    return tuple(parts)


def _stretch(text: str):
    return None if text.strip().lower() == "auto" else float(text)


# key -> (parser, default, check or None, description of the allowed range)
KEYS = {
    "x_start": (float, 1.0, lambda v: v >= 0.0, ">= 0"),
    "x_end": (float, 1.0e4, None, "> x_start"),
    "n_psi": (int, 2000, lambda v: v >= 50, ">= 50"),
    "xi_cover": (float, 8.0, lambda v: v >= 8.0, ">= 8"),
    "psi_stretch": (_stretch, None, lambda v: v is None or v >= 0.0, "auto or >= 0"),
    "theta": (float, 0.5, lambda v: 0.5 <= v <= 1.0, "in [0.5, 1] (stability needs theta >= 0.5)"),
    "dx0": (float, 0.01, lambda v: v > 0.0, "> 0"),
    "dx_growth": (float, 1.05, lambda v: 1.0 <= v <= 2.0, "in [1, 2]"),
    "picard_tol": (float, 1e-12, lambda v: 0.0 < v < 1e-3, "in (0, 1e-3)"),
    "output_per_decade": (int, 20, lambda v: v >= 8, ">= 8"),
    "initial_data.kind": (str, "bump", lambda v: v in ("blasius", "bump", "heat-calibration"),
                          "blasius | bump | heat-calibration"),
    "initial_data.eps": (float, 0.05, lambda v: 0.0 <= v <= 0.1, "in [0, 0.1]"),
    "initial_data.center": (float, 2.0, lambda v: v > 0.0, "> 0"),
    "initial_data.width": (float, 0.5, lambda v: v > 0.0, "> 0"),
    "initial_data.moment_free": (_bool, False, None, "boolean"),
    "seed": (int, 0, lambda v: v >= 0, ">= 0"),
    "fit_window": (_window, (100.0, 1.0e4), None, "lo,hi"),
    "kappa": (float, 0.0, lambda v: 0.0 <= v <= 0.1, "in [0, 0.1]"),
    "heat_wall": (str, "reflecting", lambda v: v in ("reflecting", "absorbing"), "reflecting | absorbing"),
}


@dataclass(frozen=True)
class Plan:
    values: dict = field(default_factory=dict)
    explicit: frozenset = frozenset()

    def __getitem__(self, key):
        return self.values[key]

    @property
    def march_config(self) -> MarchConfig:
        return MarchConfig(theta=self["theta"], dx0=self["dx0"], dx_growth=self["dx_growth"],
                           picard_tol=self["picard_tol"])

    @property
    def initial_data(self) -> InitialDataSpec:
        return InitialDataSpec(
            kind=self["initial_data.kind"],
            eps=self["initial_data.eps"],
            center=self["initial_data.center"],
            width=self["initial_data.width"],
            moment_free=self["initial_data.moment_free"],
        )

    def echo(self) -> str:
        """Canonical text form: every key, sorted, defaults included."""
        lines = []
        for k in sorted(self.values):
            tag = "" if k in self.explicit else "  # default"
            lines.append(f"{k} = {format_value(self.values[k])}{tag}")
        return "\n".join(lines) + "\n"

    def run_id(self) -> str:
        canon = "\n".join(f"{k}={format_value(self.values[k])}" for k in sorted(self.values))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(repr(float(t)) for t in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text: str) -> Plan:
    """Parse and validate a plan; defaults fill every missing key.

    Raises :class:`ConfigError` naming the offending line for unknown keys,
    duplicates (both lines), malformed lines, and type or range violations.
    """
    seen = {}
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        parser, _, check, allowed = KEYS[key]
        try:
            val = parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        if check is not None and not check(val):
            raise ConfigError(f"line {lineno}: {key} = {value} out of range ({allowed})")
        raw[key] = val
    values = {k: raw.get(k, spec[1]) for k, spec in KEYS.items()}
    if values["x_end"] <= values["x_start"]:
        line = seen.get("x_end", seen.get("x_start"))
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}x_end must exceed x_start")
    lo, hi = values["fit_window"]
    if lo < values["x_start"] or hi > values["x_end"] * (1 + 1e-12):
        line = seen.get("fit_window", seen.get("x_end", seen.get("x_start")))
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}fit_window {lo:g},{hi:g} not inside [x_start, x_end]")
    try:
        InitialDataSpec(kind=values["initial_data.kind"], eps=values["initial_data.eps"],
                        center=values["initial_data.center"], width=values["initial_data.width"],
                        moment_free=values["initial_data.moment_free"])
    except ValueError as exc:
        line = seen.get("initial_data.width", seen.get("initial_data.center"))
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}{exc}") from None
    return Plan(values, frozenset(raw))


def load_config(path) -> Plan:
    if path is None:
        return parse_config("")
    with open(path) as fh:
        return parse_config(fh.read())
