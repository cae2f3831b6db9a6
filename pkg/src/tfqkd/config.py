"""Scenario configuration files (TOML) and the built-in parameter preset.

Schema (every table and key optional; units in the key names)::

    [channel]
    distance_km = 100.0            # used by commands without a distance sweep
    fiber_loss_db_per_km = 0.2
    dark_count_rate = 1e-10        # per detector per trial
    detector_efficiency = 0.145
    misalignment = 0.015
    ec_efficiency = 1.1

    [protocol]
    N = 1e12                       # total pulses
    eps_coh = 1e-10
    plugin = "conservative"        # or "constant:<value>", "companion"

    [fluctuation]                  # presence switches on the interval pipeline
    delta_minus = -0.5
    delta_plus = 0.5
    zeta = 0.25                    # optional, defaults to max(delta^2)

    [sweep]
    distances_km = [0, 50, 100]
    N_values = [1e10, 1e12]
    optimize = true                # false: evaluate [vector] as given
    workers = 1

    [vector]                       # fixed parameter vector
    mu = 0.1
    ...

    [optimizer]
    particles = 50
    iterations = 200
    seed = 0

    [bounds_table]
    mu_bar = 0.5
    deltas = [0.1, 0.2, 0.5]
    n_max = 3

    [mc]
    scenarios = 20
    trials = 1e6
"""

from __future__ import annotations

import dataclasses
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import ChannelParams
from .errors import ConfigError, DomainError
from .fluctuation import FluctuationSpec
from .keyrate import resolve_plugin
from .optimizer import REFERENCE_VECTOR, ParamVector, PsoConfig

PRESETS = {
    "paper": {
        "channel": {
            "distance_km": 100.0,
            "fiber_loss_db_per_km": 0.2,
            "dark_count_rate": 1e-10,
            "detector_efficiency": 0.145,
            "misalignment": 0.015,
            "ec_efficiency": 1.1,
        },
        "protocol": {"N": 10**12, "eps_coh": 1e-10, "plugin": "conservative"},
        "sweep": {
            "distances_km": [0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0],
            "N_values": [1e10, 1e11, 1e12, 1e13, 1e14],
            "optimize": True,
            "workers": 1,
        },
        "optimizer": {"particles": 30, "iterations": 60, "seed": 0},
        "bounds_table": {"mu_bar": 0.5, "deltas": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5], "n_max": 3},
        "mc": {"scenarios": 20, "trials": 10**6},
    }
}

_SECTIONS = {
    "channel": {f.name for f in dataclasses.fields(ChannelParams)},
    "protocol": {"N", "eps_coh", "plugin"},
    "fluctuation": {"delta_minus", "delta_plus", "zeta"},
    "sweep": {"distances_km", "N_values", "optimize", "workers"},
    "vector": {f.name for f in dataclasses.fields(ParamVector)},
    "optimizer": {"particles", "iterations", "seed", "inertia", "cognitive", "social", "workers"},
    "bounds_table": {"mu_bar", "deltas", "n_max"},
    "mc": {"scenarios", "trials"},
}


@dataclass
class ScenarioConfig:
    channel: ChannelParams
    N: int
    eps_coh: float
    plugin: str
    fluct: Optional[FluctuationSpec]
    distances_km: list
    N_values: list
    optimize: bool
    workers: int
    vector: ParamVector
    pso: PsoConfig
    bounds_mu_bar: float = 0.5
    bounds_deltas: list = field(default_factory=list)
    bounds_n_max: int = 3
    mc_scenarios: int = 20
    mc_trials: int = 10**6
    source: str = "<preset>"


def _line_of(text: str, section: str, key: str | None) -> Optional[int]:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    if not text:
        return None
    current = None
    header = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]")
    for i, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return i
    return None


def _merge(base: dict, override: dict) -> dict:
    out = {k: dict(v) for k, v in base.items()}
    for sec, table in override.items():
        out.setdefault(sec, {}).update(table)
    return out


def _as_int(x, what):
    if isinstance(x, bool):
        raise DomainError(f"{what} must be a number")
    if isinstance(x, float):
        if not math.isfinite(x) or x != int(x):
            raise DomainError(f"{what} must be an integer")
        return int(x)
    if isinstance(x, int):
        return x
    raise DomainError(f"{what} must be a number")


def _increasing(values, what):
    if not isinstance(values, list) or not values:
        raise DomainError(f"{what} must be a nonempty list")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError(f"{what} must be strictly increasing")
    return values


def load_config(path: str | None = None, preset: str = "paper") -> ScenarioConfig:
    """Read a TOML scenario file on top of a named preset.

    Raises
    ------
    ConfigError
        For unreadable files, syntax errors, unknown keys and invalid
        values; the message carries the file path and line when known.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
    text, raw = "", {}
    source = f"<preset {preset}>"
    if path is not None:
        source = str(path)
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", path=source) from None
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+)", str(exc))
            raise ConfigError(f"syntax error: {exc}", path=source,
                              line=int(m.group(1)) if m else None) from None

    for sec, table in raw.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", path=source, line=_line_of(text, sec, None))
        if not isinstance(table, dict):
            raise ConfigError(f"[{sec}] must be a table", path=source)
        for key in table:
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key '{key}' in [{sec}]", path=source,
                                  line=_line_of(text, sec, key))

    merged = _merge(PRESETS[preset], raw)
    where = {"sec": None, "key": None}

    def get(sec, key, default=None):
        where["sec"], where["key"] = sec, key
        return merged.get(sec, {}).get(key, default)

    try:
        ch_kwargs = {}
        for key in _SECTIONS["channel"]:
            val = get("channel", key)
            if val is not None:
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise DomainError(f"channel.{key} must be a number")
                ch_kwargs[key] = float(val)
        where["sec"], where["key"] = "channel", None
        channel = ChannelParams(**ch_kwargs)
        N = _as_int(get("protocol", "N"), "N")
        if N <= 0:
            raise DomainError("N must be positive")
        eps_coh = float(get("protocol", "eps_coh"))
        if not 0.0 < eps_coh <= 1.0:
            raise DomainError("eps_coh must lie in (0, 1]")
        plugin = str(get("protocol", "plugin"))
        resolve_plugin(plugin)

        fluct = None
        if "fluctuation" in raw:
            dm = float(get("fluctuation", "delta_minus", 0.0))
            dp = float(get("fluctuation", "delta_plus", 0.0))
            zeta = get("fluctuation", "zeta")
            where["key"] = None
            fluct = FluctuationSpec(dm, dp, None if zeta is None else float(zeta))

        distances = [float(x) for x in _increasing(get("sweep", "distances_km"), "distances_km")]
        n_values = [_as_int(x, "N_values entry") for x in _increasing(get("sweep", "N_values"), "N_values")]
        optimize = get("sweep", "optimize")
        if not isinstance(optimize, bool):
            raise DomainError("optimize must be true or false")
        workers = _as_int(get("sweep", "workers"), "workers")
        if workers < 1:
            raise DomainError("workers must be >= 1")

        vec = {f: get("vector", f, getattr(REFERENCE_VECTOR, f)) for f in _SECTIONS["vector"]}
        where["sec"], where["key"] = "vector", None
        vector = ParamVector(**{k: float(v) for k, v in vec.items()})
        if not optimize and not vector.is_valid():
            raise DomainError("fixed parameter vector violates its constraints")

        opt = merged.get("optimizer", {})
        pso_kwargs = {}
        for key in ("particles", "iterations", "seed", "workers"):
            if key in opt:
                where["sec"], where["key"] = "optimizer", key
                pso_kwargs[key] = _as_int(opt[key], key)
        for key in ("inertia", "cognitive", "social"):
            if key in opt:
                where["sec"], where["key"] = "optimizer", key
                pso_kwargs[key] = float(opt[key])
        where["key"] = None
        pso = PsoConfig(**pso_kwargs)

        mu_bar = float(get("bounds_table", "mu_bar"))
        if mu_bar <= 0.0:
            raise DomainError("mu_bar must be positive")
        deltas = [float(d) for d in _increasing(get("bounds_table", "deltas"), "deltas")]
        if any(not 0.0 <= d < 1.0 for d in deltas):
            raise DomainError("deltas must lie in [0, 1)")
        n_max = _as_int(get("bounds_table", "n_max"), "n_max")
        if n_max < 0:
            raise DomainError("n_max must be >= 0")
        mc_scen = _as_int(get("mc", "scenarios"), "scenarios")
        mc_trials = _as_int(get("mc", "trials"), "trials")
        if mc_scen < 1 or mc_trials < 1:
            raise DomainError("mc scenarios and trials must be positive")
    except (DomainError, TypeError, ValueError) as exc:
        if where["key"] is None and where["sec"] in _SECTIONS:
            named = [k for k in _SECTIONS[where["sec"]] if re.search(rf"\b{k}\b", str(exc))]
            if named:
                where["key"] = max(named, key=len)
        line = _line_of(text, where["sec"], where["key"]) if where["sec"] else None
        if line is None and where["sec"]:
            line = _line_of(text, where["sec"], None)
        raise ConfigError(str(exc), path=source, line=line) from None

    return ScenarioConfig(
        channel=channel, N=N, eps_coh=eps_coh, plugin=plugin, fluct=fluct,
        distances_km=distances, N_values=n_values, optimize=optimize, workers=workers,
        vector=vector, pso=pso, bounds_mu_bar=mu_bar, bounds_deltas=deltas,
        bounds_n_max=n_max, mc_scenarios=mc_scen, mc_trials=mc_trials, source=source,
    )
