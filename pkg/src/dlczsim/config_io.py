"""Configuration files, run manifests, and deterministic result writers.

Configs are INI text with one section per subsystem and explicit units in the
key names (l0_km, tau0_s, ...) so a value can never be mis-read in the wrong
unit. Result files are written atomically (temp file + rename) with every
float serialized at 9 significant digits, which makes reruns byte-comparable.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .chain_sim import SimConfig
from .errors import ConfigError
from .link_physics import LinkParams
from .rate import ChainParams

__all__ = [
    "ExperimentConfig",
    "RunConfig",
    "RunManifest",
    "parse_config",
    "parse_config_text",
    "serialize_config",
    "format_float",
    "canonical_json",
    "write_text_atomic",
    "write_csv_atomic",
]

ARTIFACT_VERSION = "1.0"


@dataclass(frozen=True)
class ExperimentConfig:
    """Budgets for the link-experiment command.

    Storage times are kept in the config's own unit (microseconds) so the
    serialize/parse round trip is bit exact; use `storage_times` for seconds.
    """

    storage_times_us: tuple[float, ...] = (1.0, 150.0)
    mode_counts: tuple[int, ...] = tuple(range(1, 13))
    trains: int = 200_000
    window_budget: int = 2_400_000
    fringe_phases: int = 12
    fringe_shots: int = 4000

    def __post_init__(self):
        if not self.storage_times_us or any(t < 0 for t in self.storage_times_us):
            raise ConfigError("storage_times_us must be a non-empty list of times >= 0")
        if not self.mode_counts or any(n < 1 for n in self.mode_counts):
            raise ConfigError("mode_counts must be a non-empty list of integers >= 1")
        if self.trains < 1 or self.window_budget < 1:
            raise ConfigError("trains and window_budget must be >= 1")

    @property
    def storage_times(self) -> tuple[float, ...]:
        return tuple(t * 1e-6 for t in self.storage_times_us)


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run can need; sections absent from the file are None."""

    link: LinkParams | None = None
    chain: ChainParams | None = None
    trials: int = 1000
    seed: int = 0
    max_sim_time: float = 3600.0
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    def sim_config(self) -> SimConfig:
        if self.chain is None:
            raise ConfigError("this command needs a [chain] section")
        return SimConfig(chain=self.chain, trials=self.trials, seed=self.seed,
                         max_sim_time=self.max_sim_time)


# (config key, dataclass field, converter); unit suffixes live in the keys only
_LINK_KEYS = [
    ("chi", "chi", float),
    ("mode_count", "mode_count", int),
    ("pulse_interval_s", "pulse_interval", float),
    ("train_duration_s", "train_duration", float),
    ("retrieval_eff_zero", "retrieval_eff_zero", float),
    ("memory_lifetime_s", "memory_lifetime", float),
    ("detection_eff", "detection_eff", float),
    ("eta_td", "eta_td", float),
    ("visibility_cap", "visibility_cap", float),
    ("dark_count_prob", "dark_count_prob", float),
    ("crosstalk_eps", "crosstalk_eps", float),
    ("phase_s_rad", "phase_s", float),
    ("phase_as_rad", "phase_as", float),
]

_CHAIN_KEYS = [
    ("l0_km", "l0", float),
    ("l_att_km", "l_att", float),
    ("n_levels", "n_levels", int),
    ("fiber_speed_km_s", "fiber_speed", float),
    ("eta_fc", "eta_fc", float),
    ("eta_td", "eta_td", float),
    ("chi", "chi", float),
    ("mode_count", "mode_count", int),
    ("r0", "r0", float),
    ("tau0_s", "tau0", float),
    ("swap_intrinsic_factor", "swap_intrinsic_factor", float),
]

_SIM_KEYS = [
    ("trials", "trials", int),
    ("seed", "seed", int),
    ("max_sim_time_s", "max_sim_time", float),
]


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.replace(",", " ").split())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.replace(",", " ").split())


_EXPERIMENT_KEYS = [
    ("storage_times_us", "storage_times_us", _parse_float_list),
    ("mode_counts", "mode_counts", _parse_int_list),
    ("trains", "trains", int),
    ("window_budget", "window_budget", int),
    ("fringe_phases", "fringe_phases", int),
    ("fringe_shots", "fringe_shots", int),
]


def _read_section(parser: configparser.ConfigParser, section: str, keys) -> dict:
    fields = {}
    seen = set()
    for key, fieldname, convert in keys:
        seen.add(key)
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                fields[fieldname] = convert(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    unknown = set(parser.options(section)) - seen
    if unknown:
        raise ConfigError(f"[{section}] has unknown keys: {sorted(unknown)}")
    return fields


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    link = chain = None
    sim_fields: dict = {}
    experiment = ExperimentConfig()
    for section in parser.sections():
        if section == "link":
            link = LinkParams(**_read_section(parser, section, _LINK_KEYS))
        elif section == "chain":
            chain = ChainParams(**_read_section(parser, section, _CHAIN_KEYS))
        elif section == "sim":
            sim_fields = _read_section(parser, section, _SIM_KEYS)
        elif section == "experiment":
            experiment = ExperimentConfig(**_read_section(parser, section, _EXPERIMENT_KEYS))
        else:
            raise ConfigError(f"{source}: unknown section [{section}]")
    return RunConfig(link=link, chain=chain, experiment=experiment, **sim_fields)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def _serialize_section(keys, obj) -> dict[str, str]:
    out = {}
    for key, fieldname, _ in keys:
        value = getattr(obj, fieldname)
        if isinstance(value, tuple):
            out[key] = ", ".join(repr(v) if isinstance(v, float) else str(v)
                                 for v in value)
        else:
            out[key] = repr(value) if isinstance(value, float) else str(value)
    return out


def serialize_config(config: RunConfig) -> str:
    """Render a RunConfig as INI text; parse_config_text inverts it exactly.

    Floats are serialized with repr so the round trip is bit exact.
    """
    parser = configparser.ConfigParser(interpolation=None)
    if config.link is not None:
        parser["link"] = _serialize_section(_LINK_KEYS, config.link)
    if config.chain is not None:
        parser["chain"] = _serialize_section(_CHAIN_KEYS, config.chain)
    parser["sim"] = {
        "trials": str(config.trials),
        "seed": str(config.seed),
        "max_sim_time_s": repr(config.max_sim_time),
    }
    parser["experiment"] = _serialize_section(_EXPERIMENT_KEYS, config.experiment)
    from io import StringIO
    buffer = StringIO()
    parser.write(buffer)
    return buffer.getvalue()


# ---------------------------------------------------------------------------
# deterministic result files
# ---------------------------------------------------------------------------

def format_float(value: float) -> str:
    """Canonical 9-significant-digit rendering used in every result file."""
    return format(float(value), ".9g")


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """JSON with sorted keys and floats rounded to 9 significant digits."""
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_atomic(path, header, rows, trailer_comments=()) -> None:
    """CSV with a mandatory header, 9-digit floats, optional '#' trailers."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format_float(v) if isinstance(v, float) else str(v) for v in row))
    lines.extend(f"# {comment}" for comment in trailer_comments)
    write_text_atomic(path, "\n".join(lines) + "\n")


@dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    parameters: dict
    seed: int
    outputs: list[str]
    artifact_version: str = ARTIFACT_VERSION
    duration_s: float = 0.0
    created_unix: float = field(default_factory=time.time)

    def to_json(self) -> str:
        return canonical_json(dataclasses.asdict(self))

    def write(self, path) -> None:
        write_text_atomic(path, self.to_json())


def config_as_dict(config: RunConfig) -> dict:
    """Flatten the resolved parameter set for embedding in a manifest."""
    out: dict = {"trials": config.trials, "seed": config.seed,
                 "max_sim_time_s": config.max_sim_time}
    if config.link is not None:
        out["link"] = dataclasses.asdict(config.link)
    if config.chain is not None:
        out["chain"] = dataclasses.asdict(config.chain)
    out["experiment"] = {
        "storage_times_us": list(config.experiment.storage_times_us),
        "mode_counts": list(config.experiment.mode_counts),
        "trains": config.experiment.trains,
        "window_budget": config.experiment.window_budget,
        "fringe_phases": config.experiment.fringe_phases,
        "fringe_shots": config.experiment.fringe_shots,
    }
    return out
