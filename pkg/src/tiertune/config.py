"""Configuration loading: device profiles, workload profiles, scenarios.

Everything tunable lives in one YAML tree (see data/default.yaml); code holds
no magic numbers for device or workload characteristics.  The loader
validates cross-references and value ranges up front so later stages can
assume well-formed profiles.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import yaml

from .devices import DeviceProfile
from .simulator import SystemConfig
from .workloads import WorkloadProfile

GB = 1e9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """A runnable setup: system devices plus workloads plus loop parameters."""

    name: str
    system: SystemConfig
    workloads: tuple[WorkloadProfile, ...]
    start_ratio: int = 50
    intervals: int = 50
    sampling_period_s: float = 1.0
    smoothing_window: int = 5  # tune-path window; 1 is enough without noise
    fit_smoothing_window: int = 5  # fit always smooths its noisy sweep
    pages_per_interval: int = 2560
    fit_noise_sigma: float = 0.02  # used when the calibration fit needs noise
    out: str | None = None

    def __post_init__(self) -> None:
        if not self.workloads:
            raise ConfigError(f"scenario {self.name}: needs at least one workload")
        if self.intervals < 1:
            raise ConfigError(f"scenario {self.name}: intervals must be >= 1")
        if not 0 <= self.start_ratio <= 100:
            raise ConfigError(f"scenario {self.name}: start_ratio outside [0, 100]")
        if self.smoothing_window < 1 or self.fit_smoothing_window < 1:
            raise ConfigError(f"scenario {self.name}: smoothing windows must be >= 1")


@dataclass(frozen=True)
class Config:
    devices: dict[str, DeviceProfile]
    workloads: dict[str, WorkloadProfile]
    scenarios: dict[str, Scenario]

    def scenario(self, name: str) -> Scenario:
        if name not in self.scenarios:
            known = ", ".join(sorted(self.scenarios))
            raise ConfigError(f"unknown scenario {name!r} (known: {known})")
        return self.scenarios[name]


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def _parse_device(name: str, node: dict) -> DeviceProfile:
    ctx = f"device {name}"
    try:
        return DeviceProfile(
            name=name,
            idle_read_latency_ns=float(_require(node, "idle_read_ns", ctx)),
            idle_write_latency_ns=float(_require(node, "idle_write_ns", ctx)),
            theoretical_bandwidth=float(_require(node, "bandwidth_gbps", ctx)) * GB,
            efficiency_table=tuple(
                (float(f), float(e)) for f, e in _require(node, "efficiency", ctx)
            ),
            contention_exponent=float(node.get("contention_exponent", 2.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def _parse_workload(name: str, node: dict) -> WorkloadProfile:
    ctx = f"workload {name}"
    try:
        return WorkloadProfile(
            name=name,
            threads=int(_require(node, "threads", ctx)),
            cpi_base=float(_require(node, "cpi_base", ctx)),
            miss_per_instruction=float(_require(node, "miss_per_instruction", ctx)),
            read_fraction=float(_require(node, "read_fraction", ctx)),
            mlp=float(_require(node, "mlp", ctx)),
            line_size=int(node.get("line_size", 64)),
            instructions_per_op=float(node.get("instructions_per_op", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from exc


def _parse_scenario(
    name: str,
    node: dict,
    devices: dict[str, DeviceProfile],
    workloads: dict[str, WorkloadProfile],
    defaults: dict,
) -> Scenario:
    ctx = f"scenario {name}"
    ddr_name = _require(node, "ddr", ctx)
    cxl_name = _require(node, "cxl", ctx)
    for dev in (ddr_name, cxl_name):
        if dev not in devices:
            raise ConfigError(f"{ctx}: unknown device {dev!r}")
    workload_names = _require(node, "workloads", ctx)
    for w in workload_names:
        if w not in workloads:
            raise ConfigError(f"{ctx}: unknown workload {w!r}")
    system = SystemConfig(
        ddr=devices[ddr_name],
        cxl=devices[cxl_name],
        cpu_frequency=float(node.get("cpu_frequency", defaults.get("cpu_frequency", 2.1e9))),
        noise_sigma=float(node.get("noise_sigma", 0.0)),
        rng_seed=int(node.get("seed", 0)),
    )
    return Scenario(
        name=name,
        system=system,
        workloads=tuple(workloads[w] for w in workload_names),
        start_ratio=int(node.get("start_ratio", 50)),
        intervals=int(node.get("intervals", 50)),
        sampling_period_s=float(
            node.get("sampling_period_s", defaults.get("sampling_period_s", 1.0))
        ),
        smoothing_window=int(node.get("smoothing_window", 5)),
        fit_smoothing_window=int(node.get("fit_smoothing_window", 5)),
        pages_per_interval=int(node.get("pages_per_interval", 2560)),
        fit_noise_sigma=float(node.get("fit_noise_sigma", 0.02)),
        out=node.get("out"),
    )


def parse_config(tree: dict) -> Config:
    if not isinstance(tree, dict):
        raise ConfigError("top-level config must be a mapping")
    devices = {
        name: _parse_device(name, node)
        for name, node in tree.get("devices", {}).items()
    }
    workloads = {
        name: _parse_workload(name, node)
        for name, node in tree.get("workloads", {}).items()
    }
    defaults = {
        "cpu_frequency": tree.get("cpu_frequency", 2.1e9),
        "sampling_period_s": tree.get("sampling_period_s", 1.0),
    }
    scenarios = {
        name: _parse_scenario(name, node, devices, workloads, defaults)
        for name, node in tree.get("scenarios", {}).items()
    }
    return Config(devices=devices, workloads=workloads, scenarios=scenarios)


def load_config(path: str | Path) -> Config:
    text = Path(path).read_text()
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(tree)


@functools.lru_cache(maxsize=1)
def default_config() -> Config:
    text = resources.files("tiertune").joinpath("data/default.yaml").read_text()
    return parse_config(yaml.safe_load(text))


def apply_overrides(
    scenario: Scenario,
    *,
    seed: int | None = None,
    noise_sigma: float | None = None,
    start_ratio: int | None = None,
    intervals: int | None = None,
) -> Scenario:
    """Scenario with CLI flag overrides folded in."""
    system = scenario.system
    if seed is not None:
        system = replace(system, rng_seed=seed)
    if noise_sigma is not None:
        system = replace(system, noise_sigma=noise_sigma)
    return replace(
        scenario,
        system=system,
        start_ratio=scenario.start_ratio if start_ratio is None else start_ratio,
        intervals=scenario.intervals if intervals is None else intervals,
    )
