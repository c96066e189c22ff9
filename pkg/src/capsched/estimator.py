"""Pressure and sensitivity estimation for the four shared node resources.

A tenant that looks cheap on paper can still wreck its neighbors
through the last-level cache, memory bandwidth, disk IOPS or the NIC.
This module quantifies both directions of that risk for one workload
running solo on a probe-equipped node:

* pressure: how hard the workload pushes on a resource, discretized
  onto a 0..N level scale from its measured usage,
* sensitivity: how much the workload suffers when something else
  pushes, found by sweeping a calibrated stressor from level 1 upward
  until the workload's own usage drops by at least 10%.

The LLC is special cased: pressure comes from matching the workload's
kmps track (kilo LLC misses per second as a function of allocated
cache ways) against reference tracks of calibrated stress programs,
and sensitivity from shrinking the allocation until kmps rises by at
least 10% over the full-cache value.

Only the probe touches a node. `SimulatedProbe` answers from a
ground-truth resource footprint; a real backend would wire the same
interface to CAT, fio and friends.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .core import (
    InterferenceProfile,
    KmpsTrack,
    NodeConstants,
    PressureSensitivity,
    ProbeError,
    SharedResource,
    round_half_up,
)

__all__ = [
    "EstimatorConfig",
    "ResourceFootprint",
    "SimulatedProbe",
    "WorkloadProbe",
    "build_profile",
    "llc_sensitivity_ways",
    "match_pressure",
    "pressure_level",
    "quantify_disk",
    "quantify_llc",
    "quantify_membw",
    "quantify_network",
    "stress_reference_tracks",
    "ways_to_level",
]

# Relative degradation that counts as "affected" during a sweep.
DEGRADATION_THRESHOLD = 0.10

# Usage lost per stress level beyond a workload's tolerance, in the
# simulated probe. 0.15 > threshold so the first crossing is sharp.
STRESS_DROP_PER_LEVEL = 0.15


@dataclass(frozen=True)
class ResourceFootprint:
    """Ground truth of how one workload uses the shared resources.

    Usage rates are the values at full activity (largest config);
    deployment at a smaller config scales them down. Sensitivities are
    the generative tolerance levels the estimator is supposed to
    recover. LLC sensitivity is implied by demand_ways and
    demand_slope: shrinking the allocation below demand_ways raises
    kmps by demand_slope per way taken.
    """

    kmps_base: float
    demand_ways: float
    demand_slope: float
    membw_gbps: float
    iops: float
    network_gbps: float
    sens_membw: int
    sens_disk: int
    sens_network: int

    def __post_init__(self):
        for name in ("kmps_base", "demand_ways", "demand_slope",
                     "membw_gbps", "iops", "network_gbps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("sens_membw", "sens_disk", "sens_network"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_json(self) -> dict:
        return {"kmps_base": self.kmps_base,
                "demand_ways": self.demand_ways,
                "demand_slope": self.demand_slope,
                "membw_gbps": self.membw_gbps,
                "iops": self.iops,
                "network_gbps": self.network_gbps,
                "sens_membw": self.sens_membw,
                "sens_disk": self.sens_disk,
                "sens_network": self.sens_network}

    @classmethod
    def from_json(cls, obj: dict) -> "ResourceFootprint":
        return cls(kmps_base=float(obj["kmps_base"]),
                   demand_ways=float(obj["demand_ways"]),
                   demand_slope=float(obj["demand_slope"]),
                   membw_gbps=float(obj["membw_gbps"]),
                   iops=float(obj["iops"]),
                   network_gbps=float(obj["network_gbps"]),
                   sens_membw=int(obj["sens_membw"]),
                   sens_disk=int(obj["sens_disk"]),
                   sens_network=int(obj["sens_network"]))

    @classmethod
    def idle(cls) -> "ResourceFootprint":
        return cls(kmps_base=0.0, demand_ways=0.0, demand_slope=0.0,
                   membw_gbps=0.0, iops=0.0, network_gbps=0.0,
                   sens_membw=0, sens_disk=0, sens_network=0)


class WorkloadProbe(abc.ABC):
    """Measurement channel to one workload running solo on a node.

    Stress level 0 means no stress. Bandwidth stressors are LLC
    neutral (confined to minimal cache), so stressing one resource
    does not disturb the others' readings.
    """

    @property
    @abc.abstractmethod
    def constants(self) -> NodeConstants:
        """Physical capacities of the node behind the probe."""

    @abc.abstractmethod
    def read_usage(self, resource: SharedResource) -> float:
        """Solo usage in native units: kmps, GB/s, IOPS, GB/s."""

    @abc.abstractmethod
    def set_llc_ways(self, ways: int) -> float:
        """Restrict the workload to `ways` cache ways, return its kmps."""

    @abc.abstractmethod
    def apply_stress(self, resource: SharedResource, level: int) -> float:
        """Run the level-`level` stressor, return the workload's usage."""


class SimulatedProbe(WorkloadProbe):
    """Probe backed by a ground-truth footprint instead of hardware.

    activity scales the footprint's usage rates to the spec the
    workload is deployed on (1.0 = full activity). Under stress the
    usage drops linearly once the stress level passes the workload's
    tolerance; the tolerance is levels - sensitivity, so the first
    >=10% drop lands exactly at tolerance + 1.

    noise_sigma adds multiplicative log-normal noise to every reading.
    It defaults to off so repeated estimates are bit-identical.
    """

    def __init__(self, constants: NodeConstants, footprint: ResourceFootprint,
                 activity: float = 1.0, noise_sigma: float = 0.0, seed: int = 0):
        if not 0.0 <= activity <= 1.0:
            raise ValueError(f"activity must be in [0, 1], got {activity}")
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        self._constants = constants
        self._footprint = footprint
        self._activity = activity
        self._noise_sigma = noise_sigma
        self._rng = np.random.default_rng(np.random.SeedSequence([seed]))

    @property
    def constants(self) -> NodeConstants:
        return self._constants

    def _noisy(self, value: float) -> float:
        if self._noise_sigma == 0.0:
            return value
        return value * float(np.exp(self._noise_sigma * self._rng.standard_normal()))

    def _solo_usage(self, resource: SharedResource) -> float:
        f, a = self._footprint, self._activity
        if resource is SharedResource.LLC:
            return a * self._kmps_at(self._constants.llc_ways)
        if resource is SharedResource.MEMORY_BANDWIDTH:
            return a * f.membw_gbps
        if resource is SharedResource.DISK:
            return a * f.iops
        return a * f.network_gbps

    def _kmps_at(self, ways: int) -> float:
        f = self._footprint
        return f.kmps_base * (1.0 + f.demand_slope * max(0.0, f.demand_ways - ways))

    def _tolerance(self, resource: SharedResource) -> int:
        f, n = self._footprint, self._constants.levels
        sens = {SharedResource.MEMORY_BANDWIDTH: f.sens_membw,
                SharedResource.DISK: f.sens_disk,
                SharedResource.NETWORK: f.sens_network}[resource]
        return n - min(sens, n)

    def read_usage(self, resource: SharedResource) -> float:
        return self._noisy(self._solo_usage(resource))

    def set_llc_ways(self, ways: int) -> float:
        if not 1 <= ways <= self._constants.llc_ways:
            raise ValueError(f"ways must be in 1..{self._constants.llc_ways}, got {ways}")
        return self._noisy(self._activity * self._kmps_at(ways))

    def apply_stress(self, resource: SharedResource, level: int) -> float:
        if resource is SharedResource.LLC:
            raise ValueError("LLC sensitivity uses set_llc_ways, not a stressor")
        if level < 0:
            raise ValueError("stress level must be non-negative")
        solo = self._solo_usage(resource)
        if level == 0:
            return self._noisy(solo)
        excess = max(0, level - self._tolerance(resource))
        return self._noisy(solo * max(0.0, 1.0 - STRESS_DROP_PER_LEVEL * excess))


def stress_reference_tracks(constants: NodeConstants) -> tuple[tuple[int, KmpsTrack], ...]:
    """Kmps tracks of the calibrated stress programs, one per level.

    The level-L program misses at L * kmps_per_level with the full
    cache and ramps up as its allocation shrinks below 8 ways. Level 0
    is the idle track. Shape is shared across levels so the matched
    level grows with the measured miss volume.
    """
    w = constants.llc_ways
    shape = [1.0 + 0.08 * max(0.0, 8.0 - ways) for ways in range(1, w + 1)]
    tracks = []
    for level in range(constants.levels + 1):
        base = level * constants.kmps_per_level
        tracks.append((level, KmpsTrack(tuple(base * s for s in shape))))
    return tuple(tracks)


def pressure_level(usage: float, physical: float, n_levels: int) -> int:
    """Discretize usage of a shared resource onto 0..n_levels.

    Round-half-up, then clamp: pressure = round(n_levels * usage / physical).
    """
    if physical <= 0:
        raise ValueError("physical capacity must be positive")
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if usage < 0:
        raise ValueError("usage must be non-negative")
    return min(n_levels, round_half_up(n_levels * usage / physical))


def match_pressure(track: KmpsTrack,
                   reference_tracks) -> int:
    """Level of the reference track nearest in squared kmps distance.

    Ties go to the lower level so results are deterministic.
    """
    refs = list(reference_tracks)
    if not refs:
        raise ValueError("reference track set is empty")
    best_level, best_dist = None, None
    for level, ref in sorted(refs, key=lambda pair: pair[0]):
        d = track.distance(ref)
        if best_dist is None or d < best_dist:
            best_level, best_dist = level, d
    return int(best_level)


def llc_sensitivity_ways(track: KmpsTrack, rise: float = DEGRADATION_THRESHOLD) -> int:
    """Way count at the first >=10% kmps rise, scanning from full cache down.

    Because the track is non-increasing in ways, the first crossing
    found while shrinking is the largest way count w with
    kmps_w >= (1 + rise) * kmps_W. A flat (or all-zero) track never
    crosses and scores 0: the workload does not care about the cache.
    """
    full = track.at_ways(track.ways)
    for ways in range(track.ways - 1, 0, -1):
        k = track.at_ways(ways)
        if k > full and k >= (1.0 + rise) * full:
            return ways
    return 0


def ways_to_level(ways: int, llc_ways: int, n_levels: int) -> int:
    """Map a way-count sensitivity onto the shared 0..N level scale."""
    return min(n_levels, round_half_up(ways * n_levels / llc_ways))


def quantify_llc(probe: WorkloadProbe,
                 reference_tracks) -> PressureSensitivity:
    """Pressure from track matching, sensitivity from way shrinking."""
    refs = list(reference_tracks)
    if not refs:
        raise ValueError("reference track set is empty")
    w = probe.constants.llc_ways
    observed = []
    for ways in range(w, 0, -1):
        observed.append(probe.set_llc_ways(ways))
    track = KmpsTrack(tuple(reversed(observed)))
    pressure = match_pressure(track, refs)
    sens_ways = llc_sensitivity_ways(track)
    sensitivity = ways_to_level(sens_ways, w, probe.constants.levels)
    return PressureSensitivity(pressure=pressure, sensitivity=sensitivity)


def _sweep_sensitivity(probe: WorkloadProbe, resource: SharedResource,
                       n_levels: int, baseline: float) -> int:
    """Ascending stress sweep; first >=10% drop wins.

    Returns n_levels - max_unaffected_level. The baseline is the
    unstressed (level 0) reading per the protocol.
    """
    if baseline <= 0:
        return 0
    max_level = n_levels
    for level in range(1, n_levels + 1):
        usage = probe.apply_stress(resource, level)
        if baseline - usage >= DEGRADATION_THRESHOLD * baseline:
            max_level = level - 1
            break
    return n_levels - max_level


def quantify_membw(probe: WorkloadProbe, n_levels: int) -> PressureSensitivity:
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    usage = probe.apply_stress(SharedResource.MEMORY_BANDWIDTH, 0)
    pressure = pressure_level(usage, probe.constants.phy_membw_gbps, n_levels)
    sens = _sweep_sensitivity(probe, SharedResource.MEMORY_BANDWIDTH, n_levels, usage)
    return PressureSensitivity(pressure=pressure, sensitivity=sens)


def quantify_disk(probe: WorkloadProbe, n_levels: int, iops_scaler: float) -> PressureSensitivity:
    if iops_scaler <= 0:
        raise ValueError("iops_scaler must be positive")
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    usage = probe.apply_stress(SharedResource.DISK, 0)
    pressure = min(n_levels, round_half_up(usage / iops_scaler))
    sens = _sweep_sensitivity(probe, SharedResource.DISK, n_levels, usage)
    return PressureSensitivity(pressure=pressure, sensitivity=sens)


def quantify_network(probe: WorkloadProbe, n_levels: int) -> PressureSensitivity:
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    usage = probe.apply_stress(SharedResource.NETWORK, 0)
    pressure = pressure_level(usage, probe.constants.phy_network_gbps, n_levels)
    sens = _sweep_sensitivity(probe, SharedResource.NETWORK, n_levels, usage)
    return PressureSensitivity(pressure=pressure, sensitivity=sens)


@dataclass(frozen=True)
class EstimatorConfig:
    """Level counts, disk scaler and calibrated reference tracks."""

    levels: int = 20
    iops_scaler: float = 1000.0
    reference_tracks: tuple = ()

    @classmethod
    def for_constants(cls, constants: NodeConstants) -> "EstimatorConfig":
        return cls(levels=constants.levels,
                   iops_scaler=constants.iops_per_level,
                   reference_tracks=stress_reference_tracks(constants))


def build_profile(probe: WorkloadProbe, config: EstimatorConfig | None = None) -> InterferenceProfile:
    """Quantify all four resources, one at a time, and assemble the profile."""
    if config is None:
        config = EstimatorConfig.for_constants(probe.constants)
    llc = quantify_llc(probe, config.reference_tracks)
    membw = quantify_membw(probe, config.levels)
    disk = quantify_disk(probe, config.levels, config.iops_scaler)
    network = quantify_network(probe, config.levels)
    return InterferenceProfile(llc=llc, membw=membw, disk=disk, network=network)


def tracks_to_json(tracks) -> dict:
    """Serializable form of calibrated (level, track) reference pairs."""
    return {"schema": "reference-tracks/v1",
            "tracks": [{"level": level, "kmps": track.to_json()}
                       for level, track in tracks]}


def tracks_from_json(obj: dict) -> tuple[tuple[int, KmpsTrack], ...]:
    if obj.get("schema") != "reference-tracks/v1":
        raise ValueError(f"not a reference-tracks file: schema={obj.get('schema')!r}")
    return tuple((int(t["level"]), KmpsTrack.from_json(t["kmps"]))
                 for t in obj["tracks"])
