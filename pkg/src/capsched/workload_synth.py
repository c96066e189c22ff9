"""Synthetic database workloads with known scaling and contention behavior.

Real capacity planning trains on benchmark runs; a desk-scale study
needs the same structure without the hardware. Each archetype here
plays the role of one benchmark variation and owns

* a monotone scaling surface over the config region, from a
  saturating power law: throughput ~ min(cores, sat_c)^alpha *
  min(mem, sat_m)^beta,
* a 15-component system-index signature per configuration, coupled to
  the surface parameters so that near signatures imply near surfaces
  (the premise the surface predictor rests on),
* a ground-truth resource footprint driving the simulated probe and
  the contention simulator.

Workloads are archetype instances with their own seeds. All sampling
is keyed on explicit integer seeds so the same inputs always serialize
to the same bytes.

Index signatures are built from two ingredient groups:

* shape terms, whose influence is gated by how far the observation
  spec sits from the region's lower corner. At (1c, 2g) every workload
  pegs its single core and tiny memory the same way, so these terms
  carry no signal there; at a mid-grid base they separate archetypes
  sharply. This is what makes the choice of observation base matter.
* footprint terms, which follow the archetype's resource family
  (compute, cache, io, network, balanced) at any spec, scaled by how
  active the workload is at that spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConfigRegion,
    InterferenceProfile,
    KmpsTrack,
    NodeConstants,
    OutOfRegionError,
    PressureSensitivity,
    ResourceSpec,
    ScalingSurface,
    SystemIndexVector,
    INDEX_NAMES,
    write_json,
)
from .estimator import (
    DEGRADATION_THRESHOLD,
    ResourceFootprint,
    SimulatedProbe,
    match_pressure,
    pressure_level,
    stress_reference_tracks,
    ways_to_level,
)

__all__ = [
    "FAMILIES",
    "Workload",
    "WorkloadArchetype",
    "WorkloadSet",
    "activity",
    "generate_archetypes",
    "generate_workloads",
    "observe_indexes",
    "probe_for",
    "raw_throughput",
    "tabulate_surface",
    "tps_at",
    "true_profile_at",
]

FAMILIES = ("compute", "cache", "io", "network", "balanced")

# Per-family draw ranges for footprints. Rates are fractions of the
# node's physical capacity (or of the level ceiling for kmps/iops);
# sensitivities are inclusive integer level ranges on the 0..20 scale.
# demand/slope shape the kmps track: a workload starts missing once
# its allocation drops below demand_ways, rising by slope per way.
_FAMILY_FOOTPRINTS = {
    # Each family loads one shared resource hard and is fragile on that
    # same resource; everywhere else it is close to silent. Placement
    # quality then hinges on not stacking a family on one node, which a
    # capacity-only policy does by accident.
    "compute": {"membw": (0.00, 0.04), "kmps": (0.2, 0.8), "iops": (0.00, 0.03),
                "net": (0.00, 0.04), "sens_membw": (0, 2), "sens_disk": (0, 2),
                "sens_net": (0, 2), "demand": (1.5, 3.0), "slope": (0.02, 0.06)},
    # The llc track inflates with demand * slope (a starved cache hog
    # thrashes), so cache kmps is budgeted well below the target level.
    "cache": {"membw": (0.02, 0.06), "kmps": (2.0, 3.5), "iops": (0.00, 0.04),
              "net": (0.00, 0.04), "sens_membw": (0, 2), "sens_disk": (0, 2),
              "sens_net": (0, 2), "demand": (7.0, 10.0), "slope": (0.15, 0.30)},
    "io": {"membw": (0.02, 0.06), "kmps": (0.3, 1.0), "iops": (0.45, 0.75),
           "net": (0.02, 0.06), "sens_membw": (0, 3), "sens_disk": (12, 18),
           "sens_net": (0, 3), "demand": (2.0, 4.0), "slope": (0.03, 0.08)},
    "network": {"membw": (0.02, 0.06), "kmps": (0.3, 1.0), "iops": (0.00, 0.04),
                "net": (0.45, 0.75), "sens_membw": (0, 3), "sens_disk": (0, 3),
                "sens_net": (12, 18), "demand": (2.0, 4.0), "slope": (0.03, 0.08)},
    "balanced": {"membw": (0.40, 0.70), "kmps": (0.3, 1.0), "iops": (0.00, 0.04),
                 "net": (0.02, 0.06), "sens_membw": (10, 16), "sens_disk": (0, 3),
                 "sens_net": (0, 3), "demand": (3.0, 6.0), "slope": (0.05, 0.12)},
}

# Surface shape draw ranges and the wider clamp ranges jitter may not
# leave. sat_c >= 2.5 keeps every workload able to pin one full core;
# sat_m >= 3 keeps 2 GB fully used, so the lower corner is uniform.
_ALPHA_RANGE = (0.15, 1.0)
_BETA_RANGE = (0.10, 0.80)
_SAT_C_RANGE = (3.0, 14.0)
_SAT_M_RANGE = (4.0, 18.0)
_ALPHA_CLAMP = (0.05, 1.2)
_BETA_CLAMP = (0.05, 1.0)
_SAT_C_CLAMP = (2.5, 16.0)
_SAT_M_CLAMP = (3.0, 20.0)

# Per-archetype relative jitter applied to the family's usage rates.
# Small against the 0.05 observation noise: at a corner config, where
# the shape terms vanish, family mates stay hard to tell apart.
_RATE_JITTER = 0.03

# Minimum normalized L-inf distance between archetype surface shapes.
# Wide separation keeps index signatures classifiable under the
# default observation noise at a mid-grid base config.
_MIN_SHAPE_SEPARATION = 0.30


@dataclass(frozen=True)
class ArchetypeParams:
    """Generative parameters shared by an archetype and its workloads."""

    alpha: float
    beta: float
    sat_cores: float
    sat_memory: float
    tps_base: float
    read_frac: float
    footprint: ResourceFootprint

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("curvature parameters must be positive")
        if self.sat_cores < 1 or self.sat_memory < 1:
            raise ValueError("saturation points must be >= 1")
        if self.tps_base <= 0:
            raise ValueError("tps_base must be positive")
        if not 0.0 <= self.read_frac <= 1.0:
            raise ValueError("read_frac must be in [0, 1]")

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta,
                "sat_cores": self.sat_cores, "sat_memory": self.sat_memory,
                "tps_base": self.tps_base, "read_frac": self.read_frac,
                "footprint": self.footprint.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "ArchetypeParams":
        return cls(alpha=float(obj["alpha"]), beta=float(obj["beta"]),
                   sat_cores=float(obj["sat_cores"]), sat_memory=float(obj["sat_memory"]),
                   tps_base=float(obj["tps_base"]), read_frac=float(obj["read_frac"]),
                   footprint=ResourceFootprint.from_json(obj["footprint"]))


@dataclass(frozen=True)
class WorkloadArchetype:
    """One latent scaling behavior, standing in for a benchmark variation."""

    archetype_id: int
    family: str
    params: ArchetypeParams

    def index_signature(self, spec: ResourceSpec, region: ConfigRegion,
                        constants: NodeConstants) -> np.ndarray:
        return _signature(self.params, region, constants, spec)

    def to_json(self) -> dict:
        return {"archetype_id": self.archetype_id, "family": self.family,
                "params": self.params.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "WorkloadArchetype":
        return cls(archetype_id=int(obj["archetype_id"]), family=str(obj["family"]),
                   params=ArchetypeParams.from_json(obj["params"]))


@dataclass(frozen=True)
class Workload:
    """An archetype instance with its own seed, origin spec and truth."""

    workload_id: int
    archetype_id: int
    noise_seed: int
    origin_spec: ResourceSpec
    params: ArchetypeParams
    ground_truth_surface: ScalingSurface
    ground_truth_profile: InterferenceProfile

    def to_json(self) -> dict:
        return {"workload_id": self.workload_id,
                "archetype_id": self.archetype_id,
                "noise_seed": self.noise_seed,
                "origin_spec": self.origin_spec.to_json(),
                "params": self.params.to_json(),
                "ground_truth_surface": self.ground_truth_surface.to_json(),
                "ground_truth_profile": self.ground_truth_profile.to_json()}

    @classmethod
    def from_json(cls, region: ConfigRegion, obj: dict) -> "Workload":
        return cls(workload_id=int(obj["workload_id"]),
                   archetype_id=int(obj["archetype_id"]),
                   noise_seed=int(obj["noise_seed"]),
                   origin_spec=ResourceSpec.from_json(obj["origin_spec"]),
                   params=ArchetypeParams.from_json(obj["params"]),
                   ground_truth_surface=ScalingSurface.from_json(
                       region, obj["ground_truth_surface"]),
                   ground_truth_profile=InterferenceProfile.from_json(
                       obj["ground_truth_profile"]))


def raw_throughput(params: ArchetypeParams, cores: float, memory_gb: float) -> float:
    """Unnormalized throughput of the saturating power-law surface."""
    c = min(float(cores), params.sat_cores)
    m = min(float(memory_gb), params.sat_memory)
    return c ** params.alpha * m ** params.beta


def activity(params: ArchetypeParams, region: ConfigRegion, spec: ResourceSpec) -> float:
    """Throughput at spec as a fraction of the largest config's throughput.

    Resource usage rates scale with this: a tenant pushing 10k IOPS at
    full tilt pushes less when a smaller config caps its throughput.
    """
    top = region.max_spec
    return (raw_throughput(params, spec.cores, spec.memory_gb)
            / raw_throughput(params, top.cores, top.memory_gb))


def tabulate_surface(params: ArchetypeParams, region: ConfigRegion,
                     base_spec: ResourceSpec) -> ScalingSurface:
    base = raw_throughput(params, base_spec.cores, base_spec.memory_gb)
    speedups = {}
    for spec in region.specs():
        speedups[spec] = raw_throughput(params, spec.cores, spec.memory_gb) / base
    speedups[base_spec] = 1.0
    return ScalingSurface(region=region, base_spec=base_spec, speedups=speedups)


def tps_at(workload: Workload, spec: ResourceSpec) -> float:
    """Ground-truth transactions per second at a spec (off-grid allowed)."""
    p = workload.params
    base = workload.ground_truth_surface.base_spec
    return p.tps_base * (raw_throughput(p, spec.cores, spec.memory_gb)
                         / raw_throughput(p, base.cores, base.memory_gb))


def _signature(params: ArchetypeParams, region: ConfigRegion,
               constants: NodeConstants, spec: ResourceSpec) -> np.ndarray:
    f = params.footprint
    c, m = float(spec.cores), float(spec.memory_gb)
    c_lo, c_hi = float(region.core_levels[0]), float(region.core_levels[-1])
    m_lo, m_hi = float(region.memory_levels_gb[0]), float(region.memory_levels_gb[-1])
    # Shape visibility: zero at the region's lower corner, where one
    # core and minimal memory flatten every archetype's behavior.
    v_c = (c - c_lo) / (c_hi - c_lo) if c_hi > c_lo else 0.0
    v_m = (m - m_lo) / (m_hi - m_lo) if m_hi > m_lo else 0.0
    u_c = min(c, params.sat_cores)
    u_m = min(m, params.sat_memory)
    a = activity(params, region, spec)
    kshare = f.kmps_base / (constants.levels * constants.kmps_per_level)
    mshare = f.membw_gbps / constants.phy_membw_gbps
    ishare = f.iops / (constants.levels * constants.iops_per_level)
    rf = params.read_frac
    alpha, beta = params.alpha, params.beta

    values = {
        "ipc": 0.25 + 5.0 * alpha * v_c + 0.4 * beta * v_m,
        "cpu_usage": u_c * (0.40 + 0.60 * alpha * v_c),
        "memory_usage": u_m * (0.45 + 0.55 * beta * v_m),
        "cache_references": a * (25.0 + 150.0 * kshare + 60.0 * mshare),
        "dtlb_load_misses": a * (5.0 + 45.0 * (params.sat_cores / 12.0) * v_c
                                 + 15.0 * kshare),
        "dtlb_store_misses": a * (4.0 + 40.0 * (params.sat_memory / 16.0) * v_m
                                  + 12.0 * (1.0 - rf)),
        "page_fault": a * (1.5 + 45.0 * beta * v_m + 6.0 * mshare),
        "node_loads": a * (3.0 + 50.0 * mshare * rf + 40.0 * beta * v_m),
        "node_stores": a * (2.0 + 35.0 * mshare * (1.0 - rf) + 40.0 * alpha * v_c),
        "dirty_memory": u_m * (18.0 + 160.0 * (1.0 - rf) * beta * v_m
                               + 90.0 * ishare * (1.0 - rf)),
        "io_serviced_read": a * f.iops * rf,
        "io_serviced_write": a * f.iops * (1.0 - rf),
    }
    values["cache_misses"] = values["cache_references"] * min(0.9, 0.06 + 0.5 * kshare)
    values["io_read_bytes"] = values["io_serviced_read"] * 16384.0
    values["io_write_bytes"] = values["io_serviced_write"] * 16384.0
    return np.array([values[name] for name in INDEX_NAMES], dtype=float)


def observe_indexes(workload: Workload, spec: ResourceSpec, noise_sigma: float,
                    constants: NodeConstants = NodeConstants()) -> SystemIndexVector:
    """Measure the 15 indexes of a workload deployed at spec.

    Deterministic in (noise_seed, spec): re-observing the same
    deployment yields the same reading, different specs get fresh
    noise. Components stay non-negative and cache_misses is clamped
    under cache_references after noise.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    region = workload.ground_truth_surface.region
    if not region.contains(spec):
        raise OutOfRegionError(f"{spec} outside region")
    vec = _signature(workload.params, region, constants, spec)
    if noise_sigma > 0:
        rng = np.random.default_rng(np.random.SeedSequence(
            [workload.noise_seed, spec.cores, spec.memory_gb]))
        vec = vec * np.exp(noise_sigma * rng.standard_normal(len(vec)))
    vec = np.maximum(vec, 0.0)
    named = dict(zip(INDEX_NAMES, vec))
    named["cache_misses"] = min(named["cache_misses"], named["cache_references"])
    return SystemIndexVector(**{k: float(v) for k, v in named.items()})


def true_profile_at(workload: Workload, spec: ResourceSpec,
                    constants: NodeConstants,
                    reference_tracks=None) -> InterferenceProfile:
    """Ground-truth interference profile at a deployment spec.

    Pressures follow the usage rates scaled by activity at spec; LLC
    pressure is defined as the level of the nearest stress reference
    track. Sensitivities are the generative levels, except that a
    resource the workload does not use at all cannot be sensitive.
    """
    params = workload.params
    f = params.footprint
    region = workload.ground_truth_surface.region
    a = activity(params, region, spec)
    n = constants.levels
    if reference_tracks is None:
        reference_tracks = stress_reference_tracks(constants)

    w = constants.llc_ways
    track = KmpsTrack(tuple(
        a * f.kmps_base * (1.0 + f.demand_slope * max(0.0, f.demand_ways - ways))
        for ways in range(1, w + 1)))
    p_llc = match_pressure(track, reference_tracks)
    if a * f.kmps_base > 0 and f.demand_slope > 0:
        crossing = math.floor(f.demand_ways - DEGRADATION_THRESHOLD / f.demand_slope)
        s_ways = min(w - 1, max(0, crossing))
    else:
        s_ways = 0
    llc = PressureSensitivity(p_llc, ways_to_level(s_ways, w, n))

    def rate_entry(usage: float, physical: float, sens: int) -> PressureSensitivity:
        return PressureSensitivity(pressure_level(usage, physical, n),
                                   sens if usage > 0 else 0)

    membw = rate_entry(a * f.membw_gbps, constants.phy_membw_gbps, f.sens_membw)
    disk = rate_entry(a * f.iops, n * constants.iops_per_level, f.sens_disk)
    network = rate_entry(a * f.network_gbps, constants.phy_network_gbps, f.sens_network)
    return InterferenceProfile(llc=llc, membw=membw, disk=disk, network=network)



def probe_for(workload: Workload, spec: ResourceSpec, constants: NodeConstants,
              noise_sigma: float = 0.0, seed: int = 0) -> SimulatedProbe:
    """Simulated probe for a workload deployed solo at spec."""
    region = workload.ground_truth_surface.region
    return SimulatedProbe(constants, workload.params.footprint,
                          activity=activity(workload.params, region, spec),
                          noise_sigma=noise_sigma, seed=seed)


def _uniform(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return float(lo + (hi - lo) * rng.random())


def _int_uniform(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def _shape_distance(a: ArchetypeParams, b: ArchetypeParams) -> float:
    return max(
        abs(a.alpha - b.alpha) / (_ALPHA_RANGE[1] - _ALPHA_RANGE[0]),
        abs(a.beta - b.beta) / (_BETA_RANGE[1] - _BETA_RANGE[0]),
        abs(a.sat_cores - b.sat_cores) / (_SAT_C_RANGE[1] - _SAT_C_RANGE[0]),
        abs(a.sat_memory - b.sat_memory) / (_SAT_M_RANGE[1] - _SAT_M_RANGE[0]),
    )


def _draw_family_rates(rng: np.random.Generator, family: str,
                       constants: NodeConstants) -> dict[str, float]:
    """One usage-rate profile per family; archetypes only jitter it."""
    r = _FAMILY_FOOTPRINTS[family]
    return {
        "kmps": _uniform(rng, r["kmps"]) * constants.kmps_per_level,
        "membw": _uniform(rng, r["membw"]) * constants.phy_membw_gbps,
        "iops": _uniform(rng, r["iops"]) * constants.levels * constants.iops_per_level,
        "net": _uniform(rng, r["net"]) * constants.phy_network_gbps,
    }


def _draw_params(rng: np.random.Generator, family: str, rates: dict[str, float],
                 constants: NodeConstants) -> ArchetypeParams:
    r = _FAMILY_FOOTPRINTS[family]
    alpha = _uniform(rng, _ALPHA_RANGE)
    beta = _uniform(rng, _BETA_RANGE)
    sat_c = _uniform(rng, _SAT_C_RANGE)
    sat_m = _uniform(rng, _SAT_M_RANGE)
    read_frac = _uniform(rng, (0.4, 0.9))
    # Peak throughput grows with every shape parameter, so a feature
    # ranking against measured throughput keeps carriers for all four.
    tps_base = (40.0 * (1.0 + 4.0 * alpha + 1.5 * beta)
                * (1.0 + 0.08 * sat_c + 0.05 * sat_m))

    def jittered(rate: float) -> float:
        return rate * float(np.exp(_RATE_JITTER * rng.standard_normal()))

    footprint = ResourceFootprint(
        kmps_base=jittered(rates["kmps"]),
        demand_ways=_uniform(rng, r["demand"]),
        demand_slope=_uniform(rng, r["slope"]),
        membw_gbps=jittered(rates["membw"]),
        iops=jittered(rates["iops"]),
        network_gbps=jittered(rates["net"]),
        sens_membw=_int_uniform(rng, r["sens_membw"]),
        sens_disk=_int_uniform(rng, r["sens_disk"]),
        sens_network=_int_uniform(rng, r["sens_net"]),
    )
    return ArchetypeParams(alpha=alpha, beta=beta, sat_cores=sat_c, sat_memory=sat_m,
                           tps_base=tps_base, read_frac=read_frac, footprint=footprint)


def generate_archetypes(count: int, rng_seed: int,
                        constants: NodeConstants = NodeConstants()) -> list[WorkloadArchetype]:
    """Draw `count` archetypes with pairwise-distinct surface shapes.

    Families rotate round-robin so every resource family is covered,
    each with one shared usage-rate profile. Candidates too close in
    shape space to an accepted archetype are redrawn, keeping surfaces
    distinguishable; the threshold loosens as count grows so large
    sets remain drawable.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0]))
    family_rates = {f: _draw_family_rates(rng, f, constants) for f in FAMILIES}
    separation = min(_MIN_SHAPE_SEPARATION, 0.8 * count ** -0.25)
    archetypes: list[WorkloadArchetype] = []
    for archetype_id in range(count):
        family = FAMILIES[archetype_id % len(FAMILIES)]
        for _ in range(5000):
            candidate = _draw_params(rng, family, family_rates[family], constants)
            if all(_shape_distance(candidate, a.params) >= separation
                   for a in archetypes):
                break
        else:
            raise RuntimeError("could not draw a distinct archetype; "
                               "lower count or the separation threshold")
        archetypes.append(WorkloadArchetype(archetype_id, family, candidate))
    return archetypes


def _clip(value: float, bounds: tuple[float, float]) -> float:
    return min(max(value, bounds[0]), bounds[1])


def _jittered_params(params: ArchetypeParams, rng: np.random.Generator,
                     surface_noise: float, footprint_noise: float) -> ArchetypeParams:
    def mul(sigma: float) -> float:
        z = rng.standard_normal()
        return float(np.exp(sigma * z))

    f = params.footprint
    jf = ResourceFootprint(
        kmps_base=f.kmps_base * mul(footprint_noise),
        demand_ways=_clip(f.demand_ways * mul(footprint_noise), (0.0, 11.0)),
        demand_slope=_clip(f.demand_slope * mul(footprint_noise), (0.0, 0.6)),
        membw_gbps=f.membw_gbps * mul(footprint_noise),
        iops=f.iops * mul(footprint_noise),
        network_gbps=f.network_gbps * mul(footprint_noise),
        sens_membw=f.sens_membw, sens_disk=f.sens_disk, sens_network=f.sens_network,
    )
    return ArchetypeParams(
        alpha=_clip(params.alpha * mul(surface_noise), _ALPHA_CLAMP),
        beta=_clip(params.beta * mul(surface_noise), _BETA_CLAMP),
        sat_cores=_clip(params.sat_cores * mul(surface_noise), _SAT_C_CLAMP),
        sat_memory=_clip(params.sat_memory * mul(surface_noise), _SAT_M_CLAMP),
        tps_base=params.tps_base * mul(surface_noise),
        read_frac=params.read_frac,
        footprint=jf,
    )


def make_workload(archetype: WorkloadArchetype, workload_id: int, noise_seed: int,
                  origin: ResourceSpec, region: ConfigRegion,
                  constants: NodeConstants, base_spec: ResourceSpec,
                  surface_noise: float = 0.0, footprint_noise: float = 0.0,
                  reference_tracks=None) -> Workload:
    """One workload instance of an archetype, deployed at origin.

    Parameter jitter is derived from noise_seed, so the same seed
    reproduces the same instance regardless of how it was drawn.
    """
    wrng = np.random.default_rng(np.random.SeedSequence([noise_seed, 7]))
    params = _jittered_params(archetype.params, wrng, surface_noise, footprint_noise)
    surface = tabulate_surface(params, region, base_spec)
    seed_workload = Workload(
        workload_id=workload_id, archetype_id=archetype.archetype_id,
        noise_seed=noise_seed, origin_spec=origin, params=params,
        ground_truth_surface=surface,
        ground_truth_profile=InterferenceProfile.zero())
    profile = true_profile_at(seed_workload, origin, constants, reference_tracks)
    return replace(seed_workload, ground_truth_profile=profile)


def generate_workloads(archetypes: list[WorkloadArchetype], count: int, rng_seed: int,
                       region: ConfigRegion, constants: NodeConstants,
                       base_spec: ResourceSpec,
                       surface_noise: float = 0.0,
                       footprint_noise: float = 0.0) -> list[Workload]:
    """Instantiate workloads round-robin over the archetypes.

    Origin specs are drawn uniformly from the integer rectangle
    spanned by the region (they need not be grid points). Per-workload
    parameter jitter is off by default: workloads of one archetype
    then share the exact surface and footprint, differing only in
    observation noise.
    """
    if not archetypes:
        raise ValueError("archetypes must be non-empty")
    master = np.random.default_rng(np.random.SeedSequence([rng_seed, 1]))
    references = stress_reference_tracks(constants)
    workloads = []
    for workload_id in range(count):
        archetype = archetypes[workload_id % len(archetypes)]
        noise_seed = int(master.integers(0, 2 ** 62))
        origin = ResourceSpec(
            cores=int(master.integers(region.core_levels[0], region.core_levels[-1] + 1)),
            memory_gb=int(master.integers(region.memory_levels_gb[0],
                                          region.memory_levels_gb[-1] + 1)))
        workloads.append(make_workload(
            archetype, workload_id, noise_seed, origin, region, constants,
            base_spec, surface_noise, footprint_noise, references))
    return workloads


def with_origin(workload: Workload, origin: ResourceSpec,
                constants: NodeConstants, reference_tracks=None) -> Workload:
    """Copy of the workload as if it arrived at a different origin spec."""
    profile = true_profile_at(workload, origin, constants, reference_tracks)
    return replace(workload, origin_spec=origin, ground_truth_profile=profile)


@dataclass(frozen=True)
class WorkloadSet:
    """A generated world: region, constants, archetypes and workloads."""

    region: ConfigRegion
    base_spec: ResourceSpec
    constants: NodeConstants
    seed: int
    surface_noise: float
    footprint_noise: float
    archetypes: tuple[WorkloadArchetype, ...]
    workloads: tuple[Workload, ...]

    @classmethod
    def generate(cls, archetype_count: int, workload_count: int, seed: int,
                 region: ConfigRegion = ConfigRegion(),
                 constants: NodeConstants = NodeConstants(),
                 base_spec: ResourceSpec = ResourceSpec(6, 8),
                 surface_noise: float = 0.0,
                 footprint_noise: float = 0.0) -> "WorkloadSet":
        if not region.is_grid_point(base_spec):
            raise ValueError(f"base {base_spec} must be a grid point")
        archetypes = generate_archetypes(archetype_count, seed, constants)
        workloads = generate_workloads(archetypes, workload_count, seed, region,
                                       constants, base_spec, surface_noise,
                                       footprint_noise)
        return cls(region=region, base_spec=base_spec, constants=constants,
                   seed=seed, surface_noise=surface_noise,
                   footprint_noise=footprint_noise,
                   archetypes=tuple(archetypes), workloads=tuple(workloads))

    def workload_by_id(self, workload_id: int) -> Workload:
        for w in self.workloads:
            if w.workload_id == workload_id:
                return w
        raise KeyError(f"no workload {workload_id}")

    def to_json(self) -> dict:
        return {"schema": "workload-set/v1",
                "seed": self.seed,
                "surface_noise": self.surface_noise,
                "footprint_noise": self.footprint_noise,
                "region": self.region.to_json(),
                "base_spec": self.base_spec.to_json(),
                "constants": self.constants.to_json(),
                "archetypes": [a.to_json() for a in self.archetypes],
                "workloads": [w.to_json() for w in self.workloads]}

    def save(self, path) -> None:
        write_json(path, self.to_json())

    @classmethod
    def from_json(cls, obj: dict) -> "WorkloadSet":
        if obj.get("schema") != "workload-set/v1":
            raise ValueError(f"not a workload set file: schema={obj.get('schema')!r}")
        region = ConfigRegion.from_json(obj["region"])
        return cls(region=region,
                   base_spec=ResourceSpec.from_json(obj["base_spec"]),
                   constants=NodeConstants.from_json(obj["constants"]),
                   seed=int(obj["seed"]),
                   surface_noise=float(obj["surface_noise"]),
                   footprint_noise=float(obj["footprint_noise"]),
                   archetypes=tuple(WorkloadArchetype.from_json(a)
                                    for a in obj["archetypes"]),
                   workloads=tuple(Workload.from_json(region, w)
                                   for w in obj["workloads"]))

    @classmethod
    def load(cls, path) -> "WorkloadSet":
        import json
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))
