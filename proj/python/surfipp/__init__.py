"""Informative path planning on triangle-mesh surfaces."""

from ._core import (
    ConfigError,
    Error,
    FieldMap,
    KernelParams,
    MissionEvent,
    MissionLog,
    Scenario,
    SurfaceMesh,
    ablate,
    compare,
    fuse,
    generate_airplane,
    generate_cylinder_tank,
    geodesic_distances,
    load_mesh,
    load_scenario,
    matern32,
    plot,
    prior_covariance,
    run,
    run_mission,
    save_obj,
)

__all__ = [
    "ConfigError",
    "Error",
    "FieldMap",
    "KernelParams",
    "MissionEvent",
    "MissionLog",
    "Scenario",
    "SurfaceMesh",
    "ablate",
    "compare",
    "fuse",
    "generate_airplane",
    "generate_cylinder_tank",
    "geodesic_distances",
    "load_mesh",
    "load_scenario",
    "matern32",
    "plot",
    "prior_covariance",
    "run",
    "run_mission",
    "save_obj",
]
