"""Event-driven simulator of a dissipative toric code memory.

Errors are injected, moved, and fused by three competing Poisson
processes while a classical feedback field, updated by a local rule,
steers excitations toward their partners.  The package reproduces the
self-correction transition of the steady state, the circuit-depth
order diagnostic, and the phase diagram over injection and
field-update rates.
"""

from .cafield import CaField, sweep_update, target_neighbor
from .decoder import DecodeResult, decode, logical_error
from .dynamics import (
    Event,
    FrozenTrajectoryError,
    RatesConfig,
    TrajectoryState,
    make_trajectory,
    run_until,
    step,
    total_rate,
)
from .frame import (
    PauliFrame,
    apply_flip,
    frame_from_snapshot,
    new_frame,
    recompute_from_scratch,
    snapshot_bytes,
)
from .harness import (
    ExperimentPlan,
    SweepPoint,
    ThresholdResult,
    calibrate_steady_const,
    locate_critical_gamma1,
    measurement_grid,
    phase_diagram,
    run_ensemble,
    steady_state_time,
)
from .lattice import TorusGeometry, build_geometry, edge_between, taxicab_distance, winding_parities
from .observables import EnsembleStats, GroupStats, Measurement, aggregate, bootstrap_ci, measure

__version__ = "0.1.0"

__all__ = [
    "CaField",
    "DecodeResult",
    "EnsembleStats",
    "Event",
    "ExperimentPlan",
    "FrozenTrajectoryError",
    "GroupStats",
    "Measurement",
    "PauliFrame",
    "RatesConfig",
    "SweepPoint",
    "ThresholdResult",
    "TorusGeometry",
    "TrajectoryState",
    "aggregate",
    "apply_flip",
    "bootstrap_ci",
    "build_geometry",
    "calibrate_steady_const",
    "decode",
    "edge_between",
    "frame_from_snapshot",
    "locate_critical_gamma1",
    "logical_error",
    "make_trajectory",
    "measure",
    "measurement_grid",
    "new_frame",
    "phase_diagram",
    "recompute_from_scratch",
    "run_ensemble",
    "run_until",
    "snapshot_bytes",
    "steady_state_time",
    "step",
    "sweep_update",
    "target_neighbor",
    "taxicab_distance",
    "total_rate",
    "winding_parities",
    "__version__",
]
