"""Toolkit for designing alternating-operator pulse schedules that convert
thermal spin magnetization into long-lived singlet order, simulating them,
and benchmarking against the standard preparation sequences.
"""

__version__ = "0.1.0"

from .baselines import (
    BaselineSpec,
    PulseMode,
    SearchGrid,
    brute_force_search,
    build_apsoc,
    build_baseline,
    build_cl,
    build_cl_detection,
    build_m2s,
    build_s2m,
    build_slic,
    build_slic_detection,
)
from .decay import DecayFit, DecaySeries, fit_exponential_decay, synthetic_series
from .hamiltonians import (
    ControlParams,
    SpinSystem,
    SystemContext,
    TargetOperator,
    build_h0,
    build_hb,
    build_target,
    make_context,
    thermal_and_initial_states,
)
from .objective import CostConfig, fidelity, infidelity, qaoa_cost, unitary_bound
from .propagation import (
    PropagatorCache,
    PulseSchedule,
    PulseSegment,
    apply_hard_rotation,
    bloch_project,
    hard_rotation,
    propagate,
    run_schedule,
    schedule_unitary,
)
from .qaoa import (
    OptimResult,
    OptimizerSettings,
    QaoaProblem,
    build_qaoa_schedule,
    evaluate_schedule,
    evaluate_with_controls,
    optimize,
)
from .spinops import (
    DeviationState,
    OperatorMatrix,
    SingletTripletBasis,
    SpinOperators,
    build_spin_operators,
    scalar_product_operator,
    singlet_projector,
    singlet_triplet_basis,
)
from .sweeps import HeatmapResult, SweepGrid, heatmap, robustness_map, total_protocol_map
