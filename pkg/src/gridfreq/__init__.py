"""gridfreq: load-side frequency control via distributed proximal primal-dual
dynamics on a linearized DC network, with optimality and Lyapunov diagnostics.
"""

from .controller import (
    ANALYSIS_RHO,
    ControllerState,
    DppdConfig,
    dppd_rhs_closed_loop,
    dppd_rhs_pure_opt,
    initial_controller_state,
    local_imbalances,
    subgradient_baseline_rhs,
)
from .costs import (
    CostModel,
    eval_total_cost,
    grad_f0,
    make_cost_model,
    prox_box,
    prox_l1_shifted,
    scale_for_strong_convexity,
)
from .diagnostics import (
    KktResidual,
    Lemma2Report,
    PrimalDualPoint,
    RateReport,
    chatter_metric,
    kkt_residual,
    lemma2_check,
    lyapunov_va,
    lyapunov_vb,
    rate_report,
    vb_state_from_trajectory,
)
from .dynamics import PlantState, load_bus_frequency, plant_rhs, rk4_step
from .network import (
    InjectionProfile,
    PowerNetwork,
    build_network,
    line_flows_from_angles,
    weighted_laplacian,
)
from .oracle import ReferenceOptimum, grid_search_optimum, two_bus_analytic_optimum
from .scenarios import (
    Scenario,
    apply_measurement_noise,
    bundled_case_names,
    load_case,
    sinusoidal_profile,
    step_change_profile,
)
from .simulate import (
    Trajectory,
    run_closed_loop,
    run_pure_opt,
    run_uncontrolled,
    steady_plant_init,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
