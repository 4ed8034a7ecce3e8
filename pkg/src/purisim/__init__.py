"""purisim: simulator of on-chip deterministic entanglement purification.

Path-encoded hyperentangled photon pairs over four waveguide modes per
photon; reconfigurable error-generation, Hadamard-conversion and
purification circuits; state tomography and CHSH evaluation from exact
states or Poisson-sampled coincidence counts.
"""

from .bell import (
    ChshResult,
    ChshSettings,
    canonical_settings,
    chsh_from_counts,
    chsh_value,
    correlation,
    correlation_matrix,
    optimize_settings,
    sample_chsh,
)
from .circuits import (
    LocalUnitary,
    MziSetting,
    apply_unitary,
    compile_config,
    global_phase_distance,
    mzi_unitary,
)
from .noise import (
    BaselineNoise,
    ErrorDistribution,
    apply_baseline,
    apply_error_branch,
    apply_error_mixture,
    calibrate_visibility,
    independent_rates,
)
from .runner import (
    ConfigError,
    RunReport,
    Scenario,
    emit_plots,
    run,
    run_paper_suite,
    scenario_from_dict,
    write_report,
)
from .states import (
    HyperState,
    ModeMap,
    TwoQubitState,
    bell_phi_plus,
    density_from_json,
    density_to_json,
    fidelity,
    make_initial_state,
    maximally_mixed,
    post_select,
    purity,
    reduced,
    trace_distance,
    werner,
)
from .tomography import (
    CountRecord,
    DetectionParams,
    MeasurementSetting,
    TomographyResult,
    all_settings,
    linear_inversion,
    mle_reconstruct,
    outcome_probs,
    projectors,
    read_records_csv,
    sample_counts,
    sample_tomography,
    write_records_csv,
)

__version__ = "0.1.0"
