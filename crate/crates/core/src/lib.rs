//! Simulation and analysis of autonomous thermal clocks: a ladder whose top
//! level decays irreversibly, driven by two-qubit thermal machines.
//!
//! * [`model`]: parameters, partition functions and closed-form top-level
//!   population profiles.
//! * [`tick_stats`]: hazard, survival and exact waiting-time moments.
//! * [`oracle`]: exact unitary evolution on the full Hilbert space.
//! * [`sampler`]: seeded tick streams and empirical estimators.
//! * [`sweep`]: parameter sweeps, figure curve families and oracle checks.

pub mod error;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod sweep;
pub mod tick_stats;

pub use error::{ClockError, Result};
pub use model::{
    effective_coupling, energy_account, f_coefficient, ladder_partition, p_top_general,
    p_top_horizontal_finite_T, p_top_two_qubit, qubit_partition, wigner_amp_sq, ClockParams,
    EnergyAccount, Machines, PartitionSet, ProfileKind, TopLevelProfile,
};
pub use oracle::{build_oracle, evolve_p_top, EvolutionResult, OracleSystem};
pub use sampler::{empirical_metrics, sample_ticks, EmpiricalMetrics, TickSample};
pub use sweep::{run_figure, run_oracle_check, run_sweep, FigurePreset, SweepConfig};
pub use tick_stats::{baseline_metrics, clock_metrics, HazardModel, TickMoments};
