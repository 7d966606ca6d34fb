//! Opportunistic spectrum access on unslotted primary channels.
//!
//! A secondary user periodically senses a set of primary channels whose
//! occupancy alternates between busy and free sojourns. Because sensing is
//! costly and the channels are unslotted, the secondary user must decide how
//! long to wait before sensing again — and a good schedule waits longer after
//! seeing a free channel than after seeing a busy one. This crate provides:
//!
//! * closed-form renewal quantities for exponential busy/free channels, plus
//!   a quadrature oracle for general sojourn distributions ([`renewal`]);
//! * energy-detector dwell-time sizing from false-alarm/misdetection targets
//!   ([`sensing`]);
//! * embedded Markov-chain evaluation of throughput, interference, sensing
//!   overhead, and unexplored-opportunity fractions ([`markov`]);
//! * constrained optimizers for outcome-dependent sensing schedules
//!   ([`opt_limited_sensing`], [`opt_full`]) and for interference-capped
//!   access durations under sequential search ([`opt_limited_access`]);
//! * a discrete-event Monte-Carlo simulator that validates every analytic
//!   prediction against sampled channel trajectories ([`simulator`]).
//!
//! Times are in consistent (unit-free) seconds; rates are their inverses.

pub mod error;
pub mod markov;
pub mod opt_full;
pub mod opt_limited_access;
pub mod opt_limited_sensing;
pub mod renewal;
pub mod sensing;
pub mod simulator;

pub use error::{Error, Result};
pub use markov::{
    channel_metrics, four_state_matrix, four_state_stationary, joint_transition_matrix_2ch,
    network_metrics, network_throughput, steady_state, two_channel_throughput, ChannelMetrics,
    DualPeriodPolicy, FourStateDistribution, OutcomeDurationTable, TwoChannelReport,
};
pub use opt_full::{
    myopic_duration, myopic_table, optimal_two_channel, MyopicDuration, TwoChannelOptimum,
};
pub use opt_limited_access::{
    access_duration_for_constraint, access_interference, channel_rank, next_channel_order,
    run_limited_access_policy, ChannelBelief,
};
pub use opt_limited_sensing::{
    optimize_dual_period, optimize_single_period, GridSpec, OptimizationResult,
};
pub use renewal::{ChannelParams, ChannelState, SojournDistribution, StartState};
pub use sensing::{DetectorSpec, SensingErrorModel};
pub use simulator::{
    generate_trace, simulate_dual_period, simulate_full, simulate_limited_access,
    ChannelReport, MetricStat, PerformanceReport, RenewalTrace, SimConfig,
};
