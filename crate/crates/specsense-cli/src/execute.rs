//! Run a resolved scenario: optimize the scheme's schedule, evaluate it
//! analytically, and (when requested) replay it through the simulator.

use anyhow::{anyhow, bail, Context, Result};
use specsense::{
    access_duration_for_constraint, myopic_table, optimal_two_channel,
    optimize_dual_period, optimize_single_period, simulate_dual_period, simulate_full,
    simulate_limited_access, two_channel_throughput, ChannelMetrics, ChannelParams,
    DualPeriodPolicy, Error, OptimizationResult, OutcomeDurationTable,
    PerformanceReport, SensingErrorModel, SimConfig, TwoChannelReport,
};

use crate::scenario::{Resolved, Scheme, SimSection};

/// Command-line overrides layered onto the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub horizon: Option<f64>,
    pub no_sim: bool,
    pub grid_step: Option<f64>,
}

/// The schedule a variant settled on.
#[derive(Debug, Clone)]
pub enum Policy {
    /// One `(t_free, t_busy)` pair per channel.
    Dual(Vec<DualPeriodPolicy>),
    /// One gap per joint sensing outcome.
    Table(OutcomeDurationTable),
    /// One access window per channel.
    Windows(Vec<f64>),
}

/// Closed-form predictions for a variant.
#[derive(Debug, Clone)]
pub enum Analytic {
    /// Per-channel chain metrics plus the aggregate throughput.
    PerChannel { metrics: Vec<ChannelMetrics>, objective: f64 },
    /// Joint two-channel chain metrics.
    Joint(TwoChannelReport),
    /// Sequential access: the budgets its windows were sized to.
    AccessBudgets(Vec<f64>),
}

impl Analytic {
    /// Aggregate throughput, when the scheme predicts one.
    pub fn objective(&self) -> Option<f64> {
        match self {
            Analytic::PerChannel { objective, .. } => Some(*objective),
            Analytic::Joint(report) => Some(report.r),
            Analytic::AccessBudgets(_) => None,
        }
    }
}

/// One optimized-and-evaluated configuration. Plain scenarios produce a
/// single variant; an error sweep produces one per level.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub errors: Vec<SensingErrorModel>,
    pub policy: Policy,
    pub analytic: Analytic,
    pub empirical: Option<PerformanceReport>,
}

/// Everything a scenario run produced.
#[derive(Debug, Clone)]
pub struct Execution {
    pub name: String,
    pub scheme: Scheme,
    pub channels: Vec<ChannelParams>,
    pub t_s: f64,
    pub i_max: Vec<f64>,
    pub variants: Vec<Variant>,
    /// Aggregate throughput of the outcome-independent baseline, computed
    /// alongside plain dual-period scenarios for easy comparison.
    pub baseline_objective: Option<f64>,
}

pub fn execute(resolved: &Resolved, overrides: &Overrides) -> Result<Execution> {
    let grid = match overrides.grid_step {
        Some(step) => specsense::GridSpec::new(
            resolved.grid.t_min,
            resolved.grid.t_max,
            step,
            resolved.grid.refine_levels,
            resolved.grid.refine_shrink,
        )?,
        None => resolved.grid,
    };
    let sim = effective_sim(resolved.sim.as_ref(), overrides);

    let mut baseline_objective = None;
    let variants = match resolved.scheme {
        Scheme::LimitedSensing => {
            let levels: Vec<(String, Vec<SensingErrorModel>)> = match &resolved.error_sweep
            {
                None => vec![(resolved.scheme.to_string(), resolved.errors.clone())],
                Some(sweep) => sweep
                    .iter()
                    .map(|e| {
                        (
                            format!(
                                "{}(p_fa={},p_md={})",
                                resolved.scheme,
                                e.p_fa(),
                                e.p_md()
                            ),
                            vec![*e; resolved.channels.len()],
                        )
                    })
                    .collect(),
            };
            if resolved.error_sweep.is_none() {
                let single = optimize_single_period(
                    &resolved.channels,
                    &resolved.errors,
                    resolved.t_s,
                    &resolved.i_max,
                    &grid,
                )?;
                baseline_objective = Some(single.objective);
            }
            levels
                .into_iter()
                .map(|(label, errors)| {
                    let opt = optimize_dual_period(
                        &resolved.channels,
                        &errors,
                        resolved.t_s,
                        &resolved.i_max,
                        &grid,
                    )?;
                    dual_variant(resolved, label, errors, opt, sim.as_ref())
                })
                .collect::<Result<Vec<_>>>()?
        }
        Scheme::SinglePeriodBaseline => {
            let opt = optimize_single_period(
                &resolved.channels,
                &resolved.errors,
                resolved.t_s,
                &resolved.i_max,
                &grid,
            )?;
            vec![dual_variant(
                resolved,
                resolved.scheme.to_string(),
                resolved.errors.clone(),
                opt,
                sim.as_ref(),
            )?]
        }
        Scheme::FullMyopic => {
            let table = myopic_table(
                &resolved.channels,
                &resolved.errors,
                resolved.t_s,
                &resolved.i_max,
                &grid,
            )?;
            vec![table_variant(
                resolved,
                resolved.scheme.to_string(),
                table,
                sim.as_ref(),
            )?]
        }
        Scheme::FullOptimal => {
            let opt = optimal_two_channel(
                &resolved.channels[0],
                &resolved.channels[1],
                resolved.t_s,
                [resolved.i_max[0], resolved.i_max[1]],
                &grid,
            )?;
            vec![table_variant(
                resolved,
                resolved.scheme.to_string(),
                opt.table,
                sim.as_ref(),
            )?]
        }
        Scheme::LimitedAccess => {
            let windows = access_windows(resolved)?;
            let empirical = sim
                .as_ref()
                .map(|cfg| {
                    let cfg = finalize_sim(cfg, default_access_warmup(resolved, &windows))?;
                    simulate_limited_access(
                        &resolved.channels,
                        &windows,
                        resolved.t_s,
                        &cfg,
                    )
                    .map_err(anyhow::Error::from)
                })
                .transpose()?;
            vec![Variant {
                label: resolved.scheme.to_string(),
                errors: resolved.errors.clone(),
                policy: Policy::Windows(windows),
                analytic: Analytic::AccessBudgets(resolved.i_max.clone()),
                empirical,
            }]
        }
    };

    Ok(Execution {
        name: resolved.name.clone(),
        scheme: resolved.scheme,
        channels: resolved.channels.clone(),
        t_s: resolved.t_s,
        i_max: resolved.i_max.clone(),
        variants,
        baseline_objective,
    })
}

// ---------------------------------------------------------------------------
// Per-scheme helpers
// ---------------------------------------------------------------------------

fn dual_variant(
    resolved: &Resolved,
    label: String,
    errors: Vec<SensingErrorModel>,
    opt: OptimizationResult,
    sim: Option<&SimSection>,
) -> Result<Variant> {
    let mean_cycle = opt
        .per_channel
        .iter()
        .map(|m| m.mean_cycle)
        .fold(0.0_f64, f64::max);
    let empirical = sim
        .map(|cfg| {
            let cfg = finalize_sim(cfg, 20.0 * mean_cycle)?;
            simulate_dual_period(
                &resolved.channels,
                &errors,
                &opt.policies,
                resolved.t_s,
                &cfg,
            )
            .map_err(anyhow::Error::from)
        })
        .transpose()?;
    Ok(Variant {
        label,
        errors,
        policy: Policy::Dual(opt.policies),
        analytic: Analytic::PerChannel {
            metrics: opt.per_channel,
            objective: opt.objective,
        },
        empirical,
    })
}

fn table_variant(
    resolved: &Resolved,
    label: String,
    table: OutcomeDurationTable,
    sim: Option<&SimSection>,
) -> Result<Variant> {
    // The joint chain has closed-form metrics only for two channels; larger
    // myopic tables are validated empirically.
    let analytic = if resolved.channels.len() == 2 {
        Analytic::Joint(two_channel_throughput(
            &resolved.channels[0],
            &resolved.channels[1],
            &table,
            resolved.t_s,
        )?)
    } else {
        Analytic::AccessBudgets(resolved.i_max.clone())
    };
    let mean_cycle = match &analytic {
        Analytic::Joint(report) => report.mean_cycle,
        _ => table.durations().iter().copied().fold(0.0_f64, f64::max),
    };
    let empirical = sim
        .map(|cfg| {
            let cfg = finalize_sim(cfg, 20.0 * mean_cycle)?;
            simulate_full(
                &resolved.channels,
                &resolved.errors,
                &table,
                resolved.t_s,
                &cfg,
            )
            .map_err(anyhow::Error::from)
        })
        .transpose()?;
    Ok(Variant {
        label,
        errors: resolved.errors.clone(),
        policy: Policy::Table(table),
        analytic,
        empirical,
    })
}

fn access_windows(resolved: &Resolved) -> Result<Vec<f64>> {
    resolved
        .channels
        .iter()
        .zip(&resolved.i_max)
        .enumerate()
        .map(|(k, (ch, &im))| {
            match access_duration_for_constraint(ch, im) {
                Ok(w) => Ok(resolved
                    .access_duration_cap
                    .map_or(w, |cap| w.min(cap))),
                Err(Error::UnboundedAccessDuration { supremum, .. }) => {
                    resolved.access_duration_cap.ok_or_else(|| {
                        anyhow!(Error::InvalidParameter(format!(
                            "channel {k}: budget {im} is at or above the busy \
                             fraction {supremum}, so any window length complies; \
                             set access_duration_cap to pick one"
                        )))
                    })
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}

fn default_access_warmup(resolved: &Resolved, windows: &[f64]) -> f64 {
    // No embedded-chain cycle exists here; use the slowest of window length
    // and channel sojourn cycle as the mixing scale.
    resolved
        .channels
        .iter()
        .zip(windows)
        .map(|(ch, &w)| w.max(ch.mean_free() + ch.mean_busy()))
        .fold(0.0_f64, f64::max)
        * 20.0
}

// ---------------------------------------------------------------------------
// Simulation settings
// ---------------------------------------------------------------------------

fn effective_sim(section: Option<&SimSection>, overrides: &Overrides) -> Option<SimSection> {
    if overrides.no_sim {
        return None;
    }
    let mut sim = match (section, overrides.horizon) {
        (Some(s), _) => *s,
        // A horizon override conjures a sim section with stock settings.
        (None, Some(h)) => SimSection { horizon: h, warmup: None, runs: 20, seed: 0 },
        (None, None) => return None,
    };
    if let Some(h) = overrides.horizon {
        sim.horizon = h;
    }
    if let Some(r) = overrides.runs {
        sim.runs = r;
    }
    if let Some(s) = overrides.seed {
        sim.seed = s;
    }
    Some(sim)
}

/// Fill in the default warmup and validate against the horizon.
fn finalize_sim(section: &SimSection, default_warmup: f64) -> Result<SimConfig> {
    let warmup = section.warmup.unwrap_or(default_warmup);
    if warmup >= section.horizon {
        bail!(
            "warmup {warmup} (default: twenty mean cycles) does not fit the \
             horizon {}; lengthen the horizon or set sim.warmup explicitly",
            section.horizon
        );
    }
    SimConfig::new(section.horizon, warmup, section.runs, section.seed)
        .context("invalid simulation settings")
}

// ---------------------------------------------------------------------------
