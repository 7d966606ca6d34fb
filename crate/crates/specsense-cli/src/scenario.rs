//! TOML scenario files: schema, parsing, and resolution into library types.
//!
//! A scenario names a scheme, the primary channels, an interference budget,
//! and optionally a detector (to derive the sensing time), sensing-error
//! levels, a search grid, and Monte-Carlo settings. `Scenario` mirrors the
//! file verbatim; [`Scenario::resolve`] turns it into validated library
//! types and applies scheme-specific defaults.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use specsense::{ChannelParams, DetectorSpec, GridSpec, SensingErrorModel};
use std::fmt;
use std::path::Path;

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

/// Which access scheme the scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Per-channel dual-period sensing schedules.
    LimitedSensing,
    /// Per-channel outcome-independent schedules (the dual-period search
    /// restricted to its diagonal).
    SinglePeriodBaseline,
    /// Joint sensing with a myopic outcome-duration table.
    FullMyopic,
    /// Joint sensing with the exhaustively optimized two-channel table.
    FullOptimal,
    /// Sequential search holding one interference-capped access window.
    LimitedAccess,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scheme::LimitedSensing => "limited-sensing",
            Scheme::SinglePeriodBaseline => "single-period-baseline",
            Scheme::FullMyopic => "full-myopic",
            Scheme::FullOptimal => "full-optimal",
            Scheme::LimitedAccess => "limited-access",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Rate of the exponential free sojourn (mean free time is its inverse).
    pub lambda_free: f64,
    /// Rate of the exponential busy sojourn.
    pub lambda_busy: f64,
    /// Per-channel false-alarm override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_fa: Option<f64>,
    /// Per-channel misdetection override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_md: Option<f64>,
}

/// Energy-detector design: together with the error targets this fixes the
/// sensing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub sampling_freq: f64,
    pub snr: f64,
    pub p_fa: f64,
    pub p_md: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorConfig {
    pub p_fa: f64,
    pub p_md: f64,
}

/// Interference budget: one busy-fraction multiplier for every channel, or
/// explicit per-channel time fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BudgetConfig {
    FractionOfU { fraction_of_u: f64 },
    PerChannel { per_channel: Vec<f64> },
}

/// Optional overrides of the scheme's default search lattice.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_shrink: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    /// Defaults to twenty mean sensing cycles of the slowest channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    pub runs: usize,
    pub seed: u64,
}

/// A scenario file, verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub scheme: Scheme,
    /// Sensing time; exactly one of `t_s` and `[detector]` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
    pub channels: Vec<ChannelConfig>,
    /// Error model applied to every channel unless overridden per channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorConfig>,
    pub i_max: BudgetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    /// `(p_fa, p_md)` levels applied to all channels in turn; the scenario
    /// is then optimized and simulated once per level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_sweep: Option<Vec<(f64, f64)>>,
    /// Upper bound on sequential-access windows, for budgets at or above a
    /// channel's busy fraction (which admit unbounded windows).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access_duration_cap: Option<f64>,
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

/// A scenario resolved into validated library types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub scheme: Scheme,
    pub channels: Vec<ChannelParams>,
    /// Base per-channel error models (ignored under an error sweep).
    pub errors: Vec<SensingErrorModel>,
    pub t_s: f64,
    pub i_max: Vec<f64>,
    pub grid: GridSpec,
    pub sim: Option<SimSection>,
    pub error_sweep: Option<Vec<SensingErrorModel>>,
    pub access_duration_cap: Option<f64>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).context("failed to parse scenario TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))?;
        Self::from_toml_str(&text)
            .with_context(|| format!("in scenario file {}", path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).context("failed to serialize scenario")
    }

    /// Validate the file against the scheme's requirements and build the
    /// library types it describes.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.channels.is_empty() {
            bail!("scenario '{}' lists no channels", self.name);
        }
        let channels: Vec<ChannelParams> = self
            .channels
            .iter()
            .enumerate()
            .map(|(k, c)| {
                ChannelParams::new(c.lambda_free, c.lambda_busy)
                    .with_context(|| format!("channel {k}"))
            })
            .collect::<Result<_>>()?;

        let t_s = match (self.t_s, &self.detector) {
            (Some(t), None) => {
                if !t.is_finite() || t < 0.0 {
                    bail!("t_s must be non-negative, got {t}");
                }
                t
            }
            (None, Some(d)) => {
                let spec = DetectorSpec::new(d.sampling_freq, d.snr)?;
                specsense::sensing::required_sensing_time(&spec, d.p_fa, d.p_md)?
            }
            (Some(_), Some(_)) => bail!("give either t_s or [detector], not both"),
            (None, None) => bail!("one of t_s or [detector] is required"),
        };

        let default_err = match (&self.errors, &self.detector) {
            (Some(e), _) => SensingErrorModel::new(e.p_fa, e.p_md)?,
            (None, Some(d)) => SensingErrorModel::new(d.p_fa, d.p_md)?,
            (None, None) => SensingErrorModel::perfect(),
        };
        let errors: Vec<SensingErrorModel> = self
            .channels
            .iter()
            .enumerate()
            .map(|(k, c)| match (c.p_fa, c.p_md) {
                (None, None) => Ok(default_err),
                (fa, md) => SensingErrorModel::new(
                    fa.unwrap_or(default_err.p_fa()),
                    md.unwrap_or(default_err.p_md()),
                )
                .with_context(|| format!("channel {k} error overrides")),
            })
            .collect::<Result<_>>()?;

        let i_max: Vec<f64> = match &self.i_max {
            BudgetConfig::FractionOfU { fraction_of_u } => {
                if !(*fraction_of_u > 0.0 && *fraction_of_u <= 1.0) {
                    bail!("fraction_of_u must lie in (0, 1], got {fraction_of_u}");
                }
                channels.iter().map(|c| fraction_of_u * c.utilization()).collect()
            }
            BudgetConfig::PerChannel { per_channel } => {
                if per_channel.len() != channels.len() {
                    bail!(
                        "i_max.per_channel has {} entries for {} channels",
                        per_channel.len(),
                        channels.len()
                    );
                }
                per_channel.clone()
            }
        };

        let grid = self.build_grid(&channels, t_s)?;

        let error_sweep = match &self.error_sweep {
            None => None,
            Some(levels) => {
                if self.scheme != Scheme::LimitedSensing {
                    bail!("error_sweep is only supported with scheme = \"limited-sensing\"");
                }
                if self.errors.is_some()
                    || self.channels.iter().any(|c| c.p_fa.is_some() || c.p_md.is_some())
                {
                    bail!("error_sweep replaces [errors] and per-channel overrides; remove them");
                }
                if levels.is_empty() {
                    bail!("error_sweep must list at least one (p_fa, p_md) pair");
                }
                Some(
                    levels
                        .iter()
                        .map(|&(fa, md)| SensingErrorModel::new(fa, md))
                        .collect::<specsense::Result<_>>()?,
                )
            }
        };

        match self.scheme {
            Scheme::FullOptimal => {
                if channels.len() != 2 {
                    bail!("full-optimal requires exactly two channels");
                }
                if errors.iter().any(|e| !e.is_perfect()) {
                    bail!("full-optimal assumes perfect sensing; remove the error model");
                }
            }
            Scheme::FullMyopic => {
                if channels.len() > 8 {
                    bail!("full-myopic supports at most 8 channels");
                }
            }
            Scheme::LimitedAccess => {
                if errors.iter().any(|e| !e.is_perfect()) {
                    bail!("limited-access assumes perfect sensing; remove the error model");
                }
                if t_s <= 0.0 {
                    bail!("limited-access needs a positive sensing time");
                }
            }
            Scheme::LimitedSensing | Scheme::SinglePeriodBaseline => {}
        }
        if self.access_duration_cap.is_some() && self.scheme != Scheme::LimitedAccess {
            bail!("access_duration_cap only applies to scheme = \"limited-access\"");
        }
        if let Some(cap) = self.access_duration_cap {
            if !cap.is_finite() || cap <= t_s {
                bail!("access_duration_cap must exceed the sensing time, got {cap}");
            }
        }
        if let Some(sim) = &self.sim {
            if let Some(w) = sim.warmup {
                if !w.is_finite() || w < 0.0 || w >= sim.horizon {
                    bail!("sim.warmup must lie in [0, horizon), got {w}");
                }
            }
        }

        Ok(Resolved {
            name: self.name.clone(),
            scheme: self.scheme,
            channels,
            errors,
            t_s,
            i_max,
            grid,
            sim: self.sim,
            error_sweep,
            access_duration_cap: self.access_duration_cap,
        })
    }

    fn build_grid(&self, channels: &[ChannelParams], t_s: f64) -> Result<GridSpec> {
        let base = match self.scheme {
            Scheme::FullOptimal => GridSpec::default_joint(channels, t_s)?,
            _ => GridSpec::default_dual(channels, t_s)?,
        };
        let Some(gc) = &self.grid else { return Ok(base) };
        let t_min = gc.t_min.unwrap_or(base.t_min);
        let t_max = gc.t_max.unwrap_or(base.t_max);
        // A re-spanned grid keeps its point count unless the step is pinned.
        let step = gc
            .step
            .unwrap_or_else(|| base.step * (t_max - t_min) / (base.t_max - base.t_min));
        Ok(GridSpec::new(
            t_min,
            t_max,
            step,
            gc.refine_levels.unwrap_or(base.refine_levels),
            gc.refine_shrink.unwrap_or(base.refine_shrink),
        )?)
    }
}

// ---------------------------------------------------------------------------
