//! Constrained search for dual-period sensing schedules.
//!
//! The limited-sensing scheme assigns each channel a pair of inter-sensing
//! gaps (after-free, after-busy). The aggregate throughput factorizes into
//! per-channel terms coupled only through the total sensing load, so block
//! coordinate descent over channels is exact at each step: sweeping one
//! channel's `(t_free, t_busy)` grid while the others are frozen maximizes
//! the true network objective along that block. Each channel's interference
//! constraint involves only its own policy, which keeps feasibility local to
//! the sweep.
//!
//! The search runs on a coarse lattice first and then re-centers
//! progressively finer lattices on the incumbent. An incumbent is only ever
//! replaced by a *feasible* candidate that scores at least as well, and an
//! infeasible starting point is given no such protection — otherwise a
//! high-scoring infeasible start could shadow every feasible candidate and
//! wedge the search.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::{self, channel_eval_fast, ChannelMetrics, DualPeriodPolicy};
use crate::renewal::ChannelParams;
use crate::sensing::SensingErrorModel;

/// Feasibility slack applied to interference comparisons so that lattice
/// points sitting exactly on the budget survive floating-point noise.
const FEAS_EPS: f64 = 1e-12;

/// Relative tolerance on the objective between coordinate-descent rounds.
const CONVERGENCE_TOL: f64 = 1e-6;

/// Maximum coordinate-descent rounds per refinement level.
const MAX_ROUNDS: usize = 50;

// ---------------------------------------------------------------------------
// Grid specification
// ---------------------------------------------------------------------------

/// Lattice specification for policy searches, with multiplicative
/// refinement: after each level the step shrinks by `refine_shrink` and the
/// lattice is re-centered on the incumbent with a window of ±2 previous
/// steps per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub refine_levels: usize,
    pub refine_shrink: f64,
}

impl GridSpec {
    pub fn new(
        t_min: f64,
        t_max: f64,
        step: f64,
        refine_levels: usize,
        refine_shrink: f64,
    ) -> Result<Self> {
        if !t_min.is_finite() || t_min <= 0.0 || !t_max.is_finite() || t_max < t_min {
            return Err(Error::invalid(format!(
                "grid needs 0 < t_min <= t_max, got [{t_min}, {t_max}]"
            )));
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::invalid(format!("grid step must be positive, got {step}")));
        }
        if !(0.0..1.0).contains(&refine_shrink) || refine_shrink == 0.0 {
            return Err(Error::invalid(format!(
                "refine_shrink must lie in (0, 1), got {refine_shrink}"
            )));
        }
        Ok(Self { t_min, t_max, step, refine_levels, refine_shrink })
    }

    /// Default lattice for dual-period searches: spans from the sensing time
    /// to twenty mixing times of the slowest channel, 400 coarse steps,
    /// three refinement levels shrinking 5x each.
    pub fn default_dual(chs: &[ChannelParams], t_s: f64) -> Result<Self> {
        let min_rate_sum =
            chs.iter().map(ChannelParams::rate_sum).fold(f64::INFINITY, f64::min);
        if !min_rate_sum.is_finite() {
            return Err(Error::invalid("cannot build a default grid without channels"));
        }
        let t_max = 20.0 / min_rate_sum;
        let t_min = if t_s > 0.0 { t_s } else { 1e-4 * t_max };
        if t_min >= t_max {
            return Err(Error::invalid(format!(
                "sensing time {t_s} leaves no room below the default horizon {t_max}"
            )));
        }
        Self::new(t_min, t_max, (t_max - t_min) / 400.0, 3, 0.2)
    }

    /// Default lattice for the three-axis outcome-table search: 40 points
    /// per axis, three refinement levels shrinking 4x each.
    pub fn default_joint(chs: &[ChannelParams], t_s: f64) -> Result<Self> {
        let base = Self::default_dual(chs, t_s)?;
        Self::new(base.t_min, base.t_max, (base.t_max - base.t_min) / 39.0, 3, 0.25)
    }

    /// Lattice points from `lo` to `hi` at `step`, clamped to end exactly at
    /// `hi`. Collapses to a single point when the range is empty.
    pub(crate) fn axis_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        if hi <= lo {
            return vec![lo];
        }
        let n = (((hi - lo) / step).ceil() as usize).max(1);
        (0..=n).map(|k| (lo + k as f64 * step).min(hi)).collect()
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Outcome of a dual-period (or single-period) schedule search.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub policies: Vec<DualPeriodPolicy>,
    /// Aggregate network throughput at the returned policies.
    pub objective: f64,
    pub per_channel: Vec<ChannelMetrics>,
    /// Whether each channel's interference sits essentially on its budget.
    pub constraint_active: Vec<bool>,
    /// False when some refinement level exhausted its round budget before
    /// the objective stabilized.
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// Shared search machinery
// ---------------------------------------------------------------------------

struct Problem<'a> {
    chs: &'a [ChannelParams],
    errs: &'a [SensingErrorModel],
    t_s: f64,
    i_max: &'a [f64],
    grid: GridSpec,
}

impl Problem<'_> {
    fn validate(
        chs: &[ChannelParams],
        errs: &[SensingErrorModel],
        t_s: f64,
        i_max: &[f64],
        grid: &GridSpec,
    ) -> Result<()> {
        if chs.is_empty() {
            return Err(Error::invalid("at least one channel is required"));
        }
        if errs.len() != chs.len() || i_max.len() != chs.len() {
            return Err(Error::invalid(format!(
                "got {} channels, {} error models, {} interference budgets; \
                 lengths must match",
                chs.len(),
                errs.len(),
                i_max.len()
            )));
        }
        if !t_s.is_finite() || t_s < 0.0 {
            return Err(Error::invalid(format!("t_s must be non-negative, got {t_s}")));
        }
        for (k, (ch, &im)) in chs.iter().zip(i_max).enumerate() {
            let u = ch.utilization();
            if !im.is_finite() || im <= 0.0 || im > u {
                return Err(Error::invalid(format!(
                    "i_max for channel {k} must lie in (0, u] = (0, {u}], got {im}"
                )));
            }
        }
        if grid.t_min < t_s {
            return Err(Error::invalid(format!(
                "grid t_min {} is below the sensing time {t_s}",
                grid.t_min
            )));
        }
        Ok(())
    }

    /// Network objective at full precision: `R = (Σ base_j)(1 - Σ t_s/μ_j)`.
    fn network_r(&self, pols: &[(f64, f64)]) -> f64 {
        let mut base_sum = 0.0;
        let mut load = 0.0;
        for ((ch, err), &(tf, tb)) in self.chs.iter().zip(self.errs).zip(pols) {
            let ev = channel_eval_fast(ch, err, tf, tb);
            base_sum += ev.base;
            load += self.t_s / ev.mu;
        }
        base_sum * (1.0 - load)
    }

    /// Best feasible `(t_free, t_busy)` for channel `i` over the given axes,
    /// holding the other channels fixed. Returns `None` when no lattice
    /// point satisfies the interference budget. Ties prefer the smaller
    /// `t_free`, then the smaller `t_busy`.
    fn sweep_channel(
        &self,
        i: usize,
        tf_axis: &[f64],
        tb_axis: &[f64],
        pols: &[(f64, f64)],
    ) -> Option<((f64, f64), f64)> {
        let (ch, err) = (&self.chs[i], &self.errs[i]);
        let budget = self.i_max[i] + FEAS_EPS;
        let mut q_other = 0.0;
        let mut load_other = 0.0;
        for (j, ((c, e), &(tf, tb))) in self.chs.iter().zip(self.errs).zip(pols).enumerate() {
            if j != i {
                let ev = channel_eval_fast(c, e, tf, tb);
                q_other += ev.base;
                load_other += self.t_s / ev.mu;
            }
        }
        let objective = |tf: f64, tb: f64| -> Option<f64> {
            let ev = channel_eval_fast(ch, err, tf, tb);
            (ev.intf <= budget)
                .then(|| (ev.base + q_other) * (1.0 - load_other - self.t_s / ev.mu))
        };
        let per_tf: Vec<Option<(f64, f64)>> = tf_axis
            .par_iter()
            .map(|&tf| {
                let mut best: Option<(f64, f64)> = None;
                for &tb in tb_axis {
                    if let Some(obj) = objective(tf, tb) {
                        if best.is_none_or(|(b, _)| obj > b) {
                            best = Some((obj, tb));
                        }
                    }
                }
                best
            })
            .collect();
        let mut best: Option<((f64, f64), f64)> = None;
        for (&tf, entry) in tf_axis.iter().zip(&per_tf) {
            if let &Some((obj, tb)) = entry {
                if best.is_none_or(|(_, b)| obj > b) {
                    best = Some(((tf, tb), obj));
                }
            }
        }
        best
    }

    /// Objective of channel `i`'s current policy within the frozen network,
    /// or `None` when that policy violates the interference budget.
    fn incumbent_objective(&self, i: usize, pols: &[(f64, f64)]) -> Option<f64> {
        let mut q_other = 0.0;
        let mut load_other = 0.0;
        for (j, ((c, e), &(tf, tb))) in self.chs.iter().zip(self.errs).zip(pols).enumerate() {
            if j != i {
                let ev = channel_eval_fast(c, e, tf, tb);
                q_other += ev.base;
                load_other += self.t_s / ev.mu;
            }
        }
        let (tf, tb) = pols[i];
        let ev = channel_eval_fast(&self.chs[i], &self.errs[i], tf, tb);
        (ev.intf <= self.i_max[i] + FEAS_EPS)
            .then(|| (ev.base + q_other) * (1.0 - load_other - self.t_s / ev.mu))
    }

    fn finish(&self, pols: &[(f64, f64)], converged: bool) -> Result<OptimizationResult> {
        let policies: Vec<DualPeriodPolicy> = pols
            .iter()
            .map(|&(tf, tb)| DualPeriodPolicy::new(tf, tb))
            .collect::<Result<_>>()?;
        let per_channel = markov::network_metrics(self.chs, self.errs, &policies, self.t_s)?;
        let objective = per_channel.iter().map(|m| m.throughput).sum();
        let constraint_active = per_channel
            .iter()
            .zip(self.i_max)
            .map(|(m, &im)| m.interference_fraction >= 0.999 * im)
            .collect();
        Ok(OptimizationResult {
            policies,
            objective,
            per_channel,
            constraint_active,
            converged,
        })
    }

    /// Multi-level refine loop shared by the dual- and single-period
    /// searches. `diagonal` locks `t_busy = t_free`.
    fn run(&self, diagonal: bool) -> Result<OptimizationResult> {
        let n = self.chs.len();
        let full_axis = GridSpec::axis_points(self.grid.t_min, self.grid.t_max, self.grid.step);
        let mut pols = vec![(self.grid.t_max, self.grid.t_max); n];
        let mut converged = true;
        let mut step = self.grid.step;

        for level in 0..=self.grid.refine_levels {
            let axes: Vec<Vec<f64>> = if level == 0 {
                vec![full_axis.clone(); n]
            } else {
                let window = 2.0 * step;
                step *= self.grid.refine_shrink;
                (0..n)
                    .map(|i| {
                        // For the diagonal search both gaps are equal, so one
                        // axis per channel suffices in either mode.
                        let center = pols[i].0;
                        let lo = (center - window).max(self.grid.t_min);
                        let hi = (center + window).min(self.grid.t_max);
                        GridSpec::axis_points(lo, hi, step)
                    })
                    .collect()
            };
            let tb_axes: Vec<Vec<f64>> = if diagonal {
                Vec::new()
            } else if level == 0 {
                vec![full_axis.clone(); n]
            } else {
                let window = 2.0 * step / self.grid.refine_shrink;
                (0..n)
                    .map(|i| {
                        let center = pols[i].1;
                        let lo = (center - window).max(self.grid.t_min);
                        let hi = (center + window).min(self.grid.t_max);
                        GridSpec::axis_points(lo, hi, step)
                    })
                    .collect()
            };

            let mut r_prev = self.network_r(&pols);
            let mut level_converged = false;
            for _ in 0..MAX_ROUNDS {
                for i in 0..n {
                    let swept = if diagonal {
                        self.sweep_diagonal(i, &axes[i], &pols)
                    } else {
                        self.sweep_channel(i, &axes[i], &tb_axes[i], &pols)
                    };
                    let cur = self.incumbent_objective(i, &pols);
                    match (swept, cur) {
                        (Some((cand, obj)), Some(cur_obj)) => {
                            if obj >= cur_obj {
                                pols[i] = cand;
                            }
                        }
                        (Some((cand, _)), None) => pols[i] = cand,
                        (None, Some(_)) => {} // keep the feasible incumbent
                        (None, None) => {
                            return Err(Error::Infeasible(format!(
                                "no lattice point satisfies the interference \
                                 budget {} for channel {i}",
                                self.i_max[i]
                            )));
                        }
                    }
                }
                let r_now = self.network_r(&pols);
                if (r_now - r_prev).abs() <= CONVERGENCE_TOL * r_now.abs().max(1.0) {
                    level_converged = true;
                    break;
                }
                r_prev = r_now;
            }
            converged &= level_converged;
        }
        self.finish(&pols, converged)
    }

    /// Single-period variant of [`Self::sweep_channel`]: one axis with
    /// `t_busy = t_free`.
    fn sweep_diagonal(
        &self,
        i: usize,
        axis: &[f64],
        pols: &[(f64, f64)],
    ) -> Option<((f64, f64), f64)> {
        let (ch, err) = (&self.chs[i], &self.errs[i]);
        let budget = self.i_max[i] + FEAS_EPS;
        let mut q_other = 0.0;
        let mut load_other = 0.0;
        for (j, ((c, e), &(tf, tb))) in self.chs.iter().zip(self.errs).zip(pols).enumerate() {
            if j != i {
                let ev = channel_eval_fast(c, e, tf, tb);
                q_other += ev.base;
                load_other += self.t_s / ev.mu;
            }
        }
        let mut best: Option<((f64, f64), f64)> = None;
        for &t in axis {
            let ev = channel_eval_fast(ch, err, t, t);
            if ev.intf <= budget {
                let obj = (ev.base + q_other) * (1.0 - load_other - self.t_s / ev.mu);
                if best.is_none_or(|(_, b)| obj > b) {
                    best = Some(((t, t), obj));
                }
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Search for the dual-period schedule maximizing aggregate throughput
/// subject to per-channel interference budgets `i_max` (fractions of time,
/// each in `(0, u]`).
pub fn optimize_dual_period(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    t_s: f64,
    i_max: &[f64],
    grid: &GridSpec,
) -> Result<OptimizationResult> {
    Problem::validate(chs, errs, t_s, i_max, grid)?;
    Problem { chs, errs, t_s, i_max, grid: *grid }.run(false)
}

/// Baseline search over outcome-independent schedules (`t_busy = t_free`).
pub fn optimize_single_period(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    t_s: f64,
    i_max: &[f64],
    grid: &GridSpec,
) -> Result<OptimizationResult> {
    Problem::validate(chs, errs, t_s, i_max, grid)?;
    Problem { chs, errs, t_s, i_max, grid: *grid }.run(true)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ch(l_free: f64, l_busy: f64) -> ChannelParams {
        ChannelParams::new(l_free, l_busy).unwrap()
    }

    /// Two fast channels and a deliberately coarse grid keep each search in
    /// the few-millisecond range.
    fn small_problem() -> (Vec<ChannelParams>, Vec<SensingErrorModel>, f64, Vec<f64>, GridSpec) {
        let chs = vec![ch(0.2, 1.0), ch(0.17, 0.9)];
        let errs = vec![SensingErrorModel::perfect(); 2];
        let t_s = 0.01;
        let i_max: Vec<f64> = chs.iter().map(|c| 0.25 * c.utilization()).collect();
        let base = GridSpec::default_dual(&chs, t_s).unwrap();
        let grid =
            GridSpec::new(base.t_min, base.t_max, (base.t_max - base.t_min) / 80.0, 2, 0.2)
                .unwrap();
        (chs, errs, t_s, i_max, grid)
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(0.0, 1.0, 0.1, 1, 0.5).is_err());
        assert!(GridSpec::new(2.0, 1.0, 0.1, 1, 0.5).is_err());
        assert!(GridSpec::new(0.1, 1.0, 0.0, 1, 0.5).is_err());
        assert!(GridSpec::new(0.1, 1.0, 0.1, 1, 1.0).is_err());
        assert!(GridSpec::new(0.1, 1.0, 0.1, 1, 0.0).is_err());
        let g = GridSpec::default_dual(&[ch(0.11, 0.6)], 0.01).unwrap();
        assert_abs_diff_eq!(g.t_max, 20.0 / 0.71, epsilon = 1e-12);
        assert_abs_diff_eq!(g.t_min, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn axis_points_cover_the_range() {
        let pts = GridSpec::axis_points(1.0, 2.0, 0.3);
        assert_abs_diff_eq!(pts[0], 1.0);
        assert_abs_diff_eq!(*pts.last().unwrap(), 2.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0] - 1e-15));
        assert_eq!(GridSpec::axis_points(1.0, 1.0, 0.3), vec![1.0]);
    }

    #[test]
    fn optimum_is_feasible_and_beats_the_single_period_baseline() {
        let (chs, errs, t_s, i_max, grid) = small_problem();
        let dual = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
        let single = optimize_single_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
        assert!(dual.converged && single.converged);
        for (m, &im) in dual.per_channel.iter().zip(&i_max) {
            assert!(m.interference_fraction <= im + 1e-9);
        }
        assert!(
            dual.objective >= single.objective - 1e-12,
            "dual {} < single {}",
            dual.objective,
            single.objective
        );
        for p in &single.policies {
            assert_eq!(p.t_free(), p.t_busy());
        }
        // The tight budget binds on every channel at the optimum.
        assert!(dual.constraint_active.iter().all(|&a| a));
    }

    #[test]
    fn incumbent_is_a_coordinatewise_maximum() {
        let (chs, errs, t_s, i_max, grid) = small_problem();
        let res = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
        let pols: Vec<(f64, f64)> =
            res.policies.iter().map(|p| (p.t_free(), p.t_busy())).collect();
        let problem = Problem { chs: &chs, errs: &errs, t_s, i_max: &i_max, grid };
        let axis = GridSpec::axis_points(grid.t_min, grid.t_max, grid.step);
        for i in 0..chs.len() {
            let cur = problem.incumbent_objective(i, &pols).expect("optimum feasible");
            if let Some((_, best)) = problem.sweep_channel(i, &axis, &axis, &pols) {
                assert!(
                    best <= cur + 1e-9,
                    "channel {i}: coarse lattice found {best} > incumbent {cur}"
                );
            }
        }
    }

    #[test]
    fn throughput_grows_as_the_budget_relaxes() {
        let (chs, errs, t_s, _, grid) = small_problem();
        let mut prev = 0.0;
        for frac in [0.1, 0.25, 0.5, 0.75] {
            let i_max: Vec<f64> = chs.iter().map(|c| frac * c.utilization()).collect();
            let res = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
            assert!(
                res.objective >= prev - 1e-9,
                "R went from {prev} to {} when relaxing to {frac}u",
                res.objective
            );
            prev = res.objective;
        }
    }

    #[test]
    fn halving_the_step_never_hurts() {
        let (chs, errs, t_s, i_max, grid) = small_problem();
        let coarse = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
        let fine = GridSpec::new(
            grid.t_min,
            grid.t_max,
            grid.step / 2.0,
            grid.refine_levels,
            grid.refine_shrink,
        )
        .unwrap();
        let refined = optimize_dual_period(&chs, &errs, t_s, &i_max, &fine).unwrap();
        assert!(
            refined.objective >= coarse.objective - 1e-9,
            "halving the step lost throughput: {} -> {}",
            coarse.objective,
            refined.objective
        );
    }

    #[test]
    fn sensing_errors_cost_throughput() {
        let (chs, _, t_s, i_max, grid) = small_problem();
        let mut prev = f64::INFINITY;
        for (p_fa, p_md) in [(0.0, 0.0), (0.2, 0.1), (0.4, 0.3)] {
            let errs = vec![SensingErrorModel::new(p_fa, p_md).unwrap(); 2];
            let res = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
            assert!(
                res.objective < prev,
                "objective should fall strictly as errors grow"
            );
            prev = res.objective;
        }
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let (chs, errs, t_s, i_max, grid) = small_problem();
        let a = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
        let b = optimize_dual_period(&chs, &errs, t_s, &i_max, &grid).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        for (pa, pb) in a.policies.iter().zip(&b.policies) {
            assert_eq!(pa.t_free().to_bits(), pb.t_free().to_bits());
            assert_eq!(pa.t_busy().to_bits(), pb.t_busy().to_bits());
        }
    }

    #[test]
    fn validation_catches_bad_inputs() {
        let (chs, errs, t_s, i_max, grid) = small_problem();
        assert!(optimize_dual_period(&[], &[], t_s, &[], &grid).is_err());
        assert!(optimize_dual_period(&chs, &errs[..1], t_s, &i_max, &grid).is_err());
        let too_big = vec![0.9; 2]; // above u for both channels
        assert!(optimize_dual_period(&chs, &errs, t_s, &too_big, &grid).is_err());
        let zero = vec![0.0; 2];
        assert!(optimize_dual_period(&chs, &errs, t_s, &zero, &grid).is_err());
        // Grid floor below the sensing time.
        let low = GridSpec::new(0.001, 1.0, 0.01, 0, 0.5).unwrap();
        assert!(optimize_dual_period(&chs, &errs, t_s, &i_max, &low).is_err());
    }

    #[test]
    fn reports_infeasible_when_the_lattice_has_no_valid_point() {
        // Gaps pinned near 50 time units sense so rarely that interference
        // far exceeds a 5%-of-u budget at every lattice point.
        let chs = vec![ch(1.0, 1.0)];
        let errs = vec![SensingErrorModel::perfect()];
        let i_max = vec![0.05 * 0.5];
        let grid = GridSpec::new(50.0, 51.0, 0.5, 0, 0.5).unwrap();
        match optimize_dual_period(&chs, &errs, 0.01, &i_max, &grid) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }
}
