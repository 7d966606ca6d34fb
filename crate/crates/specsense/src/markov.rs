//! Embedded Markov-chain evaluation of sensing schedules.
//!
//! Sensing instants form an embedded chain: the state observed (and possibly
//! misread) at one instant determines the gap to the next. For the
//! dual-period schedule on a single channel the chain lives on four states
//! `(S, S̄)` — actual occupancy crossed with sensed occupancy — and for the
//! joint schedule on two channels it lives on the four sensed outcomes. Both
//! chains yield long-run time fractions for throughput, interference on the
//! primary, sensing overhead, and unexplored (wasted) free time.
//!
//! State encoding for the four-state chain: index `2·S + S̄`, where `S` is
//! the true state at the sensing instant (1 = free) and `S̄` the sensed one.
//! So index 0 = busy seen busy, 1 = busy seen free (misdetection),
//! 2 = free seen busy (false alarm), 3 = free seen free.

use crate::error::{Error, Result};
use crate::renewal::ChannelParams;
use crate::sensing::SensingErrorModel;

// ---------------------------------------------------------------------------
// Policies and distributions
// ---------------------------------------------------------------------------

/// Outcome-dependent inter-sensing gaps: wait `t_free` after sensing a
/// channel free, `t_busy` after sensing it busy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPeriodPolicy {
    t_free: f64,
    t_busy: f64,
}

impl DualPeriodPolicy {
    pub fn new(t_free: f64, t_busy: f64) -> Result<Self> {
        for (name, v) in [("t_free", t_free), ("t_busy", t_busy)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { t_free, t_busy })
    }

    /// A single-period schedule ignores the sensing outcome.
    pub fn single(t: f64) -> Result<Self> {
        Self::new(t, t)
    }

    pub fn t_free(&self) -> f64 {
        self.t_free
    }

    pub fn t_busy(&self) -> f64 {
        self.t_busy
    }

    /// Both gaps must leave room for the sensing event itself.
    pub fn check_floor(&self, t_s: f64) -> Result<()> {
        if self.t_free < t_s || self.t_busy < t_s {
            return Err(Error::invalid(format!(
                "inter-sensing gaps ({}, {}) must not be shorter than the \
                 sensing time {t_s}",
                self.t_free, self.t_busy
            )));
        }
        Ok(())
    }
}

/// Stationary distribution of the four-state chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourStateDistribution {
    /// Busy, sensed busy.
    pub pi_00: f64,
    /// Busy, sensed free (misdetection).
    pub pi_01: f64,
    /// Free, sensed busy (false alarm).
    pub pi_10: f64,
    /// Free, sensed free.
    pub pi_11: f64,
}

impl FourStateDistribution {
    pub fn from_slice(pi: &[f64]) -> Result<Self> {
        if pi.len() != 4 {
            return Err(Error::invalid(format!(
                "four-state distribution needs 4 components, got {}",
                pi.len()
            )));
        }
        let sum: f64 = pi.iter().sum();
        if pi.iter().any(|&x| !(0.0..=1.0 + 1e-10).contains(&x)) || (sum - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "four-state components must be probabilities summing to 1, got {pi:?}"
            )));
        }
        Ok(Self { pi_00: pi[0], pi_01: pi[1], pi_10: pi[2], pi_11: pi[3] })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.pi_00, self.pi_01, self.pi_10, self.pi_11]
    }

    /// Probability the channel is actually free at a sensing instant.
    pub fn prob_free(&self) -> f64 {
        self.pi_10 + self.pi_11
    }

    /// Probability a sensing instant reads the channel as free.
    pub fn prob_sensed_free(&self) -> f64 {
        self.pi_01 + self.pi_11
    }
}

/// Long-run per-channel time fractions under a dual-period schedule.
///
/// All fractions are of total wall-clock time. `throughput` already accounts
/// for the transmission pauses the secondary user takes while sensing (its
/// own sensing events and every other channel's); `interference_fraction` is
/// time spent believing a busy channel free — transmission pauses during
/// such stretches do not help the primary, so they are not deducted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    /// Mean gap between consecutive sensing events on this channel.
    pub mean_cycle: f64,
    /// Fraction of time transmitting on a genuinely free channel.
    pub throughput: f64,
    /// Fraction of time the channel is busy while believed free.
    pub interference_fraction: f64,
    /// Fraction of time the channel is free and believed free but the
    /// secondary user is paused for sensing (its own or another channel's).
    pub overhead_fraction: f64,
    /// Fraction of time the channel is free while believed busy.
    pub unexplored_fraction: f64,
}

/// Sensing-outcome-indexed schedule for the joint (full-sensing) scheme:
/// one inter-sensing gap per outcome vector of the `n` monitored channels.
///
/// Outcomes are indexed with channel 0 as the most significant bit, a set
/// bit meaning "sensed free"; a table for two channels therefore stores
/// `[T(busy,busy), T(busy,free), T(free,busy), T(free,free)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDurationTable {
    n_channels: usize,
    durations: Vec<f64>,
}

impl OutcomeDurationTable {
    /// Tables are capped at 8 channels (256 outcomes).
    pub const MAX_CHANNELS: usize = 8;

    pub fn new(n_channels: usize, durations: Vec<f64>) -> Result<Self> {
        if n_channels == 0 || n_channels > Self::MAX_CHANNELS {
            return Err(Error::invalid(format!(
                "outcome table supports 1..={} channels, got {n_channels}",
                Self::MAX_CHANNELS
            )));
        }
        if durations.len() != 1 << n_channels {
            return Err(Error::invalid(format!(
                "outcome table for {n_channels} channels needs {} durations, got {}",
                1 << n_channels,
                durations.len()
            )));
        }
        if durations.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::invalid("outcome durations must be positive and finite"));
        }
        Ok(Self { n_channels, durations })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_outcomes(&self) -> usize {
        self.durations.len()
    }

    /// Index of an outcome vector (`true` = sensed free).
    pub fn index_of(&self, outcome: &[bool]) -> Result<usize> {
        if outcome.len() != self.n_channels {
            return Err(Error::invalid(format!(
                "outcome has {} entries, table covers {} channels",
                outcome.len(),
                self.n_channels
            )));
        }
        Ok(outcome.iter().fold(0, |acc, &free| (acc << 1) | usize::from(free)))
    }

    pub fn duration(&self, outcome: &[bool]) -> Result<f64> {
        Ok(self.durations[self.index_of(outcome)?])
    }

    pub fn duration_by_index(&self, index: usize) -> f64 {
        self.durations[index]
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn min_duration(&self) -> f64 {
        self.durations.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Every gap must leave room for the sensing event itself.
    pub fn check_floor(&self, t_s: f64) -> Result<()> {
        if self.min_duration() < t_s {
            return Err(Error::invalid(format!(
                "outcome durations must not be shorter than the sensing time {t_s}"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transition matrices and stationary distributions
// ---------------------------------------------------------------------------

/// One-step transition matrix of the four-state chain `(S, S̄)`.
///
/// Row `2·S + S̄` uses the gap selected by the sensed state (`t_busy` when
/// `S̄ = 0`, `t_free` when `S̄ = 1`) and the occupancy transition selected by
/// the true state; the sensed component of the next state is the true next
/// state passed through the error model.
pub fn four_state_matrix(
    ch: &ChannelParams,
    err: &SensingErrorModel,
    pol: &DualPeriodPolicy,
) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (row, out) in m.iter_mut().enumerate() {
        let actually_free = row & 2 != 0;
        let sensed_free = row & 1 != 0;
        let gap = if sensed_free { pol.t_free() } else { pol.t_busy() };
        let p_free = if actually_free { ch.p11(gap) } else { ch.p01(gap) };
        out[0] = (1.0 - p_free) * (1.0 - err.p_md());
        out[1] = (1.0 - p_free) * err.p_md();
        out[2] = p_free * err.p_fa();
        out[3] = p_free * (1.0 - err.p_fa());
    }
    m
}

/// Stationary distribution of a row-stochastic matrix (size ≤ 16).
///
/// Solves `π (M - I) = 0, Σπ = 1` by Gaussian elimination with partial
/// pivoting, then verifies `‖πM - π‖∞ ≤ 1e-10`. Chains without a unique
/// stationary distribution surface as [`Error::DegenerateChain`].
pub fn steady_state<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 || n > 16 {
        return Err(Error::invalid(format!("matrix size must be 1..=16, got {n}")));
    }
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(Error::invalid(format!(
                "row {i} has {} entries in a {n}-state matrix",
                row.len()
            )));
        }
        let mut sum = 0.0;
        for &x in row {
            if !x.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&x) {
                return Err(Error::invalid(format!("row {i} has non-probability entry {x}")));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("row {i} sums to {sum}, expected 1")));
        }
    }

    // Build (Mᵀ - I) with the final balance equation replaced by Σπ = 1.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = rows[j].as_ref()[i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))
            .expect("non-empty pivot range");
        if a[pivot_row * n + col].abs() < 1e-12 {
            return Err(Error::DegenerateChain);
        }
        if pivot_row != col {
            for c in 0..n {
                a.swap(col * n + c, pivot_row * n + c);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / pivot;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut pi = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row * n + c] * pi[c];
        }
        pi[row] = s / a[row * n + row];
    }

    for x in &mut pi {
        if *x < 0.0 {
            if *x < -1e-9 {
                return Err(Error::NumericFailure(format!(
                    "stationary solve produced component {x}"
                )));
            }
            *x = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > 1e-6 {
        return Err(Error::NumericFailure(format!(
            "stationary components sum to {total}"
        )));
    }
    for x in &mut pi {
        *x /= total;
    }

    let mut residual = 0.0f64;
    for j in 0..n {
        let mut pj = 0.0;
        for i in 0..n {
            pj += pi[i] * rows[i].as_ref()[j];
        }
        residual = residual.max((pj - pi[j]).abs());
    }
    if residual > 1e-10 {
        return Err(Error::NumericFailure(format!(
            "stationary residual {residual:.3e} exceeds 1e-10"
        )));
    }
    Ok(pi)
}

/// Stationary distribution of the four-state chain for one channel.
pub fn four_state_stationary(
    ch: &ChannelParams,
    err: &SensingErrorModel,
    pol: &DualPeriodPolicy,
) -> Result<FourStateDistribution> {
    let pi = steady_state(&four_state_matrix(ch, err, pol))?;
    FourStateDistribution::from_slice(&pi)
}

// ---------------------------------------------------------------------------
// Per-channel and network metrics
// ---------------------------------------------------------------------------

/// Minimal per-policy summary used by optimizer hot loops: mean sensing
/// cycle, fraction of time free-and-believed-free (`base`), and the
/// interference fraction. Uses the closed-form stationary distribution; a
/// unit test pins it against the generic solver.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FastEval {
    pub mu: f64,
    pub base: f64,
    pub intf: f64,
}

#[inline]
pub(crate) fn channel_eval_fast(
    ch: &ChannelParams,
    err: &SensingErrorModel,
    t_free: f64,
    t_busy: f64,
) -> FastEval {
    let p_fa = err.p_fa();
    let p_md = err.p_md();
    let num = (1.0 - p_md) * ch.p01(t_busy) + p_md * ch.p01(t_free);
    let den = 1.0 - p_fa * ch.p11(t_busy) - (1.0 - p_fa) * ch.p11(t_free) + num;
    let prob_free = num / den;
    let pi_01 = (1.0 - prob_free) * p_md;
    let pi_11 = prob_free * (1.0 - p_fa);
    let sensed_free = pi_01 + pi_11;
    let mu = (1.0 - sensed_free) * t_busy + sensed_free * t_free;
    let d1f = ch.d1(t_free);
    let d0f = ch.d0(t_free);
    let base = (pi_11 * d1f + pi_01 * d0f) / mu;
    let intf = (pi_11 * (t_free - d1f) + pi_01 * (t_free - d0f)) / mu;
    FastEval { mu, base, intf }
}

/// Long-run metrics for one channel under a dual-period schedule.
///
/// `overhead_others` is the sensing load imposed by the *other* channels,
/// `Σ_{j≠i} t_s/μ_j`; pass 0 for a channel sensed in isolation. The caller
/// normally obtains it through [`network_metrics`], which wires each
/// channel's load into every other channel's evaluation.
pub fn channel_metrics(
    ch: &ChannelParams,
    err: &SensingErrorModel,
    pol: &DualPeriodPolicy,
    t_s: f64,
    overhead_others: f64,
) -> Result<ChannelMetrics> {
    if !t_s.is_finite() || t_s < 0.0 {
        return Err(Error::invalid(format!("t_s must be non-negative, got {t_s}")));
    }
    if !overhead_others.is_finite() || overhead_others < 0.0 {
        return Err(Error::invalid(format!(
            "overhead_others must be non-negative, got {overhead_others}"
        )));
    }
    pol.check_floor(t_s)?;
    let pi = four_state_stationary(ch, err, pol)?.as_array();
    let (tf, tb) = (pol.t_free(), pol.t_busy());
    let mu = (pi[0] + pi[2]) * tb + (pi[1] + pi[3]) * tf;
    let load = overhead_others + t_s / mu;
    if load >= 1.0 {
        return Err(Error::Infeasible(format!(
            "total sensing load {load:.3} leaves no time to transmit"
        )));
    }
    let d1f = ch.d1(tf);
    let d0f = ch.d0(tf);
    let base = (pi[3] * d1f + pi[1] * d0f) / mu;
    // Free-and-believed-free time lost to pauses: pauses for this channel's
    // own sensing overlap the start of each believed-free stretch (worth
    // δ(t_s) of free time), while other channels' pauses land uniformly.
    let own_window = (pi[3] * ch.d1(t_s) + pi[1] * ch.d0(t_s)) / mu;
    Ok(ChannelMetrics {
        mean_cycle: mu,
        throughput: base * (1.0 - load),
        interference_fraction: (pi[3] * (tf - d1f) + pi[1] * (tf - d0f)) / mu,
        overhead_fraction: own_window + base * overhead_others,
        unexplored_fraction: (pi[0] * ch.d0(tb) + pi[2] * ch.d1(tb)) / mu,
    })
}

fn check_network_inputs(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    pols: &[DualPeriodPolicy],
) -> Result<()> {
    if chs.is_empty() {
        return Err(Error::invalid("at least one channel is required"));
    }
    if errs.len() != chs.len() || pols.len() != chs.len() {
        return Err(Error::invalid(format!(
            "got {} channels, {} error models, {} policies; lengths must match",
            chs.len(),
            errs.len(),
            pols.len()
        )));
    }
    Ok(())
}

/// Metrics for every channel of a network sensed by one secondary user with
/// a single detector, accounting for the cross-channel sensing load.
pub fn network_metrics(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    pols: &[DualPeriodPolicy],
    t_s: f64,
) -> Result<Vec<ChannelMetrics>> {
    check_network_inputs(chs, errs, pols)?;
    let loads: Vec<f64> = chs
        .iter()
        .zip(errs)
        .zip(pols)
        .map(|((ch, err), pol)| {
            pol.check_floor(t_s)?;
            Ok(t_s / channel_eval_fast(ch, err, pol.t_free(), pol.t_busy()).mu)
        })
        .collect::<Result<_>>()?;
    let total_load: f64 = loads.iter().sum();
    chs.iter()
        .zip(errs)
        .zip(pols)
        .zip(&loads)
        .map(|(((ch, err), pol), load)| {
            channel_metrics(ch, err, pol, t_s, total_load - load)
        })
        .collect()
}

/// Aggregate network throughput: the sum of per-channel throughput
/// fractions, each discounted by the network-wide sensing load.
pub fn network_throughput(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    pols: &[DualPeriodPolicy],
    t_s: f64,
) -> Result<f64> {
    Ok(network_metrics(chs, errs, pols, t_s)?.iter().map(|m| m.throughput).sum())
}

// ---------------------------------------------------------------------------
// Joint two-channel chain (full-sensing scheme)
// ---------------------------------------------------------------------------

/// Transition matrix over joint sensed outcomes of two channels, assuming
/// error-free sensing. Row/column index is `2·s₁ + s₂` with `s = 1` meaning
/// sensed free; the row's outcome selects the gap from the table, and the
/// channels evolve independently across it.
pub fn joint_transition_matrix_2ch(
    ch1: &ChannelParams,
    ch2: &ChannelParams,
    table: &OutcomeDurationTable,
) -> Result<[[f64; 4]; 4]> {
    if table.n_channels() != 2 {
        return Err(Error::invalid(format!(
            "joint matrix needs a 2-channel outcome table, got {} channels",
            table.n_channels()
        )));
    }
    let mut m = [[0.0; 4]; 4];
    for (row, out) in m.iter_mut().enumerate() {
        let gap = table.duration_by_index(row);
        let p1 = if row & 2 != 0 { ch1.p11(gap) } else { ch1.p01(gap) };
        let p2 = if row & 1 != 0 { ch2.p11(gap) } else { ch2.p01(gap) };
        for (col, cell) in out.iter_mut().enumerate() {
            let f1 = if col & 2 != 0 { p1 } else { 1.0 - p1 };
            let f2 = if col & 1 != 0 { p2 } else { 1.0 - p2 };
            *cell = f1 * f2;
        }
    }
    Ok(m)
}

/// Long-run predictions for the two-channel full-sensing scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoChannelReport {
    /// Aggregate throughput fraction across both channels.
    pub r: f64,
    /// Mean gap between consecutive (joint) sensing events.
    pub mean_cycle: f64,
    /// Stationary distribution over joint sensed outcomes, indexed `2·s₁+s₂`.
    pub stationary: [f64; 4],
    /// Per-channel interference fractions.
    pub interference: [f64; 2],
    /// Per-channel fractions of believed-free free time lost to sensing
    /// pauses.
    pub overhead: [f64; 2],
    /// Per-channel fractions of free time spent believed busy.
    pub unexplored: [f64; 2],
}

/// Evaluate a two-channel outcome-indexed schedule with error-free sensing.
///
/// After an outcome with exactly one free channel the secondary user
/// transmits on that channel; after `(free, free)` it transmits on both
/// simultaneously. Each transmission stretch is trimmed by the `t_s` pause
/// taken at its start for the next sensing event.
pub fn two_channel_throughput(
    ch1: &ChannelParams,
    ch2: &ChannelParams,
    table: &OutcomeDurationTable,
    t_s: f64,
) -> Result<TwoChannelReport> {
    if !t_s.is_finite() || t_s < 0.0 {
        return Err(Error::invalid(format!("t_s must be non-negative, got {t_s}")));
    }
    table.check_floor(t_s)?;
    let m = joint_transition_matrix_2ch(ch1, ch2, table)?;
    let pi_vec = steady_state(&m)?;
    let pi: [f64; 4] = [pi_vec[0], pi_vec[1], pi_vec[2], pi_vec[3]];
    let d = |k: usize| table.duration_by_index(k);
    let mu: f64 = (0..4).map(|k| pi[k] * d(k)).sum();

    let r = (pi[1] * ch2.d1(d(1)) * (1.0 - t_s / d(1))
        + pi[2] * ch1.d1(d(2)) * (1.0 - t_s / d(2))
        + pi[3] * (ch1.d1(d(3)) + ch2.d1(d(3))) * (1.0 - t_s / d(3)))
        / mu;
    let interference = [
        (pi[2] * (d(2) - ch1.d1(d(2))) + pi[3] * (d(3) - ch1.d1(d(3)))) / mu,
        (pi[1] * (d(1) - ch2.d1(d(1))) + pi[3] * (d(3) - ch2.d1(d(3)))) / mu,
    ];
    let overhead = [
        (pi[2] + pi[3]) * ch1.d1(t_s) / mu,
        (pi[1] + pi[3]) * ch2.d1(t_s) / mu,
    ];
    let unexplored = [
        (pi[0] * ch1.d0(d(0)) + pi[1] * ch1.d0(d(1))) / mu,
        (pi[0] * ch2.d0(d(0)) + pi[2] * ch2.d0(d(2))) / mu,
    ];
    Ok(TwoChannelReport { r, mean_cycle: mu, stationary: pi, interference, overhead, unexplored })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn ch(l_free: f64, l_busy: f64) -> ChannelParams {
        ChannelParams::new(l_free, l_busy).unwrap()
    }

    fn pol(tf: f64, tb: f64) -> DualPeriodPolicy {
        DualPeriodPolicy::new(tf, tb).unwrap()
    }

    const FIVE_FREE: [f64; 5] = [0.2, 0.17, 0.15, 0.13, 0.11];
    const FIVE_BUSY: [f64; 5] = [1.0, 0.9, 0.8, 0.7, 0.6];

    fn five_channels() -> Vec<ChannelParams> {
        FIVE_FREE.iter().zip(&FIVE_BUSY).map(|(&f, &b)| ch(f, b)).collect()
    }

    #[test]
    fn transition_matrix_rows_are_stochastic() {
        let c = ch(0.2, 1.0);
        let e = SensingErrorModel::new(0.15, 0.08).unwrap();
        let m = four_state_matrix(&c, &e, &pol(0.7, 0.3));
        for row in m {
            let sum: f64 = row.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        // Row 0: busy seen busy, so the gap is t_busy and the occupancy term
        // is the busy→free transition.
        assert_abs_diff_eq!(
            m[0][1],
            (1.0 - c.p01(0.3)) * 0.08,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(m[0][2], c.p01(0.3) * 0.15, epsilon = 1e-15);
    }

    #[test]
    fn perfect_sensing_zeroes_the_mismatch_states() {
        let m = four_state_matrix(&ch(0.2, 1.0), &SensingErrorModel::perfect(), &pol(0.7, 0.3));
        for row in m {
            assert_eq!(row[1], 0.0);
            assert_eq!(row[2], 0.0);
        }
    }

    #[test]
    fn equal_gaps_collapse_the_rows() {
        let e = SensingErrorModel::new(0.1, 0.2).unwrap();
        let m = four_state_matrix(&ch(0.2, 1.0), &e, &pol(0.5, 0.5));
        assert_eq!(m[0], m[1]);
        assert_eq!(m[2], m[3]);
    }

    #[test]
    fn steady_state_simple_chains() {
        assert!(matches!(
            steady_state(&[[1.0, 0.0], [0.0, 1.0]]),
            Err(Error::DegenerateChain)
        ));
        let pi = steady_state(&[[0.7, 0.3], [0.3, 0.7]]).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
        // A single absorbing class still has a unique stationary law.
        let pi = steady_state(&[[0.5, 0.5], [0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(pi[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steady_state_rejects_malformed_matrices() {
        assert!(steady_state(&[[0.5, 0.6], [0.5, 0.5]]).is_err()); // row sum 1.1
        assert!(steady_state(&[[1.5, -0.5], [0.5, 0.5]]).is_err()); // entries
        let rows: Vec<Vec<f64>> = vec![vec![1.0 / 17.0; 17]; 17];
        assert!(steady_state(&rows).is_err()); // too large
        assert!(steady_state(&[[0.5, 0.5]]).is_err()); // not square
    }

    #[test]
    fn steady_state_matches_power_iteration_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=16 {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                })
                .collect();
            let pi = steady_state(&rows).unwrap();
            // Power iteration from the uniform distribution. Dense random
            // chains mix geometrically fast, so this converges far beyond
            // the comparison tolerance.
            let mut p = vec![1.0 / n as f64; n];
            for _ in 0..20_000 {
                let mut next = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        next[j] += p[i] * rows[i][j];
                    }
                }
                p = next;
            }
            for i in 0..n {
                assert_abs_diff_eq!(pi[i], p[i], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn stationary_closed_form_matches_solver() {
        // The four-state chain has an explicit stationary law in terms of
        // P(free at sensing instants); pin the generic solver against it.
        let errs = [
            SensingErrorModel::perfect(),
            SensingErrorModel::new(0.2, 0.1).unwrap(),
            SensingErrorModel::new(0.4, 0.3).unwrap(),
        ];
        for c in [ch(0.2, 1.0), ch(1.0, 1.0), ch(0.11, 0.6)] {
            for e in &errs {
                for (tf, tb) in [(0.7, 0.3), (2.0, 2.0), (5.0, 0.1)] {
                    let pi = four_state_stationary(&c, e, &pol(tf, tb)).unwrap().as_array();
                    let num = (1.0 - e.p_md()) * c.p01(tb) + e.p_md() * c.p01(tf);
                    let den = 1.0 - e.p_fa() * c.p11(tb) - (1.0 - e.p_fa()) * c.p11(tf) + num;
                    let a = num / den;
                    let want = [
                        (1.0 - a) * (1.0 - e.p_md()),
                        (1.0 - a) * e.p_md(),
                        a * e.p_fa(),
                        a * (1.0 - e.p_fa()),
                    ];
                    for k in 0..4 {
                        assert_abs_diff_eq!(pi[k], want[k], epsilon = 1e-12);
                    }
                    let fast = channel_eval_fast(&c, e, tf, tb);
                    let mu = (pi[0] + pi[2]) * tb + (pi[1] + pi[3]) * tf;
                    assert_abs_diff_eq!(fast.mu, mu, epsilon = 1e-12 * mu);
                }
            }
        }
    }

    #[test]
    fn equal_gaps_with_perfect_sensing_sample_the_stationary_law() {
        // Sensing every T regardless of outcome observes the channel at
        // stationary instants, so P(free) must equal 1 - u for any T.
        for t in [0.1, 0.5, 2.0, 10.0] {
            let c = ch(0.2, 1.0);
            let pi = four_state_stationary(&c, &SensingErrorModel::perfect(), &pol(t, t)).unwrap();
            assert_abs_diff_eq!(pi.prob_free(), 1.0 - c.utilization(), epsilon = 1e-12);
        }
    }

    #[test]
    fn channel_metrics_frozen_reference_point() {
        // First of the five reference channels at its tight-budget optimum,
        // with the other four channels' sensing load supplied externally.
        let c = ch(0.2, 1.0);
        let p = pol(0.6133, 0.3001);
        let m = channel_metrics(&c, &SensingErrorModel::perfect(), &p, 0.01, 0.05802338839667841)
            .unwrap();
        assert_abs_diff_eq!(m.mean_cycle, 0.5330424154247465, epsilon = 1e-12);
        assert_abs_diff_eq!(m.interference_fraction, 0.0416660021927076, epsilon = 1e-12);
        assert_abs_diff_eq!(m.throughput, 0.7515595076844626, epsilon = 1e-12);
        assert_abs_diff_eq!(m.overhead_fraction, 0.06117391663952546, epsilon = 1e-12);
        assert_abs_diff_eq!(m.unexplored_fraction, 0.019266853105304304, epsilon = 1e-12);
    }

    #[test]
    fn channel_metrics_validates_inputs() {
        let c = ch(1.0, 1.0);
        let e = SensingErrorModel::perfect();
        assert!(channel_metrics(&c, &e, &pol(0.5, 0.5), -0.01, 0.0).is_err());
        assert!(channel_metrics(&c, &e, &pol(0.5, 0.5), 0.01, -0.1).is_err());
        // Gap shorter than the sensing time.
        assert!(channel_metrics(&c, &e, &pol(0.005, 0.5), 0.01, 0.0).is_err());
        // Saturated sensing load.
        assert!(matches!(
            channel_metrics(&c, &e, &pol(0.5, 0.5), 0.01, 0.999),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn network_throughput_frozen_reference_values() {
        let chs = five_channels();
        let errs = vec![SensingErrorModel::perfect(); 5];
        let tight: Vec<DualPeriodPolicy> = [
            (0.6133, 0.3001),
            (0.6800, 0.3155),
            (0.7637, 0.3338),
            (0.8714, 0.3561),
            (1.0148, 0.3839),
        ]
        .iter()
        .map(|&(tf, tb)| pol(tf, tb))
        .collect();
        let r = network_throughput(&chs, &errs, &tight, 0.01).unwrap();
        assert_abs_diff_eq!(r, 3.806844767334918, epsilon = 1e-12);

        let relaxed: Vec<DualPeriodPolicy> = [
            (3.8847, 0.2793),
            (4.3127, 0.2950),
            (4.8462, 0.3135),
            (5.5318, 0.3359),
            (6.4457, 0.3637),
        ]
        .iter()
        .map(|&(tf, tb)| pol(tf, tb))
        .collect();
        let r = network_throughput(&chs, &errs, &relaxed, 0.01).unwrap();
        assert_abs_diff_eq!(r, 4.108497139539146, epsilon = 1e-12);

        let single: Vec<DualPeriodPolicy> = [0.6345, 0.7032, 0.7908, 0.9034, 1.0533]
            .iter()
            .map(|&t| DualPeriodPolicy::single(t).unwrap())
            .collect();
        let r = network_throughput(&chs, &errs, &single, 0.01).unwrap();
        assert_abs_diff_eq!(r, 3.7531004430872583, epsilon = 1e-12);
    }

    #[test]
    fn occupancy_identity_holds_with_and_without_errors() {
        // Summing expected free time over all four states of a cycle must
        // recover the long-run free fraction 1 - u exactly.
        let errs = [
            SensingErrorModel::perfect(),
            SensingErrorModel::new(0.3, 0.25).unwrap(),
        ];
        for c in [ch(0.2, 1.0), ch(1.3, 0.4)] {
            for e in &errs {
                for (tf, tb) in [(0.9, 0.2), (4.0, 1.5)] {
                    let pi = four_state_stationary(&c, e, &pol(tf, tb)).unwrap().as_array();
                    let mu = (pi[0] + pi[2]) * tb + (pi[1] + pi[3]) * tf;
                    let free = pi[3] * c.d1(tf)
                        + pi[1] * c.d0(tf)
                        + pi[2] * c.d1(tb)
                        + pi[0] * c.d0(tb);
                    assert_abs_diff_eq!(free / mu, 1.0 - c.utilization(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn outcome_table_indexing_and_validation() {
        let t = OutcomeDurationTable::new(2, vec![10.0, 181.0, 215.0, 650.0]).unwrap();
        assert_eq!(t.n_outcomes(), 4);
        assert_abs_diff_eq!(t.duration(&[false, false]).unwrap(), 10.0);
        assert_abs_diff_eq!(t.duration(&[false, true]).unwrap(), 181.0);
        assert_abs_diff_eq!(t.duration(&[true, false]).unwrap(), 215.0);
        assert_abs_diff_eq!(t.duration(&[true, true]).unwrap(), 650.0);
        assert_abs_diff_eq!(t.min_duration(), 10.0);
        assert!(t.check_floor(10.0).is_ok());
        assert!(t.check_floor(10.5).is_err());
        assert!(t.duration(&[true]).is_err());
        assert!(OutcomeDurationTable::new(2, vec![1.0, 2.0]).is_err());
        assert!(OutcomeDurationTable::new(2, vec![1.0, 2.0, 3.0, 0.0]).is_err());
        assert!(OutcomeDurationTable::new(0, vec![]).is_err());
    }

    #[test]
    fn joint_matrix_structure() {
        let c1 = ch(0.0004, 0.0006);
        let c2 = ch(0.0007, 0.0003);
        let table = OutcomeDurationTable::new(2, vec![10.0, 181.0, 215.0, 650.0]).unwrap();
        let m = joint_transition_matrix_2ch(&c1, &c2, &table).unwrap();
        for row in m {
            let sum: f64 = row.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
        // Row (busy, free): channel 1 transitions from busy, channel 2 from
        // free, both across the gap for that outcome.
        let gap = 181.0;
        assert_abs_diff_eq!(
            m[1][3],
            c1.p01(gap) * c2.p11(gap),
            epsilon = 1e-15
        );
        // With enormous gaps every row converges to the stationary product
        // law regardless of the starting outcome.
        let far = OutcomeDurationTable::new(2, vec![1e8; 4]).unwrap();
        let m = joint_transition_matrix_2ch(&c1, &c2, &far).unwrap();
        let (u1, u2) = (c1.utilization(), c2.utilization());
        let want = [u1 * u2, u1 * (1.0 - u2), (1.0 - u1) * u2, (1.0 - u1) * (1.0 - u2)];
        for row in m {
            for k in 0..4 {
                assert_abs_diff_eq!(row[k], want[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_channel_report_frozen_reference_point() {
        let c1 = ch(0.0004, 0.0006);
        let c2 = ch(0.0007, 0.0003);
        let table = OutcomeDurationTable::new(2, vec![10.0, 181.0, 215.0, 650.0]).unwrap();
        let rep = two_channel_throughput(&c1, &c2, &table, 10.0).unwrap();
        assert_abs_diff_eq!(rep.r, 0.8506326756819025, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.mean_cycle, 35.42738457611982, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.interference[0], 0.0399991825683274, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.interference[1], 0.04789658930575738, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.stationary[0], 0.8979775087697882, epsilon = 1e-10);
        assert_abs_diff_eq!(rep.overhead[0], 0.022505475405026214, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.overhead[1], 0.009630083821971998, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.unexplored[0], 0.006543556293093602, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.unexplored[1], 0.012744055370324898, epsilon = 1e-12);

        let relaxed = OutcomeDurationTable::new(2, vec![10.0, 181.0, 215.0, 4060.0]).unwrap();
        let rep = two_channel_throughput(&c1, &c2, &relaxed, 10.0).unwrap();
        assert_abs_diff_eq!(rep.r, 0.8712678934585995, epsilon = 1e-12);
    }

    #[test]
    fn four_state_distribution_validation() {
        assert!(FourStateDistribution::from_slice(&[0.25, 0.25, 0.25, 0.25]).is_ok());
        assert!(FourStateDistribution::from_slice(&[0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(FourStateDistribution::from_slice(&[0.3, 0.3, 0.3, 0.3]).is_err());
        assert!(FourStateDistribution::from_slice(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn interference_never_exceeds_the_busy_fraction(
            lf in 0.05f64..5.0,
            lb in 0.05f64..5.0,
            tf in 0.01f64..20.0,
            tb in 0.01f64..20.0,
            p_fa in 0.0f64..0.9,
            p_md in 0.0f64..0.9,
        ) {
            let c = ch(lf, lb);
            let e = SensingErrorModel::new(p_fa, p_md).unwrap();
            let m = channel_metrics(&c, &e, &pol(tf, tb), 0.0, 0.0).unwrap();
            prop_assert!(m.interference_fraction <= c.utilization() + 1e-9);
            prop_assert!(m.interference_fraction >= -1e-12);
        }

        #[test]
        fn metric_fractions_partition_the_timeline(
            lf in 0.05f64..5.0,
            lb in 0.05f64..5.0,
            tf in 0.01f64..20.0,
            tb in 0.01f64..20.0,
            p_fa in 0.0f64..0.9,
            p_md in 0.0f64..0.9,
        ) {
            // With no sensing pauses (t_s = 0) the four fractions cover the
            // whole timeline together with busy-believed-busy time.
            let c = ch(lf, lb);
            let e = SensingErrorModel::new(p_fa, p_md).unwrap();
            let m = channel_metrics(&c, &e, &pol(tf, tb), 0.0, 0.0).unwrap();
            let pi = four_state_stationary(&c, &e, &pol(tf, tb)).unwrap().as_array();
            let mu = (pi[0] + pi[2]) * tb + (pi[1] + pi[3]) * tf;
            let idle = (pi[0] * (tb - c.d0(tb)) + pi[2] * (tb - c.d1(tb))) / mu;
            let total = m.throughput
                + m.interference_fraction
                + m.unexplored_fraction
                + m.overhead_fraction
                + idle;
            prop_assert!((total - 1.0).abs() < 1e-9, "partition sums to {total}");
        }

        #[test]
        fn stationary_solver_accepts_all_four_state_chains(
            lf in 0.05f64..5.0,
            lb in 0.05f64..5.0,
            tf in 0.01f64..20.0,
            tb in 0.01f64..20.0,
            p_fa in 0.0f64..0.95,
            p_md in 0.0f64..0.95,
        ) {
            let c = ch(lf, lb);
            let e = SensingErrorModel::new(p_fa, p_md).unwrap();
            let pi = four_state_stationary(&c, &e, &pol(tf, tb)).unwrap();
            let total: f64 = pi.as_array().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
