//! Limited access: one channel at a time, sensed sequentially.
//!
//! Here the secondary user owns a single transceiver, searches channels one
//! after another, transmits on the first one sensed free for a fixed access
//! window, and then resumes the search. Two questions arise: how long may
//! the access window be before the expected interference inflicted on the
//! primary exceeds its budget, and in which order should stale beliefs be
//! probed? The window length has a closed-form expected-interference curve
//! that grows monotonically from zero toward the channel's busy fraction, so
//! the largest admissible window is a root of a scalar monotone equation.
//! The search order ranks channels by the probability of finding them free
//! given the last observation and its age, per unit of sensing time spent.

use crate::error::{Error, Result};
use crate::renewal::{ChannelParams, ChannelState};
use crate::sensing::SensingErrorModel;
use crate::simulator::{self, PerformanceReport, SimConfig};

/// Relative residual required of the access-duration root.
const ROOT_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Access-window sizing
// ---------------------------------------------------------------------------

/// Expected fraction of an access window of length `t` that collides with
/// primary activity, given that transmission starts right after a sensing
/// result of "free" (which may be a misdetection).
pub fn access_interference(
    ch: &ChannelParams,
    err: &SensingErrorModel,
    t: f64,
) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::invalid(format!(
            "access window must be positive and finite, got {t}"
        )));
    }
    let from_free = (1.0 - err.p_fa()) * (t - ch.d1(t));
    let from_busy = err.p_md() * (t - ch.d0(t));
    Ok((from_free + from_busy) / t)
}

/// Largest access window whose expected interference fraction equals
/// `i_max`, assuming error-free sensing.
///
/// The interference fraction of a window started on a truly free channel is
/// `u·(1 + (e^{-Λt} - 1)/(Λt))`, which rises monotonically from 0 at `t=0`
/// toward the busy fraction `u`; budgets at or above `u` admit unbounded
/// windows and are reported as such.
pub fn access_duration_for_constraint(ch: &ChannelParams, i_max: f64) -> Result<f64> {
    let u = ch.utilization();
    if !i_max.is_finite() || i_max <= 0.0 {
        return Err(Error::invalid(format!(
            "interference budget must be positive, got {i_max}"
        )));
    }
    if i_max >= u {
        return Err(Error::UnboundedAccessDuration { i_max, supremum: u });
    }
    let rate = ch.rate_sum();
    let f = |t: f64| u * (1.0 + crate::renewal::em1_over_x(rate * t));

    // Bracket the root: f is 0 at t=0+ and approaches u from below.
    let mut lo = 1.0 / rate;
    while f(lo) >= i_max {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(Error::NumericFailure(
                "access-duration bracket collapsed at zero".into(),
            ));
        }
    }
    let mut hi = 2.0 * lo;
    while f(hi) < i_max {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NumericFailure(
                "access-duration bracket ran away to infinity".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let val = f(mid);
        if (val - i_max).abs() <= ROOT_TOL * i_max {
            return Ok(mid);
        }
        if val < i_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NumericFailure(format!(
        "access-duration bisection stalled in [{lo}, {hi}]"
    )))
}

// ---------------------------------------------------------------------------
// Search order over stale beliefs
// ---------------------------------------------------------------------------

/// The most recent sensing result for one channel and when it was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelBelief {
    pub last_sensed_state: ChannelState,
    pub last_sense_time: f64,
}

impl ChannelBelief {
    pub fn new(last_sensed_state: ChannelState, last_sense_time: f64) -> Self {
        Self { last_sensed_state, last_sense_time }
    }
}

/// Probability of finding the channel free now, given its last observation,
/// per unit of sensing time it would cost to check.
pub fn channel_rank(
    ch: &ChannelParams,
    belief: &ChannelBelief,
    now: f64,
    t_s: f64,
) -> Result<f64> {
    let elapsed = now - belief.last_sense_time;
    if !elapsed.is_finite() || elapsed < 0.0 {
        return Err(Error::invalid(format!(
            "belief from {} postdates the current time {now}",
            belief.last_sense_time
        )));
    }
    if !t_s.is_finite() || t_s <= 0.0 {
        return Err(Error::invalid(format!("t_s must be positive, got {t_s}")));
    }
    let p_free = match belief.last_sensed_state {
        ChannelState::Free => ch.p11(elapsed),
        ChannelState::Busy => ch.p01(elapsed),
    };
    Ok(p_free / t_s)
}

/// Channel indices in the order they should be probed: descending rank,
/// ties broken by ascending index.
pub fn next_channel_order(
    chs: &[ChannelParams],
    beliefs: &[ChannelBelief],
    now: f64,
    t_s: f64,
) -> Result<Vec<usize>> {
    if beliefs.len() != chs.len() {
        return Err(Error::invalid(format!(
            "got {} beliefs for {} channels",
            beliefs.len(),
            chs.len()
        )));
    }
    let ranks: Vec<f64> = chs
        .iter()
        .zip(beliefs)
        .map(|(ch, b)| channel_rank(ch, b, now, t_s))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..chs.len()).collect();
    // A stable sort keeps ascending indices on exactly equal ranks.
    order.sort_by(|&a, &b| ranks[b].total_cmp(&ranks[a]));
    Ok(order)
}

// ---------------------------------------------------------------------------
// End-to-end policy run
// ---------------------------------------------------------------------------

/// Size each channel's access window to its interference budget and run the
/// sequential-search policy through the Monte-Carlo simulator.
pub fn run_limited_access_policy(
    chs: &[ChannelParams],
    i_max: &[f64],
    t_s: f64,
    cfg: &SimConfig,
) -> Result<PerformanceReport> {
    if chs.is_empty() {
        return Err(Error::invalid("at least one channel is required"));
    }
    if i_max.len() != chs.len() {
        return Err(Error::invalid(format!(
            "got {} interference budgets for {} channels",
            i_max.len(),
            chs.len()
        )));
    }
    let windows: Vec<f64> = chs
        .iter()
        .zip(i_max)
        .map(|(ch, &im)| access_duration_for_constraint(ch, im))
        .collect::<Result<_>>()?;
    simulator::simulate_limited_access(chs, &windows, t_s, cfg)
}

// ---------------------------------------------------------------------------
