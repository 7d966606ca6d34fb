//! Monte-Carlo validation of the analytic predictions.
//!
//! Channel occupancy is sampled as an alternating renewal process and the
//! sensing policies are replayed against the sampled trajectories by a
//! discrete-event loop. A single sensing front-end is modeled throughout:
//! sensing requests that collide are served in due order, transmission on
//! every channel pauses while any sensing is in progress, and each scheme's
//! bookkeeping splits the post-warmup timeline into five exhaustive buckets
//! per channel:
//!
//! * **throughput** — channel free, believed free, no sensing in progress;
//! * **interference** — channel busy while believed free (sensing pauses
//!   included, matching the analytic convention that charges the whole
//!   believed-free busy time);
//! * **overhead** — channel free and believed free but paused for sensing;
//! * **unexplored** — channel free while believed busy;
//! * **idle** — channel busy while believed busy.
//!
//! The sequential-access scheme reinterprets the buckets for its one-at-a-
//! time radio (see [`simulate_limited_access`]); there the reported
//! interference is the per-access-window collision ratio, which is the
//! quantity its window sizing controls.
//!
//! Every run draws from counter-based RNG streams keyed by `(seed, run,
//! channel)`, so results are bitwise reproducible at any thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;

use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::{DualPeriodPolicy, OutcomeDurationTable};
use crate::renewal::{ChannelParams, ChannelState};
use crate::sensing::SensingErrorModel;

// ---------------------------------------------------------------------------
// Sampled channel trajectories
// ---------------------------------------------------------------------------

/// One sampled busy/free trajectory: an initial state and the ordered times
/// at which the state toggles.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTrace {
    channel_index: usize,
    initial_state: ChannelState,
    transition_times: Vec<f64>,
}

impl RenewalTrace {
    /// Sample a trajectory of length `horizon` starting from the stationary
    /// law: the initial state is busy with the channel's busy fraction, and
    /// the residual sojourn is a fresh exponential draw by memorylessness.
    pub fn generate(
        ch: &ChannelParams,
        channel_index: usize,
        horizon: f64,
        rng: &mut impl rand::Rng,
    ) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid(format!(
                "trace horizon must be positive and finite, got {horizon}"
            )));
        }
        let initial_state = if rng.gen::<f64>() < ch.utilization() {
            ChannelState::Busy
        } else {
            ChannelState::Free
        };
        let free_law = Exp::new(ch.lambda_free()).expect("validated positive rate");
        let busy_law = Exp::new(ch.lambda_busy()).expect("validated positive rate");
        let mut transition_times = Vec::new();
        let mut state = initial_state;
        let mut t = 0.0;
        loop {
            t += match state {
                ChannelState::Free => free_law.sample(rng),
                ChannelState::Busy => busy_law.sample(rng),
            };
            if t >= horizon {
                break;
            }
            transition_times.push(t);
            state = state.toggled();
            if transition_times.len() > 100_000_000 {
                return Err(Error::NumericFailure(format!(
                    "trace for channel {channel_index} exceeded 1e8 transitions"
                )));
            }
        }
        Ok(Self { channel_index, initial_state, transition_times })
    }

    pub fn channel_index(&self) -> usize {
        self.channel_index
    }

    pub fn initial_state(&self) -> ChannelState {
        self.initial_state
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition_times
    }

    /// State at time `t`; transitions take effect at their timestamp.
    pub fn state_at(&self, t: f64) -> ChannelState {
        let flips = self.transition_times.partition_point(|&x| x <= t);
        if flips % 2 == 0 {
            self.initial_state
        } else {
            self.initial_state.toggled()
        }
    }

    /// Total free time within `[a, b]`.
    pub fn free_time_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut idx = self.transition_times.partition_point(|&x| x <= a);
        let mut state = self.state_at(a);
        let mut cur = a;
        let mut acc = 0.0;
        loop {
            let next = self
                .transition_times
                .get(idx)
                .copied()
                .unwrap_or(f64::INFINITY)
                .min(b);
            if state.is_free() {
                acc += next - cur;
            }
            if next >= b {
                return acc;
            }
            cur = next;
            state = state.toggled();
            idx += 1;
        }
    }

    /// Write the trajectory as `time,state` CSV rows (states `free`/`busy`),
    /// starting with the initial state at time zero.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        let name = |s: ChannelState| if s.is_free() { "free" } else { "busy" };
        writeln!(w, "time,state")?;
        writeln!(w, "0,{}", name(self.initial_state))?;
        let mut state = self.initial_state;
        for &t in &self.transition_times {
            state = state.toggled();
            writeln!(w, "{t},{}", name(state))?;
        }
        Ok(())
    }

    #[cfg(test)]
    fn from_parts(initial_state: ChannelState, transition_times: Vec<f64>) -> Self {
        Self { channel_index: 0, initial_state, transition_times }
    }
}

/// Sample one channel's trajectory with the same stream layout the
/// simulators use for run 0, so exported traces match simulated ones.
pub fn generate_trace(
    ch: &ChannelParams,
    channel_index: usize,
    horizon: f64,
    seed: u64,
) -> Result<RenewalTrace> {
    let mut rng = stream_rng(seed, 0, channel_index, StreamKind::Trace);
    RenewalTrace::generate(ch, channel_index, horizon, &mut rng)
}

// ---------------------------------------------------------------------------
// Configuration and report types
// ---------------------------------------------------------------------------

/// Monte-Carlo settings shared by all schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Length of each simulated run.
    pub horizon: f64,
    /// Initial span excluded from every statistic.
    pub warmup: f64,
    /// Number of independent runs.
    pub runs: usize,
    /// Master seed; each `(run, channel)` pair derives its own stream.
    pub seed: u64,
}

impl SimConfig {
    pub fn new(horizon: f64, warmup: f64, runs: usize, seed: u64) -> Result<Self> {
        let cfg = Self { horizon, warmup, runs, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::invalid(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !self.warmup.is_finite() || self.warmup < 0.0 || self.warmup >= self.horizon {
            return Err(Error::invalid(format!(
                "warmup must lie in [0, horizon), got {} of {}",
                self.warmup, self.horizon
            )));
        }
        if self.runs == 0 {
            return Err(Error::invalid("at least one run is required"));
        }
        Ok(())
    }
}

/// Sample mean and its standard error across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStat {
    pub mean: f64,
    pub stderr: f64,
}

impl MetricStat {
    fn from_samples(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        Self { mean, stderr: (ss / (n * (n - 1.0))).sqrt() }
    }
}

/// Empirical per-channel time fractions (see the module docs for the bucket
/// definitions and the sequential-access reinterpretation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelReport {
    pub throughput: MetricStat,
    pub interference: MetricStat,
    pub overhead: MetricStat,
    pub unexplored: MetricStat,
    pub idle: MetricStat,
}

/// Aggregated Monte-Carlo results.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub per_channel: Vec<ChannelReport>,
    /// Network throughput: the sum of per-channel throughput fractions.
    pub aggregate_r: MetricStat,
    pub runs: usize,
    /// Mean time from the start of a channel search until a free channel is
    /// found; only the sequential-access scheme populates it.
    pub mean_search_delay: Option<MetricStat>,
}

// ---------------------------------------------------------------------------
// RNG streams
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum StreamKind {
    Trace,
    Flips,
}

/// Independent, reproducible stream for one `(run, channel)` pair.
fn stream_rng(seed: u64, run: usize, channel: usize, kind: StreamKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = match kind {
        StreamKind::Trace => 0,
        StreamKind::Flips => 1,
    };
    rng.set_stream(((run as u64) << 32) | ((channel as u64) * 2 + offset));
    rng
}

/// One sensing outcome: the true state at the window start, flipped by the
/// detector's error probabilities using a single uniform draw.
fn sense(
    trace: &RenewalTrace,
    err: &SensingErrorModel,
    at: f64,
    flips: &mut ChaCha8Rng,
) -> bool {
    let r = flips.gen::<f64>();
    if trace.state_at(at).is_free() {
        r >= err.p_fa()
    } else {
        r < err.p_md()
    }
}

// ---------------------------------------------------------------------------
// Bucket accounting
// ---------------------------------------------------------------------------

/// Per-channel time buckets, as fractions of the measured span.
#[derive(Debug, Clone, Copy, Default)]
struct Buckets {
    throughput: f64,
    interference: f64,
    overhead: f64,
    unexplored: f64,
    idle: f64,
}

impl Buckets {
    fn total(&self) -> f64 {
        self.throughput + self.interference + self.overhead + self.unexplored + self.idle
    }
}

/// Total overlap of `[a, b]` with a sorted, non-overlapping interval list.
fn overlap_with(intervals: &[(f64, f64)], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut i = intervals.partition_point(|&(s, _)| s < a);
    if i > 0 && intervals[i - 1].1 > a {
        acc += intervals[i - 1].1.min(b) - a;
    }
    while i < intervals.len() && intervals[i].0 < b {
        acc += intervals[i].1.min(b) - intervals[i].0.max(a);
        i += 1;
    }
    acc
}

/// Split `[warmup, horizon]` into the five buckets for one channel, given
/// its belief timeline (time, believed-free) and the global sensing pauses.
fn sweep_buckets(
    trace: &RenewalTrace,
    beliefs: &[(f64, bool)],
    pauses: &[(f64, f64)],
    warmup: f64,
    horizon: f64,
) -> Buckets {
    let mut cuts: Vec<f64> = Vec::with_capacity(
        2 + trace.transitions().len() + beliefs.len(),
    );
    cuts.push(warmup);
    cuts.extend(
        trace.transitions().iter().copied().filter(|&t| t > warmup && t < horizon),
    );
    cuts.extend(
        beliefs.iter().map(|&(t, _)| t).filter(|&t| t > warmup && t < horizon),
    );
    cuts.push(horizon);
    cuts.sort_by(f64::total_cmp);

    let mut out = Buckets::default();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let free = trace.state_at(mid).is_free();
        let bf_idx = beliefs.partition_point(|&(t, _)| t <= mid);
        let believed_free = bf_idx > 0 && beliefs[bf_idx - 1].1;
        let len = b - a;
        match (free, believed_free) {
            (true, true) => {
                let paused = overlap_with(pauses, a, b);
                out.throughput += len - paused;
                out.overhead += paused;
            }
            (true, false) => out.unexplored += len,
            (false, true) => out.interference += len,
            (false, false) => out.idle += len,
        }
    }
    let span = horizon - warmup;
    debug_assert!(
        (out.total() - span).abs() <= 1e-9 * span.max(1.0),
        "buckets {:?} do not partition the span {span}",
        out
    );
    out
}

// ---------------------------------------------------------------------------
// Shared run plumbing
// ---------------------------------------------------------------------------

struct RunOutcome {
    /// Per channel: [throughput, interference, overhead, unexplored, idle].
    fractions: Vec<[f64; 5]>,
    /// Per channel: mean collision ratio over completed access windows, when
    /// the scheme defines one.
    window_interference: Option<Vec<Option<f64>>>,
    /// Mean search delay over completed searches, when defined.
    search_delay: Option<f64>,
}

impl RunOutcome {
    fn from_buckets(buckets: Vec<Buckets>, span: f64) -> Self {
        let fractions = buckets
            .into_iter()
            .map(|b| {
                [
                    b.throughput / span,
                    b.interference / span,
                    b.overhead / span,
                    b.unexplored / span,
                    b.idle / span,
                ]
            })
            .collect();
        Self { fractions, window_interference: None, search_delay: None }
    }
}

fn assemble(n_channels: usize, runs: Vec<RunOutcome>) -> PerformanceReport {
    let n_runs = runs.len();
    let gather =
        |f: &dyn Fn(&RunOutcome) -> f64| -> Vec<f64> { runs.iter().map(f).collect() };
    let per_channel = (0..n_channels)
        .map(|ch| {
            let interference = match runs[0].window_interference {
                Some(_) => {
                    let samples: Vec<f64> = runs
                        .iter()
                        .filter_map(|r| {
                            r.window_interference.as_ref().and_then(|w| w[ch])
                        })
                        .collect();
                    MetricStat::from_samples(&samples)
                }
                None => MetricStat::from_samples(&gather(&|r| r.fractions[ch][1])),
            };
            ChannelReport {
                throughput: MetricStat::from_samples(&gather(&|r| r.fractions[ch][0])),
                interference,
                overhead: MetricStat::from_samples(&gather(&|r| r.fractions[ch][2])),
                unexplored: MetricStat::from_samples(&gather(&|r| r.fractions[ch][3])),
                idle: MetricStat::from_samples(&gather(&|r| r.fractions[ch][4])),
            }
        })
        .collect();
    let r_samples: Vec<f64> = runs
        .iter()
        .map(|r| r.fractions.iter().map(|f| f[0]).sum::<f64>())
        .collect();
    let search_samples: Vec<f64> = runs.iter().filter_map(|r| r.search_delay).collect();
    let has_search = runs.iter().any(|r| r.search_delay.is_some());
    PerformanceReport {
        per_channel,
        aggregate_r: MetricStat::from_samples(&r_samples),
        runs: n_runs,
        mean_search_delay: has_search
            .then(|| MetricStat::from_samples(&search_samples)),
    }
}

fn run_all<F>(cfg: &SimConfig, run_one: F) -> Result<Vec<RunOutcome>>
where
    F: Fn(usize) -> Result<RunOutcome> + Send + Sync,
{
    (0..cfg.runs).into_par_iter().map(run_one).collect::<Result<Vec<_>>>()
}

// ---------------------------------------------------------------------------
// Scheme: per-channel dual-period sensing
// ---------------------------------------------------------------------------

/// Heap entry ordered by due time, ties broken by channel index so that
/// simultaneous requests are served deterministically.
#[derive(Clone, Copy, PartialEq)]
struct Event {
    due: f64,
    ch: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we want the earliest due.
        other
            .due
            .total_cmp(&self.due)
            .then_with(|| other.ch.cmp(&self.ch))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Replay outcome-dependent per-channel schedules: each channel is re-sensed
/// `t_free` after being sensed free and `t_busy` after being sensed busy,
/// timed from the start of the previous sensing window. A single front-end
/// serves overlapping requests in due order and transmission pauses
/// everywhere while it is sensing.
pub fn simulate_dual_period(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    policies: &[DualPeriodPolicy],
    t_s: f64,
    cfg: &SimConfig,
) -> Result<PerformanceReport> {
    cfg.validate()?;
    validate_common(chs, errs.len(), t_s)?;
    if policies.len() != chs.len() {
        return Err(Error::invalid(format!(
            "got {} policies for {} channels",
            policies.len(),
            chs.len()
        )));
    }

    let runs = run_all(cfg, |run| {
        let traces = sample_traces(chs, cfg, run)?;
        let mut flips: Vec<ChaCha8Rng> = (0..chs.len())
            .map(|ch| stream_rng(cfg.seed, run, ch, StreamKind::Flips))
            .collect();

        let mut heap: BinaryHeap<Event> =
            (0..chs.len()).map(|ch| Event { due: 0.0, ch }).collect();
        let mut sensor_free_at = 0.0_f64;
        let mut beliefs: Vec<Vec<(f64, bool)>> =
            vec![vec![(0.0, false)]; chs.len()];
        let mut pauses: Vec<(f64, f64)> = Vec::new();

        while let Some(ev) = heap.pop() {
            let start = ev.due.max(sensor_free_at);
            if start >= cfg.horizon {
                // Every remaining event is due no earlier, so nothing else
                // can start inside the horizon either.
                break;
            }
            sensor_free_at = start + t_s;
            let sensed_free = sense(&traces[ev.ch], &errs[ev.ch], start, &mut flips[ev.ch]);
            beliefs[ev.ch].push((start, sensed_free));
            if t_s > 0.0 {
                pauses.push((start, start + t_s));
            }
            let gap = if sensed_free {
                policies[ev.ch].t_free()
            } else {
                policies[ev.ch].t_busy()
            };
            heap.push(Event { due: start + gap, ch: ev.ch });
        }

        let buckets = traces
            .iter()
            .enumerate()
            .map(|(ch, trace)| {
                sweep_buckets(trace, &beliefs[ch], &pauses, cfg.warmup, cfg.horizon)
            })
            .collect();
        Ok(RunOutcome::from_buckets(buckets, cfg.horizon - cfg.warmup))
    })?;
    Ok(assemble(chs.len(), runs))
}

// ---------------------------------------------------------------------------
// Scheme: full sensing with an outcome-duration table
// ---------------------------------------------------------------------------

/// Replay full sensing: every sensing instant observes all channels within
/// one window of length `t_s`, and the gap to the next instant is looked up
/// in the outcome table.
pub fn simulate_full(
    chs: &[ChannelParams],
    errs: &[SensingErrorModel],
    table: &OutcomeDurationTable,
    t_s: f64,
    cfg: &SimConfig,
) -> Result<PerformanceReport> {
    cfg.validate()?;
    validate_common(chs, errs.len(), t_s)?;
    if table.n_channels() != chs.len() {
        return Err(Error::invalid(format!(
            "outcome table covers {} channels but {} were given",
            table.n_channels(),
            chs.len()
        )));
    }

    let runs = run_all(cfg, |run| {
        let traces = sample_traces(chs, cfg, run)?;
        let mut flips: Vec<ChaCha8Rng> = (0..chs.len())
            .map(|ch| stream_rng(cfg.seed, run, ch, StreamKind::Flips))
            .collect();

        let mut beliefs: Vec<Vec<(f64, bool)>> =
            vec![vec![(0.0, false)]; chs.len()];
        let mut pauses: Vec<(f64, f64)> = Vec::new();
        let mut outcome = vec![false; chs.len()];
        let mut t = 0.0;
        while t < cfg.horizon {
            for (ch, slot) in outcome.iter_mut().enumerate() {
                *slot = sense(&traces[ch], &errs[ch], t, &mut flips[ch]);
                beliefs[ch].push((t, *slot));
            }
            if t_s > 0.0 {
                pauses.push((t, t + t_s));
            }
            t += table.duration(&outcome).expect("lengths validated");
        }

        let buckets = traces
            .iter()
            .enumerate()
            .map(|(ch, trace)| {
                sweep_buckets(trace, &beliefs[ch], &pauses, cfg.warmup, cfg.horizon)
            })
            .collect();
        Ok(RunOutcome::from_buckets(buckets, cfg.horizon - cfg.warmup))
    })?;
    Ok(assemble(chs.len(), runs))
}

// ---------------------------------------------------------------------------
// Scheme: sequential search with fixed access windows
// ---------------------------------------------------------------------------

/// Replay the sequential-access policy with error-free sensing: channels are
/// probed one at a time in decreasing order of their estimated free
/// probability per sensing cost; the first channel sensed free is held for
/// its fixed access window (measured from the start of the sensing that
/// found it), and the search then resumes with fresh rankings.
///
/// Bucket semantics differ from the parallel schemes because the radio only
/// ever occupies one channel: `throughput`/`idle` are the free/busy splits
/// of held-window transmission time versus unattended time, `overhead` is
/// the time spent probing the channel, and the reported `interference` is
/// the mean collision fraction over access windows completed inside the
/// measured span — the quantity the window sizing constrains.
pub fn simulate_limited_access(
    chs: &[ChannelParams],
    windows: &[f64],
    t_s: f64,
    cfg: &SimConfig,
) -> Result<PerformanceReport> {
    cfg.validate()?;
    if chs.is_empty() {
        return Err(Error::invalid("at least one channel is required"));
    }
    if windows.len() != chs.len() {
        return Err(Error::invalid(format!(
            "got {} access windows for {} channels",
            windows.len(),
            chs.len()
        )));
    }
    if !t_s.is_finite() || t_s <= 0.0 {
        return Err(Error::invalid(format!(
            "sequential search needs a positive sensing time, got {t_s}"
        )));
    }
    for (k, &w) in windows.iter().enumerate() {
        if !w.is_finite() || w <= t_s {
            return Err(Error::invalid(format!(
                "access window for channel {k} must exceed the sensing time, got {w}"
            )));
        }
    }

    let runs = run_all(cfg, |run| {
        let traces = sample_traces(chs, cfg, run)?;
        let n = chs.len();
        // (last sensed free?, when) — everybody starts presumed busy.
        let mut last: Vec<(bool, f64)> = vec![(false, 0.0); n];
        let mut sense_spans: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        let mut held_spans: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        // Completed-window collision tallies: (busy time, window time).
        let mut collisions: Vec<(f64, f64)> = vec![(0.0, 0.0); n];
        let mut delays: Vec<f64> = Vec::new();

        let mut t = 0.0_f64;
        let mut search_start = 0.0_f64;
        while t < cfg.horizon {
            // Rank once per probe so beliefs refreshed mid-search count.
            let best = (0..n)
                .map(|ch| {
                    let (free, at) = last[ch];
                    let p = if free {
                        chs[ch].p11(t - at)
                    } else {
                        chs[ch].p01(t - at)
                    };
                    (ch, p / t_s)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty channel list")
                .0;

            let sensed_free = traces[best].state_at(t).is_free();
            last[best] = (sensed_free, t);
            sense_spans[best].push((t, t + t_s));
            if sensed_free {
                let w = windows[best];
                if t >= cfg.warmup && t + w <= cfg.horizon {
                    let busy = w - traces[best].free_time_between(t, t + w);
                    collisions[best].0 += busy;
                    collisions[best].1 += w;
                }
                if search_start >= cfg.warmup && t <= cfg.horizon {
                    delays.push(t - search_start);
                }
                held_spans[best].push((t + t_s, t + w));
                t += w;
                search_start = t;
            } else {
                t += t_s;
            }
        }

        let span = cfg.horizon - cfg.warmup;
        let fractions = (0..n)
            .map(|ch| {
                let trace = &traces[ch];
                let total_free = trace.free_time_between(cfg.warmup, cfg.horizon);
                let total_busy = span - total_free;
                let mut thr = 0.0;
                let mut coll = 0.0;
                for &(a, b) in &held_spans[ch] {
                    let (a, b) = (a.max(cfg.warmup), b.min(cfg.horizon));
                    if b > a {
                        let free = trace.free_time_between(a, b);
                        thr += free;
                        coll += (b - a) - free;
                    }
                }
                let mut ovh = 0.0;
                let mut free_sensing = 0.0;
                for &(a, b) in &sense_spans[ch] {
                    let (a, b) = (a.max(cfg.warmup), b.min(cfg.horizon));
                    if b > a {
                        ovh += b - a;
                        free_sensing += trace.free_time_between(a, b);
                    }
                }
                let unexplored = total_free - thr - free_sensing;
                let idle = total_busy - coll - (ovh - free_sensing);
                let buckets = [thr, coll, ovh, unexplored, idle];
                debug_assert!(
                    (buckets.iter().sum::<f64>() - span).abs() <= 1e-9 * span.max(1.0),
                    "sequential buckets {buckets:?} do not partition {span}"
                );
                buckets.map(|x| x / span)
            })
            .collect();

        let window_interference = Some(
            collisions
                .iter()
                .map(|&(busy, total)| (total > 0.0).then(|| busy / total))
                .collect(),
        );
        let search_delay = (!delays.is_empty())
            .then(|| delays.iter().sum::<f64>() / delays.len() as f64);
        Ok(RunOutcome { fractions, window_interference, search_delay })
    })?;
    Ok(assemble(chs.len(), runs))
}

// ---------------------------------------------------------------------------

fn validate_common(chs: &[ChannelParams], n_errs: usize, t_s: f64) -> Result<()> {
    if chs.is_empty() {
        return Err(Error::invalid("at least one channel is required"));
    }
    if n_errs != chs.len() {
        return Err(Error::invalid(format!(
            "got {n_errs} error models for {} channels",
            chs.len()
        )));
    }
    if !t_s.is_finite() || t_s < 0.0 {
        return Err(Error::invalid(format!("t_s must be non-negative, got {t_s}")));
    }
    Ok(())
}

fn sample_traces(
    chs: &[ChannelParams],
    cfg: &SimConfig,
    run: usize,
) -> Result<Vec<RenewalTrace>> {
    chs.iter()
        .enumerate()
        .map(|(ch, params)| {
            let mut rng = stream_rng(cfg.seed, run, ch, StreamKind::Trace);
            RenewalTrace::generate(params, ch, cfg.horizon, &mut rng)
        })
        .collect()
}

// ---------------------------------------------------------------------------
