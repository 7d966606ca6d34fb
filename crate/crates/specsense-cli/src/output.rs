//! CSV and summary writers for executed scenarios.
//!
//! Every writer emits rows in a fixed order and formats numbers with
//! [`fmt_sig`], so outputs are byte-identical across runs and thread counts.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use crate::execute::{Analytic, Execution, Policy};
use specsense::{MetricStat, OutcomeDurationTable};

/// Format with six significant digits, using fixed notation for moderate
/// magnitudes and scientific notation otherwise.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Trim trailing zeros (then a dangling point) for stable, compact
        // fields: 0.250000 -> 0.25.
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{x:.5e}")
    }
}

fn stat_fields(s: &MetricStat) -> [String; 2] {
    [fmt_sig(s.mean), fmt_sig(s.stderr)]
}

/// Write `policies.csv`, `analytic.csv`, `empirical.csv`, `comparison.csv`,
/// and `summary.txt` under `dir`, creating it if needed.
pub fn write_all(exec: &Execution, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    write_policies(exec, &dir.join("policies.csv"))?;
    write_analytic(exec, &dir.join("analytic.csv"))?;
    write_empirical(exec, &dir.join("empirical.csv"))?;
    write_comparison(exec, &dir.join("comparison.csv"))?;
    fs::write(dir.join("summary.txt"), render_summary(exec))
        .with_context(|| format!("cannot write summary in {}", dir.display()))?;
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))
}

fn outcome_bits(table: &OutcomeDurationTable, idx: usize) -> String {
    (0..table.n_channels())
        .map(|ch| {
            if (idx >> (table.n_channels() - 1 - ch)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn write_policies(exec: &Execution, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    match exec.scheme.policy_kind() {
        PolicyKind::Dual => {
            w.write_record(["label", "channel", "t_free", "t_busy"])?;
            for v in &exec.variants {
                let Policy::Dual(pols) = &v.policy else { continue };
                for (k, p) in pols.iter().enumerate() {
                    w.write_record([
                        v.label.as_str(),
                        &k.to_string(),
                        &fmt_sig(p.t_free()),
                        &fmt_sig(p.t_busy()),
                    ])?;
                }
            }
        }
        PolicyKind::Table => {
            w.write_record(["label", "outcome", "duration"])?;
            for v in &exec.variants {
                let Policy::Table(table) = &v.policy else { continue };
                for (idx, &d) in table.durations().iter().enumerate() {
                    w.write_record([
                        v.label.as_str(),
                        &outcome_bits(table, idx),
                        &fmt_sig(d),
                    ])?;
                }
            }
        }
        PolicyKind::Windows => {
            w.write_record(["label", "channel", "access_window"])?;
            for v in &exec.variants {
                let Policy::Windows(ws) = &v.policy else { continue };
                for (k, &win) in ws.iter().enumerate() {
                    w.write_record([v.label.as_str(), &k.to_string(), &fmt_sig(win)])?;
                }
            }
        }
    }
    Ok(w.flush()?)
}

fn write_analytic(exec: &Execution, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "label",
        "channel",
        "quantity",
        "value",
    ])?;
    let mut row = |label: &str, channel: &str, quantity: &str, value: f64| {
        w.write_record([label, channel, quantity, &fmt_sig(value)])
    };
    for v in &exec.variants {
        match &v.analytic {
            Analytic::PerChannel { metrics, objective } => {
                row(&v.label, "all", "throughput", *objective)?;
                for (k, m) in metrics.iter().enumerate() {
                    let ch = k.to_string();
                    row(&v.label, &ch, "throughput", m.throughput)?;
                    row(&v.label, &ch, "interference", m.interference_fraction)?;
                    row(&v.label, &ch, "overhead", m.overhead_fraction)?;
                    row(&v.label, &ch, "unexplored", m.unexplored_fraction)?;
                    row(&v.label, &ch, "mean_cycle", m.mean_cycle)?;
                }
            }
            Analytic::Joint(report) => {
                row(&v.label, "all", "throughput", report.r)?;
                row(&v.label, "all", "mean_cycle", report.mean_cycle)?;
                for k in 0..2 {
                    let ch = k.to_string();
                    row(&v.label, &ch, "interference", report.interference[k])?;
                    row(&v.label, &ch, "overhead", report.overhead[k])?;
                    row(&v.label, &ch, "unexplored", report.unexplored[k])?;
                }
            }
            Analytic::AccessBudgets(budgets) => {
                for (k, &b) in budgets.iter().enumerate() {
                    row(&v.label, &k.to_string(), "interference_budget", b)?;
                }
            }
        }
    }
    Ok(w.flush()?)
}

fn write_empirical(exec: &Execution, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "label",
        "channel",
        "throughput",
        "throughput_stderr",
        "interference",
        "interference_stderr",
        "overhead",
        "overhead_stderr",
        "unexplored",
        "unexplored_stderr",
        "idle",
        "idle_stderr",
    ])?;
    for v in &exec.variants {
        let Some(report) = &v.empirical else { continue };
        {
            let [r, r_se] = stat_fields(&report.aggregate_r);
            w.write_record([
                v.label.as_str(),
                "all",
                &r,
                &r_se,
                "",
                "",
                "",
                "",
                "",
                "",
                "",
                "",
            ])?;
        }
        for (k, ch) in report.per_channel.iter().enumerate() {
            let [thr, thr_se] = stat_fields(&ch.throughput);
            let [intf, intf_se] = stat_fields(&ch.interference);
            let [ovh, ovh_se] = stat_fields(&ch.overhead);
            let [unexp, unexp_se] = stat_fields(&ch.unexplored);
            let [idle, idle_se] = stat_fields(&ch.idle);
            w.write_record([
                v.label.as_str(),
                &k.to_string(),
                &thr,
                &thr_se,
                &intf,
                &intf_se,
                &ovh,
                &ovh_se,
                &unexp,
                &unexp_se,
                &idle,
                &idle_se,
            ])?;
        }
    }
    Ok(w.flush()?)
}

/// Analytic-vs-simulated rows for every quantity both sides predict.
fn write_comparison(exec: &Execution, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "label",
        "channel",
        "quantity",
        "analytic",
        "simulated",
        "stderr",
        "relative_error",
    ])?;
    for v in &exec.variants {
        let Some(report) = &v.empirical else { continue };
        let mut row =
            |channel: &str, quantity: &str, analytic: f64, sim: &MetricStat| {
                let rel = if analytic != 0.0 {
                    (sim.mean - analytic) / analytic
                } else {
                    f64::NAN
                };
                w.write_record([
                    v.label.as_str(),
                    channel,
                    quantity,
                    &fmt_sig(analytic),
                    &fmt_sig(sim.mean),
                    &fmt_sig(sim.stderr),
                    &fmt_sig(rel),
                ])
            };
        match &v.analytic {
            Analytic::PerChannel { metrics, objective } => {
                row("all", "throughput", *objective, &report.aggregate_r)?;
                for (k, m) in metrics.iter().enumerate() {
                    let ch = k.to_string();
                    let rep = &report.per_channel[k];
                    row(&ch, "interference", m.interference_fraction, &rep.interference)?;
                    row(&ch, "overhead", m.overhead_fraction, &rep.overhead)?;
                    row(&ch, "unexplored", m.unexplored_fraction, &rep.unexplored)?;
                }
            }
            Analytic::Joint(joint) => {
                row("all", "throughput", joint.r, &report.aggregate_r)?;
                for k in 0..2 {
                    let ch = k.to_string();
                    let rep = &report.per_channel[k];
                    row(&ch, "interference", joint.interference[k], &rep.interference)?;
                    row(&ch, "overhead", joint.overhead[k], &rep.overhead)?;
                    row(&ch, "unexplored", joint.unexplored[k], &rep.unexplored)?;
                }
            }
            Analytic::AccessBudgets(budgets) => {
                for (k, &b) in budgets.iter().enumerate() {
                    row(
                        &k.to_string(),
                        "window_interference",
                        b,
                        &report.per_channel[k].interference,
                    )?;
                }
            }
        }
    }
    Ok(w.flush()?)
}

/// Human-readable run summary.
pub fn render_summary(exec: &Execution) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", exec.name);
    let _ = writeln!(out, "scheme:   {}", exec.scheme);
    let _ = writeln!(out, "channels: {}", exec.channels.len());
    let _ = writeln!(out, "t_s:      {}", fmt_sig(exec.t_s));
    let budgets: Vec<String> = exec.i_max.iter().map(|&b| fmt_sig(b)).collect();
    let _ = writeln!(out, "i_max:    [{}]", budgets.join(", "));
    for v in &exec.variants {
        let _ = writeln!(out, "\n[{}]", v.label);
        match &v.analytic {
            Analytic::PerChannel { objective, .. } => {
                let _ = writeln!(out, "  analytic throughput R = {}", fmt_sig(*objective));
            }
            Analytic::Joint(report) => {
                let _ = writeln!(out, "  analytic throughput R = {}", fmt_sig(report.r));
            }
            Analytic::AccessBudgets(_) => {
                let _ = writeln!(out, "  windows sized to the interference budgets");
            }
        }
        match &v.policy {
            Policy::Dual(pols) => {
                for (k, p) in pols.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "  channel {k}: t_free = {}, t_busy = {}",
                        fmt_sig(p.t_free()),
                        fmt_sig(p.t_busy())
                    );
                }
            }
            Policy::Table(table) => {
                for (idx, &d) in table.durations().iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "  outcome {}: duration = {}",
                        outcome_bits(table, idx),
                        fmt_sig(d)
                    );
                }
            }
            Policy::Windows(ws) => {
                for (k, &win) in ws.iter().enumerate() {
                    let _ = writeln!(out, "  channel {k}: window = {}", fmt_sig(win));
                }
            }
        }
        if let Some(report) = &v.empirical {
            let _ = writeln!(
                out,
                "  simulated R = {} ± {} over {} runs",
                fmt_sig(report.aggregate_r.mean),
                fmt_sig(report.aggregate_r.stderr),
                report.runs
            );
            if let Some(delay) = &report.mean_search_delay {
                let _ = writeln!(
                    out,
                    "  mean search delay = {} ± {}",
                    fmt_sig(delay.mean),
                    fmt_sig(delay.stderr)
                );
            }
        }
    }
    if let Some(baseline) = exec.baseline_objective {
        let _ = writeln!(
            out,
            "\noutcome-independent baseline R = {} (same budget, single period)",
            fmt_sig(baseline)
        );
    }
    out
}

/// The row layout `policies.csv` uses for a scheme.
enum PolicyKind {
    Dual,
    Table,
    Windows,
}

impl crate::scenario::Scheme {
    fn policy_kind(&self) -> PolicyKind {
        use crate::scenario::Scheme::*;
        match self {
            LimitedSensing | SinglePeriodBaseline => PolicyKind::Dual,
            FullMyopic | FullOptimal => PolicyKind::Table,
            LimitedAccess => PolicyKind::Windows,
        }
    }
}

// ---------------------------------------------------------------------------
