//! End-to-end flow through the public API only: optimize a schedule,
//! read its analytic report, and confirm a short simulation replays it.

use specsense::{
    network_metrics, optimize_dual_period, optimize_single_period, ChannelParams,
    GridSpec, SensingErrorModel, SimConfig, simulate_dual_period,
};

#[test]
fn optimize_evaluate_and_replay_a_two_channel_schedule() {
    let channels = [
        ChannelParams::new(0.2, 1.0).unwrap(),
        ChannelParams::new(0.15, 0.8).unwrap(),
    ];
    let errors = [SensingErrorModel::new(0.05, 0.02).unwrap(); 2];
    let t_s = 0.01;
    let budgets = [0.05, 0.05];
    let grid = GridSpec::new(t_s, 10.0, 0.2, 2, 0.25).unwrap();

    let dual = optimize_dual_period(&channels, &errors, t_s, &budgets, &grid).unwrap();
    assert!(dual.converged);
    assert_eq!(dual.policies.len(), 2);

    // The reported objective is exactly the analytic evaluation of the
    // returned policies.
    let metrics = network_metrics(&channels, &errors, &dual.policies, t_s).unwrap();
    let recomputed: f64 = metrics.iter().map(|m| m.throughput).sum();
    assert!((dual.objective - recomputed).abs() < 1e-12);
    for (m, &budget) in metrics.iter().zip(&budgets) {
        assert!(m.interference_fraction <= budget + 1e-9);
    }

    // Restricting both gaps to a single period can only lose throughput.
    let single = optimize_single_period(&channels, &errors, t_s, &budgets, &grid).unwrap();
    for pol in &single.policies {
        assert_eq!(pol.t_free(), pol.t_busy());
    }
    assert!(single.objective <= dual.objective + 1e-12);

    // A short replay lands near the analytic prediction.
    let cfg = SimConfig::new(5_000.0, 50.0, 8, 1).unwrap();
    let report =
        simulate_dual_period(&channels, &errors, &dual.policies, t_s, &cfg).unwrap();
    assert_eq!(report.per_channel.len(), 2);
    let rel = (report.aggregate_r.mean - dual.objective).abs() / dual.objective;
    assert!(
        rel < 0.05,
        "simulated {} vs analytic {}",
        report.aggregate_r.mean,
        dual.objective
    );
}
