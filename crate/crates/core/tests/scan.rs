//! Closed-loop check of the detection-window scan against the dephasing calibration.

use ionbsm_core::estimation::{detection_window_scan, ScanOptions};
use ionbsm_core::montecarlo::{simulate_events, EfficiencyChain, Experiment, Models, RunConfig};
use ionbsm_core::noise::{calibrate_dephasing_scan, DephasingModel, ScanGeometry, SourceModel};

fn bright_models(dephasing: DephasingModel) -> (RunConfig, Models) {
    let cfg = RunConfig {
        n_runs: 6_000,
        ..Default::default()
    };
    let chain = EfficiencyChain {
        eta_854_a: 1.0,
        eta_854_b: 1.0,
        eta_393: 1.0,
        eta_gate: 1.0,
        eta_abs_first: 0.5 * cfg.emission_prob,
        eta_abs_second: 0.5 * cfg.emission_prob,
    };
    let models = Models {
        source: SourceModel::default(),
        dephasing,
        chain,
        ..Default::default()
    };
    (cfg, models)
}

#[test]
fn scan_recovers_the_calibrated_slope() {
    let opts = ScanOptions::default();
    let geometry = ScanGeometry {
        offsets_s: opts.offsets_s.clone(),
        window_s: opts.window_s,
        coherence_weight: SourceModel::default().werner_weight,
    };
    let target = -500.0;
    let dephasing = calibrate_dephasing_scan(target, &geometry).unwrap();
    let (cfg, models) = bright_models(dephasing);
    let sim = simulate_events(&cfg, &models, &Experiment::EntanglementTransfer).unwrap();
    let scan = detection_window_scan(&sim.events, &opts).unwrap();
    assert!(scan.is_non_increasing(), "{:?}", scan.points);
    assert!(
        ((scan.slope - target) / target).abs() < 0.1,
        "slope {} vs {target}",
        scan.slope
    );
}

#[test]
fn scan_without_dephasing_is_flat() {
    let opts = ScanOptions::default();
    let (cfg, models) = bright_models(DephasingModel::default());
    let sim = simulate_events(&cfg, &models, &Experiment::EntanglementTransfer).unwrap();
    let scan = detection_window_scan(&sim.events, &opts).unwrap();
    // one-sigma fidelity noise per window is about 1.5e-3 here
    assert!(scan.slope.abs() < 30.0, "{}", scan.slope);
}

#[test]
fn empty_window_is_an_error() {
    let opts = ScanOptions {
        offsets_s: vec![0.0, 1.0],
        ..Default::default()
    };
    let (cfg, models) = bright_models(DephasingModel::default());
    let cfg = RunConfig { n_runs: 10, ..cfg };
    let sim = simulate_events(&cfg, &models, &Experiment::EntanglementTransfer).unwrap();
    assert!(detection_window_scan(&sim.events, &opts).is_err());
}
